import json
import math

import numpy as np
import pytest

import fockopt as fo
from fockopt.errors import (
    InvalidFile,
    InvalidOccupation,
    NotUnitary,
    ShapeMismatch,
    ZeroOutcome,
    ZeroState,
)
from helpers import (
    assert_states_close,
    oracle_amplitude,
    random_state,
    random_unitary,
    sector_occupations,
)

SQ2 = math.sqrt(2.0)


class TestMakeNumberState:
    def test_boson_basis_state(self):
        s = fo.make_number_state((2, 0))
        assert s.amplitude((2, 0)) == 1.0
        assert s.n_particles == 2 and s.n_modes == 2

    def test_fermion_basis_state(self):
        s = fo.make_number_state((1, 1), fo.FERMION)
        assert s.amplitude((1, 1)) == 1.0

    def test_pauli_exclusion(self):
        with pytest.raises(InvalidOccupation):
            fo.make_number_state((2, 0), fo.FERMION)


class TestSuperpose:
    def test_noon(self):
        noon = fo.superpose(
            [(1 / SQ2, fo.make_number_state((2, 0))), (1 / SQ2, fo.make_number_state((0, 2)))]
        )
        assert abs(noon.amplitude((2, 0)) - 1 / SQ2) < 1e-12
        assert abs(noon.amplitude((0, 2)) - 1 / SQ2) < 1e-12

    def test_identity(self):
        s = fo.make_number_state((1, 1))
        assert_states_close(fo.superpose([(1.0, s)]), s)

    def test_cancellation(self):
        s = fo.make_number_state((2, 0))
        with pytest.raises(ZeroState):
            fo.superpose([(1.0, s), (-1.0, s)])

    def test_mixed_sectors_rejected(self):
        with pytest.raises(ShapeMismatch):
            fo.superpose(
                [(1.0, fo.make_number_state((2, 0))), (1.0, fo.make_number_state((1, 0)))]
            )
        with pytest.raises(ShapeMismatch):
            fo.superpose(
                [(1.0, fo.make_number_state((1, 0))), (1.0, fo.make_number_state((1, 0, 0)))]
            )


class TestApplyModeUnitary:
    def test_hadamard_on_20(self):
        out = fo.apply_mode_unitary(fo.make_number_state((2, 0)), fo.hadamard())
        assert abs(out.amplitude((2, 0)) - 0.5) < 1e-12
        assert abs(out.amplitude((1, 1)) - 1 / SQ2) < 1e-12
        assert abs(out.amplitude((0, 2)) - 0.5) < 1e-12

    def test_identity(self, rng):
        s = random_state(rng, 3, 3)
        assert_states_close(fo.apply_mode_unitary(s, np.eye(3)), s)

    def test_hong_ou_mandel(self):
        # (a1+a2)(a1-a2)/2 = (a1^2 - a2^2)/2 by hand
        out = fo.apply_mode_unitary(fo.make_number_state((1, 1)), fo.hadamard())
        assert abs(out.amplitude((2, 0)) - 1 / SQ2) < 1e-12
        assert abs(out.amplitude((0, 2)) + 1 / SQ2) < 1e-12
        assert abs(out.amplitude((1, 1))) < 1e-12

    def test_fermion_antibunching(self):
        out = fo.apply_mode_unitary(fo.make_number_state((1, 1), fo.FERMION), fo.hadamard())
        assert abs(out.amplitude((1, 1)) + 1.0) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatch):
            fo.apply_mode_unitary(fo.make_number_state((1, 1)), np.eye(3))

    def test_not_unitary(self):
        with pytest.raises(NotUnitary):
            fo.apply_mode_unitary(fo.make_number_state((1, 1)), np.array([[1, 1], [0, 1.0]]))

    @pytest.mark.parametrize("statistics", [fo.BOSON, fo.FERMION])
    def test_norm_preserved_random(self, rng, statistics):
        for _ in range(10):
            m = rng.integers(2, 5)
            n = rng.integers(1, min(5, m + 1) if statistics is fo.FERMION else 5)
            s = random_state(rng, int(n), int(m), statistics)
            out = fo.apply_mode_unitary(s, random_unitary(rng, int(m)))
            assert abs(out.norm - 1.0) < 1e-9

    @pytest.mark.parametrize("statistics", [fo.BOSON, fo.FERMION])
    def test_composition_is_left_to_right_product(self, rng, statistics):
        # substituting a_i -> sum U_ij a_j twice composes as U @ V
        m = 3
        s = random_state(rng, 2, m, statistics)
        u = random_unitary(rng, m)
        v = random_unitary(rng, m)
        seq = fo.apply_mode_unitary(fo.apply_mode_unitary(s, u), v)
        once = fo.apply_mode_unitary(s, u @ v)
        for occ in seq.occupations() | once.occupations():
            assert abs(seq.amplitude(occ) - once.amplitude(occ)) < 1e-9

    def test_particle_number_conserved(self, rng):
        s = random_state(rng, 4, 3)
        out = fo.apply_mode_unitary(s, random_unitary(rng, 3))
        assert all(sum(occ) == 4 for occ in out.occupations())

    def test_fermion_determinant_oracle(self, rng):
        for m in (2, 3, 4):
            u = random_unitary(rng, m)
            filled = fo.make_number_state((1,) * m, fo.FERMION)
            out = fo.apply_mode_unitary(filled, u)
            assert abs(out.amplitude((1,) * m) - np.linalg.det(u)) < 1e-9

    def test_boson_permanent_oracle(self, rng):
        for m in (2, 3, 4):
            u = random_unitary(rng, m)
            occ_in = (1, 1) + (0,) * (m - 2)
            out = fo.apply_mode_unitary(fo.make_number_state(occ_in), u)
            for occ_out in sector_occupations(2, m, fo.BOSON):
                expected = oracle_amplitude(u, occ_in, occ_out, fo.BOSON)
                assert abs(out.amplitude(occ_out) - expected) < 1e-9

    def test_sign_convention_invisible_in_observables(self, rng):
        # relabeling modes by a permutation permutes the detection statistics
        # and nothing else, despite the ordering-dependent fermion signs
        s = random_state(rng, 3, 4, fo.FERMION)
        perm = [2, 0, 3, 1]
        p = np.zeros((4, 4))
        for i, j in enumerate(perm):
            p[i, j] = 1.0
        out = fo.apply_mode_unitary(s, p)
        dist = fo.detection_distribution(s)
        dist_p = fo.detection_distribution(out)
        for occ, prob in dist.items():
            relabeled = [0] * 4
            for i, j in enumerate(perm):
                relabeled[j] = occ[i]
            assert abs(dist_p[tuple(relabeled)] - prob) < 1e-12


class TestDetectionDistribution:
    def test_basis_state(self):
        assert fo.detection_distribution(fo.make_number_state((1, 1))) == {(1, 1): 1.0}

    def test_hadamard_binomial(self):
        out = fo.apply_mode_unitary(fo.make_number_state((2, 0)), fo.hadamard())
        dist = fo.detection_distribution(out)
        assert abs(dist[(2, 0)] - 0.25) < 1e-12
        assert abs(dist[(1, 1)] - 0.5) < 1e-12
        assert abs(dist[(0, 2)] - 0.25) < 1e-12

    def test_hom_distribution(self):
        out = fo.apply_mode_unitary(fo.make_number_state((1, 1)), fo.hadamard())
        dist = fo.detection_distribution(out)
        assert abs(dist[(2, 0)] - 0.5) < 1e-12
        assert abs(dist[(0, 2)] - 0.5) < 1e-12
        assert (1, 1) not in dist

    def test_probabilities_sum_to_one(self, rng):
        s = random_state(rng, 3, 4)
        assert abs(sum(fo.detection_distribution(s).values()) - 1.0) < 1e-10


class TestHerald:
    def test_noon_herald(self):
        noon = fo.superpose(
            [(1, fo.make_number_state((2, 0))), (1, fo.make_number_state((0, 2)))]
        )
        out, prob = fo.herald(noon, {1}, {1: 0})
        assert abs(prob - 0.5) < 1e-12
        assert abs(out.amplitude((2,))) - 1.0 < 1e-12

    def test_deterministic_herald(self):
        out, prob = fo.herald(fo.make_number_state((1, 1)), {1}, {1: 1})
        assert abs(prob - 1.0) < 1e-12
        assert abs(out.amplitude((1,)) - 1.0) < 1e-12

    def test_impossible_herald(self):
        with pytest.raises(ZeroOutcome):
            fo.herald(fo.make_number_state((1, 1)), {1}, {1: 2})

    def test_out_of_range(self):
        with pytest.raises(ShapeMismatch):
            fo.herald(fo.make_number_state((1, 1)), {5}, {5: 0})

    @pytest.mark.parametrize("statistics", [fo.BOSON, fo.FERMION])
    def test_conditional_distribution(self, rng, statistics):
        s = random_state(rng, 3, 4, statistics)
        dist = fo.detection_distribution(s)
        out, prob = fo.herald(s, {1, 3}, {1: 1, 3: 0})
        conditional = fo.detection_distribution(out)
        for occ, p in dist.items():
            if occ[1] == 1 and occ[3] == 0:
                key = (occ[0], occ[2])
                assert abs(conditional[key] - p / prob) < 1e-10

    def test_fermion_herald_interferes_correctly(self, rng):
        # heralding first, then evolving the survivors must match evolving
        # first (on modes the detector never touches) and heralding last;
        # this pins the reordering sign of the reduced amplitudes
        s = random_state(rng, 2, 3, fo.FERMION)
        u2 = random_unitary(rng, 2)
        heralded, p1 = fo.herald(s, {1}, {1: 1})
        route_a = fo.apply_mode_unitary(heralded, u2)
        full = np.eye(3, dtype=complex)
        full[np.ix_([0, 2], [0, 2])] = u2
        evolved = fo.apply_mode_unitary(s, full)
        route_b, p2 = fo.herald(evolved, {1}, {1: 1})
        assert abs(p1 - p2) < 1e-12
        for occ in route_a.occupations() | route_b.occupations():
            assert abs(route_a.amplitude(occ) - route_b.amplitude(occ)) < 1e-10

    def test_herald_probabilities_complete(self, rng):
        s = random_state(rng, 3, 3)
        total = 0.0
        for k in range(4):
            try:
                _, p = fo.herald(s, {2}, {2: k})
            except ZeroOutcome:
                p = 0.0
            total += p
        assert abs(total - 1.0) < 1e-10


class TestEmbedAndOverlap:
    def test_embed_roundtrip(self, rng):
        s = random_state(rng, 2, 2)
        wide = fo.embed(s, 4, (0, 2))
        back, prob = fo.herald(wide, {1, 3}, {1: 0, 3: 0})
        assert abs(prob - 1.0) < 1e-12
        assert_states_close(back, s)

    def test_fidelity_phase_insensitive(self, rng):
        s = random_state(rng, 2, 3)
        rotated = fo.FockState(
            s.statistics, 3, {occ: 1j * amp for occ, amp in s.items()}
        )
        assert abs(fo.fidelity(s, rotated) - 1.0) < 1e-12


class TestStateFiles:
    def test_round_trip(self, rng, tmp_path):
        s = random_state(rng, 3, 3, fo.FERMION)
        path = tmp_path / "state.json"
        fo.save_state(s, path)
        loaded = fo.load_state(path)
        assert loaded.statistics is fo.FERMION
        for occ in s.occupations():
            assert abs(loaded.amplitude(occ) - s.amplitude(occ)) < 1e-12

    def test_normalizes_with_warning(self, tmp_path):
        path = tmp_path / "state.json"
        path.write_text(
            json.dumps(
                {
                    "statistics": "boson",
                    "modes": 2,
                    "terms": [{"occ": [1, 0], "re": 2.0, "im": 0.0}],
                }
            )
        )
        with pytest.warns(UserWarning, match="renormalizing"):
            s = fo.load_state(path)
        assert abs(s.amplitude((1, 0)) - 1.0) < 1e-12

    def test_malformed_json_reports_location(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"statistics": "boson",\n  "modes": }')
        with pytest.raises(InvalidFile) as err:
            fo.load_state(path)
        assert err.value.line == 2

    def test_bad_occupation_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(
            json.dumps(
                {
                    "statistics": "fermion",
                    "modes": 2,
                    "terms": [{"occ": [2, 0], "re": 1.0, "im": 0.0}],
                }
            )
        )
        with pytest.raises(InvalidFile):
            fo.load_state(path)
