"""Bell tests on post-selected dual-rail qubits and the witness search.

The splitter stage of :func:`fockopt.circuits.yurke_stoler_circuit` turns a
two-particle two-mode state into a pair of dual-rail qubits once runs with one
particle per rail pair are kept.  CHSH is then maximized exactly through the
two-qubit correlation-matrix criterion, and for states that are not reducible
to a single mode an explicit violating experiment is assembled from heralded
filters.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .circuits import (
    BeamSplitter,
    Circuit,
    Detector,
    detector_statistics,
    element_modes,
    hadamard,
    quantum_erasure_circuit,
    run_circuit,
    two_particle_filter_circuit,
    yurke_stoler_circuit,
)
from .classify import is_single_mode_type
from .errors import InvalidParameter, NotUnitary, ShapeMismatch, ZeroOutcome
from .states import BOSON, FERMION, apply_mode_unitary, embed, herald

VIOLATION_MARGIN = 1e-6
CHSH_MAX_VALUE = 2.0 * math.sqrt(2.0)

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# occupations of the four kept patterns on the (in1, in2, rail1, rail2)
# register: Alice's qubit is (in1, rail1), Bob's is (rail2, in2), with "up"
# meaning a particle in the first mode of the pair
_YS_SLOTS = ((1, 0, 0, 1), (1, 1, 0, 0), (0, 0, 1, 1), (0, 1, 1, 0))

ALICE_RAILS = (0, 2)
BOB_RAILS = (3, 1)


class TwoQubitState:
    """Amplitudes (e, f, g, h) on the basis (uu, ud, du, dd)."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes):
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.shape != (4,):
            raise ShapeMismatch("two-qubit state needs exactly four amplitudes")
        if abs(np.linalg.norm(amps) - 1.0) > 1e-10:
            raise ValueError("two-qubit amplitudes must be normalized")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def __setattr__(self, name, value):
        raise AttributeError("TwoQubitState is immutable")

    @property
    def e(self):
        return self.amplitudes[0]

    @property
    def f(self):
        return self.amplitudes[1]

    @property
    def g(self):
        return self.amplitudes[2]

    @property
    def h(self):
        return self.amplitudes[3]

    def correlation_matrix(self):
        """3x3 matrix of Pauli-Pauli expectation values."""
        psi = self.amplitudes
        t = np.empty((3, 3))
        for i, si in enumerate(_PAULI):
            for j, sj in enumerate(_PAULI):
                t[i, j] = np.real(np.vdot(psi, np.kron(si, sj) @ psi))
        return t

    def expectation(self, a, b):
        """<(a.sigma) x (b.sigma)> for Bloch vectors a, b."""
        obs = np.kron(_bloch_operator(a), _bloch_operator(b))
        return float(np.real(np.vdot(self.amplitudes, obs @ self.amplitudes)))


def _bloch_operator(n):
    n = np.asarray(n, dtype=float)
    return n[0] * _PAULI[0] + n[1] * _PAULI[1] + n[2] * _PAULI[2]


def bloch_basis(n):
    """Measurement basis (columns |+n>, |-n>) of the observable n.sigma."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    theta = math.acos(max(-1.0, min(1.0, n[2])))
    phi = math.atan2(n[1], n[0])
    plus = np.array([math.cos(theta / 2), math.sin(theta / 2) * np.exp(1j * phi)])
    minus = np.array([-math.sin(theta / 2), math.cos(theta / 2) * np.exp(1j * phi)])
    return np.column_stack([plus, minus])


@dataclass
class BellTestResult:
    """CHSH value with the optimal settings that achieve it.

    Settings are 2x2 projective bases (columns = outcome states in the
    dual-rail computational basis).  ``success_probability`` is the chance
    of an accepted post-selected run in the experiment that produced the
    tested two-qubit state.
    """

    chsh: float
    settings_a: tuple
    settings_b: tuple
    success_probability: float
    violated: bool


def yurke_stoler_postselect(phi):
    """Split a two-particle two-mode state into dual-rail qubits and keep
    runs with one particle on each side.

    Returns the shared two-qubit state and the post-selection probability,
    which equals 1/2 for every normalized input of either statistics.
    """
    if phi.n_particles != 2 or phi.n_modes != 2:
        raise ShapeMismatch("the splitter stage expects two particles in two modes")
    four, _ = run_circuit(embed(phi, 4, (0, 1)), yurke_stoler_circuit())
    amps = np.array([four.amplitude(occ) for occ in _YS_SLOTS])
    prob = float(np.sum(np.abs(amps) ** 2))
    return TwoQubitState(amps / math.sqrt(prob)), prob


def product_condition(chi, tol=1e-9):
    """True iff the two-qubit state factorizes: e*h == f*g within ``tol``."""
    return abs(chi.e * chi.h - chi.f * chi.g) < tol


def chsh_max(chi):
    """Exact CHSH maximum 2*sqrt(l1+l2) over projective settings.

    l1 >= l2 are the top eigenvalues of T^T T for the correlation matrix T;
    the optimal directions are rebuilt from the matching eigenvectors and the
    returned value is re-verified against direct expectation values.
    """
    t = chi.correlation_matrix()
    w, v = np.linalg.eigh(t.T @ t)
    order = np.argsort(w)[::-1]
    lam1, lam2 = max(w[order[0]], 0.0), max(w[order[1]], 0.0)
    c1, c2 = v[:, order[0]], v[:, order[1]]
    total = lam1 + lam2
    if total < 1e-18:
        raise ValueError("correlation matrix vanishes; no projective optimum")
    cos_t = math.sqrt(lam1 / total)
    sin_t = math.sqrt(lam2 / total)
    b1 = cos_t * c1 + sin_t * c2
    b2 = cos_t * c1 - sin_t * c2
    a1 = t @ c1 / math.sqrt(lam1) if lam1 > 1e-18 else np.array([0.0, 0.0, 1.0])
    if lam2 > 1e-18:
        a2 = t @ c2 / math.sqrt(lam2)
    else:
        # degenerate direction contributes E(a2,b1) - E(a2,b2) = 0 exactly
        a2 = _any_unit_orthogonal(a1)
    value = 2.0 * math.sqrt(total)
    direct = (
        chi.expectation(a1, b1)
        + chi.expectation(a1, b2)
        + chi.expectation(a2, b1)
        - chi.expectation(a2, b2)
    )
    if abs(direct - value) > 1e-9:
        raise AssertionError(
            f"settings reproduce {direct!r} instead of the criterion value {value!r}"
        )
    return BellTestResult(
        chsh=value,
        settings_a=(bloch_basis(a1), bloch_basis(a2)),
        settings_b=(bloch_basis(b1), bloch_basis(b2)),
        success_probability=1.0,
        violated=value > 2.0 + VIOLATION_MARGIN,
    )


def _any_unit_orthogonal(v):
    probe = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    out = probe - np.dot(probe, v) * v
    return out / np.linalg.norm(out)


def dual_rail_measurement_circuit(basis, modes, n_modes=None):
    """Map the projective ``basis`` onto the detector basis of a rail pair.

    After this circuit, a particle in ``modes[0]`` means the first basis
    outcome.  The identity basis yields an empty circuit; any other basis is
    one beam splitter carrying the conjugated basis matrix.
    """
    basis = np.asarray(basis, dtype=complex)
    if basis.shape != (2, 2):
        raise ShapeMismatch("measurement basis must be 2x2")
    dev = np.max(np.abs(basis.conj().T @ basis - np.eye(2)))
    if dev > 1e-10:
        raise NotUnitary(f"basis columns are not orthonormal (deviation {dev:.3e})")
    if n_modes is None:
        n_modes = max(modes) + 1
    gate = basis.conj()
    if np.max(np.abs(gate - np.eye(2))) < 1e-14:
        return Circuit(n_modes, [])
    return Circuit(n_modes, [BeamSplitter(tuple(modes), gate)])


# ---------------------------------------------------------------------------
# two-mode many-particle filters
# ---------------------------------------------------------------------------

def two_mode_coefficients(phi):
    """Coefficients b_n of a_1^dag^n a_2^dag^(N-n) / sqrt(n!(N-n)!), n=0..N."""
    if phi.n_modes != 2:
        raise ShapeMismatch("expected a two-mode state")
    n = phi.n_particles
    return np.array([phi.amplitude((k, n - k)) for k in range(n + 1)])


@dataclass
class FilterResiduals:
    """Deviations from the recurrence the filter tests impose.

    ``residuals[s]`` is |b_{s+1}^2 - b_s b_{s+2} sqrt((s+2)/(s+1))
    sqrt((N-s)/(N-s-1))|.  When every middle coefficient vanishes the
    recurrence is blind, and ``noon_residual`` = |b_0 * b_N| reports the
    remaining obstruction (nonzero exactly for proper NOON states).
    """

    residuals: list
    noon_applicable: bool
    noon_residual: float

    @property
    def max_residual(self):
        worst = max(self.residuals) if self.residuals else 0.0
        if self.noon_applicable:
            worst = max(worst, self.noon_residual)
        return worst


def filter_condition_residuals(phi, middle_tol=1e-9):
    """Evaluate the two-mode product-form constraints coefficient-wise."""
    beta = two_mode_coefficients(phi)
    n = phi.n_particles
    if n < 2:
        return FilterResiduals([], False, 0.0)
    res = [
        abs(
            beta[s + 1] ** 2
            - beta[s]
            * beta[s + 2]
            * math.sqrt((s + 2) / (s + 1))
            * math.sqrt((n - s) / (n - s - 1))
        )
        for s in range(n - 1)
    ]
    middle = np.abs(beta[1:-1]) if n >= 2 else np.array([])
    noon_applicable = bool(n >= 2 and (middle.size == 0 or np.all(middle < middle_tol)))
    noon_residual = float(abs(beta[0] * beta[-1])) if noon_applicable else 0.0
    return FilterResiduals(res, noon_applicable, noon_residual)


def run_filtered_ys(phi, s):
    """Filtered Bell test: herald (s, N-s-2) on the ancillas, then split and
    maximize CHSH on the event-ready two-particle state."""
    if phi.n_modes != 2:
        raise ShapeMismatch("the filter acts on a two-mode state")
    circuit = two_particle_filter_circuit(s, phi.n_particles)
    prepared, p_herald = run_circuit(embed(phi, 4, (0, 1)), circuit)
    chi, p_ys = yurke_stoler_postselect(prepared)
    result = chsh_max(chi)
    return replace(result, success_probability=p_herald * p_ys)


def run_erasure_ys(phi, middle_tol=1e-9):
    """Erasure Bell test for two-mode states with no middle coefficients."""
    if phi.n_modes != 2:
        raise ShapeMismatch("the erasure filter acts on a two-mode state")
    if phi.statistics is not BOSON:
        raise ShapeMismatch("the erasure filter is defined for bosons")
    beta = two_mode_coefficients(phi)
    if phi.n_particles >= 2 and np.any(np.abs(beta[1:-1]) >= middle_tol):
        raise InvalidParameter("erasure test expects vanishing middle coefficients")
    circuit = quantum_erasure_circuit(phi.n_particles)
    prepared, p_herald = run_circuit(embed(phi, 4, (0, 1)), circuit)
    chi, p_ys = yurke_stoler_postselect(prepared)
    result = chsh_max(chi)
    return replace(result, success_probability=p_herald * p_ys)


# ---------------------------------------------------------------------------
# witness construction
# ---------------------------------------------------------------------------

@dataclass
class WitnessExperiment:
    """A replayable experiment certifying non-local behaviour.

    ``circuit`` is the event-ready preparation: fed with the input state (and
    vacuum on any extra modes) it heralds a two-particle state on its two
    output modes.  That state enters the standard splitter stage, and the
    stored settings achieve ``result.chsh``.  ``parties`` names the dual-rail
    modes of the splitter-stage register.
    """

    circuit: Circuit
    result: BellTestResult

    @property
    def parties(self):
        return {"alice": ALICE_RAILS, "bob": BOB_RAILS}

    @property
    def heralds(self):
        return self.circuit.heralds


def _embedded_input(state, circuit):
    if state.n_modes == circuit.n_modes:
        return state
    return embed(state, circuit.n_modes, range(state.n_modes))


def _noon_like(phi, rel_tol=1e-9):
    beta = two_mode_coefficients(phi)
    peak = np.max(np.abs(beta))
    return phi.n_particles >= 2 and np.all(np.abs(beta[1:-1]) < rel_tol * peak)


def _two_mode_candidates(phi, live, prefix, total_modes):
    """Filter and erasure preparations for a two-mode reduced state."""
    n = phi.n_particles
    a, b = total_modes, total_modes + 1
    h = hadamard()
    split = (
        BeamSplitter((live[0], a), h),
        BeamSplitter((live[1], b), h),
    )
    for s in range(n - 1):
        yield prefix + split + (Detector(a, s), Detector(b, n - 2 - s))
    if _noon_like(phi):
        yield prefix + split + (
            BeamSplitter((a, b), h),
            Detector(a, n - 2),
            Detector(b, 0),
        )


def _boson_candidates(phi, live, prefix, total_modes):
    """Preparation candidates for a boson state on ``len(live)`` modes.

    Enumeration order: ancilla filters with ascending ``s`` (then erasure)
    at two modes; otherwise the zero-count herald on all but the first two
    modes, the per-count heralds after rotating the surviving two-mode
    component away from mode 1, and finally the empty-mode reduction.
    """
    n = phi.n_particles
    if n < 2 or len(live) < 2:
        return
    if len(live) == 2:
        yield from _two_mode_candidates(phi, live, prefix, total_modes)
        return
    rest_local = list(range(2, len(live)))
    rest = [live[i] for i in rest_local]
    try:
        chi, _ = herald(phi, rest_local, {i: 0 for i in rest_local})
    except ZeroOutcome:
        chi = None
    zero_dets = tuple(Detector(m, 0) for m in rest)
    if chi is not None:
        verdict = is_single_mode_type(chi)
        if not verdict.single_mode:
            yield from _boson_candidates(chi, live[:2], prefix + zero_dets, total_modes)
            return
        u1, u2 = verdict.alpha
        rot = np.array([[u2.conjugate(), -u1.conjugate()], [u1, u2]]).conj().T
    else:
        rot = None
    if rot is None:
        rotated = phi
        prefix_b = prefix
    else:
        full = np.eye(len(live), dtype=complex)
        full[:2, :2] = rot
        rotated = apply_mode_unitary(phi, full)
        prefix_b = prefix + (BeamSplitter((live[0], live[1]), rot),)
    for k in range(n):
        try:
            branch, _ = herald(rotated, {1}, {1: k})
        except ZeroOutcome:
            continue
        if not is_single_mode_type(branch).single_mode:
            yield from _boson_candidates(
                branch,
                [live[0]] + live[2:],
                prefix_b + (Detector(live[1], k),),
                total_modes,
            )
    # all per-count branches reduced to a single mode, which forces the
    # rotated state off mode 1 entirely; drop that mode and continue
    try:
        residual, _ = herald(rotated, {0}, {0: 0})
    except ZeroOutcome:
        return
    if not is_single_mode_type(residual).single_mode:
        yield from _boson_candidates(
            residual, live[1:], prefix_b + (Detector(live[0], 0),), total_modes
        )


def _fermion_candidates(phi, n_modes):
    """Herald every companion mode of the first occupied pair of a term."""
    for occ in sorted(phi.occupations()):
        pair = [j for j, c in enumerate(occ) if c][:2]
        others = [j for j in range(n_modes) if j not in pair]
        yield tuple(Detector(j, occ[j]) for j in others)


def _candidate_circuits(state):
    m = state.n_modes
    if state.statistics is FERMION:
        for elements in _fermion_candidates(state, m):
            yield Circuit(m, elements)
        return
    for elements in _boson_candidates(state, list(range(m)), (), m):
        # ancilla rails appear only in two-mode filter stages
        width = m
        for el in elements:
            width = max(width, max(element_modes(el)) + 1)
        yield Circuit(width, elements)


def find_witness(state):
    """Search the constructive experiment family for a CHSH violation.

    Returns a :class:`WitnessExperiment` for every state that is not of the
    single-mode type and None after exhausting the family otherwise.
    Candidates are tried in a fixed order, so the result is deterministic.
    """
    if state.n_particles < 2 or state.n_modes < 2:
        return None
    for prep in _candidate_circuits(state):
        try:
            prepared, p_prep = run_circuit(_embedded_input(state, prep), prep)
        except ZeroOutcome:
            continue
        if prepared.n_particles != 2 or prepared.n_modes != 2:
            continue
        chi, p_ys = yurke_stoler_postselect(prepared)
        result = chsh_max(chi)
        if result.violated:
            return WitnessExperiment(
                circuit=prep,
                result=replace(result, success_probability=p_prep * p_ys),
            )
    return None


def witness_to_dict(experiment):
    """Serialize prep circuit, rail assignment, settings, and CHSH value."""
    from .circuits import _matrix_to_json, circuit_to_dict

    res = experiment.result
    return {
        "circuit": circuit_to_dict(experiment.circuit),
        "parties": {
            "alice": [m + 1 for m in ALICE_RAILS],
            "bob": [m + 1 for m in BOB_RAILS],
        },
        "settings": {
            "party_A": [_matrix_to_json(b) for b in res.settings_a],
            "party_B": [_matrix_to_json(b) for b in res.settings_b],
        },
        "chsh": res.chsh,
        "success_probability": res.success_probability,
    }


def witness_from_dict(data):
    from .circuits import _matrix_from_json, circuit_from_dict
    from .errors import InvalidFile

    try:
        circuit = circuit_from_dict(data["circuit"])
        settings_a = tuple(_matrix_from_json(b) for b in data["settings"]["party_A"])
        settings_b = tuple(_matrix_from_json(b) for b in data["settings"]["party_B"])
        chsh = float(data["chsh"])
        prob = float(data.get("success_probability", math.nan))
    except InvalidFile:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidFile(f"malformed witness description: {exc}") from exc
    result = BellTestResult(
        chsh=chsh,
        settings_a=settings_a,
        settings_b=settings_b,
        success_probability=prob,
        violated=chsh > 2.0 + VIOLATION_MARGIN,
    )
    return WitnessExperiment(circuit=circuit, result=result)


def replay_witness(state, experiment):
    """Re-run a witness through circuits alone and return the CHSH value.

    The preparation circuit, the splitter stage, and one measurement circuit
    per setting are executed on the state; correlators come from the joint
    detector statistics conditioned on one particle per rail pair.
    """
    prepared, _ = run_circuit(_embedded_input(state, experiment.circuit), experiment.circuit)
    res = experiment.result
    correlators = np.empty((2, 2))
    four = embed(prepared, 4, (0, 1))
    for i, basis_a in enumerate(res.settings_a):
        for j, basis_b in enumerate(res.settings_b):
            circuit = yurke_stoler_circuit().extended(
                list(dual_rail_measurement_circuit(basis_a, ALICE_RAILS, 4).elements)
                + list(dual_rail_measurement_circuit(basis_b, BOB_RAILS, 4).elements)
                + [Detector(m) for m in range(4)]
            )
            stats = detector_statistics(four, circuit)
            num = 0.0
            den = 0.0
            for counts, p in stats.distribution.items():
                reading = dict(zip(stats.readout_modes, counts))
                n_a = (reading[ALICE_RAILS[0]], reading[ALICE_RAILS[1]])
                n_b = (reading[BOB_RAILS[0]], reading[BOB_RAILS[1]])
                if sorted(n_a) != [0, 1] or sorted(n_b) != [0, 1]:
                    continue
                sign = (1.0 if n_a[0] else -1.0) * (1.0 if n_b[0] else -1.0)
                num += sign * p
                den += p
            correlators[i, j] = num / den
    return correlators[0, 0] + correlators[0, 1] + correlators[1, 0] - correlators[1, 1]
