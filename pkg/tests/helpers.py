"""Shared test utilities: random sampling and brute-force oracles."""

import itertools
import math

import numpy as np

import fockopt as fo


def random_unitary(rng, m):
    z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d)).conj()


def random_alpha(rng, m):
    v = rng.normal(size=m) + 1j * rng.normal(size=m)
    return v / np.linalg.norm(v)


def boson_occupations(n, m):
    """All occupation tuples of n bosons over m modes."""
    if m == 1:
        return [(n,)]
    return [(k,) + rest for k in range(n + 1) for rest in boson_occupations(n - k, m - 1)]


def fermion_occupations(n, m):
    """All occupation tuples of n fermions over m modes."""
    out = []
    for occupied in itertools.combinations(range(m), n):
        occ = [0] * m
        for j in occupied:
            occ[j] = 1
        out.append(tuple(occ))
    return out


def sector_occupations(n, m, statistics):
    if statistics is fo.FERMION:
        return fermion_occupations(n, m)
    return boson_occupations(n, m)


def random_state(rng, n, m, statistics=fo.BOSON):
    basis = sector_occupations(n, m, statistics)
    amps = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    amps /= np.linalg.norm(amps)
    return fo.FockState(statistics, m, dict(zip(basis, amps)))


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def oracle_amplitude(u, occ_in, occ_out, statistics):
    """Transition amplitude <occ_out| U |occ_in> by permutation expansion.

    Bosons: permanent of the row/column-repeated matrix over sqrt of the
    occupation factorials; fermions: determinant of the occupied submatrix
    with rows and columns in increasing mode order.
    """
    rows = [i for i, n in enumerate(occ_in) for _ in range(n)]
    cols = [j for j, n in enumerate(occ_out) for _ in range(n)]
    if len(rows) != len(cols):
        return 0j
    total = 0j
    for perm in itertools.permutations(range(len(rows))):
        term = 1.0 + 0j
        for k, p in enumerate(perm):
            term *= u[rows[k], cols[p]]
        if statistics is fo.FERMION:
            term *= _perm_sign(perm)
        total += term
    norm = 1.0
    for n in occ_in:
        norm *= math.factorial(n)
    for n in occ_out:
        norm *= math.factorial(n)
    return total / math.sqrt(norm)


def state_from_occupation_map(amps, statistics=fo.BOSON):
    m = len(next(iter(amps)))
    return fo.FockState(statistics, m, amps)


def assert_states_close(a, b, atol=1e-9):
    """Phase-insensitive state comparison."""
    assert a.n_modes == b.n_modes and a.n_particles == b.n_particles
    assert abs(fo.fidelity(a, b) - 1.0) < atol
