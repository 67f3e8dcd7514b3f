"""Elementary optical gates, circuits with heralding, and mesh decomposition.

A circuit is an ordered list of elements; the first element acts first.  Mode
indices are 0-based in memory and 1-based in the JSON file format.  Detectors
terminate their mode: no later element may touch it.  Their projective action
commutes with gates on the surviving modes, so execution defers all detections
to the end and applies them as one joint herald.
"""

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidCircuit,
    InvalidFile,
    InvalidParameter,
    NotUnitary,
    ShapeMismatch,
)
from .states import (
    FockState,
    apply_mode_unitary,
    detection_distribution,
    herald,
    require_unitary,
)

RECK_TOL = 1e-13


def hadamard():
    """The real 2x2 Hadamard; note it is its own inverse."""
    return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


def _check_pair(modes):
    s, t = (int(modes[0]), int(modes[1]))
    if s == t:
        raise InvalidCircuit("two-mode element needs distinct modes")
    return s, t


@dataclass(frozen=True, eq=False)
class BeamSplitter:
    """Two-mode gate with an arbitrary 2x2 unitary; row/column order = modes."""

    modes: tuple
    matrix: np.ndarray = field(default_factory=hadamard)

    def __post_init__(self):
        object.__setattr__(self, "modes", _check_pair(self.modes))
        m = require_unitary(self.matrix)
        if m.shape != (2, 2):
            raise ShapeMismatch("beam splitter matrix must be 2x2")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "mode", int(self.mode))
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))


@dataclass(frozen=True)
class Swap:
    modes: tuple

    def __post_init__(self):
        object.__setattr__(self, "modes", _check_pair(self.modes))


@dataclass(frozen=True)
class Detector:
    """Number-resolving detector; ``herald`` fixes the accepted count.

    With ``herald=None`` the detector is a readout: its counts form the
    experiment's outcome instead of post-selecting.
    """

    mode: int
    herald: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", int(self.mode))
        if self.herald is not None:
            h = int(self.herald)
            if h < 0:
                raise InvalidParameter("herald count must be >= 0")
            object.__setattr__(self, "herald", h)


def element_modes(element):
    if isinstance(element, (BeamSplitter, Swap)):
        return element.modes
    return (element.mode,)


def element_unitary(element, n_modes):
    """Embed a gate into the full M-mode transformation matrix."""
    u = np.eye(n_modes, dtype=complex)
    if isinstance(element, BeamSplitter):
        s, t = element.modes
        u[s, s], u[s, t] = element.matrix[0, 0], element.matrix[0, 1]
        u[t, s], u[t, t] = element.matrix[1, 0], element.matrix[1, 1]
    elif isinstance(element, Swap):
        s, t = element.modes
        u[s, s] = u[t, t] = 0.0
        u[s, t] = u[t, s] = 1.0
    elif isinstance(element, PhaseShifter):
        u[element.mode, element.mode] = cmath.exp(1j * element.phi)
    else:
        raise InvalidCircuit(f"{element!r} has no unitary action")
    return u


class Circuit:
    """Ordered optical elements on a fixed number of modes."""

    __slots__ = ("n_modes", "elements")

    def __init__(self, n_modes, elements=()):
        n_modes = int(n_modes)
        if n_modes < 1:
            raise InvalidCircuit("circuit needs at least one mode")
        elements = tuple(elements)
        detected = set()
        for el in elements:
            for m in element_modes(el):
                if not 0 <= m < n_modes:
                    raise InvalidCircuit(f"mode {m} out of range for {n_modes} modes")
                if m in detected:
                    raise InvalidCircuit(f"mode {m} is already terminated by a detector")
            if isinstance(el, Detector):
                detected.add(el.mode)
        object.__setattr__(self, "n_modes", n_modes)
        object.__setattr__(self, "elements", elements)

    def __setattr__(self, name, value):
        raise AttributeError("Circuit is immutable")

    @property
    def detectors(self):
        return tuple(el for el in self.elements if isinstance(el, Detector))

    @property
    def heralds(self):
        """Map detector mode -> required count, heralded detectors only."""
        return {d.mode: d.herald for d in self.detectors if d.herald is not None}

    @property
    def readout_modes(self):
        """Modes of unheralded detectors, in element order."""
        return tuple(d.mode for d in self.detectors if d.herald is None)

    @property
    def output_modes(self):
        """Undetected modes, ascending."""
        detected = {d.mode for d in self.detectors}
        return tuple(m for m in range(self.n_modes) if m not in detected)

    def extended(self, extra_elements):
        """New circuit with ``extra_elements`` appended."""
        return Circuit(self.n_modes, self.elements + tuple(extra_elements))

    def __repr__(self):
        return f"Circuit(n_modes={self.n_modes}, elements={list(self.elements)})"


def _evolve_gates(state, circuit):
    if state.n_modes != circuit.n_modes:
        raise ShapeMismatch(
            f"state has {state.n_modes} modes, circuit {circuit.n_modes}"
        )
    for el in circuit.elements:
        if isinstance(el, Detector):
            continue
        state = apply_mode_unitary(state, element_unitary(el, circuit.n_modes))
    return state


def run_circuit(state, circuit):
    """Execute the circuit and return ``(state on output modes, probability)``.

    Every detector must carry a herald count; conditioning happens jointly at
    the end, which is equivalent to in-place detection because no gate acts on
    a detected mode afterwards.
    """
    for det in circuit.detectors:
        if det.herald is None:
            raise InvalidCircuit(
                "run_circuit needs heralded detectors; use detector_statistics "
                "for readout detectors"
            )
    evolved = _evolve_gates(state, circuit)
    heralds = circuit.heralds
    if not heralds:
        return evolved, 1.0
    return herald(evolved, set(heralds), heralds)


@dataclass
class ReadoutStatistics:
    """Joint counts on readout detectors, conditioned on heralds."""

    distribution: dict
    herald_probability: float
    readout_modes: tuple


def detector_statistics(state, circuit):
    """Distribution of readout-detector counts, conditioned on the heralds.

    Modes without any detector are traced out.  Outcome keys are count tuples
    ordered like ``circuit.readout_modes``.
    """
    evolved = _evolve_gates(state, circuit)
    heralds = circuit.heralds
    readout = circuit.readout_modes
    dist = {}
    p_herald = 0.0
    for occ, p in detection_distribution(evolved).items():
        if any(occ[m] != c for m, c in heralds.items()):
            continue
        p_herald += p
        key = tuple(occ[m] for m in readout)
        dist[key] = dist.get(key, 0.0) + p
    if p_herald <= 0.0:
        return ReadoutStatistics({}, 0.0, readout)
    dist = {k: v / p_herald for k, v in dist.items()}
    return ReadoutStatistics(dist, p_herald, readout)


def circuit_to_unitary(circuit):
    """Single mode transformation realized by a detector-free circuit.

    The first element acts first, so the result is the left-to-right matrix
    product of the embedded gates (creation-operator substitution composes
    that way).
    """
    if circuit.detectors:
        raise InvalidCircuit("circuit with detectors has no overall unitary")
    u = np.eye(circuit.n_modes, dtype=complex)
    for el in circuit.elements:
        u = u @ element_unitary(el, circuit.n_modes)
    return u


def reck_decompose(u):
    """Factor a mode unitary into a triangular mesh of two-mode gates.

    Produces at most M(M-1)/2 beam splitters on adjacent mode pairs plus up
    to M phase shifters, with ``circuit_to_unitary`` recovering ``u``.
    """
    u = require_unitary(u)
    m = u.shape[0]
    a = u.copy()
    elements = []
    for col in range(m - 1):
        for row in range(m - 1, col, -1):
            x = a[row - 1, col]
            y = a[row, col]
            if abs(y) <= RECK_TOL:
                continue
            norm = math.hypot(abs(x), abs(y))
            r = np.array(
                [[x.conjugate() / norm, y.conjugate() / norm], [-y / norm, x / norm]]
            )
            a[row - 1 : row + 1, :] = r @ a[row - 1 : row + 1, :]
            elements.append(BeamSplitter((row - 1, row), r.conj().T))
    for mode in range(m):
        phi = cmath.phase(a[mode, mode])
        if abs(phi) > 1e-12:
            elements.append(PhaseShifter(mode, phi))
    return Circuit(m, elements)


# ---------------------------------------------------------------------------
# published interferometer topologies
#
# Mode layout convention: the two signal modes come first, ancilla rails are
# appended after them.
# ---------------------------------------------------------------------------

def yurke_stoler_circuit():
    """Two-qubit splitter stage: modes (0,1) = inputs, (2,3) = empty rails.

    Each input mode is split onto its empty rail by a Hadamard beam splitter
    (the real Hadamard equals its inverse, so both splitters are identical),
    then the two new rails are exchanged.  Post-selection on one particle per
    rail pair is performed by the Bell-test layer, not by this circuit.
    """
    h = hadamard()
    return Circuit(
        4,
        [BeamSplitter((0, 2), h), BeamSplitter((1, 3), h), Swap((2, 3))],
    )


def two_particle_filter_circuit(s, n_particles):
    """Event-ready filter pulling N-2 particles into heralded ancillas.

    Splits input modes (0,1) onto ancillas (2,3) with Hadamards and heralds
    ``s`` counts on ancilla 2 and ``N-s-2`` on ancilla 3, leaving a
    two-particle state on modes (0,1).
    """
    n = int(n_particles)
    s = int(s)
    if n < 2 or not 0 <= s <= n - 2:
        raise InvalidParameter(f"filter needs 0 <= s <= N-2, got s={s}, N={n}")
    h = hadamard()
    return Circuit(
        4,
        [
            BeamSplitter((0, 2), h),
            BeamSplitter((1, 3), h),
            Detector(2, s),
            Detector(3, n - s - 2),
        ],
    )


def quantum_erasure_circuit(n_particles):
    """Filter variant that erases which-mode particle-number information.

    A Hadamard across the two ancilla rails precedes detection; heralding is
    fixed to ``N-2`` counts on ancilla 2 and zero on ancilla 3.
    """
    n = int(n_particles)
    if n < 2:
        raise InvalidParameter("erasure needs at least two particles")
    h = hadamard()
    return Circuit(
        4,
        [
            BeamSplitter((0, 2), h),
            BeamSplitter((1, 3), h),
            BeamSplitter((2, 3), h),
            Detector(2, n - 2),
            Detector(3, 0),
        ],
    )


def fermion_herald_circuit(n_modes, counts):
    """Herald exact counts on modes 2..M-1, leaving modes (0,1) event-ready.

    ``counts`` lists the required detections for modes 2, 3, ..., M-1.
    """
    n_modes = int(n_modes)
    counts = [int(c) for c in counts]
    if len(counts) != n_modes - 2:
        raise InvalidParameter(f"need {n_modes - 2} herald counts, got {len(counts)}")
    return Circuit(
        n_modes, [Detector(m, c) for m, c in zip(range(2, n_modes), counts)]
    )


# ---------------------------------------------------------------------------
# circuit files (1-based mode indices):
# {"modes": M, "elements": [{"type": "bs", "modes": [s,t], "matrix": [[..]]},
#  {"type": "ps", "mode": s, "phi": x}, {"type": "swap", "modes": [s,t]},
#  {"type": "detect", "mode": s, "herald": k}], "outputs": [...]}
# Matrix entries are [re, im] pairs.
# ---------------------------------------------------------------------------

def _matrix_to_json(m):
    return [[[z.real, z.imag] for z in row] for row in np.asarray(m, dtype=complex)]


def _matrix_from_json(rows):
    return np.array(
        [[complex(entry[0], entry[1]) for entry in row] for row in rows],
        dtype=complex,
    )


def circuit_to_dict(circuit):
    elements = []
    for el in circuit.elements:
        if isinstance(el, BeamSplitter):
            s, t = el.modes
            elements.append(
                {"type": "bs", "modes": [s + 1, t + 1], "matrix": _matrix_to_json(el.matrix)}
            )
        elif isinstance(el, PhaseShifter):
            elements.append({"type": "ps", "mode": el.mode + 1, "phi": el.phi})
        elif isinstance(el, Swap):
            s, t = el.modes
            elements.append({"type": "swap", "modes": [s + 1, t + 1]})
        else:
            entry = {"type": "detect", "mode": el.mode + 1}
            if el.herald is not None:
                entry["herald"] = el.herald
            elements.append(entry)
    return {
        "modes": circuit.n_modes,
        "elements": elements,
        "outputs": [m + 1 for m in circuit.output_modes],
    }


def circuit_from_dict(data):
    try:
        n_modes = int(data["modes"])
        elements = []
        for entry in data["elements"]:
            kind = entry["type"]
            if kind == "bs":
                s, t = entry["modes"]
                elements.append(
                    BeamSplitter((int(s) - 1, int(t) - 1), _matrix_from_json(entry["matrix"]))
                )
            elif kind == "ps":
                elements.append(PhaseShifter(int(entry["mode"]) - 1, float(entry["phi"])))
            elif kind == "swap":
                s, t = entry["modes"]
                elements.append(Swap((int(s) - 1, int(t) - 1)))
            elif kind == "detect":
                herald_count = entry.get("herald")
                elements.append(
                    Detector(
                        int(entry["mode"]) - 1,
                        None if herald_count is None else int(herald_count),
                    )
                )
            else:
                raise InvalidFile(f"unknown element type {kind!r}")
    except InvalidFile:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InvalidFile(f"malformed circuit description: {exc}") from exc
    try:
        circuit = Circuit(n_modes, elements)
    except (InvalidCircuit, NotUnitary, ShapeMismatch, InvalidParameter) as exc:
        raise InvalidFile(f"invalid circuit content: {exc}") from exc
    declared = data.get("outputs")
    if declared is not None:
        actual = [m + 1 for m in circuit.output_modes]
        if sorted(int(x) for x in declared) != actual:
            raise InvalidFile(
                f"declared outputs {declared} disagree with undetected modes {actual}"
            )
    return circuit


def load_circuit(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidFile(
            f"JSON parse error: {exc.msg}", line=exc.lineno, column=exc.colno
        ) from exc
    return circuit_from_dict(data)


def save_circuit(circuit, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(circuit_to_dict(circuit), fh, indent=1)
        fh.write("\n")
