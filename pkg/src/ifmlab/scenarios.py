"""Constructors for the interaction-free-measurement experiments.

Interferometers share one layout. A photon enters port ``b`` of the first
splitter (ports ``a``/``b``), is routed into the ``upper`` and ``lower``
arms, leaves the arms into the output ports ``d1``/``d2`` and meets the
second splitter there. With the symmetric splitter convention an empty
interferometer sends everything to ``d1`` (detector D1) and nothing to
``d2`` (the dark detector D2). Arm modes are occupied only between the
entry and exit routing stages, so "the lower arm" is a single mode whose
amplitude is zero outside the interferometer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .amplitude import TOL, as_state, basis_state, expectation, is_hermitian, norm2
from .engine import (
    MIN_PROBABILITY,
    DetectorMap,
    OutcomeDistribution,
    evolve,
    evolve_states,
    outcome_distribution,
)
from .errors import ValidationError, ZeroProbabilityError
from .optics import (
    Absorb,
    Basis,
    BeamSplitter,
    Circuit,
    JointSink,
    ModeLabel,
    Rotate,
    Swap,
    check,
)

MZI_MODES = ("a", "b", "upper", "lower", "d1", "d2")
SOURCE = "b"


@dataclass(frozen=True)
class Scenario:
    name: str
    circuit: Circuit
    init: np.ndarray = field(compare=False)
    detector_specs: tuple  # ((label, (spec, ...)), ...)
    expected: OutcomeDistribution | None = None
    notes: dict = field(default_factory=dict, compare=False)
    #: Named stage boundaries, e.g. ``{"meeting": 3}``.
    markers: dict = field(default_factory=dict, compare=False)
    post: str | None = None

    def __post_init__(self):
        check(self.circuit)
        init = as_state(self.init)
        if init.shape[0] != self.circuit.basis.dim or abs(norm2(init) - 1) > TOL:
            raise ValidationError(f"scenario {self.name}: initial state mismatched or not normalized")
        object.__setattr__(self, "init", init)
        if self.expected is not None and abs(self.expected.total() - 1) > 1e-10:
            raise ValidationError(f"scenario {self.name}: expected table does not sum to 1")

    @property
    def basis(self) -> Basis:
        return self.circuit.basis

    @property
    def detectors(self) -> DetectorMap:
        return DetectorMap.from_specs(self.basis, self.detector_specs)

    def final_state(self) -> np.ndarray:
        return evolve(self.circuit, self.init)

    def distribution(self) -> OutcomeDistribution:
        return outcome_distribution(self.final_state(), self.detectors)


def _bs(system, a="a", b="b"):
    return BeamSplitter(ModeLabel(system, a), ModeLabel(system, b), 0.5)


def _swap(system, a, b):
    return Swap(ModeLabel(system, a), ModeLabel(system, b))


def _entry(system):
    return [_swap(system, "a", "upper"), _swap(system, "b", "lower")]


def _exit(system, crossed=False):
    if crossed:
        return [_swap(system, "upper", "d2"), _swap(system, "lower", "d1")]
    return [_swap(system, "upper", "d1"), _swap(system, "lower", "d2")]


def _expected(pairs, labels) -> OutcomeDistribution:
    table = dict.fromkeys([*labels, "other"], 0.0)
    table.update(pairs)
    return OutcomeDistribution(table)


def _single_photon(basis: Basis) -> np.ndarray:
    return basis_state(basis.dim, basis.index([SOURCE]))


# --- bomb tests and delayed choice -----------------------------------------


def ev_bomb_test(object: str = "bomb") -> Scenario:
    """Interferometer with nothing, a bomb, or an opaque screen in the lower arm."""
    if object not in ("absent", "bomb", "opaque"):
        raise ValueError(f"object must be absent, bomb or opaque, not {object!r}")
    modes = MZI_MODES + (() if object == "absent" else ("lower_sink",))
    basis = Basis.single("photon", modes)
    obj = [] if object == "absent" else [Absorb(ModeLabel("photon", "lower"), "lower_sink", object)]
    stages = [[_bs("photon")], _entry("photon"), obj, _exit("photon"), [_bs("photon", "d1", "d2")]]
    det = [("D1", ("photon.d1",)), ("D2", ("photon.d2",))]
    if object == "absent":
        expected = _expected({"D1": 1.0}, ["D1", "D2"])
        notes = {"D1": "tuned interferometer: always D1", "D2": "dark port: never D2"}
    else:
        sink = "explosion" if object == "bomb" else "blocked"
        det.insert(0, (sink, ("photon.lower_sink",)))
        expected = _expected({sink: 0.5, "D1": 0.25, "D2": 0.25}, [sink, "D1", "D2"])
        notes = {
            sink: "|i/sqrt2|^2 from the lower arm",
            "D1": "upper arm amplitude 1/sqrt2 times 1/sqrt2",
            "D2": "25% chance to find the object without touching it",
        }
    return Scenario(
        f"ev-bomb-{object}" if object != "bomb" else "ev-bomb",
        Circuit(basis, stages), _single_photon(basis), tuple(det), expected, notes,
        markers={"entry": 2, "object": 3, "exit": 4},
        post=None if object == "absent" else "D2",
    )


def wheeler(second_splitter: str = "absent") -> Scenario:
    """Delayed-choice interferometer; without the second splitter the arms cross to the detectors."""
    if second_splitter not in ("absent", "present"):
        raise ValueError("second_splitter must be 'absent' or 'present'")
    basis = Basis.single("photon", MZI_MODES)
    stages = [[_bs("photon")], _entry("photon")]
    if second_splitter == "present":
        stages += [_exit("photon"), [_bs("photon", "d1", "d2")]]
        expected = _expected({"D1": 1.0}, ["D1", "D2"])
    else:
        stages += [_exit("photon", crossed=True)]
        expected = _expected({"D1": 0.5, "D2": 0.5}, ["D1", "D2"])
    det = (("D1", ("photon.d1",)), ("D2", ("photon.d2",)))
    return Scenario(
        "wheeler" if second_splitter == "absent" else "wheeler-closed",
        Circuit(basis, stages), _single_photon(basis), det, expected,
        {"D2": "upper arm leads straight to D2 when the splitter is missing"},
        markers={"entry": 2, "exit": 3},
        post="D2",
    )


def penrose(bomb: str = "live") -> Scenario:
    """The bomb is the lower-arm mirror: a live one absorbs, a dud reflects."""
    if bomb not in ("live", "dud"):
        raise ValueError("bomb must be 'live' or 'dud'")
    basis = Basis.single("photon", MZI_MODES + ("lower_sink",))
    kind = "bomb" if bomb == "live" else "dud"
    stages = [
        [_bs("photon")], _entry("photon"),
        [Absorb(ModeLabel("photon", "lower"), "lower_sink", kind)],
        _exit("photon"), [_bs("photon", "d1", "d2")],
    ]
    det = (("explosion", ("photon.lower_sink",)), ("D1", ("photon.d1",)), ("D2", ("photon.d2",)))
    labels = ["explosion", "D1", "D2"]
    if bomb == "live":
        expected = _expected({"explosion": 0.5, "D1": 0.25, "D2": 0.25}, labels)
    else:
        expected = _expected({"D1": 1.0}, labels)
    return Scenario(
        "penrose" if bomb == "live" else "penrose-dud",
        Circuit(basis, stages), _single_photon(basis), det, expected,
        {"D2": "clicks sometimes for a live bomb, never for a dud"},
        markers={"entry": 2, "object": 3, "exit": 4},
        post="D2" if bomb == "live" else None,
    )


# --- Hardy -------------------------------------------------------------------

HARDY_CATEGORIES = {
    "D1": ("d1",),
    "D2": ("d2",),
    "X": ("a", "b", "upper", "lower"),  # never reached a detector
}


def hardy_label(photon: str, particle: str) -> str:
    """``bothD2`` for equal categories, else photon category then particle's."""
    return f"both{photon}" if photon == particle else f"{photon}{particle}"


HARDY_PAIRS = (
    ("D1", "D1"), ("D1", "D2"), ("D2", "D1"), ("D2", "D2"),
    ("D1", "X"), ("D2", "X"), ("X", "D1"), ("X", "D2"), ("X", "X"),
)


def hardy_labels() -> list[str]:
    return [hardy_label(p, q) for p, q in HARDY_PAIRS] + ["annihilation"]


def hardy() -> Scenario:
    """Two nested interferometers; photon lower arm crosses particle upper arm at W."""
    basis = Basis((("photon", MZI_MODES), ("particle", MZI_MODES)), ("W",))
    stages = [
        [_bs("photon"), _bs("particle")],
        _entry("photon") + _entry("particle"),
        [JointSink(ModeLabel("photon", "lower"), ModeLabel("particle", "upper"), "W")],
        _exit("photon") + _exit("particle"),
        [_bs("photon", "d1", "d2"), _bs("particle", "d1", "d2")],
    ]
    det = [
        (hardy_label(p, q), tuple(
            f"photon.{m}&particle.{n}" for m in HARDY_CATEGORIES[p] for n in HARDY_CATEGORIES[q]
        ))
        for p, q in HARDY_PAIRS
    ]
    det.append(("annihilation", ("W",)))
    expected = _expected(
        {"bothD1": 9 / 16, "D1D2": 1 / 16, "D2D1": 1 / 16, "bothD2": 1 / 16, "annihilation": 1 / 4},
        hardy_labels(),
    )
    init = basis_state(basis.dim, basis.index([SOURCE, SOURCE]))
    return Scenario(
        "hardy", Circuit(basis, stages), init, tuple(det), expected,
        {
            "annihilation": "both first splitters put amplitude i/2 on (photon lower, particle upper)",
            "bothD2": "amplitude 1/4: both dark detectors click together",
            "bothD1": "amplitude -3/4",
        },
        markers={"entry": 2, "meeting": 3, "exit": 4},
        post="bothD2",
    )


def hardy_partitions(basis: Basis) -> dict[str, dict[str, frozenset]]:
    """Position measurements at W used for the conditional claims."""
    return {
        "particle": {"W": basis.resolve("particle.upper")},
        "photon": {"W": basis.resolve("photon.lower")},
        "joint": {"WW": basis.resolve("photon.lower&particle.upper")},
    }


# --- quantum object ------------------------------------------------------------


def ev_quantum_object(meeting: str = "explosion", internal: Sequence[complex] | None = None) -> Scenario:
    """Photon interferometer whose lower arm crosses location ``in`` of a particle.

    The particle starts in ``(|in> + |out>)/sqrt2``. ``meeting="opaque"``
    replaces the explosion sink by a ``blocked`` sink; the joint sink element
    then stands for "photon stopped, particle still at ``in``". Passing a
    normalized two-component ``internal`` state tensors the particle with an
    internal label (modes ``in0, in1, out0, out1``) that the meeting must not
    disturb.
    """
    if meeting not in ("explosion", "opaque"):
        raise ValueError("meeting must be 'explosion' or 'opaque'")
    sink = "explosion" if meeting == "explosion" else "blocked"
    lower = ModeLabel("photon", "lower")
    if internal is None:
        particle_modes = ("in", "out")
        sinks = (sink,)
        meet = [[JointSink(lower, ModeLabel("particle", "in"), sink)]]
        particle = np.array([1, 1]) / math.sqrt(2)
    else:
        chi = as_state(internal)
        if chi.shape != (2,) or abs(norm2(chi) - 1) > TOL:
            raise ValueError("internal state must be a normalized 2-vector")
        particle_modes = ("in0", "in1", "out0", "out1")
        sinks = (f"{sink}0", f"{sink}1")
        # one meeting per internal level; they commute but share the photon mode
        meet = [[JointSink(lower, ModeLabel("particle", f"in{k}"), sinks[k])] for k in (0, 1)]
        particle = np.concatenate([chi, chi]) / math.sqrt(2)
    basis = Basis((("photon", MZI_MODES), ("particle", particle_modes)), sinks)
    stages = [[_bs("photon")], _entry("photon"), *meet, _exit("photon"), [_bs("photon", "d1", "d2")]]
    photon = np.zeros(len(MZI_MODES), dtype=complex)
    photon[MZI_MODES.index(SOURCE)] = 1
    init = np.concatenate([np.kron(photon, particle), np.zeros(len(sinks))])
    det = ((sink, sinks), ("D1", ("photon.d1",)), ("D2", ("photon.d2",)))
    expected = _expected({sink: 0.25, "D1": 0.625, "D2": 0.125}, [sink, "D1", "D2"])
    meeting_boundary = 2 + len(meet)
    return Scenario(
        "ev-object" if meeting == "explosion" and internal is None else f"ev-object-{meeting}",
        Circuit(basis, stages), init, det, expected,
        {"D2": "amplitude -1/(2 sqrt2) on |in>: a D2 click localizes the particle"},
        markers={"entry": 2, "meeting": meeting_boundary, "exit": meeting_boundary + 1},
        post="D2",
    )


def particle_state(s: np.ndarray, basis: Basis, photon_mode: str) -> np.ndarray:
    """Particle amplitudes conditional on the photon sitting in ``photon_mode``."""
    modes = basis.modes("particle")
    out = np.array([s[basis.index({"photon": photon_mode, "particle": m})] for m in modes])
    n = math.sqrt(norm2(out))
    if n == 0:
        raise ZeroProbabilityError(f"no amplitude with the photon in {photon_mode}")
    return out / n


# --- negative-result measurements --------------------------------------------


def renninger(M: int, covered, init) -> tuple[np.ndarray, float]:
    """A detector covering ``covered`` bins stays silent: project it out and renormalize."""
    if M < 2:
        raise ValueError("need at least two bins")
    init = as_state(init)
    if init.shape != (M,):
        raise ValueError(f"initial state must have {M} bins")
    covered = sorted(set(covered))
    if not covered or any(not 0 <= k < M for k in covered):
        raise ValueError("covered must be a nonempty subset of the bins")
    post = np.array(init)
    post[covered] = 0
    p = norm2(post)
    if p < MIN_PROBABILITY:
        raise ZeroProbabilityError("the detector covers the whole support: it always fires")
    return as_state(post / math.sqrt(p)), p


def renninger_scenario(M: int = 4, covered=(0,)) -> Scenario:
    """The same negative-result setup as a circuit: each covered bin absorbs into a sink."""
    covered = sorted(set(covered))
    bins = [f"bin{k}" for k in range(M)]
    sinks = [f"bin{k}_sink" for k in covered]
    basis = Basis.single("photon", bins + sinks)
    stage = [Absorb(ModeLabel("photon", f"bin{k}"), f"bin{k}_sink", "opaque") for k in covered]
    init = np.concatenate([np.full(M, 1 / math.sqrt(M)), np.zeros(len(sinks))])
    det = (("D1", tuple(f"photon.{s}" for s in sinks)), ("silent", tuple(f"photon.{b}" for b in bins)))
    frac = len(covered) / M
    return Scenario(
        "renninger", Circuit(basis, [stage]), init, det,
        _expected({"D1": frac, "silent": 1 - frac}, ["D1", "silent"]),
        {"silent": "negative result: the photon wave loses the covered bins"},
        post="silent",
    )


@dataclass(frozen=True)
class DickeResult:
    post: np.ndarray
    p_negative: float
    e_before: float
    e_after: float


def well_hamiltonian(n: int = 3) -> np.ndarray:
    """Finite-difference particle in a box with hard walls: 2 on the diagonal, -1 off it."""
    return 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


def dicke(init, illuminated, observable) -> DickeResult:
    """No photon is scattered from the illuminated sites; compare energies before and after."""
    init = as_state(init)
    observable = np.asarray(observable, dtype=complex)
    if observable.shape != (init.shape[0],) * 2 or not is_hermitian(observable):
        raise ValueError("observable must be a self-adjoint operator on the grid")
    if abs(norm2(init) - 1) > TOL:
        raise ValueError("initial state is not normalized")
    post = np.array(init)
    post[sorted(set(illuminated))] = 0
    p = norm2(post)
    if p < MIN_PROBABILITY:
        raise ZeroProbabilityError("photons are always scattered")
    post = as_state(post / math.sqrt(p))
    return DickeResult(post, p, expectation(observable, init), expectation(observable, post))


def dicke_scenario(illuminated=(0,)) -> Scenario:
    """Ground state of the three-site well; scattering off illuminated sites fills a sink."""
    h = well_hamiltonian(3)
    ground = np.linalg.eigh(h)[1][:, 0]
    ground = ground * np.sign(ground[np.argmax(np.abs(ground))])
    sites = ["s0", "s1", "s2"]
    lit = sorted(set(illuminated))
    sinks = [f"s{k}_sink" for k in lit]
    basis = Basis.single("atom", sites + sinks)
    stage = [Absorb(ModeLabel("atom", f"s{k}"), f"s{k}_sink", "opaque") for k in lit]
    init = np.concatenate([ground, np.zeros(len(sinks))])
    det = (("scattered", tuple(f"atom.{s}" for s in sinks)), ("none", tuple(f"atom.{s}" for s in sites)))
    res = dicke(ground, lit, h)
    return Scenario(
        "dicke", Circuit(basis, [stage]), init, det,
        _expected({"scattered": 1 - res.p_negative, "none": res.p_negative}, ["scattered", "none"]),
        {
            "none": f"energy {res.e_before:.12f} -> {res.e_after:.12f} without any scattered photon",
        },
        post="none",
    )


# --- Zeno ------------------------------------------------------------------------


def zeno_closed_form(N: int) -> float:
    """Explosion probability of the N-cycle Zeno scheme: 1 - cos^(2N)(pi / 2N)."""
    return 1.0 - math.cos(math.pi / (2 * N)) ** (2 * N)


def zeno_scenario(N: int = 10, bomb: str = "live") -> Scenario:
    """Polarization rotated by pi/2N per cycle; a live bomb absorbs the rotated component.

    Each cycle has its own sink: absorbers are swaps, so reusing a sink
    would return earlier explosions to the beam.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if bomb not in ("live", "dud"):
        raise ValueError("bomb must be 'live' or 'dud'")
    sinks = [f"V_sink{k}" for k in range(1, N + 1)]
    basis = Basis.single("photon", ["H", "V", *sinks])
    h, v = ModeLabel("photon", "H"), ModeLabel("photon", "V")
    kind = "bomb" if bomb == "live" else "dud"
    stages = []
    for s in sinks:
        stages.append([Rotate(h, v, math.pi / (2 * N))])
        stages.append([Absorb(v, s, kind)])
    det = (("explosion", tuple(f"photon.{s}" for s in sinks)), ("H", ("photon.H",)), ("V", ("photon.V",)))
    labels = ["explosion", "H", "V"]
    if bomb == "live":
        p = zeno_closed_form(N)
        expected = _expected({"explosion": p, "H": 1 - p}, labels)
    else:
        expected = _expected({"V": 1.0}, labels)
    return Scenario(
        "zeno" if bomb == "live" else "zeno-dud",
        Circuit(basis, stages), basis_state(basis.dim, 0), det, expected,
        {"H": "no explosion and no rotation: the bomb is live"},
        post="H" if bomb == "live" else "V",
    )


@dataclass(frozen=True)
class ZenoResult:
    N: int
    p_explosion: float
    p_detect_live: float
    p_identify_dud: float
    per_cycle_states: tuple


def zeno_ifm(N: int, bomb: str = "live") -> ZenoResult:
    """Simulate N cycles stage by stage.

    ``p_explosion`` is for the given bomb. ``p_detect_live`` is the chance
    a live bomb survives and leaves the photon in H; ``p_identify_dud`` the
    chance a dud leaves it in V. Neither outcome is possible for the other
    bomb type, so both identifications are certain.
    """
    live, dud = zeno_scenario(N, "live"), zeno_scenario(N, "dud")
    live_d, dud_d = live.distribution(), dud.distribution()
    run = live if bomb == "live" else dud
    states = evolve_states(run.circuit, run.init)
    return ZenoResult(
        N,
        live_d["explosion"] if bomb == "live" else dud_d["explosion"],
        live_d["H"],
        dud_d["V"],
        tuple(states[2::2]),
    )


# --- registry ----------------------------------------------------------------------

SCENARIOS = {
    "ev-bomb": lambda: ev_bomb_test("bomb"),
    "wheeler": lambda: wheeler("absent"),
    "penrose": lambda: penrose("live"),
    "hardy": hardy,
    "ev-object": ev_quantum_object,
    "renninger": renninger_scenario,
    "dicke": dicke_scenario,
    "zeno": zeno_scenario,
}

#: Variants reachable by name but not part of the stable identifier list.
VARIANTS = {
    "ev-bomb-absent": lambda: ev_bomb_test("absent"),
    "ev-bomb-opaque": lambda: ev_bomb_test("opaque"),
    "wheeler-closed": lambda: wheeler("present"),
    "penrose-dud": lambda: penrose("dud"),
    "ev-object-opaque": lambda: ev_quantum_object("opaque"),
    "zeno-dud": lambda: zeno_scenario(10, "dud"),
}


def get(name: str) -> Scenario:
    try:
        return {**SCENARIOS, **VARIANTS}[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}") from None


def names() -> list[str]:
    return [*SCENARIOS, *VARIANTS]
