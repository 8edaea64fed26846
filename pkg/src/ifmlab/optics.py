"""Systems, mode bases, optical elements and circuits.

Every element compiles to a unitary on the full, sink-augmented space.
Absorbers are permutations that move amplitude into a sink mode, so the
norm of the global state is conserved and "explosion" is an ordinary
outcome with an amplitude.

Beam-splitter convention (symmetric, ``i`` on both cross terms)::

    BS(a, b, T) = [[sqrt(T),       i sqrt(1-T)],
                   [i sqrt(1-T),   sqrt(T)    ]]

Two 50/50 splitters in a row send ``a`` to ``i b``, so an unobstructed
equal-arm interferometer is dark at the straight-through port without any
extra phase element.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Mapping, Sequence, Union

import numpy as np

from .amplitude import TOL
from .errors import ValidationError

NAME_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_\-]*$")

ABSORB_KINDS = ("bomb", "opaque", "dud")


def valid_name(name: str) -> bool:
    return isinstance(name, str) and bool(NAME_RE.match(name))


@dataclass(frozen=True, order=True)
class ModeLabel:
    system: str
    mode: str

    @classmethod
    def parse(cls, text: str) -> "ModeLabel":
        system, sep, mode = text.strip().partition(".")
        if not sep or not valid_name(system) or not valid_name(mode):
            raise ValueError(f"not a mode label: {text!r}")
        return cls(system, mode)

    def __str__(self) -> str:
        return f"{self.system}.{self.mode}"


def _label(x: Union[str, ModeLabel]) -> ModeLabel:
    return x if isinstance(x, ModeLabel) else ModeLabel.parse(x)


@dataclass(frozen=True)
class Basis:
    """Tensor product of per-system mode lists, followed by joint sinks.

    Composite index of a product element is row-major over systems in
    declaration order (first system most significant). Joint sinks occupy
    the last ``len(joint_sinks)`` indices.
    """

    systems: tuple
    joint_sinks: tuple = ()

    def __post_init__(self):
        systems = tuple((name, tuple(modes)) for name, modes in self.systems)
        object.__setattr__(self, "systems", systems)
        object.__setattr__(self, "joint_sinks", tuple(self.joint_sinks))
        problems = []
        if not systems:
            problems.append("basis declares no systems")
        seen_sys = set()
        for name, modes in systems:
            if not valid_name(name):
                problems.append(f"bad system name {name!r}")
            if name in seen_sys:
                problems.append(f"duplicate system {name!r}")
            seen_sys.add(name)
            if not modes:
                problems.append(f"system {name!r} has no modes")
            if len(set(modes)) != len(modes):
                problems.append(f"duplicate mode in system {name!r}")
            problems += [f"bad mode name {m!r}" for m in modes if not valid_name(m)]
        for s in self.joint_sinks:
            if not valid_name(s):
                problems.append(f"bad joint sink name {s!r}")
        if len(set(self.joint_sinks)) != len(self.joint_sinks):
            problems.append("duplicate joint sink")
        if problems:
            raise ValidationError("; ".join(problems), problems)

    @classmethod
    def single(cls, system: str, modes: Sequence[str]) -> "Basis":
        return cls(((system, tuple(modes)),))

    @cached_property
    def _sys(self) -> dict:
        return {name: (pos, modes) for pos, (name, modes) in enumerate(self.systems)}

    @cached_property
    def _strides(self) -> list[int]:
        strides, acc = [], 1
        for _, modes in reversed(self.systems):
            strides.append(acc)
            acc *= len(modes)
        return strides[::-1]

    @property
    def system_names(self) -> list[str]:
        return [name for name, _ in self.systems]

    @property
    def product_dim(self) -> int:
        return math.prod(len(m) for _, m in self.systems)

    @property
    def dim(self) -> int:
        return self.product_dim + len(self.joint_sinks)

    def modes(self, system: str) -> tuple:
        return self._sys[system][1]

    def has_system(self, system: str) -> bool:
        return system in self._sys

    def has_mode(self, label) -> bool:
        label = _label(label)
        return label.system in self._sys and label.mode in self._sys[label.system][1]

    def has_joint_sink(self, name: str) -> bool:
        return name in self.joint_sinks

    def local_index(self, label) -> int:
        label = _label(label)
        return self._sys[label.system][1].index(label.mode)

    def index(self, assignment: Union[Mapping[str, str], Sequence[str]]) -> int:
        """Composite index of a product element.

        ``assignment`` is either a mode name per system, in system order, or
        a mapping from system name to mode name covering every system.
        """
        if isinstance(assignment, Mapping):
            if set(assignment) != set(self._sys):
                raise KeyError(f"assignment must name every system: {sorted(self._sys)}")
            assignment = [assignment[name] for name in self.system_names]
        if len(assignment) != len(self.systems):
            raise KeyError("assignment length differs from number of systems")
        idx = 0
        for (name, modes), stride, mode in zip(self.systems, self._strides, assignment):
            idx += modes.index(mode) * stride
        return idx

    def joint_index(self, sink: str) -> int:
        return self.product_dim + self.joint_sinks.index(sink)

    def cylinder(self, label) -> frozenset:
        """All product elements in which ``label.system`` occupies ``label.mode``."""
        label = _label(label)
        pos, modes = self._sys[label.system]
        k = modes.index(label.mode)
        stride = self._strides[pos]
        n = len(modes)
        return frozenset(
            i for i in range(self.product_dim) if (i // stride) % n == k
        )

    def resolve(self, spec: str) -> frozenset:
        """Index set named by ``sys.mode``, ``s1.m1&s2.m2`` or a joint sink."""
        spec = spec.strip()
        if spec in self.joint_sinks:
            return frozenset({self.joint_index(spec)})
        parts = [p.strip() for p in spec.split("&")]
        labels = [ModeLabel.parse(p) for p in parts]
        if len({lab.system for lab in labels}) != len(labels):
            raise KeyError(f"system named twice in {spec!r}")
        sets = []
        for lab in labels:
            if not self.has_mode(lab):
                raise KeyError(f"unknown mode {lab}")
            sets.append(self.cylinder(lab))
        return reduce(frozenset.intersection, sets)

    def element_label(self, index: int) -> str:
        if index >= self.product_dim:
            return self.joint_sinks[index - self.product_dim]
        parts = []
        for (name, modes), stride in zip(self.systems, self._strides):
            parts.append(f"{name}.{modes[(index // stride) % len(modes)]}")
        return "&".join(parts)

    def labels(self) -> list[str]:
        return [self.element_label(i) for i in range(self.dim)]


# --- elements -------------------------------------------------------------


class _Element:
    """Accepts ``"system.mode"`` strings wherever a ModeLabel is expected."""

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name, None)
            if isinstance(v, str):
                object.__setattr__(self, name, ModeLabel.parse(v))


@dataclass(frozen=True)
class BeamSplitter(_Element):
    a: ModeLabel
    b: ModeLabel
    T: float = 0.5

    def matrix(self) -> np.ndarray:
        t, r = math.sqrt(self.T), math.sqrt(1.0 - self.T)
        return np.array([[t, 1j * r], [1j * r, t]])


@dataclass(frozen=True)
class Phase(_Element):
    a: ModeLabel
    phi: float


@dataclass(frozen=True)
class Swap(_Element):
    a: ModeLabel
    b: ModeLabel

    def matrix(self) -> np.ndarray:
        return np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class Absorb(_Element):
    """Object in mode ``a``; its sink is a mode of the same system."""

    a: ModeLabel
    sink: str
    kind: str = "bomb"

    @property
    def sink_label(self) -> ModeLabel:
        return ModeLabel(self.a.system, self.sink)


@dataclass(frozen=True)
class JointSink(_Element):
    """Exchanges the product element (a, b) with a joint sink element."""

    a: ModeLabel
    b: ModeLabel
    sink: str


@dataclass(frozen=True)
class Rotate(_Element):
    a: ModeLabel
    b: ModeLabel
    theta: float

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]], dtype=complex)


Element = Union[BeamSplitter, Phase, Swap, Absorb, JointSink, Rotate]


def touched(e: Element) -> set:
    """Resources an element acts on; elements sharing one may not share a stage."""
    if isinstance(e, Phase):
        return {e.a}
    if isinstance(e, Absorb):
        return {e.a, e.sink_label}
    if isinstance(e, JointSink):
        return {e.a, e.b, ("joint", e.sink)}
    return {e.a, e.b}


def element_problems(e: Element, basis: Basis) -> list[tuple[str, str]]:
    """(kind, message) pairs describing why ``e`` is invalid on ``basis``."""
    out = []
    labels = [e.a] if isinstance(e, (Phase, Absorb)) else [e.a, e.b]
    for lab in labels:
        if not basis.has_mode(lab):
            out.append(("unknown-label", f"unknown mode {lab}"))
    if len(labels) == 2 and labels[0] == labels[1]:
        out.append(("degenerate", f"element acts twice on {labels[0]}"))
    if isinstance(e, BeamSplitter) and not (0.0 <= e.T <= 1.0):
        out.append(("bad-parameter", f"T={e.T} outside [0, 1]"))
    for name in ("T", "phi", "theta"):
        v = getattr(e, name, None)
        if v is not None and not math.isfinite(v):
            out.append(("bad-parameter", f"{name} is not finite"))
    if isinstance(e, Absorb):
        if e.kind not in ABSORB_KINDS:
            out.append(("bad-parameter", f"unknown absorber kind {e.kind!r}"))
        if not basis.has_mode(e.sink_label):
            out.append(("unknown-label", f"unknown sink {e.sink_label}"))
        elif e.sink == e.a.mode:
            out.append(("degenerate", "absorber sink equals its own mode"))
    if isinstance(e, JointSink):
        if e.a.system == e.b.system:
            out.append(("degenerate", "joint sink needs modes of two different systems"))
        elif len(basis.systems) != 2:
            out.append(("joint-sink-arity", "joint sinks require a basis of exactly two systems"))
        if not basis.has_joint_sink(e.sink):
            out.append(("unknown-label", f"unknown joint sink {e.sink!r}"))
    return out


def _embed(local: np.ndarray, system: str, basis: Basis) -> np.ndarray:
    factors = [
        local if name == system else np.eye(len(modes), dtype=complex)
        for name, modes in basis.systems
    ]
    full = reduce(np.kron, factors)
    n_joint = len(basis.joint_sinks)
    if n_joint:
        out = np.eye(basis.dim, dtype=complex)
        out[: basis.product_dim, : basis.product_dim] = full
        return out
    return full


def _local_two_mode(m2: np.ndarray, a: ModeLabel, b: ModeLabel, basis: Basis) -> np.ndarray:
    n = len(basis.modes(a.system))
    local = np.eye(n, dtype=complex)
    i, j = basis.local_index(a), basis.local_index(b)
    local[np.ix_([i, j], [i, j])] = m2
    return _embed(local, a.system, basis)


def element_operator(e: Element, basis: Basis) -> np.ndarray:
    problems = element_problems(e, basis)
    if problems:
        raise ValidationError(f"{e}: " + "; ".join(m for _, m in problems), problems)
    if isinstance(e, (BeamSplitter, Swap, Rotate)):
        return _local_two_mode(e.matrix(), e.a, e.b, basis)
    if isinstance(e, Phase):
        local = np.eye(len(basis.modes(e.a.system)), dtype=complex)
        k = basis.local_index(e.a)
        local[k, k] = np.exp(1j * e.phi)
        return _embed(local, e.a.system, basis)
    if isinstance(e, Absorb):
        if e.kind == "dud":
            return np.eye(basis.dim, dtype=complex)
        return _local_two_mode(Swap(e.a, e.sink_label).matrix(), e.a, e.sink_label, basis)
    if isinstance(e, JointSink):
        i = basis.index({e.a.system: e.a.mode, e.b.system: e.b.mode})
        j = basis.joint_index(e.sink)
        perm = np.arange(basis.dim)
        perm[[i, j]] = perm[[j, i]]
        return np.eye(basis.dim, dtype=complex)[perm]
    raise TypeError(f"not an element: {e!r}")


# --- circuits -------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    stage: int  # 0-based
    element: int  # 0-based position within the stage
    message: str

    def __str__(self) -> str:
        return f"stage {self.stage + 1}, element {self.element + 1}: {self.kind}: {self.message}"


@dataclass(frozen=True)
class Circuit:
    basis: Basis
    stages: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(tuple(s) for s in self.stages))

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def slice(self, start: int, stop: int) -> "Circuit":
        """Sub-circuit made of stages ``start`` .. ``stop - 1``."""
        return Circuit(self.basis, self.stages[start:stop])


def validate(c: Circuit) -> list[Diagnostic]:
    out = []
    for k, stage in enumerate(c.stages):
        owner: dict = {}
        for n, e in enumerate(stage):
            for kind, msg in element_problems(e, c.basis):
                out.append(Diagnostic(kind, k, n, msg))
            for res in touched(e):
                if res in owner:
                    name = res[1] if isinstance(res, tuple) else str(res)
                    out.append(Diagnostic(
                        "overlap", k, n,
                        f"{name} already used by element {owner[res] + 1} of this stage",
                    ))
                else:
                    owner[res] = n
    return out


def check(c: Circuit) -> None:
    diags = validate(c)
    if diags:
        raise ValidationError("; ".join(map(str, diags)), diags)


def stage_operator(c: Circuit, k: int) -> np.ndarray:
    op = np.eye(c.basis.dim, dtype=complex)
    for e in c.stages[k]:
        op = element_operator(e, c.basis) @ op
    return op


def stage_operators(c: Circuit) -> list[np.ndarray]:
    check(c)
    return [stage_operator(c, k) for k in range(c.n_stages)]


def circuit_operator(c: Circuit) -> np.ndarray:
    op = np.eye(c.basis.dim, dtype=complex)
    for s in stage_operators(c):
        op = s @ op
    return op


__all__ = [
    "ABSORB_KINDS", "TOL", "Absorb", "Basis", "BeamSplitter", "Circuit",
    "Diagnostic", "Element", "JointSink", "ModeLabel", "Phase", "Rotate",
    "Swap", "check", "circuit_operator", "element_operator", "stage_operator",
    "stage_operators", "touched", "validate",
]
