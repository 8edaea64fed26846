"""Running circuits: outcome tables, post-selection, inserted measurements, sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .amplitude import TOL, apply, as_state, norm2
from .errors import DimensionError, ValidationError, ZeroProbabilityError
from .optics import Basis, Circuit, stage_operators

#: Post-selection / conditioning below this probability is refused.
MIN_PROBABILITY = 1e-14
#: Probabilities in [-CLAMP, 0) are rounding noise and clamp to 0.
CLAMP = 1e-12

OTHER = "other"
REST = "rest"


def _clamp(p: float) -> float:
    if p < -CLAMP:
        raise ArithmeticError(f"negative probability {p!r}")
    return min(max(p, 0.0), 1.0 + CLAMP)


class DetectorMap(Mapping):
    """Ordered map from outcome label to a set of basis indices.

    Iteration order is declaration order, which is also the canonical order
    used by :func:`sample` and by every printed table.
    """

    def __init__(self, assignments: Iterable, dim: int):
        self._sets: dict[str, frozenset] = {}
        self.dim = dim
        seen: dict[int, str] = {}
        for label, indices in (assignments.items() if isinstance(assignments, Mapping) else assignments):
            if label in self._sets or label == OTHER:
                raise ValidationError(f"duplicate or reserved outcome label {label!r}")
            idx = frozenset(int(i) for i in indices)
            for i in idx:
                if not 0 <= i < dim:
                    raise ValidationError(f"outcome {label!r}: index {i} out of range")
                if i in seen:
                    raise ValidationError(
                        f"outcomes {seen[i]!r} and {label!r} overlap at index {i}"
                    )
                seen[i] = label
            self._sets[label] = idx
        self.unassigned = frozenset(range(dim)) - frozenset(seen)

    @classmethod
    def from_specs(cls, basis: Basis, specs: Iterable) -> "DetectorMap":
        """Build from ``(label, [spec, ...])`` pairs of :meth:`Basis.resolve` specs."""
        resolved = []
        for label, items in specs:
            idx = frozenset()
            for item in items:
                idx |= basis.resolve(item)
            resolved.append((label, idx))
        return cls(resolved, basis.dim)

    def __getitem__(self, label):
        if label == OTHER:
            return self.unassigned
        return self._sets[label]

    def __iter__(self):
        return iter(self._sets)

    def __len__(self):
        return len(self._sets)

    def __contains__(self, label):
        return label == OTHER or label in self._sets

    @property
    def labels(self) -> list[str]:
        """Declared labels followed by ``other``."""
        return [*self._sets, OTHER]

    def __repr__(self):
        return f"DetectorMap({dict(self._sets)!r}, dim={self.dim})"


@dataclass(frozen=True)
class OutcomeDistribution(Mapping):
    probs: dict = field(default_factory=dict)

    def __getitem__(self, label):
        return self.probs[label]

    def __iter__(self):
        return iter(self.probs)

    def __len__(self):
        return len(self.probs)

    def total(self) -> float:
        return float(sum(self.probs.values()))


@dataclass(frozen=True)
class JointStats:
    """Joint probabilities keyed by ``(intermediate, final)`` label pairs."""

    entries: dict
    intermediate: tuple
    final: tuple

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def marginal_final(self) -> OutcomeDistribution:
        return OutcomeDistribution(
            {f: sum(self.entries[(a, f)] for a in self.intermediate) for f in self.final}
        )


def _check_state(c: Circuit, init: np.ndarray) -> np.ndarray:
    init = as_state(init)
    if init.shape[0] != c.basis.dim:
        raise DimensionError(f"initial state has dim {init.shape[0]}, basis has {c.basis.dim}")
    if abs(norm2(init) - 1.0) > TOL:
        raise ValueError(f"initial state is not normalized (norm^2 = {norm2(init)!r})")
    return init


def evolve_states(c: Circuit, init: np.ndarray) -> list[np.ndarray]:
    """States at every stage boundary; entry ``k`` follows stage ``k``."""
    s = _check_state(c, init)
    out = [s]
    for op in stage_operators(c):
        s = apply(op, s)
        out.append(s)
    return out


def evolve(c: Circuit, init: np.ndarray) -> np.ndarray:
    return evolve_states(c, init)[-1]


def _mass(s: np.ndarray, indices) -> float:
    if not indices:
        return 0.0
    idx = np.fromiter(sorted(indices), dtype=int)
    return float(np.sum(np.abs(s[idx]) ** 2))


def outcome_distribution(s: np.ndarray, d: DetectorMap) -> OutcomeDistribution:
    if s.shape[0] != d.dim:
        raise DimensionError(f"state dim {s.shape[0]} != detector map dim {d.dim}")
    return OutcomeDistribution({lab: _clamp(_mass(s, d[lab])) for lab in d.labels})


def project(s: np.ndarray, indices) -> np.ndarray:
    mask = np.zeros(s.shape[0], dtype=bool)
    mask[list(indices)] = True
    out = np.where(mask, s, 0)
    out.setflags(write=False)
    return out


def postselect(s: np.ndarray, d: DetectorMap, outcome: str) -> tuple[np.ndarray, float]:
    """Conditional state given ``outcome`` and the probability of that outcome."""
    if outcome not in d:
        raise KeyError(f"unknown outcome {outcome!r}")
    p = _clamp(_mass(s, d[outcome]))
    if p < MIN_PROBABILITY:
        raise ZeroProbabilityError(f"outcome {outcome!r} has probability {p:.3g}")
    post = project(s, d[outcome]) / np.sqrt(p)
    post.setflags(write=False)
    return post, p


def partition(projector_sets: Mapping | Iterable, dim: int) -> dict[str, frozenset]:
    """Check a projective partition, adding ``rest`` for uncovered indices."""
    items = projector_sets.items() if isinstance(projector_sets, Mapping) else projector_sets
    out: dict[str, frozenset] = {}
    seen: set = set()
    for label, idx in items:
        idx = frozenset(int(i) for i in idx)
        if label in out:
            raise ValidationError(f"duplicate projector label {label!r}")
        if any(not 0 <= i < dim for i in idx):
            raise ValidationError(f"projector {label!r} has an index out of range")
        if idx & seen:
            raise ValidationError(f"projector {label!r} overlaps an earlier projector")
        seen |= idx
        out[label] = idx
    rest = frozenset(range(dim)) - seen
    if rest:
        if REST in out:
            raise ValidationError("projectors leave indices uncovered but 'rest' is taken")
        out[REST] = rest
    return out


def insert_measurement(
    c: Circuit,
    after_stage: int,
    projector_sets,
    init: np.ndarray,
    d: DetectorMap,
) -> JointStats:
    """Ideal projective measurement at boundary ``after_stage``, then evolve each branch."""
    if not 0 <= after_stage <= c.n_stages:
        raise ValidationError(f"boundary {after_stage} outside 0..{c.n_stages}")
    parts = partition(projector_sets, c.basis.dim)
    mid = evolve(c.slice(0, after_stage), init)
    tail = c.slice(after_stage, c.n_stages)
    tail_ops = stage_operators(tail)
    entries = {}
    for label, idx in parts.items():
        branch = project(mid, idx)
        for op in tail_ops:
            branch = apply(op, branch)
        for f, p in outcome_distribution(branch, d).items():
            entries[(label, f)] = p
    return JointStats(entries, tuple(parts), tuple(d.labels))


def conditional(j: JointStats, given_final: str) -> OutcomeDistribution:
    if given_final not in j.final:
        raise KeyError(f"unknown final outcome {given_final!r}")
    col = {a: j.entries[(a, given_final)] for a in j.intermediate}
    total = sum(col.values())
    if total <= MIN_PROBABILITY:
        raise ZeroProbabilityError(f"final outcome {given_final!r} has probability {total:.3g}")
    return OutcomeDistribution({a: p / total for a, p in col.items()})


def sample(dist: Mapping, shots: int, seed: int) -> dict[str, int]:
    """Draw ``shots`` outcomes by inverse CDF.

    Uniforms come from ``numpy.random.Generator(PCG64(seed))`` in one
    ``random(shots)`` call. Shot ``u`` lands on the first label, in the
    distribution's iteration order, whose cumulative probability exceeds
    ``u``; the last cumulative value is treated as +inf so rounding in the
    total never drops a shot.
    """
    if shots < 0:
        raise ValueError("shots must be non-negative")
    labels = list(dist)
    counts = dict.fromkeys(labels, 0)
    if shots == 0 or not labels:
        return counts
    cdf = np.cumsum([float(dist[lab]) for lab in labels])
    cdf[-1] = np.inf
    u = np.random.Generator(np.random.PCG64(seed & (2**64 - 1))).random(shots)
    hits = np.bincount(np.searchsorted(cdf, u, side="right"), minlength=len(labels))
    for lab, n in zip(labels, hits):
        counts[lab] = int(n)
    return counts
