"""Forward/backward state pairs between pre- and post-selection.

Boundary ``k`` sits after stage ``k`` (boundary 0 is before the first
stage). ``forward[k]`` is the pre-selected state evolved through stages
``1..k``; ``backward[k]`` is the normalized post-selected projection evolved
backwards through the adjoints of stages ``n..k+1``. Their overlap is the
same number at every boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .amplitude import apply, inner
from .engine import (
    MIN_PROBABILITY,
    DetectorMap,
    OutcomeDistribution,
    evolve,
    evolve_states,
    partition,
    postselect,
)
from .errors import DimensionError, ValidationError, ZeroProbabilityError
from .optics import Basis, Circuit, ModeLabel, stage_operators


@dataclass(frozen=True)
class TwoStateTrace:
    forward: tuple
    backward: tuple
    post_label: str
    post_probability: float
    basis: Basis | None = None

    @property
    def n_boundaries(self) -> int:
        return len(self.forward)

    def bridge(self, k: int) -> complex:
        return inner(self.backward[k], self.forward[k])


def trace(c: Circuit, init, d: DetectorMap, post_label: str) -> TwoStateTrace:
    forward = evolve_states(c, init)
    post, p = postselect(forward[-1], d, post_label)
    ops = stage_operators(c)
    backward = [post]
    for op in reversed(ops):
        backward.append(apply(op.conj().T, backward[-1]))
    return TwoStateTrace(tuple(forward), tuple(reversed(backward)), post_label, p, c.basis)


def presence(t: TwoStateTrace, mode, boundary: int) -> complex:
    """``<backward| P |forward>`` at ``boundary`` for the projector onto ``mode``.

    ``mode`` is a :class:`ModeLabel`, any spec accepted by
    :meth:`Basis.resolve`, or an explicit set of basis indices. A vanishing
    value means nothing at that location can pick up a trace of the
    particle; it says nothing about where the particle "was".
    """
    if isinstance(mode, (str, ModeLabel)):
        if t.basis is None:
            raise ValueError("trace carries no basis; pass basis indices instead")
        try:
            indices = t.basis.resolve(str(mode))
        except (KeyError, ValueError) as exc:
            raise KeyError(f"unknown mode {mode}") from exc
    else:
        indices = mode
    if not 0 <= boundary < t.n_boundaries:
        raise IndexError(f"boundary {boundary} outside 0..{t.n_boundaries - 1}")
    f, b = t.forward[boundary], t.backward[boundary]
    idx = sorted(indices)
    if any(not 0 <= i < f.shape[0] for i in idx):
        raise DimensionError("projector index out of range")
    return complex(np.vdot(b[idx], f[idx]))


def abl(
    c_pre: Circuit,
    c_post: Circuit,
    init,
    projector_sets,
    d: DetectorMap,
    post_label: str,
) -> OutcomeDistribution:
    """ABL probabilities of an intermediate projective measurement.

    The post-selected outcome may span several basis elements ``e_j``;
    each contributes ``|<U_post^dag e_j| P_a |psi_pre>|^2``. The backward
    vectors are obtained by applying stage adjoints in reverse, which keeps
    this route independent of the forward branch evolution in
    :func:`ifmlab.engine.insert_measurement`.
    """
    if c_pre.basis != c_post.basis:
        raise ValidationError("pre and post circuits are on different bases")
    if post_label not in d:
        raise KeyError(f"unknown outcome {post_label!r}")
    parts = partition(projector_sets, c_pre.basis.dim)
    psi = evolve(c_pre, init)
    adjoints = [op.conj().T for op in reversed(stage_operators(c_post))]
    post_idx = sorted(d[post_label])
    back = np.zeros((len(post_idx), psi.shape[0]), dtype=complex)
    for row, j in enumerate(post_idx):
        v = np.zeros(psi.shape[0], dtype=complex)
        v[j] = 1.0
        for op in adjoints:
            v = op @ v
        back[row] = v
    weights = {}
    for label, idx in parts.items():
        cols = sorted(idx)
        amps = back[:, cols].conj() @ psi[cols]
        weights[label] = float(np.sum(np.abs(amps) ** 2))
    total = sum(weights.values())
    if total <= MIN_PROBABILITY:
        raise ZeroProbabilityError(
            f"post-selection on {post_label!r} has zero probability in every branch"
        )
    return OutcomeDistribution({a: w / total for a, w in weights.items()})
