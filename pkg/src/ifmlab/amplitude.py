"""Dense complex vectors and operators over finite mode bases.

States are 1-D ``complex128`` arrays and operators are square 2-D arrays.
Operators follow the row = output index, column = input index convention,
so ``op @ state`` is the evolved state.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError

#: Shared absolute tolerance for unitarity and normalization checks.
TOL = 1e-12


def as_state(amps) -> np.ndarray:
    """Return a read-only complex128 copy of ``amps`` as a state vector."""
    s = np.array(amps, dtype=np.complex128).reshape(-1)
    if s.size < 1:
        raise DimensionError("state vector must have dim >= 1")
    if not np.all(np.isfinite(s)):
        raise ValueError("state vector has non-finite amplitudes")
    s.setflags(write=False)
    return s


def basis_state(dim: int, index: int) -> np.ndarray:
    s = np.zeros(dim, dtype=np.complex128)
    s[index] = 1.0
    s.setflags(write=False)
    return s


def norm2(s: np.ndarray) -> float:
    return float(np.vdot(s, s).real)


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """``<a|b>``, conjugating the first argument."""
    if a.shape != b.shape:
        raise DimensionError(f"inner: dims {a.shape} and {b.shape} differ")
    return complex(np.vdot(a, b))


def apply(op: np.ndarray, s: np.ndarray) -> np.ndarray:
    if op.ndim != 2 or op.shape[1] != s.shape[0]:
        raise DimensionError(f"apply: operator {op.shape} on state {s.shape}")
    out = op @ s
    out.setflags(write=False)
    return out


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, ``a`` index major and ``b`` index minor."""
    if a.ndim != b.ndim:
        raise DimensionError("tensor: cannot mix states and operators")
    out = np.kron(a, b)
    out.setflags(write=False)
    return out


def is_unitary(op: np.ndarray, tol: float = TOL) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        return False
    dev = op.conj().T @ op - np.eye(op.shape[0])
    return bool(np.max(np.abs(dev), initial=0.0) <= tol)


def is_hermitian(op: np.ndarray, tol: float = TOL) -> bool:
    return op.ndim == 2 and op.shape[0] == op.shape[1] and bool(
        np.max(np.abs(op - op.conj().T), initial=0.0) <= tol
    )


def expectation(op: np.ndarray, s: np.ndarray) -> float:
    """Real expectation value of a self-adjoint ``op`` in normalized ``s``."""
    return float(np.vdot(s, op @ s).real)
