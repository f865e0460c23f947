"""
Squeezed Hermite states in r transverse dimensions.

A state is ``phase * D_squeeze sum_m c_m Phi_m`` where ``Phi_m`` is the
r-dimensional Hermite function of multi-index ``m`` at scale sqrt(hbar) and
``D_s u(x) = exp(-sum s_i / 2) u(exp(-s_1) x_1, ..., exp(-s_r) x_r)`` is the
unitary dilation generated by ``sum_i Op(x_i xi_i)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

PRUNE_TOL = 1e-14


def _prune(coeffs):
    return {m: complex(c) for m, c in coeffs.items() if abs(c) >= PRUNE_TOL}


@dataclass(frozen=True)
class SqueezedHermiteState:
    hbar: float
    squeeze: tuple
    coeffs: dict = field(default_factory=dict)
    phase: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not (0.0 < self.hbar <= 1.0):
            raise ValueError(f"hbar must lie in (0, 1], got {self.hbar}")
        if len(self.squeeze) < 1:
            raise ValueError("dimension r must be >= 1")
        object.__setattr__(self, "squeeze", tuple(float(s) for s in self.squeeze))
        r = len(self.squeeze)
        for m in self.coeffs:
            if len(m) != r or min(m) < 0:
                raise ValueError(f"bad multi-index {m} for r={r}")

    @property
    def r(self) -> int:
        return len(self.squeeze)

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.coeffs.values())))

    def normalize(self) -> "SqueezedHermiteState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return self.with_coeffs({m: c / n for m, c in self.coeffs.items()})

    def with_coeffs(self, coeffs, squeeze=None) -> "SqueezedHermiteState":
        return SqueezedHermiteState(
            self.hbar,
            self.squeeze if squeeze is None else tuple(squeeze),
            _prune(coeffs),
            self.phase,
        )

    def support_shape(self) -> tuple:
        """Smallest dense shape holding every stored multi-index."""
        if not self.coeffs:
            return (1,) * self.r
        return tuple(max(m[i] for m in self.coeffs) + 1 for i in range(self.r))

    def to_dense(self, shape=None) -> np.ndarray:
        """Coefficient tensor with the global phase folded in."""
        shape = self.support_shape() if shape is None else tuple(shape)
        arr = np.zeros(shape, dtype=complex)
        for m, c in self.coeffs.items():
            if any(mi >= si for mi, si in zip(m, shape)):
                raise ValueError(f"multi-index {m} does not fit in shape {shape}")
            arr[m] = c * self.phase
        return arr

    @classmethod
    def from_dense(cls, arr, hbar, squeeze, phase=1.0 + 0.0j):
        arr = np.asarray(arr)
        nz = np.argwhere(np.abs(arr) >= PRUNE_TOL)
        coeffs = {tuple(int(i) for i in idx): complex(arr[tuple(idx)]) for idx in nz}
        return cls(float(hbar), tuple(squeeze), coeffs, phase)

    def to_json(self) -> str:
        return json.dumps(
            {
                "hbar": self.hbar,
                "squeeze": list(self.squeeze),
                "coeffs": [[list(m), c.real, c.imag] for m, c in sorted(self.coeffs.items())],
                "phase": [complex(self.phase).real, complex(self.phase).imag],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SqueezedHermiteState":
        d = json.loads(text)
        coeffs = {tuple(m): complex(re, im) for m, re, im in d["coeffs"]}
        return cls(d["hbar"], tuple(d["squeeze"]), coeffs, complex(*d["phase"]))


def ground_state(hbar: float, r: int) -> SqueezedHermiteState:
    if hbar <= 0 or hbar > 1:
        raise ValueError(f"hbar must lie in (0, 1], got {hbar}")
    if r < 1:
        raise ValueError("r must be a positive integer")
    return SqueezedHermiteState(hbar, (0.0,) * r, {(0,) * r: 1.0 + 0j})


def _check_ladder(state, axis):
    if not 0 <= axis < state.r:
        raise IndexError(f"axis {axis} out of range for r={state.r}")
    if any(s != 0.0 for s in state.squeeze):
        raise ValueError("ladder operators act in the unsqueezed frame")


def raise_(state: SqueezedHermiteState, axis: int) -> SqueezedHermiteState:
    """Apply the creation operator a*_axis."""
    _check_ladder(state, axis)
    out = {}
    for m, c in state.coeffs.items():
        up = list(m)
        up[axis] += 1
        out[tuple(up)] = out.get(tuple(up), 0) + np.sqrt(m[axis] + 1) * c
    return state.with_coeffs(out)


def lower(state: SqueezedHermiteState, axis: int) -> SqueezedHermiteState:
    """Apply the annihilation operator a_axis."""
    _check_ladder(state, axis)
    out = {}
    for m, c in state.coeffs.items():
        if m[axis] == 0:
            continue
        dn = list(m)
        dn[axis] -= 1
        out[tuple(dn)] = out.get(tuple(dn), 0) + np.sqrt(m[axis]) * c
    return state.with_coeffs(out)


def excited_state(hbar: float, index) -> SqueezedHermiteState:
    """Normalized Phi_m built as (a*)^m / sqrt(m!) Phi_0."""
    state = ground_state(hbar, len(index))
    for axis, mi in enumerate(index):
        for _ in range(mi):
            state = raise_(state, axis)
    scale = np.prod([np.sqrt(float(factorial(mi))) for mi in index])
    return state.with_coeffs({m: c / scale for m, c in state.coeffs.items()})


def dilate(state: SqueezedHermiteState, logs) -> SqueezedHermiteState:
    logs = tuple(float(v) for v in np.broadcast_to(np.asarray(logs, float), (state.r,)))
    new = tuple(a + b for a, b in zip(state.squeeze, logs))
    return SqueezedHermiteState(state.hbar, new, dict(state.coeffs), state.phase)


def hermite_functions(n: int, y) -> np.ndarray:
    """Normalized Hermite functions psi_0..psi_{n-1} at dimensionless points y.

    Three-term recurrence on the functions themselves (not the polynomials),
    which stays bounded for large orders.
    """
    y = np.asarray(y, dtype=float)
    out = np.zeros((n,) + y.shape)
    if n == 0:
        return out
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * y * y)
    if n > 1:
        out[1] = np.sqrt(2.0) * y * out[0]
    for k in range(1, n - 1):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * y * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


@lru_cache(maxsize=4096)
def _overlap_cached(s: float, n_rows: int, n_cols: int) -> np.ndarray:
    k = np.exp(-s)
    # psi_m(y) is negligible past its turning point sqrt(2m+1)
    y_max = np.sqrt(2.0 * n_rows + 1.0) + 12.0
    y_max = min(y_max, (np.sqrt(2.0 * n_cols + 1.0) + 12.0) / k) if k > 0 else y_max
    n_freq = max(n_rows, n_cols)
    dy = min(0.08, 0.5 / np.sqrt(2.0 * n_freq + 1.0))
    y = np.arange(-y_max, y_max + dy / 2, dy)
    left = hermite_functions(n_rows, y)
    right = hermite_functions(n_cols, k * y)
    mat = (left * dy) @ right.T * np.exp(-s / 2)
    mat.setflags(write=False)
    return mat


def dilation_overlap(s: float, n_rows: int, n_cols: int | None = None) -> np.ndarray:
    """Matrix M[m, n] = <phi_m, D_s phi_n> for one axis.

    The value is hbar independent. Computed by trapezoid quadrature of the
    Hermite-function product, which is spectrally accurate for these entire,
    Gaussian-decaying integrands. Negative s uses M(-s) = M(s)^T.
    """
    n_cols = n_rows if n_cols is None else n_cols
    s = float(s)
    if s == 0.0:
        return np.eye(n_rows, n_cols)
    if s < 0:
        return _overlap_cached(-s, n_cols, n_rows).T
    return _overlap_cached(s, n_rows, n_cols)


def apply_axis(mat: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    """Contract ``mat`` (out, in) with ``arr`` along ``axis``."""
    moved = np.moveaxis(arr, axis, 0)
    res = np.tensordot(mat, moved, axes=(1, 0))
    return np.moveaxis(res, 0, axis)


def overlap_dense(a: np.ndarray, b: np.ndarray, rel_squeeze) -> complex:
    """<D_0 a, D_rel b> for dense coefficient tensors of equal rank."""
    tmp = b
    for ax, s in enumerate(rel_squeeze):
        tmp = apply_axis(dilation_overlap(s, a.shape[ax], tmp.shape[ax]), tmp, ax)
    return complex(np.vdot(a, tmp))


def inner_product(a: SqueezedHermiteState, b: SqueezedHermiteState) -> complex:
    """<a, b>, conjugate-linear in ``a``."""
    if a.r != b.r:
        raise ValueError("states live in different dimensions")
    if a.hbar != b.hbar:
        raise ValueError("states carry different hbar")
    rel = [sb - sa for sa, sb in zip(a.squeeze, b.squeeze)]
    if all(s == 0.0 for s in rel):
        return complex(np.conj(a.phase) * b.phase * sum(np.conj(c) * b.coeffs.get(m, 0) for m, c in a.coeffs.items()))
    return overlap_dense(a.to_dense(), b.to_dense(), rel)


def evaluate(state: SqueezedHermiteState, points) -> np.ndarray:
    """Pointwise values at an array of r-vectors, shape (npts, r) or (npts,) for r = 1."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if state.r == 1 else pts[None, :]
    shape = state.support_shape()
    dense = state.to_dense(shape)
    factors = []
    for ax in range(state.r):
        s = state.squeeze[ax]
        y = np.exp(-s) * pts[:, ax] / np.sqrt(state.hbar)
        factors.append(hermite_functions(shape[ax], y) * np.exp(-s / 2) * state.hbar ** -0.25)
    letters = "abcdefghij"[: state.r]
    expr = letters + "," + ",".join(f"{l}z" for l in letters) + "->z"
    return np.einsum(expr, dense, *factors)
