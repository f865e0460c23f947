"""
Schrödinger evolution of the ground state under a quantum normal form.

Because the non-quadratic part ``B = Q - Op(sum lam_i x_i xi_i)`` commutes with
the quadratic part, the propagator factors exactly:

    exp(-i t Q / hbar) Phi_0 = D_{t lam} exp(-i t B / hbar) Phi_0,

where ``D_{t lam}`` is the unitary dilation.  ``B`` is small on Phi_0 (it acts
at order hbar^2), so the second factor stays in a low-index Hermite block and
is computed from a cached eigendecomposition of its truncated matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np
from scipy.special import gammaincc

from .birkhoff import QuantumNormalForm
from .errors import NumericalError
from .hermite_core import (
    SqueezedHermiteState,
    apply_axis,
    dilate,
    dilation_overlap,
    ground_state,
)

TRUNCATION_TOL = 1e-8


def ehrenfest_time(epsilon2: float, hbar: float, lambda_max: float) -> float:
    """Local Ehrenfest time (1 - eps2) |log hbar| / (2 lambda_max)."""
    if not 0 < epsilon2 <= 1:
        raise ValueError("epsilon2 must lie in (0, 1]")
    if not 0 < hbar <= 0.5:
        raise ValueError("hbar must lie in (0, 1/2]")
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    return (1.0 - epsilon2) * abs(np.log(hbar)) / (2.0 * lambda_max)


def evolve_quadratic(state: SqueezedHermiteState, t: float, lam) -> SqueezedHermiteState:
    """Exact flow of Op(sum lam_i x_i xi_i): a dilation by t * lam."""
    return dilate(state, t * np.asarray(lam, dtype=float))


class _Spectral:
    """Eigendecomposition of a Hermitian matrix with cached ground-state weights."""

    def __init__(self, A: np.ndarray, start: np.ndarray):
        A = 0.5 * (A + A.conj().T)
        self.w, self.V = np.linalg.eigh(A)
        self.c0 = self.V.conj().T @ start

    def evolve(self, t: float, hbar: float) -> np.ndarray:
        return self.V @ (np.exp(-1j * t * self.w / hbar) * self.c0)


def _sub_indices(cap: int, sub: int, r: int) -> np.ndarray:
    grids = np.indices((cap,) * r).reshape(r, -1)
    return np.flatnonzero(np.all(grids < sub, axis=0))


@dataclass
class EvolutionPlan:
    """Everything needed to propagate Phi_0 under a quantum normal form.

    ``T_eps = (1 - eps2) |log hbar| / (2 max lam)``.
    """

    lam: tuple
    nf: QuantumNormalForm
    l: int = 2
    epsilon2: float = 0.3
    hbar: float | None = None

    def __post_init__(self):
        self.lam = tuple(float(v) for v in self.lam)
        if self.hbar is None:
            self.hbar = self.nf.hbar
        if self.hbar != self.nf.hbar:
            raise ValueError("plan hbar differs from the normal form's hbar")
        if self.l < 1:
            raise ValueError("Dyson order l must be >= 1")
        if not 0 < self.epsilon2 < 1:
            raise ValueError("epsilon2 must lie in (0, 1)")

    @property
    def r(self) -> int:
        return self.nf.r

    @property
    def cap(self) -> int:
        return self.nf.basis_cap

    @property
    def T_eps(self) -> float:
        return ehrenfest_time(self.epsilon2, self.hbar, max(self.lam))

    @cached_property
    def B(self) -> np.ndarray:
        return self.nf.perturbation.entries

    @cached_property
    def start(self) -> np.ndarray:
        v = np.zeros(self.cap**self.r, dtype=complex)
        v[0] = 1.0
        return v

    @cached_property
    def is_quadratic(self) -> bool:
        return not np.any(np.abs(self.B) > 0)

    @cached_property
    def _spectral(self) -> _Spectral:
        return _Spectral(self.B, self.start)

    @cached_property
    def _spectral_small(self) -> tuple:
        spread = max(self.nf.perturbation.spread, 1)
        sub = max(self.cap - 2 * spread, self.cap // 2)
        idx = _sub_indices(self.cap, sub, self.r)
        return idx, _Spectral(self.B[np.ix_(idx, idx)], self.start[idx])

    def inner_vector(self, t: float) -> np.ndarray:
        """exp(-i t B / hbar) Phi_0 as a flat coefficient vector."""
        if self.is_quadratic:
            return self.start.copy()
        return self._spectral.evolve(t, self.hbar)

    def truncation_estimate(self, t: float) -> float:
        """Difference between the evolution on the full and a reduced basis."""
        if self.is_quadratic:
            return 0.0
        full = self.inner_vector(t)
        idx, small = self._spectral_small
        diff = full.copy()
        diff[idx] -= small.evolve(t, self.hbar)
        return float(np.linalg.norm(diff))

    def to_state(self, vec: np.ndarray, t: float) -> SqueezedHermiteState:
        arr = vec.reshape((self.cap,) * self.r)
        base = SqueezedHermiteState.from_dense(arr, self.hbar, (0.0,) * self.r)
        return evolve_quadratic(base, t, self.lam)


def evolve_full(plan: EvolutionPlan, t: float, check: bool = True) -> SqueezedHermiteState:
    """exp(-i t Q / hbar) Phi_0 via the commuting factorization."""
    if abs(t) > 1.5 * plan.T_eps + 1e-12:
        raise ValueError(f"|t|={abs(t):.4g} exceeds 1.5 T_eps={1.5 * plan.T_eps:.4g}")
    if check:
        err = plan.truncation_estimate(t)
        if err > TRUNCATION_TOL:
            raise NumericalError(f"basis truncation error {err:.2e} exceeds {TRUNCATION_TOL:.0e}; raise basis_cap")
    return plan.to_state(plan.inner_vector(t), t)


@dataclass
class DysonTerm:
    p: int
    prefactor: complex  # t^p / (p! (i hbar)^p)
    vector: np.ndarray  # B^p Phi_0, flat
    excited: list = field(default_factory=list)  # (coefficient, multi-index) of prefactor * B^p Phi_0


@dataclass
class DysonExpansion:
    t: float
    hbar: float
    lam: tuple
    cap: int
    r: int
    terms: list
    remainder_bound: float

    def inner_vector(self) -> np.ndarray:
        out = np.zeros_like(self.terms[0].vector)
        for term in self.terms:
            out = out + term.prefactor * term.vector
        return out

    def state(self) -> SqueezedHermiteState:
        arr = self.inner_vector().reshape((self.cap,) * self.r)
        base = SqueezedHermiteState.from_dense(arr, self.hbar, (0.0,) * self.r)
        return evolve_quadratic(base, self.t, self.lam)

    def term_norms(self) -> list:
        return [float(abs(term.prefactor) * np.linalg.norm(term.vector)) for term in self.terms]

    def excited_count(self) -> int:
        return len({m for term in self.terms for _, m in term.excited})


def dyson_expand(plan: EvolutionPlan, t: float, l: int | None = None) -> DysonExpansion:
    """sum_{p <= l} t^p / (p! (i hbar)^p) D_{t lam} B^p Phi_0, with remainder bound.

    The bound is the Taylor remainder of the unitary group,
    ``|t|^{l+1} / ((l+1)! hbar^{l+1}) ||B^{l+1} Phi_0||``.
    """
    l = plan.l if l is None else l
    if l < 1:
        raise ValueError("Dyson order l must be >= 1")
    hbar = plan.hbar
    shape = (plan.cap,) * plan.r
    terms = []
    vec = plan.start.copy()
    for p in range(l + 1):
        pref = t**p / (factorial(p) * (1j * hbar) ** p)
        nz = np.flatnonzero(np.abs(vec) >= 1e-300)
        excited = [(complex(pref * vec[i]), tuple(int(v) for v in np.unravel_index(i, shape))) for i in nz]
        terms.append(DysonTerm(p, pref, vec.copy(), excited))
        vec = plan.B @ vec
    bound = abs(t) ** (l + 1) / (factorial(l + 1) * hbar ** (l + 1)) * float(np.linalg.norm(vec))
    return DysonExpansion(t, hbar, plan.lam, plan.cap, plan.r, terms, bound)


def dyson_error(plan: EvolutionPlan, t: float, l: int | None = None) -> float:
    """||evolve_full - dyson_expand|| (the dilation is unitary, so compare inner vectors)."""
    exact = plan.inner_vector(t)
    return float(np.linalg.norm(exact - dyson_expand(plan, t, l).inner_vector()))


# --- microlocal mass ------------------------------------------------------


def number_basis_cap(radius: float, hbar: float) -> int:
    """Per-axis number-basis size beyond which anti-Wick ball weights are ~1."""
    a = radius**2 / (2 * hbar)
    return int(np.ceil(a + 12 * np.sqrt(a) + 40))


def number_coefficients(state: SqueezedHermiteState, n_max: int) -> np.ndarray:
    """Coefficients of the state in the unsqueezed Hermite basis, indices < n_max per axis."""
    arr = state.to_dense()
    for ax, s in enumerate(state.squeeze):
        arr = apply_axis(dilation_overlap(s, n_max, arr.shape[ax]), arr, ax)
        if arr.shape[ax] < n_max:
            pad = [(0, 0)] * arr.ndim
            pad[ax] = (0, n_max - arr.shape[ax])
            arr = np.pad(arr, pad)
    return arr[tuple(slice(0, n_max) for _ in range(state.r))]


def microlocal_mass_outside(state: SqueezedHermiteState, radius: float) -> float:
    """Anti-Wick mass of the state outside the phase-space ball |(x, xi)| < radius.

    The anti-Wick quantization of the ball indicator is diagonal in the
    number basis with eigenvalue ``P(|n| + r, radius^2 / (2 hbar))`` (regularized
    lower incomplete gamma).  Norm that is not captured by the finite number
    basis lies where that eigenvalue is ~0 and is counted as outside.
    The result is normalized by the state's norm.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    total = state.norm() ** 2
    if total == 0:
        raise ValueError("zero state")
    r, hbar = state.r, state.hbar
    a = radius**2 / (2 * hbar)
    if all(s == 0.0 for s in state.squeeze):
        coeffs = state.to_dense()
    else:
        coeffs = number_coefficients(state, number_basis_cap(radius, hbar))
    grids = np.indices(coeffs.shape).sum(axis=0)
    probs = np.abs(coeffs) ** 2
    outside_eig = gammaincc(grids + r, a)
    inside = float(np.sum(probs * (1.0 - outside_eig)))
    return float(min(1.0, max(0.0, 1.0 - inside / total)))


def ground_evolution_plan(nf: QuantumNormalForm, l: int = 2, epsilon2: float = 0.3) -> EvolutionPlan:
    return EvolutionPlan(nf.lam, nf, l, epsilon2, nf.hbar)


__all__ = [
    "EvolutionPlan",
    "DysonExpansion",
    "DysonTerm",
    "ehrenfest_time",
    "evolve_quadratic",
    "evolve_full",
    "dyson_expand",
    "dyson_error",
    "microlocal_mass_outside",
    "number_coefficients",
    "number_basis_cap",
    "ground_evolution_plan",
    "ground_state",
]
