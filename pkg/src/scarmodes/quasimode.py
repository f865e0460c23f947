"""
Time-averaged quasimodes, their norm and spectral width, and spectral projection.

The quasimode in the normal-form frame is

    Psi = int chi(t / T) exp(i t f / hbar) Phi_t dt,   Phi_t = exp(-i t Q / hbar) Phi_0,

with ``chi`` a smooth bump supported in (-1, 1).  Since
``<Phi_t, Phi_t'>`` depends only on ``t' - t``, norms and widths reduce to
one-dimensional correlation functions sampled on the same equispaced
t-grid as the trapezoid rule.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import quad

from .errors import NumericalError
from .hermite_core import apply_axis, dilation_overlap, evaluate, SqueezedHermiteState
from .propagation import EvolutionPlan, ehrenfest_time, number_coefficients

PARTIAL_LOCALIZATION_FACTOR = 2.0 / (3.0 * np.sqrt(3.0))
QUADRATURE_RTOL = 1e-8

# --- cutoff profile ----------------------------------------------------------


def _bump_f(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    a, b = _bump_f(u), _bump_f(1.0 - u)
    return a / (a + b)


def smooth_step_deriv(u):
    u = np.asarray(u, dtype=float)
    a, b = _bump_f(u), _bump_f(1.0 - u)
    with np.errstate(divide="ignore", invalid="ignore"):
        da = np.where(u > 0, a / np.where(u > 0, u, 1.0) ** 2, 0.0)
        db = np.where(u < 1, b / np.where(u < 1, 1.0 - u, 1.0) ** 2, 0.0)
        out = (da * b + a * db) / (a + b) ** 2
    return np.nan_to_num(out)


@dataclass(frozen=True)
class CutoffProfile:
    """chi(t) = cos(pi t / (2a)) * step((a - |t|) / delta), support [-a, a] inside (-1, 1)."""

    a: float
    delta: float
    l2_norm: float = 0.0
    deriv_l2_norm: float = 0.0

    @property
    def ratio(self) -> float:
        return self.deriv_l2_norm / self.l2_norm

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < self.a
        c = np.cos(np.pi * t / (2 * self.a))
        return np.where(inside, c * smooth_step((self.a - np.abs(t)) / self.delta), 0.0)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < self.a
        k = np.pi / (2 * self.a)
        u = (self.a - np.abs(t)) / self.delta
        val = -k * np.sin(k * t) * smooth_step(u) - np.cos(k * t) * smooth_step_deriv(u) * np.sign(t) / self.delta
        return np.where(inside, val, 0.0)

    @classmethod
    def build(cls, a: float, delta: float) -> "CutoffProfile":
        if not 0 < a < 1 or not 0 < delta <= a:
            raise ValueError("need 0 < delta <= a < 1")
        proto = cls(a, delta)
        pts = [-a, -a + delta, 0.0, a - delta, a]
        n2 = quad(lambda t: float(proto(t)) ** 2, -a, a, points=pts, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
        d2 = quad(lambda t: float(proto.deriv(t)) ** 2, -a, a, points=pts, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
        return cls(a, delta, float(np.sqrt(n2)), float(np.sqrt(d2)))


SUPPORT_EDGE = 0.995


def half_sine_ratio() -> float:
    """Rayleigh quotient ||chi'||/||chi|| of cos(pi t / 2) on [-1, 1] (= pi/2, the infimum)."""
    n2 = quad(lambda t: np.cos(np.pi * t / 2) ** 2, -1, 1)[0]
    d2 = quad(lambda t: (np.pi / 2 * np.sin(np.pi * t / 2)) ** 2, -1, 1)[0]
    return float(np.sqrt(d2 / n2))


def make_cutoff(epsilon2: float) -> CutoffProfile:
    """Smooth bump with ratio in [pi/2, (1 + eps2) pi/2], as large a mollification as allowed.

    Bisects the mollification scale ``delta`` so the ratio approaches the
    target from below.  The support edge is fixed at 0.995, so targets with
    ``eps2 < 0.02`` are rejected.
    """
    if not 0 < epsilon2 < 0.5:
        raise ValueError("epsilon2 must lie in (0, 1/2)")
    if epsilon2 < 0.02:
        raise ValueError("cutoff family cannot reach ratio (1 + eps2) pi/2 for eps2 < 0.02")
    target = (1 + epsilon2) * np.pi / 2
    a = SUPPORT_EDGE
    lo, hi = 1e-3, a
    if CutoffProfile.build(a, lo).ratio > target:
        raise ValueError("cutoff family too coarse for the requested epsilon2")
    if CutoffProfile.build(a, hi).ratio <= target:
        return CutoffProfile.build(a, hi)
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if CutoffProfile.build(a, mid).ratio <= target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    return CutoffProfile.build(a, lo)


# --- the S function ----------------------------------------------------------


def s_function(lam, b: float, r: int | None = None) -> float:
    """S = int cos(b s) prod_i cosh(lam_i s)^(-1/2) ds (the integrand is even)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if r is not None and len(lam) == 1 and r > 1:
        lam = np.repeat(lam, r)
    if np.any(lam <= 0):
        raise ValueError("rates must be positive")

    def g(s):
        y = np.abs(lam * s)
        log_cosh = y + np.log1p(np.exp(-2 * y)) - np.log(2.0)
        return np.exp(-0.5 * np.sum(log_cosh))

    if b == 0:
        val = quad(g, 0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
    else:
        # decays like exp(-sum(lam) s / 2); truncate where it is below 1e-18
        upper = 2 * 42.0 / np.sum(lam) + 1.0
        val = quad(g, 0, upper, weight="cos", wvar=abs(b), epsabs=1e-14, epsrel=1e-12, limit=400)[0]
    return 2.0 * val


# --- averaged states --------------------------------------------------------


class _Correlator:
    """C_u(tau) = <u, exp(-i tau Q / hbar) u> for a vector u in the Hermite basis."""

    def __init__(self, plan: EvolutionPlan, u: np.ndarray):
        self.plan = plan
        self.u = u
        A = plan.B
        A = 0.5 * (A + A.conj().T)
        if plan.is_quadratic:
            self.w, self.V = None, None
        else:
            self.w, self.V = np.linalg.eigh(A)
            self.cu = self.V.conj().T @ u
        shape = (plan.cap,) * plan.r
        self.u_arr = u.reshape(shape)
        nz = np.argwhere(np.abs(self.u_arr) > 0)
        self.rows = tuple(int(v) + 1 for v in nz.max(axis=0)) if nz.size else (1,) * plan.r
        self.cache = {}

    def __call__(self, tau: float) -> complex:
        key = round(float(tau), 14)
        if key in self.cache:
            return self.cache[key]
        plan = self.plan
        if self.w is None:
            v = self.u
        else:
            v = self.V @ (np.exp(-1j * tau * self.w / plan.hbar) * self.cu)
        arr = v.reshape((plan.cap,) * plan.r)
        left = self.u_arr[tuple(slice(0, n) for n in self.rows)]
        tmp = arr
        for ax, s in enumerate(np.asarray(plan.lam) * tau):
            tmp = apply_axis(dilation_overlap(s, self.rows[ax], tmp.shape[ax]), tmp, ax)
        val = complex(np.vdot(left, tmp))
        self.cache[key] = val
        return val

    def series(self, taus) -> np.ndarray:
        return np.array([self(t) for t in taus])


def _hermitian_lags(corr: _Correlator, h: float, n: int) -> np.ndarray:
    """Values at lags -(n-1)h .. (n-1)h using C(-tau) = conj C(tau)."""
    pos = corr.series(h * np.arange(n))
    return np.concatenate([np.conj(pos[:0:-1]), pos])


def _double_sum(weights: np.ndarray, lags: np.ndarray) -> float:
    """sum_{j,k} conj(w_j) w_k C((k - j) h) for lag samples C at offsets -(n-1)..(n-1)."""
    auto = np.correlate(weights, weights, mode="full")  # auto[D + n - 1] = sum_j w_{j+D} conj(w_j)
    return float(np.real(np.sum(auto * lags)))


@dataclass
class AveragedState:
    """Finite superposition sum_j w_j D_{t_j lam} psi_j on an equispaced t-grid."""

    plan: EvolutionPlan
    chi: CutoffProfile
    T: float
    f_over_hbar: float
    step: float
    nodes: np.ndarray
    weights: np.ndarray
    norm_sq: float
    quadrature_change: float = 0.0

    @property
    def hbar(self):
        return self.plan.hbar

    @cached_property
    def vectors(self) -> list:
        return [self.plan.inner_vector(t) for t in self.nodes]

    def components(self):
        """(weight, SqueezedHermiteState) pairs, unnormalized."""
        out = []
        for w, t, v in zip(self.weights, self.nodes, self.vectors):
            out.append((complex(w), self.plan.to_state(v, t)))
        return out

    def evaluate(self, points, normalized: bool = True) -> np.ndarray:
        vals = 0
        for w, st in self.components():
            vals = vals + w * evaluate(st, points)
        return vals / np.sqrt(self.norm_sq) if normalized else vals

    def number_coefficients(self, n_max: int, normalized: bool = True) -> np.ndarray:
        """Coefficients in the unsqueezed Hermite basis with indices < n_max per axis."""
        total = 0
        for w, st in self.components():
            total = total + w * number_coefficients(st, n_max)
        return total / np.sqrt(self.norm_sq) if normalized else total

    def width(self, center: float = None) -> float:
        """||(Q - center) Psi|| / ||Psi|| with Q the normal-form matrix (exact on Phi_0's orbit)."""
        center = self.f_over_hbar * self.hbar if center is None else center
        Q = self.plan.nf.nf_matrix.entries
        u = Q[:, 0] - center * self.plan.start
        corr = _Correlator(self.plan, u)
        lags = _hermitian_lags(corr, self.step, len(self.nodes))
        return float(np.sqrt(max(_double_sum(self.weights, lags), 0.0) / self.norm_sq))

    def width_by_parts(self) -> float:
        """Width from the identity (Q - f) Psi = -i hbar int (chi_T)' exp(itf/hbar) Phi_t dt."""
        corr = _Correlator(self.plan, self.plan.start)
        lags = _hermitian_lags(corr, self.step, len(self.nodes))
        dw = self.step * self.chi.deriv(self.nodes / self.T) / self.T * np.exp(1j * self.nodes * self.f_over_hbar)
        val = self.hbar**2 * _double_sum(dw, lags)
        return float(np.sqrt(max(val, 0.0) / self.norm_sq))


def _grid(chi: CutoffProfile, T: float, h: float):
    n_half = int(np.floor(chi.a * T / h))
    nodes = h * np.arange(-n_half, n_half + 1)
    return nodes


def time_average(plan: EvolutionPlan, chi: CutoffProfile, T: float, f_over_hbar: float = 0.0,
                 h0: float | None = None, max_halvings: int = 12) -> AveragedState:
    """Trapezoid quadrature of the averaged quasimode; halves the step until the norm settles.

    The averaged state is returned unnormalized; ``norm_sq`` holds its squared norm.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    corr = _Correlator(plan, plan.start)
    h = min(0.25, chi.a * T / 8) if h0 is None else h0
    prev = None
    for _ in range(max_halvings):
        nodes = _grid(chi, T, h)
        weights = h * chi(nodes / T) * np.exp(1j * nodes * f_over_hbar)
        lags = _hermitian_lags(corr, h, len(nodes))
        norm_sq = _double_sum(weights, lags)
        if prev is not None:
            change = abs(norm_sq - prev) / abs(norm_sq)
            if change < QUADRATURE_RTOL:
                return AveragedState(plan, chi, T, f_over_hbar, h, nodes, weights, norm_sq, change)
        prev = norm_sq
        h /= 2
    raise NumericalError("time-average quadrature did not converge")


def norm_prediction(chi: CutoffProfile, T: float, lam, f_over_hbar: float, r: int) -> float:
    """Leading asymptotic T * S * ||chi||^2 of the squared norm."""
    return T * s_function(lam, f_over_hbar, r) * chi.l2_norm**2


# --- spectral tools ---------------------------------------------------------


def spectral_width(H: np.ndarray, state: np.ndarray, center: float, weight: np.ndarray | None = None) -> float:
    """||(H - center) v||_w / ||v||_w for a matrix ``H`` and vector ``v``."""
    v = np.asarray(state)
    Hv = H @ v - center * v
    if weight is None:
        return float(np.linalg.norm(Hv) / np.linalg.norm(v))
    w = np.asarray(weight, dtype=float)
    return float(np.sqrt(np.sum(w * np.abs(Hv) ** 2) / np.sum(w * np.abs(v) ** 2)))


@dataclass
class SpectralData:
    """Eigendecomposition of a symmetric discretized operator (dimension <= 4096)."""

    values: np.ndarray
    vectors: np.ndarray

    @classmethod
    def of(cls, H: np.ndarray) -> "SpectralData":
        if H.shape[0] > 4096:
            raise ValueError("dense eigendecomposition limited to dimension 4096")
        w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
        return cls(w, V)

    def weights(self, state: np.ndarray) -> np.ndarray:
        c = self.vectors.conj().T @ state
        return np.abs(c) ** 2 / np.sum(np.abs(c) ** 2)


def spectral_project(H, state: np.ndarray, center: float, half_width: float):
    """Project onto eigenvectors with |E - center| <= half_width.

    Returns ``(projected normalized state or None, retained mass)``.  ``H`` is
    a Hermitian matrix (in an orthonormal basis) or precomputed SpectralData.
    An empty window returns ``(None, 0.0)``.
    """
    spectrum = H if isinstance(H, SpectralData) else SpectralData.of(np.asarray(H))
    c = spectrum.vectors.conj().T @ state
    total = np.sum(np.abs(c) ** 2)
    sel = np.abs(spectrum.values - center) <= half_width
    if not np.any(sel):
        return None, 0.0
    mass = float(np.sum(np.abs(c[sel]) ** 2) / total)
    if mass == 0.0:
        return None, 0.0
    proj = spectrum.vectors[:, sel] @ c[sel]
    return proj / np.linalg.norm(proj), mass


def best_window(H, state: np.ndarray, center: float, half_width: float, search_radius: float, n_centers: int = 401):
    """Scan window centers within ``center +- search_radius``; return (best center, mass)."""
    spectrum = H if isinstance(H, SpectralData) else SpectralData.of(np.asarray(H))
    w = spectrum.weights(state)
    best = (center, -1.0)
    for c in np.linspace(center - search_radius, center + search_radius, n_centers):
        m = float(np.sum(w[np.abs(spectrum.values - c) <= half_width]))
        if m > best[1]:
            best = (float(c), m)
    return best


# --- reports --------------------------------------------------------------


def width_constant(lam_max: float, epsilon2: float) -> float:
    """C_width = pi lam_max (1 + 3 eps2)."""
    return np.pi * lam_max * (1 + 3 * epsilon2)


@dataclass
class QuasimodeReport:
    hbar: float
    T: float
    central_energy: float
    measured_width: float
    predicted_width: float
    width_bound: float
    norm_sq: float
    predicted_norm_sq: float
    mass_outside: float
    S_value: float
    ratio: float
    retained_mass: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def norm_ratio(self) -> float:
        return self.norm_sq / self.predicted_norm_sq

    @property
    def width_ratio(self) -> float:
        return self.measured_width / self.predicted_width

    def to_dict(self):
        d = asdict(self)
        d["norm_ratio"] = self.norm_ratio
        d["width_ratio"] = self.width_ratio
        return d


def averaged_mass_outside(avg: AveragedState, radius: float) -> float:
    """Anti-Wick mass outside the phase-space ball of the normalized averaged state."""
    from scipy.special import gammaincc

    from .propagation import number_basis_cap

    n_max = number_basis_cap(radius, avg.hbar)
    coeffs = avg.number_coefficients(n_max)
    r = avg.plan.r
    grids = np.indices(coeffs.shape).sum(axis=0)
    a = radius**2 / (2 * avg.hbar)
    inside = float(np.sum(np.abs(coeffs) ** 2 * (1.0 - gammaincc(grids + r, a))))
    return float(min(1.0, max(0.0, 1.0 - inside)))


def quasimode_report(plan: EvolutionPlan, chi: CutoffProfile, T: float | None = None,
                     f_over_hbar: float = 0.0, with_mass: bool = True) -> tuple:
    """Assemble the averaged quasimode and its diagnostics; returns (report, averaged state)."""
    hbar = plan.hbar
    T = plan.T_eps if T is None else T
    avg = time_average(plan, chi, T, f_over_hbar)
    S = s_function(plan.lam, f_over_hbar, plan.r)
    pred_norm = T * S * chi.l2_norm**2
    meas = avg.width()
    pred = hbar / T * chi.ratio
    bound = width_constant(max(plan.lam), plan.epsilon2) * hbar / abs(np.log(hbar))
    mass = averaged_mass_outside(avg, hbar ** (plan.epsilon2 / 3)) if with_mass else float("nan")
    rep = QuasimodeReport(
        hbar=hbar,
        T=T,
        central_energy=1.0 + f_over_hbar * hbar,
        measured_width=meas,
        predicted_width=pred,
        width_bound=bound,
        norm_sq=avg.norm_sq,
        predicted_norm_sq=pred_norm,
        mass_outside=mass,
        S_value=S,
        ratio=chi.ratio,
    )
    return rep, avg


__all__ = [
    "CutoffProfile",
    "make_cutoff",
    "half_sine_ratio",
    "smooth_step",
    "s_function",
    "AveragedState",
    "time_average",
    "norm_prediction",
    "spectral_width",
    "spectral_project",
    "best_window",
    "SpectralData",
    "QuasimodeReport",
    "quasimode_report",
    "averaged_mass_outside",
    "width_constant",
    "PARTIAL_LOCALIZATION_FACTOR",
    "ehrenfest_time",
]
