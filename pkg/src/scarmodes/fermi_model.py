"""
Discretized geometric layer: the transverse operator K_x on a weighted grid,
the collar Laplacian of a hyperbolic cylinder, the product ansatz and the
end-to-end residual.

Model geometry: the core closed geodesic M (m = 1) of length L in a
hyperbolic cylinder, with Fermi coordinates (s, x), s periodic of period L
and x = sinh(rho) transverse.  In these coordinates

    Lap_N = (1 + |x|^2)^{-1} d_s^2 + Lap_x + (x.d)^2 + (n - 1) x.d,

with volume element ds (1 + |x|^2)^{(m-1)/2} dx.  The transverse part is
discretized in weighted divergence form

    Lap_x + (x.d)^2 + (n - 1) x.d = w^{-1} div(w (I + x x^T) grad),  w = (1 + |x|^2)^{(m-1)/2},

which makes the discrete operator exactly symmetric in the weighted inner
product.  Derivatives are Fourier spectral with the Nyquist mode removed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .birkhoff import QuantumNormalForm, metaplectic_generator
from .errors import ConfigError
from .hermite_core import hermite_functions
from .propagation import number_basis_cap
from .quasimode import AveragedState, smooth_step
from .weyl_symbols import PolySymbol, quantize


# --- grids ----------------------------------------------------------------


def periodic_grid(half_width: float, n: int) -> np.ndarray:
    """n equispaced nodes on [-half_width, half_width) (periodic)."""
    return -half_width + 2 * half_width * np.arange(n) / n


@dataclass(frozen=True)
class CollarGrid:
    """Tensor grid over (s, x) for the cylinder model (r = 1 on the collar grid).

    The collar half-width is limited to ``max_epsilon1`` (default 0.5).
    """

    L: float
    epsilon1: float
    n_s: int
    n_x: int
    r: int = 1
    m: int = 1
    max_epsilon1: float = 0.5

    def __post_init__(self):
        if self.L <= 0:
            raise ConfigError("L must be positive")
        if self.n_s < 16 or self.n_x < 16:
            raise ConfigError("n_s and n_x must be >= 16")
        if not 0 < self.epsilon1 <= self.max_epsilon1:
            raise ConfigError(f"epsilon1 must lie in (0, {self.max_epsilon1}]")
        if self.r != 1:
            raise ConfigError("the collar grid supports r = 1; use the transverse operator for r = 2")
        if self.m < 1:
            raise ConfigError("m must be >= 1")

    @property
    def n(self) -> int:
        return self.m + self.r

    @property
    def s(self) -> np.ndarray:
        return self.L * np.arange(self.n_s) / self.n_s

    @property
    def ds(self) -> float:
        return self.L / self.n_s

    @property
    def x(self) -> np.ndarray:
        return periodic_grid(self.epsilon1, self.n_x)

    @property
    def dx(self) -> float:
        return 2 * self.epsilon1 / self.n_x

    @property
    def weight(self) -> np.ndarray:
        return (1 + self.x**2) ** ((self.m - 1) / 2)


@dataclass
class CollarField:
    grid: CollarGrid
    values: np.ndarray  # shape (n_s, n_x)

    def __post_init__(self):
        if self.values.shape != (self.grid.n_s, self.grid.n_x):
            raise ValueError("field shape does not match the grid")

    def norm(self) -> float:
        w = self.grid.weight[None, :]
        return float(np.sqrt(np.sum(w * np.abs(self.values) ** 2) * self.grid.ds * self.grid.dx))

    def to_bytes(self) -> bytes:
        """Little-endian complex64 pairs, row-major (s, x)."""
        return np.ascontiguousarray(self.values, dtype="<c8").tobytes()

    def sidecar(self) -> dict:
        g = self.grid
        return {
            "shape": [g.n_s, g.n_x],
            "dtype": "complex64-le",
            "order": "row-major (s, x)",
            "s_spacing": g.ds,
            "x_spacing": g.dx,
            "x_start": -g.epsilon1,
            "L": g.L,
            "epsilon1": g.epsilon1,
        }


# --- spectral calculus ------------------------------------------------------


def wavenumbers(n: int, spacing: float) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(n, d=spacing)
    if n % 2 == 0:
        k[n // 2] = 0.0  # Nyquist mode carries no derivative
    return k


def spectral_derivative(values: np.ndarray, spacing: float, axis: int = -1, order: int = 1) -> np.ndarray:
    n = values.shape[axis]
    k = wavenumbers(n, spacing)
    shape = [1] * values.ndim
    shape[axis] = n
    mult = ((1j * k) ** order).reshape(shape)
    return np.fft.ifft(mult * np.fft.fft(values, axis=axis), axis=axis)


@lru_cache(maxsize=32)
def _derivative_matrix(n: int, spacing: float) -> np.ndarray:
    D = np.real(spectral_derivative(np.eye(n), spacing, axis=0))
    D = 0.5 * (D - D.T)
    D.setflags(write=False)
    return D


def derivative_matrix(n: int, spacing: float) -> np.ndarray:
    """Real antisymmetric Fourier differentiation matrix."""
    return _derivative_matrix(int(n), float(spacing))


def potential(x2, E0: float) -> np.ndarray:
    return E0 * x2 / (1 + x2)


def transverse_operator_apply(u: np.ndarray, axes, hbar: float, E0: float, f: float = 0.0, m: int = 1,
                              n: int | None = None) -> np.ndarray:
    """K_x u = -hbar^2 (Lap + (x.d)^2 + (n-1) x.d) u - E0 |x|^2/(1+|x|^2) u - f u.

    ``axes`` is a list of r one-dimensional periodic grids; ``u`` has shape
    ``tuple(len(a) for a in axes)``.  ``n`` defaults to ``m + r``; other
    values are rejected because the divergence form fixes ``n = m + r``.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    r = len(axes)
    if n is not None and n != m + r:
        raise ConfigError("n must equal m + r")
    u = np.asarray(u, dtype=complex)
    if u.shape != tuple(len(a) for a in axes):
        raise ValueError("field shape does not match the axes")
    mesh = np.meshgrid(*axes, indexing="ij")
    x2 = sum(X**2 for X in mesh)
    w = (1 + x2) ** ((m - 1) / 2)
    spacings = [a[1] - a[0] for a in axes]
    grads = [spectral_derivative(u, spacings[i], axis=i) for i in range(r)]
    x_dot_grad = sum(mesh[i] * grads[i] for i in range(r))
    out = 0
    for i in range(r):
        flux = w * (grads[i] + mesh[i] * x_dot_grad)
        out = out + spectral_derivative(flux, spacings[i], axis=i)
    return -hbar**2 * out / w - potential(x2, E0) * u - f * u


def transverse_matrix(x: np.ndarray, hbar: float, E0: float, f: float = 0.0, m: int = 1) -> np.ndarray:
    """Dense r = 1 matrix of K_x on a periodic grid (symmetric in the weighted inner product)."""
    x = np.asarray(x, dtype=float)
    D = derivative_matrix(len(x), x[1] - x[0])
    w = (1 + x**2) ** ((m - 1) / 2)
    g = w * (1 + x**2)
    A = D @ (g[:, None] * D)
    return -hbar**2 * A / w[:, None] - np.diag(potential(x**2, E0) + f)


def symmetrized_transverse_matrix(x: np.ndarray, hbar: float, E0: float, f: float = 0.0, m: int = 1) -> np.ndarray:
    """W^{1/2} K W^{-1/2}: the same operator in the unweighted coordinates, exactly symmetric."""
    w = (1 + np.asarray(x) ** 2) ** ((m - 1) / 2)
    K = transverse_matrix(x, hbar, E0, f, m)
    sq = np.sqrt(w)
    A = sq[:, None] * K / sq[None, :]
    return 0.5 * (A + A.T)


def collar_laplacian_apply(field: CollarField, hbar: float) -> CollarField:
    """-hbar^2 Lap_N applied on the (s, x) tensor grid."""
    g = field.grid
    v = field.values
    x = g.x
    dss = spectral_derivative(v, g.ds, axis=0, order=2)
    w = g.weight
    dv = spectral_derivative(v, g.dx, axis=1)
    flux = w[None, :] * (1 + x**2)[None, :] * dv
    trans = spectral_derivative(flux, g.dx, axis=1) / w[None, :]
    out = -(hbar**2) * (dss / (1 + x**2)[None, :] + trans)
    return CollarField(g, out)


# --- cutoffs and weights ---------------------------------------------------


def upsilon(x, epsilon1: float) -> np.ndarray:
    """Smooth cutoff: 1 on |x| <= eps1/3, 0 on |x| >= eps1/2."""
    ax = np.abs(np.asarray(x, dtype=float))
    return smooth_step((epsilon1 / 2 - ax) / (epsilon1 / 6))


def weighted_norm(u: np.ndarray, x: np.ndarray, m: int = 1) -> float:
    w = (1 + x**2) ** ((m - 1) / 2)
    return float(np.sqrt(np.sum(w * np.abs(u) ** 2) * (x[1] - x[0])))


def husimi_mass_within(u: np.ndarray, x: np.ndarray, hbar: float, radius: float) -> float:
    """Mass of the Husimi x-marginal inside |x| <= radius (normalized by ||u||^2).

    The x-marginal of the Husimi function is |u|^2 convolved with a Gaussian
    of variance hbar/2, so the mass inside an interval is an erf average.
    """
    from scipy.special import erf

    p = np.abs(u) ** 2
    total = np.sum(p)
    sig = np.sqrt(hbar / 2)
    inside = 0.5 * (erf((radius - x) / (np.sqrt(2) * sig)) + erf((radius + x) / (np.sqrt(2) * sig)))
    return float(np.sum(p * inside) / total)


# --- grid Weyl quantization and transport ----------------------------------


def grid_weyl_matrix(symbol: PolySymbol, x: np.ndarray, hbar: float) -> np.ndarray:
    """Weyl quantization of a polynomial symbol on a periodic grid (r = 1).

    Uses Op(x^a xi^b)_{ij} = ((x_i + x_j)/2)^a (P^b)_{ij} with P = -i hbar D the
    circulant spectral momentum.  Plain (non-periodic) midpoints keep the
    kernel smooth in the column index away from the grid edge, so the
    result is spectrally accurate for fields supported in the interior.
    """
    if symbol.r != 1:
        raise ValueError("grid quantization is implemented for r = 1")
    n = len(x)
    dx = x[1] - x[0]
    k = wavenumbers(n, dx)
    mid = 0.5 * (x[:, None] + x[None, :])
    powers_p = {}
    out = np.zeros((n, n), dtype=complex)
    for (a, b, kk), c in symbol.terms.items():
        b0 = b[0]
        if b0 not in powers_p:
            col = np.fft.ifft((hbar * k) ** b0 * np.fft.fft(np.eye(n)[:, 0]))
            idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
            powers_p[b0] = col[idx]
        out += c * hbar**kk * mid ** a[0] * powers_p[b0]
    return 0.5 * (out + out.conj().T)


def grid_unitary(symbol: PolySymbol, x: np.ndarray, hbar: float) -> np.ndarray:
    """exp(-i Op(symbol) / hbar) on the grid via a Hermitian eigendecomposition.

    Only well conditioned when the symbol stays moderate over the grid's whole
    phase-space box; high-degree symbols should go through the Hermite basis.
    """
    A = grid_weyl_matrix(symbol, x, hbar)
    w, V = np.linalg.eigh(A)
    return (V * np.exp(-1j * w / hbar)) @ V.conj().T


def hermite_synthesis(x: np.ndarray, hbar: float, n_max: int) -> np.ndarray:
    """Rows are the unsqueezed Hermite functions 0..n_max-1 at scale sqrt(hbar), sampled on x."""
    return hermite_functions(n_max, np.asarray(x) / np.sqrt(hbar)) * hbar**-0.25


def hermite_unitary(symbol: PolySymbol, hbar: float, n_max: int) -> np.ndarray:
    """exp(-i Op(symbol) / hbar) on the truncated Hermite basis."""
    A = quantize(symbol, hbar, n_max).entries
    w, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    return (V * np.exp(-1j * w / hbar)) @ V.conj().T


@dataclass
class Transport:
    """Transported transverse quasimode sampled on a grid."""

    x: np.ndarray
    values: np.ndarray
    n_max: int
    projection_loss: float  # relative norm not captured by the Hermite basis


def transport_to_grid(avg: AveragedState, nf: QuantumNormalForm, x: np.ndarray, n_max: int | None = None,
                      radius: float = 0.8, with_conjugator: bool = True) -> Transport:
    """psi_x = M U_N Psi on the grid ``x`` (normalized in flat L^2 on the grid).

    ``Psi`` is the averaged state in normal-form coordinates.  It is projected
    onto a Hermite basis large enough to hold the phase-space ball of the
    given radius; ``U_N = U_3 ... U_N`` (the normal form's generators) and the
    metaplectic operator ``M`` of the linear normalization act there, and the
    result is synthesized back on the grid.
    """
    hbar = avg.hbar
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    n_max = number_basis_cap(radius, hbar) if n_max is None else n_max
    vals = avg.evaluate(x[:, None], normalized=True)
    H = hermite_synthesis(x, hbar, n_max)
    c = (H @ vals) * dx
    total = np.sum(np.abs(vals) ** 2) * dx
    loss = abs(total - np.vdot(c, c).real) / total
    if with_conjugator:
        for _, g in reversed(nf.symbol_form.generators):
            c = hermite_unitary(g, hbar, n_max) @ c
    S = np.asarray(nf.symbol_form.linear_map)
    if not np.allclose(S, np.eye(2)):
        c = hermite_unitary(metaplectic_generator(S), hbar, n_max) @ c
    out = c @ H
    out = out / np.sqrt(np.sum(np.abs(out) ** 2) * dx)
    return Transport(x, out, n_max, float(loss))


def restrict(values: np.ndarray, x_from: np.ndarray, x_to: np.ndarray) -> np.ndarray:
    """Pick the nodes of a wider grid with the same spacing that fall on ``x_to``."""
    dx = x_from[1] - x_from[0]
    idx = np.rint((x_to - x_from[0]) / dx).astype(int)
    if np.any(idx < 0) or np.any(idx >= len(x_from)) or np.max(np.abs(x_from[idx] - x_to)) > 1e-9 * max(1, dx):
        raise ValueError("target grid is not a subgrid of the work grid")
    return values[idx]


# --- ansatz and residual ---------------------------------------------------


def mode_hbar(L: float, k: int) -> float:
    """hbar pairing with circle mode k so that E0 = (2 pi k hbar / L)^2 = 1."""
    return L / (2 * np.pi * k)


def mode_for_hbar(L: float, hbar_target: float) -> int:
    """Smallest circle mode whose paired hbar does not exceed the target."""
    return max(1, int(np.ceil(L / (2 * np.pi * hbar_target) - 1e-9)))


def tangential_points(k: int, minimum: int = 512) -> int:
    """Power-of-two n_s resolving the circle mode k (at least four points per period)."""
    n = minimum
    while n < 4 * abs(k) + 1:
        n *= 2
    return n


def tangential_mode(grid: CollarGrid, k: int) -> np.ndarray:
    return np.exp(2j * np.pi * k * grid.s / grid.L) / np.sqrt(grid.L)


def build_ansatz(k: int, psi: np.ndarray, grid: CollarGrid, hbar: float, apply_cutoff: bool = True,
                 E0_tol: float | None = None) -> CollarField:
    """Normalized phi(s) * (Upsilon psi)(x) with phi the circle eigenmode of index k."""
    E0 = (2 * np.pi * k * hbar / grid.L) ** 2
    tol = 2 * hbar if E0_tol is None else E0_tol
    if abs(E0 - 1.0) > tol:
        raise ConfigError(f"E0 = {E0:.6g} deviates from 1 by more than O(hbar) for k = {k}")
    if 2 * abs(k) >= grid.n_s // 2:
        raise ConfigError("n_s too small to resolve the circle mode without aliasing")
    x = grid.x
    chi = upsilon(x, grid.epsilon1) if apply_cutoff else 1.0
    u = chi * np.asarray(psi)
    u = u / weighted_norm(u, x, grid.m)
    phi = tangential_mode(grid, k)
    return CollarField(grid, phi[:, None] * u[None, :])


@dataclass
class ResidualReport:
    hbar: float
    k: int
    E0: float
    energy: float
    residual: float  # ||(-hbar^2 Lap_N - E) Psi_hat|| on the collar grid
    transverse_residual: float  # ||K_x u||_w / ||u||_w for the transverse factor u
    husimi_mass: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "extra"}
        d.update(self.extra)
        return d


def end_to_end_residual(k: int, psi: np.ndarray, grid: CollarGrid, hbar: float, Ehbar: float,
                        apply_cutoff: bool = True) -> ResidualReport:
    """||(-hbar^2 Lap_N - E) Psi_hat|| on the collar grid, with its transverse counterpart."""
    ansatz = build_ansatz(k, psi, grid, hbar, apply_cutoff)
    lap = collar_laplacian_apply(ansatz, hbar)
    res = CollarField(grid, lap.values - Ehbar * ansatz.values)
    E0 = (2 * np.pi * k * hbar / grid.L) ** 2
    u = ansatz.values[0] * np.sqrt(grid.L)  # phi(0) = 1 / sqrt(L)
    Ku = transverse_operator_apply(u, [grid.x], hbar, E0, Ehbar - E0, grid.m)
    trans = weighted_norm(Ku, grid.x, grid.m) / weighted_norm(u, grid.x, grid.m)
    return ResidualReport(hbar, k, E0, Ehbar, res.norm(), trans)


# --- parameter ordering ----------------------------------------------------

DEFAULT_HBAR0 = 2.0**-8


def validate_parameter_order(epsilon1: float, epsilon2: float, degree_cap: int, l: int,
                             hbar: float | None = None, hbar0: float = DEFAULT_HBAR0):
    """Enforce the choice order eps1 -> eps2 -> N -> l -> hbar0.

    Requirements: 0 < eps1 <= 0.5; eps2 in (0, 1/2); (N + 1) eps2 / 3 > 1;
    l >= 2; and 0 < hbar <= hbar0 once the other parameters are fixed.
    """
    if not 0 < epsilon1 <= 0.5:
        raise ConfigError("epsilon1 must lie in (0, 0.5]")
    if not 0 < epsilon2 < 0.5:
        raise ConfigError("epsilon2 must lie in (0, 1/2)")
    if not (degree_cap + 1) * epsilon2 / 3 > 1:
        raise ConfigError(f"degree cap {degree_cap} violates (N + 1) eps2 / 3 > 1 for eps2 = {epsilon2}")
    if l < 2:
        raise ConfigError("Dyson order l must be >= 2")
    if not 0 < hbar0 < 1:
        raise ConfigError("hbar0 must lie in (0, 1)")
    if hbar is not None and not 0 < hbar <= hbar0 * (1 + 1e-9):
        raise ConfigError(f"hbar = {hbar:.4g} exceeds hbar0 = {hbar0:.4g}")


# --- cylinder driver ---------------------------------------------------------


@dataclass
class CylinderConfig:
    L: float = 1.0
    epsilon1: float = 0.5
    epsilon2: float = 0.3
    degree_cap: int | None = None
    l: int = 2
    basis_cap: int = 64
    n_x: int = 512
    n_s: int | None = None
    f: float = 0.0
    hbar0: float = DEFAULT_HBAR0
    with_conjugator: bool = True
    epsilon3: float | None = None  # window half-width in units hbar/|log hbar|; None skips the projection


def partial_localization(psi: np.ndarray, x: np.ndarray, hbar: float, E0: float, f: float,
                         half_width: float, search_radius: float | None = None) -> dict:
    """Spectral projection of a transverse field onto a window of the discretized K_x (r = 1, m = 1).

    Returns the width ||K u|| / ||u||, the mass retained by the window centred
    at the quasimode's energy, and the best window centre within
    ``search_radius`` (default: four half-widths).
    """
    from .quasimode import SpectralData, best_window, spectral_project, spectral_width

    K = symmetrized_transverse_matrix(x, hbar, E0, f)
    spectrum = SpectralData.of(K)
    u = np.asarray(psi, dtype=complex)
    _, mass = spectral_project(spectrum, u, 0.0, half_width)
    radius = 4 * half_width if search_radius is None else search_radius
    centre, best = best_window(spectrum, u, 0.0, half_width, radius)
    return {
        "width": spectral_width(K, u, 0.0),
        "retained_mass": mass,
        "best_center": centre,
        "best_mass": best,
        "levels_in_window": int(np.sum(np.abs(spectrum.values) <= half_width)),
    }


def width_bound(lam_max: float, epsilon2: float, hbar: float, slack: float = 1.0) -> float:
    """slack * pi lam (1 + 3 eps2) hbar / |log hbar|."""
    return slack * np.pi * lam_max * (1 + 3 * epsilon2) * hbar / abs(np.log(hbar))


def cylinder_run(cfg: CylinderConfig, k: int, return_field: bool = False):
    """Assemble the ansatz for circle mode k and measure its residual and localization.

    The transverse quasimode is the time average (T = T_eps, cutoff profile of
    ratio (1 + eps2) pi / 2) of the normal-form evolution of the ground state,
    carried to x-coordinates by the Birkhoff conjugator and the metaplectic map.
    """
    from .birkhoff import default_degree_cap, quantum_bnf, transverse_symbol
    from .propagation import EvolutionPlan
    from .quasimode import make_cutoff, time_average

    N = default_degree_cap(cfg.epsilon2) if cfg.degree_cap is None else cfg.degree_cap
    hbar = mode_hbar(cfg.L, k)
    validate_parameter_order(cfg.epsilon1, cfg.epsilon2, N, cfg.l, hbar, cfg.hbar0)
    n_s = tangential_points(k) if cfg.n_s is None else cfg.n_s
    grid = CollarGrid(cfg.L, cfg.epsilon1, n_s, cfg.n_x)
    sym = transverse_symbol(1.0, 1, N + 2)
    nf = quantum_bnf(sym, [2.0], N, hbar, cfg.basis_cap, with_remainder=False)
    plan = EvolutionPlan(nf.lam, nf, cfg.l, cfg.epsilon2)
    chi = make_cutoff(cfg.epsilon2)
    avg = time_average(plan, chi, plan.T_eps, cfg.f / hbar)
    # work grid: same spacing as the collar grid, three times as wide
    work = periodic_grid(3 * cfg.epsilon1, 3 * cfg.n_x)
    tr = transport_to_grid(avg, nf, work, with_conjugator=cfg.with_conjugator)
    psi = restrict(tr.values, work, grid.x)
    outside = 1.0 - np.sum(np.abs(psi) ** 2) / np.sum(np.abs(tr.values) ** 2)
    rep = end_to_end_residual(k, psi, grid, hbar, 1.0 + cfg.f)
    u = upsilon(grid.x, cfg.epsilon1) * psi
    radius = hbar ** (cfg.epsilon2 / 3)
    rep.husimi_mass = husimi_mass_within(u, grid.x, hbar, radius)
    lam_max = max(nf.lam)
    rep.extra.update(
        L=cfg.L,
        n_s=n_s,
        n_x=cfg.n_x,
        degree_cap=N,
        T=plan.T_eps,
        radius=radius,
        bound=width_bound(lam_max, cfg.epsilon2, hbar, 1.25),
        width_normal_form=avg.width(),
        cutoff_norm_change=float(1 - weighted_norm(u, grid.x) / weighted_norm(psi, grid.x)),
        mass_outside_collar=float(outside),
        hermite_cap=tr.n_max,
        projection_loss=tr.projection_loss,
    )
    rep.extra["ratio"] = rep.residual / rep.extra["bound"]
    if cfg.epsilon3 is not None:
        half = cfg.epsilon3 * hbar / abs(np.log(hbar))
        u_norm = u / weighted_norm(u, grid.x)
        loc = partial_localization(u_norm, grid.x, hbar, rep.E0, cfg.f, half)
        rep.extra.update(epsilon3=cfg.epsilon3, retained_mass=loc["retained_mass"], best_mass=loc["best_mass"],
                         levels_in_window=loc["levels_in_window"])
    if return_field:
        return rep, build_ansatz(k, psi, grid, hbar)
    return rep


__all__ = [
    "CollarGrid",
    "CollarField",
    "ResidualReport",
    "periodic_grid",
    "wavenumbers",
    "spectral_derivative",
    "derivative_matrix",
    "transverse_operator_apply",
    "transverse_matrix",
    "symmetrized_transverse_matrix",
    "collar_laplacian_apply",
    "upsilon",
    "weighted_norm",
    "husimi_mass_within",
    "grid_weyl_matrix",
    "grid_unitary",
    "hermite_synthesis",
    "hermite_unitary",
    "Transport",
    "transport_to_grid",
    "restrict",
    "mode_hbar",
    "mode_for_hbar",
    "tangential_mode",
    "build_ansatz",
    "end_to_end_residual",
    "validate_parameter_order",
    "tangential_points",
    "CylinderConfig",
    "cylinder_run",
    "width_bound",
    "partial_localization",
    "DEFAULT_HBAR0",
]
