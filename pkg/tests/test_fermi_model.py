import numpy as np
import pytest
from scipy.special import erf

from scarmodes.birkhoff import transverse_symbol
from scarmodes.errors import ConfigError
from scarmodes.fermi_model import (
    CollarField,
    CollarGrid,
    CylinderConfig,
    build_ansatz,
    collar_laplacian_apply,
    cylinder_run,
    end_to_end_residual,
    grid_weyl_matrix,
    hermite_synthesis,
    husimi_mass_within,
    mode_for_hbar,
    mode_hbar,
    periodic_grid,
    spectral_derivative,
    symmetrized_transverse_matrix,
    transverse_matrix,
    transverse_operator_apply,
    upsilon,
    validate_parameter_order,
    weighted_norm,
)
from scarmodes.weyl_symbols import PolySymbol, quantize

X = PolySymbol.x(0, 1)
XI = PolySymbol.xi(0, 1)


def bump(x, center, width):
    return np.exp(-((x - center) ** 2) / (2 * width**2))


def test_grid_validation():
    with pytest.raises(ConfigError):
        CollarGrid(1.0, 0.6, 64, 64)
    with pytest.raises(ConfigError):
        CollarGrid(1.0, 0.5, 8, 64)
    with pytest.raises(ConfigError):
        CollarGrid(-1.0, 0.5, 64, 64)
    g = CollarGrid(2.0, 0.5, 64, 32)
    assert g.n == 2 and np.all(g.weight == 1.0)
    assert abs(g.x[0] + 0.5) < 1e-15 and abs(g.dx - 1 / 32) < 1e-15


def test_spectral_derivative_exact_on_trig():
    x = periodic_grid(np.pi, 64)
    d = spectral_derivative(np.sin(3 * x), x[1] - x[0])
    assert np.max(np.abs(d - 3 * np.cos(3 * x))) < 1e-12


def test_constant_field_annihilated():
    x = periodic_grid(0.5, 64)
    for m in (1, 3):
        out = transverse_operator_apply(np.ones(64), [x], 0.01, 0.0, 0.0, m)
        assert np.max(np.abs(out)) < 1e-12


def test_n_must_match_m_plus_r():
    x = periodic_grid(0.5, 32)
    with pytest.raises(ConfigError):
        transverse_operator_apply(np.ones(32), [x], 0.01, 1.0, 0.0, m=1, n=3)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_weighted_symmetry_r1(m):
    x = periodic_grid(0.5, 256)
    w = (1 + x**2) ** ((m - 1) / 2)
    rng = np.random.default_rng(m)
    u = bump(x, 0.05, 0.06) * (1 + 0.3 * rng.normal()) * np.exp(7j * x)
    v = bump(x, -0.03, 0.05) * np.cos(11 * x)
    hbar = 0.01
    Ku = transverse_operator_apply(u, [x], hbar, 1.0, 0.2, m)
    Kv = transverse_operator_apply(v, [x], hbar, 1.0, 0.2, m)
    lhs = np.sum(w * Ku * np.conj(v))
    rhs = np.sum(w * u * np.conj(Kv))
    assert abs(lhs - rhs) * (x[1] - x[0]) < 1e-8


def test_weighted_symmetry_r2():
    a = periodic_grid(0.5, 64)
    X1, X2 = np.meshgrid(a, a, indexing="ij")
    m = 2
    w = (1 + X1**2 + X2**2) ** ((m - 1) / 2)
    u = bump(X1, 0.02, 0.07) * bump(X2, -0.04, 0.06) * np.exp(5j * X2)
    v = bump(X1, -0.01, 0.06) * bump(X2, 0.03, 0.07)
    Ku = transverse_operator_apply(u, [a, a], 0.02, 1.0, 0.0, m)
    Kv = transverse_operator_apply(v, [a, a], 0.02, 1.0, 0.0, m)
    d = (a[1] - a[0]) ** 2
    assert abs(np.sum(w * Ku * np.conj(v)) - np.sum(w * u * np.conj(Kv))) * d < 1e-8


def test_matrix_matches_apply_and_symmetric():
    x = periodic_grid(0.5, 128)
    u = bump(x, 0.0, 0.08) * np.exp(3j * x)
    for m in (1, 3):
        K = transverse_matrix(x, 0.01, 1.0, 0.1, m)
        assert np.max(np.abs(K @ u - transverse_operator_apply(u, [x], 0.01, 1.0, 0.1, m))) < 1e-10
        A = symmetrized_transverse_matrix(x, 0.01, 1.0, 0.1, m)
        assert np.max(np.abs(A - A.T)) == 0
    K1 = transverse_matrix(x, 0.01, 1.0, 0.1, 1)
    assert np.max(np.abs(K1 - K1.T)) < 1e-12


def test_ground_state_residual_matches_ladder_algebra():
    hbar, cap = 2.0**-8, 64
    x = periodic_grid(0.5, 512)
    H = hermite_synthesis(x, hbar, cap)
    phi0 = H[0]
    Kphi = transverse_operator_apply(phi0, [x], hbar, 1.0, 0.0, 1)
    Q = quantize(transverse_symbol(1.0, 1, 14), hbar, cap).entries
    ladder = Q[:, 0] @ H
    assert np.max(np.abs(Kphi - ladder)) / np.max(np.abs(ladder)) < 1e-6
    # leading size O(hbar): ||K Phi_0|| ~ sqrt(2) hbar
    nrm = weighted_norm(Kphi, x)
    assert 1.3 * hbar < nrm < 1.5 * hbar


def test_grid_weyl_matches_hermite_quantization():
    hbar, cap = 2.0**-8, 40
    x = periodic_grid(0.75, 384)
    H = hermite_synthesis(x, hbar, cap)
    sym = X**2 * XI**2 + 0.3 * X**3 * XI - XI**4
    Og = grid_weyl_matrix(sym, x, hbar)
    Oh = quantize(sym, hbar, cap).entries
    for j in (0, 3):
        lhs = Og @ H[j]
        rhs = Oh[:, j] @ H
        assert np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)) < 1e-8


def test_upsilon_plateau_and_support():
    x = np.linspace(-0.5, 0.5, 1001)
    u = upsilon(x, 0.5)
    assert np.all(u[np.abs(x) <= 0.5 / 3] == 1.0)
    assert np.all(u[np.abs(x) >= 0.25] == 0.0)


def test_husimi_mass_of_ground_state():
    hbar = 2.0**-8
    x = periodic_grid(0.5, 1024)
    phi0 = hermite_synthesis(x, hbar, 1)[0]
    R = 0.1
    # Husimi marginal of Phi_0 is Gaussian with variance hbar
    assert abs(husimi_mass_within(phi0, x, hbar, R) - erf(R / np.sqrt(2 * hbar))) < 1e-10


def test_mode_pairing():
    L, k = 2.0, 37
    h = mode_hbar(L, k)
    assert abs((2 * np.pi * k * h / L) ** 2 - 1) < 1e-14
    assert mode_hbar(L, mode_for_hbar(L, 2.0**-9)) <= 2.0**-9


def test_collar_separation_identity():
    L, k = 1.0, 5
    hbar = mode_hbar(L, k)
    g = CollarGrid(L, 0.5, 64, 256)
    gx = bump(g.x, 0.01, 0.05) * np.exp(4j * g.x)
    phi = np.exp(2j * np.pi * k * g.s / L)
    fld = CollarField(g, phi[:, None] * gx[None, :])
    E = 1.07
    lhs = collar_laplacian_apply(fld, hbar).values - E * fld.values
    Kg = transverse_operator_apply(gx, [g.x], hbar, 1.0, E - 1.0)
    assert np.max(np.abs(lhs - phi[:, None] * Kg[None, :])) < 1e-10


def test_ansatz_norm_and_pairing_errors():
    L, k = 1.0, 6
    hbar = mode_hbar(L, k)
    g = CollarGrid(L, 0.5, 64, 256)
    psi = bump(g.x, 0.0, 0.05)
    fld = build_ansatz(k, psi, g, hbar)
    assert abs(fld.norm() - 1) < 1e-10
    with pytest.raises(ConfigError):
        build_ansatz(k, psi, g, 1.3 * hbar)
    with pytest.raises(ConfigError):
        build_ansatz(k, psi, CollarGrid(L, 0.5, 16, 256), hbar)
    assert len(fld.to_bytes()) == 8 * 64 * 256
    assert fld.sidecar()["shape"] == [64, 256]


def test_residual_of_exact_eigenvector_is_tiny():
    L, k = 1.0, 8
    hbar = mode_hbar(L, k)
    g = CollarGrid(L, 0.5, 64, 128)
    K = transverse_matrix(g.x, hbar, 1.0, 0.0)
    w, V = np.linalg.eigh(K)
    j = int(np.argmin(np.abs(w)))
    rep = end_to_end_residual(k, V[:, j], g, hbar, 1.0 + w[j], apply_cutoff=False)
    assert rep.residual < 1e-10 and rep.transverse_residual < 1e-10


def test_residual_equals_transverse_residual():
    L, k = 2.0, 20
    hbar = mode_hbar(L, k)
    g = CollarGrid(L, 0.5, 128, 256)
    psi = bump(g.x, 0.0, 0.06)
    rep = end_to_end_residual(k, psi, g, hbar, 1.0)
    assert abs(rep.residual - rep.transverse_residual) < 1e-8


def test_parameter_order():
    validate_parameter_order(0.5, 0.3, 10, 2, 2.0**-10)
    with pytest.raises(ConfigError):
        validate_parameter_order(0.7, 0.3, 10, 2)
    with pytest.raises(ConfigError):
        validate_parameter_order(0.5, 0.6, 10, 2)
    with pytest.raises(ConfigError):
        validate_parameter_order(0.5, 0.3, 9, 2)
    with pytest.raises(ConfigError):
        validate_parameter_order(0.5, 0.3, 10, 1)
    with pytest.raises(ConfigError):
        validate_parameter_order(0.5, 0.3, 10, 2, 2.0**-7)


def test_cylinder_run_small():
    cfg = CylinderConfig(L=1.0)
    rep = cylinder_run(cfg, mode_for_hbar(1.0, 2.0**-8))
    d = rep.to_dict()
    assert abs(rep.E0 - 1) < 1e-12
    assert d["ratio"] < 1.0
    assert rep.husimi_mass >= 0.95
    assert abs(rep.residual - rep.transverse_residual) < 1e-8
    assert d["projection_loss"] < 1e-8
