import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from scarmodes.birkhoff import (
    HBAR_WEIGHT,
    NormalFormError,
    classical_bnf,
    default_degree_cap,
    metaplectic_generator,
    quantum_bnf,
    quantum_symbol_bnf,
    roundtrip_error,
    symplectic_normalization,
    transverse_symbol,
)
from scarmodes.weyl_symbols import PolySymbol, grading_eigenvalue, quantize, _ladder_1d

X = PolySymbol.x(0, 1)
XI = PolySymbol.xi(0, 1)


def test_transverse_symbol_classical_part():
    t = transverse_symbol(1.0, 1, 4).hbar_order(0)
    assert t == XI**2 + X**2 * XI**2 - X**2 + X**4


@pytest.mark.parametrize("E0", [0.5, 1.0, 3.0])
def test_transverse_weight_two_part(E0):
    t = transverse_symbol(E0, 2, 6)
    quad = t.homogeneous(2, HBAR_WEIGHT)
    expect = sum((PolySymbol.xi(i, 2) ** 2 - E0 * PolySymbol.x(i, 2) ** 2 for i in range(2)), PolySymbol(2))
    assert quad.distance(expect) < 1e-14


@pytest.mark.parametrize("r,m", [(1, 1), (1, 3), (2, 1), (2, 2)])
def test_transverse_symbol_matches_operator(r, m):
    """Polynomial part of the collar operator built from X and P matrices."""
    hbar, cap = 0.3, 14
    n = cap + 8
    low, up = (m_.toarray() for m_ in _ladder_1d(n))
    X1 = np.sqrt(hbar / 2) * (up + low)
    P1 = 1j * np.sqrt(hbar / 2) * (up - low)
    eye = np.eye(n)

    def axis(op, i):
        out = np.array([[1.0]])
        for j in range(r):
            out = np.kron(out, op if j == i else eye)
        return out

    Xs = [axis(X1, i) for i in range(r)]
    Ps = [axis(P1, i) for i in range(r)]
    XP = sum(Xs[i] @ Ps[i] for i in range(r))
    nn = m + r
    op = sum(P @ P for P in Ps) + XP @ XP - 1j * (nn - 1) * hbar * XP
    # E0 = 0 isolates the differential part
    sym = transverse_symbol(0.0, r, 8, m=m)
    Q = quantize(sym, hbar, n)
    keep = np.flatnonzero(np.all(np.indices((n,) * r).reshape(r, -1) < cap, axis=0))
    assert np.max(np.abs(Q.entries[np.ix_(keep, keep)] - op[np.ix_(keep, keep)])) < 1e-12


def test_transverse_symbol_real_for_m1():
    assert transverse_symbol(1.0, 2, 8).is_real()


def test_symplectic_normalization_rates():
    for E0 in (0.25, 1.0, 4.0):
        S, mu, normalized = symplectic_normalization(transverse_symbol(E0, 1, 6))
        assert mu == pytest.approx([2 * np.sqrt(E0)])
        J = np.array([[0, 1], [-1, 0]])
        assert np.allclose(S.T @ J @ S, J)
        assert normalized.homogeneous(2, HBAR_WEIGHT).hbar_order(0).distance(2 * np.sqrt(E0) * X * XI) < 1e-12


def test_symplectic_normalization_rejects_elliptic():
    with pytest.raises(NormalFormError):
        symplectic_normalization(X**2 + XI**2)


def test_metaplectic_generator_flow():
    S, _, _ = symplectic_normalization(transverse_symbol(2.0, 1, 4))
    h = metaplectic_generator(S)
    # linear Hamiltonian vector field of h integrates to S
    H = np.array([[2 * h.terms.get(((2,), (0,), 0), 0).real, h.terms.get(((1,), (1,), 0), 0).real],
                  [h.terms.get(((1,), (1,), 0), 0).real, 2 * h.terms.get(((0,), (2,), 0), 0).real]])
    J = np.array([[0, 1], [-1, 0]])
    assert np.allclose(expm(J @ H), S, atol=1e-12)


def test_already_normal():
    res = classical_bnf(2 * X * XI, [2], 6)
    assert res.resonant == 2 * X * XI
    assert res.generators == []
    assert not res.remainder


def test_cubic_example_generator():
    res = classical_bnf(2 * X * XI + X**3, [2], 3)
    assert res.resonant == 2 * X * XI
    assert len(res.generators) == 1
    d, g = res.generators[0]
    assert d == 3 and g.distance(X**3 / 6) < 1e-15
    assert res.remainder.min_weight(HBAR_WEIGHT) is None or res.remainder.min_weight(HBAR_WEIGHT) >= 4


def _flow(g, z0, t=1.0):
    gx, gxi = g.diff("x", 0), g.diff("xi", 0)

    def rhs(_, z):
        x, xi = np.array([[z[0]]]), np.array([[z[1]]])
        return [gxi(x, xi)[0].real, -gx(x, xi)[0].real]

    return solve_ivp(rhs, (0, t), z0, rtol=1e-13, atol=1e-15).y[:, -1]


def test_cubic_example_against_numerical_flow():
    p = 2 * X * XI + X**3 + XI**3 * 0.5
    res = classical_bnf(p, [2], 5)
    # p o kappa = q + O(|z|^6) with kappa = flow(g_3) o flow(g_4) o ...
    errs = []
    for eps in (0.05, 0.025):
        z = np.array([0.7, -0.4]) * eps
        w = z
        for _, g in reversed(res.generators):
            w = _flow(g, w)
        lhs = p(np.array([[w[0]]]), np.array([[w[1]]]))[0].real
        rhs = res.resonant(np.array([[z[0]]]), np.array([[z[1]]]))[0].real
        errs.append(abs(lhs - rhs))
    assert errs[0] < 1e-6
    # error is O(|z|^6): halving |z| divides it by about 64
    assert errs[0] / errs[1] > 40


@pytest.mark.parametrize("cap", [4, 6, 8, 10])
def test_transverse_bnf_purity_and_roundtrip(cap):
    for bnf in (classical_bnf, quantum_symbol_bnf):
        res = bnf(transverse_symbol(1.0, 1, cap + 2), [2], cap)
        for a, b, k in res.resonant.terms:
            assert grading_eigenvalue(a, b, [2]) == 0
        assert res.resonant.hbar_order(0).homogeneous(2, HBAR_WEIGHT).distance(2 * X * XI) < 1e-12
        assert roundtrip_error(res) <= 1e-8
        assert res.remainder.min_weight(HBAR_WEIGHT) is None or res.remainder.min_weight(HBAR_WEIGHT) > cap


def test_two_dimensional_bnf_resonances():
    res = quantum_symbol_bnf(transverse_symbol(1.0, 2, 6), [2, 2], 6)
    for a, b, k in res.resonant.terms:
        assert sum(a) == sum(b)
    assert roundtrip_error(res) <= 1e-8


def test_rate_mismatch_rejected():
    with pytest.raises(NormalFormError):
        classical_bnf(transverse_symbol(1.0, 1, 4), [3], 4)


@pytest.mark.parametrize("hbar", [2**-8, 2**-10, 2**-12])
def test_quantum_commutator_and_unitarity(hbar):
    q = quantum_bnf(transverse_symbol(1.0, 1, 8), [2], 6, hbar, 80)
    assert q.commutator_defect() <= 1e-8
    assert q.unitarity_defect() <= 1e-8
    q3 = quantum_bnf(2 * X * XI + X**3, [2], 3, 0.01, 60)
    assert q3.commutator_defect() <= 1e-8


def test_quantum_already_normal():
    q = quantum_bnf(2 * X * XI, [2], 4, 0.01, 30)
    assert q.conjugator == []
    assert np.allclose(q.nf_matrix.entries, quantize(2 * X * XI, 0.01, 30).entries)


def test_quantum_remainder_scaling():
    hbars = [2.0**-k for k in range(8, 13)]
    norms = []
    for h in hbars:
        q = quantum_bnf(transverse_symbol(1.0, 1, 8), [2], 6, h, 100)
        norms.append(np.linalg.norm(q.remainder_matrix.entries[:, 0]))
    slope = np.polyfit(np.log(hbars), np.log(norms), 1)[0]
    # leading remainder has weight 8 (odd weights vanish); x ~ sqrt(hbar) gives hbar^4
    assert slope == pytest.approx(4.0, rel=0.2)


def test_default_degree_cap():
    assert default_degree_cap(0.3) == 10
    assert (default_degree_cap(0.3) + 1) * 0.3 / 3 > 1
