"""
Classical and quantum Birkhoff normal forms at a hyperbolic fixed point.

The normal form is built degree by degree.  At weight ``d`` the
non-resonant part ``n_d`` of the current symbol is removed by the generator
``g_d = n_d / omega`` (monomial-wise, ``omega = lam . (alpha - beta)``), and
the symbol is replaced by ``exp(L_g) H`` where ``L_g f = {f, g}`` classically
and ``L_g f = moyal_bracket(f, g)`` in the quantum case.  The latter is the
symbol of ``U_d^* Op(H) U_d`` with ``U_d = exp(-i Op(g_d) / hbar)``.

Inside this module hbar carries grading weight 2, so that the Moyal
corrections ``hbar^2 d^3`` preserve the weight and the recursion closes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import logm

from .weyl_symbols import (
    HamiltonianMatrix,
    PolySymbol,
    grading_eigenvalue,
    moyal_bracket,
    poisson_bracket,
    quantize,
)

HBAR_WEIGHT = 2
RESONANCE_TOL = 1e-12


class NormalFormError(ValueError):
    """Raised when the normal-form recursion cannot proceed."""


# --- the transverse model symbol ---------------------------------------


def _abs_x_squared(r: int) -> PolySymbol:
    return sum((PolySymbol.x(i, r) ** 2 for i in range(r)), PolySymbol(r))


def _x_dot_xi(r: int) -> PolySymbol:
    return sum((PolySymbol.x(i, r) * PolySymbol.xi(i, r) for i in range(r)), PolySymbol(r))


def transverse_symbol(E0: float, r: int, taylor_cap: int, m: int = 1) -> PolySymbol:
    """Weyl symbol of the transverse collar operator, Taylor-expanded to ``taylor_cap``.

    The operator is ``-hbar^2 (Lap + (x.d)^2 + (n-1) x.d) - E0 |x|^2 / (1 + |x|^2)``
    with ``n = m + r``.  In terms of ``X`` and ``P = -i hbar d`` it equals
    ``|P|^2 + (X.P)^2 - i (n-1) hbar X.P``, whose Weyl symbol is

        |xi|^2 + (x.xi)^2 - i (m-1) hbar (x.xi) + c hbar^2 - E0 (|x|^2 - |x|^4 + ...)

    with ``c = (r + r^2)/4 + (m-1) r / 2``.  The shift ``f(hbar)`` is left to
    the caller.  Truncation uses weight ``|alpha| + |beta| + 2k`` and keeps
    terms of weight ``<= taylor_cap``.
    """
    if taylor_cap < 2:
        raise ValueError("taylor_cap must be >= 2")
    if r < 1 or m < 1:
        raise ValueError("r and m must be positive")
    x2 = _abs_x_squared(r)
    s = _x_dot_xi(r)
    xi2 = sum((PolySymbol.xi(i, r) ** 2 for i in range(r)), PolySymbol(r))
    sym = xi2 + s * s
    if m != 1:
        sym = sym + PolySymbol.hbar(r, -1j * (m - 1)) * s
    c = (r + r * r) / 4 + (m - 1) * r / 2
    sym = sym + PolySymbol.monomial((0,) * r, (0,) * r, 2, c)
    # E0 |x|^2/(1+|x|^2) = E0 sum_{j>=1} (-1)^{j+1} |x|^{2j}
    power = x2
    j = 1
    while 2 * j <= taylor_cap:
        sym = sym - E0 * (-1) ** (j + 1) * power
        power = power * x2
        j += 1
    return sym.truncate(taylor_cap, HBAR_WEIGHT)


# --- linear symplectic normalization ------------------------------------


def _symplectic_J(r: int) -> np.ndarray:
    return np.block([[np.zeros((r, r)), np.eye(r)], [-np.eye(r), np.zeros((r, r))]])


def quadratic_hessian(symbol: PolySymbol) -> np.ndarray:
    """Hessian of the hbar-free degree-2 part at the origin, variables (x, xi)."""
    r = symbol.r
    H = np.zeros((2 * r, 2 * r))
    for (a, b, k), c in symbol.terms.items():
        if k != 0 or sum(a) + sum(b) != 2:
            continue
        idx = [i for i in range(r) for _ in range(a[i])] + [r + i for i in range(r) for _ in range(b[i])]
        i, j = idx
        if i == j:
            H[i, i] += 2 * c.real
        else:
            H[i, j] += c.real
            H[j, i] += c.real
    return H


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    return -v if nz.size and v[nz[0]] < 0 else v


def symplectic_normalization(symbol: PolySymbol):
    """Find a linear symplectic ``S`` with ``q2(S z) = sum_i mu_i y_i eta_i``.

    Returns ``(S, mu, normalized_symbol)`` where ``normalized_symbol(z) =
    symbol(S z)`` (exact for Weyl symbols by metaplectic covariance).  The
    eigenvectors are ordered by descending rate with the first nonzero
    component made positive.
    """
    r = symbol.r
    H = quadratic_hessian(symbol)
    J = _symplectic_J(r)
    A = J @ H
    evals, evecs = np.linalg.eig(A)
    if np.max(np.abs(evals.imag)) > 1e-10 or np.min(np.abs(evals.real)) < 1e-12:
        raise NormalFormError("quadratic part is not a nondegenerate split form")
    evals = evals.real
    evecs = evecs.real
    order = np.argsort(-evals)
    pos, neg = order[:r], order[r:][::-1]
    if np.any(evals[pos] <= 0) or not np.allclose(evals[pos], -evals[neg], rtol=1e-9, atol=1e-12):
        raise NormalFormError("quadratic part is not a nondegenerate split form")
    V = np.column_stack([_fix_sign(evecs[:, i]) for i in pos])
    W = np.column_stack([_fix_sign(evecs[:, i]) for i in neg])
    G = V.T @ J @ W
    W = W @ np.linalg.inv(G)
    S = np.hstack([V, W])
    if np.max(np.abs(S.T @ J @ S - J)) > 1e-9:
        raise NormalFormError("failed to build a symplectic normalization")
    mu = evals[pos]
    normalized = symbol.compose_linear(S)
    # replace the hbar-free quadratic part by its exact diagonal form
    quad = normalized.select(lambda key, c: key[2] == 0 and sum(key[0]) + sum(key[1]) == 2)
    normalized = (normalized - quad + PolySymbol.quadratic_hyperbolic(mu)).prune()
    return S, mu, normalized


def metaplectic_generator(S: np.ndarray) -> PolySymbol:
    """Quadratic symbol ``h`` whose time-one Hamiltonian flow is ``z -> S z``.

    Then ``exp(-i Op(h)/hbar)^* Op(p) exp(-i Op(h)/hbar) = Op(p(S z))``.
    """
    r = S.shape[0] // 2
    J = _symplectic_J(r)
    L = logm(S)
    if np.max(np.abs(L.imag)) > 1e-10:
        raise NormalFormError("symplectic map has no real logarithm")
    Hg = -J @ L.real
    Hg = 0.5 * (Hg + Hg.T)
    terms = {}
    for i in range(2 * r):
        for j in range(2 * r):
            a, b = [0] * r, [0] * r
            for idx in (i, j):
                (a if idx < r else b)[idx % r] += 1
            key = (tuple(a), tuple(b), 0)
            terms[key] = terms.get(key, 0) + 0.5 * Hg[i, j]
    return PolySymbol(r, terms).prune()


# --- the homological recursion ------------------------------------------


@dataclass
class NormalFormResult:
    lam: tuple
    degree_cap: int
    resonant: PolySymbol
    generators: list
    remainder: PolySymbol
    linear_map: np.ndarray = field(default_factory=lambda: np.eye(2))
    normalized_input: PolySymbol | None = None
    quantum: bool = False

    def generator_table(self):
        """Rows (degree, alpha, beta, k, coefficient) for every generator term."""
        rows = []
        for d, g in self.generators:
            for (a, b, k), c in sorted(g.terms.items()):
                rows.append((d, a, b, k, c))
        return rows

    def to_dict(self):
        def terms(sym):
            return [
                {"alpha": list(a), "beta": list(b), "k": k, "re": c.real, "im": c.imag}
                for (a, b, k), c in sorted(sym.terms.items())
            ]

        return {
            "lambda": list(map(float, self.lam)),
            "degree_cap": self.degree_cap,
            "quantum": self.quantum,
            "linear_map": np.asarray(self.linear_map).tolist(),
            "resonant": terms(self.resonant),
            "generators": [{"degree": d, "terms": terms(g)} for d, g in self.generators],
            "remainder": terms(self.remainder),
        }


def _exp_action(H: PolySymbol, g: PolySymbol, bracket, cap: int) -> PolySymbol:
    """sum_k L_g^k H / k!, stopping once every new term exceeds weight ``cap``."""
    out = H
    term = H
    k = 0
    while True:
        k += 1
        term = bracket(term, g, cap).truncate(cap, HBAR_WEIGHT) / k
        if not term:
            break
        out = out + term
    return out.prune()


def _poisson_capped(f, g, cap):
    return poisson_bracket(f, g)


def _moyal_capped(f, g, cap):
    return moyal_bracket(f, g, max_weight=cap, hbar_weight=HBAR_WEIGHT)


def _split_resonant(sym: PolySymbol, lam):
    res = sym.select(lambda key, c: abs(grading_eigenvalue(key[0], key[1], lam)) <= RESONANCE_TOL)
    return res, sym - res


def _prepare(symbol: PolySymbol, lam):
    lam = tuple(float(v) for v in lam)
    if len(lam) != symbol.r or min(lam) <= 0:
        raise NormalFormError("lambda must be a positive vector of length r")
    quad = symbol.select(lambda key, c: key[2] == 0 and sum(key[0]) + sum(key[1]) == 2)
    target = PolySymbol.quadratic_hyperbolic(lam)
    if quad.distance(target) <= 1e-12:
        return np.eye(2 * symbol.r), symbol
    S, mu, normalized = symplectic_normalization(symbol)
    if not np.allclose(sorted(mu), sorted(lam), rtol=1e-9):
        raise NormalFormError(f"quadratic rates {mu} do not match lambda {lam}")
    return S, normalized


def _bnf(symbol, lam, degree_cap, bracket, remainder_weight):
    if degree_cap < 2:
        raise NormalFormError("degree_cap must be >= 2")
    S, normalized = _prepare(symbol, lam)
    lam = tuple(float(v) for v in lam)
    work_cap = degree_cap if remainder_weight is None else max(degree_cap, remainder_weight)
    H = normalized.truncate(work_cap, HBAR_WEIGHT)
    generators = []
    for d in range(3, degree_cap + 1):
        part = H.homogeneous(d, HBAR_WEIGHT)
        _, nonres = _split_resonant(part, lam)
        nonres = nonres.prune()
        if not nonres:
            continue
        gterms = {}
        for (a, b, k), c in nonres.terms.items():
            omega = grading_eigenvalue(a, b, lam)
            if abs(omega) <= RESONANCE_TOL:
                raise NormalFormError(f"vanishing grading eigenvalue on non-resonant term {(a, b, k)}")
            gterms[(a, b, k)] = c / omega
        g = PolySymbol(symbol.r, gterms)
        generators.append((d, g))
        H = _exp_action(H, g, bracket, work_cap)
    low = H.truncate(degree_cap, HBAR_WEIGHT)
    resonant, leftover = _split_resonant(low, lam)
    if leftover.max_abs_coeff() > 1e-9 * max(1.0, H.max_abs_coeff()):
        raise NormalFormError("non-resonant terms survived the recursion")
    remainder = H.above(degree_cap, HBAR_WEIGHT)
    # cancellation noise: drop coefficients at roundoff relative to the largest one
    noise = 1e-12 * max(1.0, H.max_abs_coeff())
    return S, normalized, resonant.prune(noise), generators, remainder


def classical_bnf(symbol: PolySymbol, lam, degree_cap: int, remainder_weight: int | None = None) -> NormalFormResult:
    """Classical Birkhoff normal form (Poisson-bracket conjugation).

    ``remainder_weight`` (default ``degree_cap + 2``) bounds the weights
    tracked for the remainder; only its leading part is returned.
    """
    rw = degree_cap + 2 if remainder_weight is None else remainder_weight
    S, normalized, res, gens, rem = _bnf(symbol, lam, degree_cap, _poisson_capped, rw)
    return NormalFormResult(tuple(lam), degree_cap, res, gens, rem, S, normalized, quantum=False)


def quantum_symbol_bnf(symbol: PolySymbol, lam, degree_cap: int, remainder_weight: int | None = None) -> NormalFormResult:
    """Symbol-level quantum normal form (Moyal-bracket conjugation)."""
    rw = degree_cap + 2 if remainder_weight is None else remainder_weight
    S, normalized, res, gens, rem = _bnf(symbol, lam, degree_cap, _moyal_capped, rw)
    return NormalFormResult(tuple(lam), degree_cap, res, gens, rem, S, normalized, quantum=True)


def roundtrip_error(result: NormalFormResult, target: PolySymbol | None = None) -> float:
    """Undo the generator flows on the resonant symbol and compare jets to weight Ñ.

    ``exp(-L_{g_3}) ... exp(-L_{g_N}) q`` must reproduce the normalized input.
    """
    bracket = _moyal_capped if result.quantum else _poisson_capped
    cap = result.degree_cap
    sym = result.resonant
    for _, g in reversed(result.generators):
        sym = _exp_action(sym, -g, bracket, cap)
    target = result.normalized_input if target is None else target
    return sym.truncate(cap, HBAR_WEIGHT).distance(target.truncate(cap, HBAR_WEIGHT))


# --- matrices ------------------------------------------------------------


@dataclass
class ConjugatorFactor:
    generator: PolySymbol
    exponent: HamiltonianMatrix
    unitary: np.ndarray


@dataclass
class QuantumNormalForm:
    lam: tuple
    degree_cap: int
    hbar: float
    basis_cap: int
    symbol_form: NormalFormResult
    nf_matrix: HamiltonianMatrix
    conjugator: list
    remainder_matrix: HamiltonianMatrix | None
    quadratic_matrix: HamiltonianMatrix

    @property
    def r(self):
        return self.nf_matrix.r

    @property
    def perturbation(self) -> HamiltonianMatrix:
        """Q - Op(sum lam_i x_i xi_i): the part commuting with the dilation flow."""
        return self.nf_matrix - self.quadratic_matrix

    def conjugator_matrix(self) -> np.ndarray:
        """U = U_3 U_4 ... U_N on the truncated basis."""
        U = np.eye(self.nf_matrix.dim, dtype=complex)
        for fac in self.conjugator:
            U = U @ fac.unitary
        return U

    def commutator_defect(self, interior: int | None = None) -> float:
        """Relative interior norm of [Op(sum lam x xi), Q]."""
        A, B = self.quadratic_matrix, self.nf_matrix
        comm = (A @ B) - (B @ A)
        n = comm.interior if interior is None else min(interior, comm.interior)
        blk = comm.interior_block(n)
        ref = np.linalg.norm(B.interior_block(n), 2)
        return float(np.linalg.norm(blk, 2) / max(ref, 1e-300))

    def unitarity_defect(self, interior: int | None = None) -> float:
        n = self.basis_cap // 2 if interior is None else interior
        worst = 0.0
        for fac in self.conjugator:
            idx = fac.exponent.interior_indices(n)
            U = fac.unitary[:, idx]
            worst = max(worst, float(np.linalg.norm(U.conj().T @ U - np.eye(len(idx)), 2)))
        return worst


def _unitary_from_exponent(G: HamiltonianMatrix, hbar: float) -> np.ndarray:
    A = 0.5 * (G.entries + G.entries.conj().T)
    w, V = np.linalg.eigh(A)
    return (V * np.exp(-1j * w / hbar)) @ V.conj().T


def quantum_bnf(
    symbol: PolySymbol,
    lam,
    degree_cap: int,
    hbar: float,
    basis_cap: int,
    with_remainder: bool = True,
    remainder_weight: int | None = None,
) -> QuantumNormalForm:
    """Quantum normal form on the truncated Hermite basis.

    ``U_N^* Op(p) U_N = Q + R`` with ``U_N = prod_d exp(-i Op(g_d)/hbar)``.
    The remainder matrix is formed directly from this identity, so it is
    exact up to basis truncation; its trusted block is the lower half of the
    basis because the exponentials are not banded.
    """
    if hbar <= 0 or hbar > 1:
        raise ValueError("hbar must lie in (0, 1]")
    form = quantum_symbol_bnf(symbol, lam, degree_cap, remainder_weight)
    nf = quantize(form.resonant, hbar, basis_cap)
    conj = []
    for _, g in form.generators:
        G = quantize(g, hbar, basis_cap)
        conj.append(ConjugatorFactor(g, G, _unitary_from_exponent(G, hbar)))
    quad = quantize(PolySymbol.quadratic_hyperbolic(form.lam), hbar, basis_cap)
    qnf = QuantumNormalForm(tuple(form.lam), degree_cap, hbar, basis_cap, form, nf, conj, None, quad)
    if with_remainder:
        P = quantize(form.normalized_input, hbar, basis_cap)
        U = qnf.conjugator_matrix()
        R = U.conj().T @ P.entries @ U - nf.entries
        qnf.remainder_matrix = HamiltonianMatrix(hbar, basis_cap, nf.r, R, basis_cap // 2, P.spread)
    return qnf


def quadratic_normal_form(lam, hbar: float, basis_cap: int) -> QuantumNormalForm:
    """The exactly quadratic model Q = Op(sum lam_i x_i xi_i)."""
    sym = PolySymbol.quadratic_hyperbolic(lam)
    return quantum_bnf(sym, lam, 2, hbar, basis_cap, with_remainder=False)


def default_degree_cap(epsilon2: float) -> int:
    """Smallest admissible Ñ with (Ñ + 1) eps2 / 3 > 1."""
    return int(np.floor(3.0 / epsilon2))


__all__ = [
    "HBAR_WEIGHT",
    "NormalFormError",
    "NormalFormResult",
    "QuantumNormalForm",
    "ConjugatorFactor",
    "transverse_symbol",
    "symplectic_normalization",
    "metaplectic_generator",
    "quadratic_hessian",
    "classical_bnf",
    "quantum_symbol_bnf",
    "quantum_bnf",
    "quadratic_normal_form",
    "roundtrip_error",
    "default_degree_cap",
]
