"""
Sparse polynomial Weyl symbols in (x, xi, hbar) and their quantization on a
truncated Hermite basis.

Conventions used everywhere in the package:

* Poisson bracket ``{p, q} = sum_i d_{x_i} p d_{xi_i} q - d_{xi_i} p d_{x_i} q``,
  so ``{x, xi} = 1``.
* Moyal product ``p # q = p q + (i hbar / 2) {p, q} + O(hbar^2)``, hence
  ``x # xi = x xi + i hbar / 2``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np
import scipy.sparse as sp

PRUNE_TOL = 1e-14

# the sign in front of {p, q} in the hbar^1 Moyal coefficient (i hbar / 2) * SIGN * {p, q}
POISSON_SIGN = 1


def _falling(n: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= n - j
    return out


class PolySymbol:
    """Sum of ``c * x^alpha xi^beta hbar^k`` stored as {(alpha, beta, k): c}.

    Instances are treated as immutable values.
    """

    __slots__ = ("r", "terms")

    def __init__(self, r: int, terms=None):
        if r < 1:
            raise ValueError("r must be >= 1")
        self.r = int(r)
        clean = {}
        for (a, b, k), c in (terms or {}).items():
            a, b = tuple(int(v) for v in a), tuple(int(v) for v in b)
            if len(a) != r or len(b) != r:
                raise ValueError(f"multi-index length mismatch for r={r}")
            if c != 0:
                key = (a, b, int(k))
                clean[key] = clean.get(key, 0) + complex(c)
        self.terms = {key: c for key, c in clean.items() if c != 0}

    # --- constructors -------------------------------------------------
    @classmethod
    def zero(cls, r):
        return cls(r)

    @classmethod
    def constant(cls, r, c=1.0):
        z = (0,) * r
        return cls(r, {(z, z, 0): c})

    @classmethod
    def monomial(cls, alpha, beta, k=0, c=1.0):
        return cls(len(alpha), {(tuple(alpha), tuple(beta), k): c})

    @classmethod
    def x(cls, i, r, c=1.0):
        a = [0] * r
        a[i] = 1
        return cls.monomial(a, [0] * r, 0, c)

    @classmethod
    def xi(cls, i, r, c=1.0):
        b = [0] * r
        b[i] = 1
        return cls.monomial([0] * r, b, 0, c)

    @classmethod
    def hbar(cls, r, c=1.0):
        return cls.monomial([0] * r, [0] * r, 1, c)

    @classmethod
    def quadratic_hyperbolic(cls, lam):
        """sum_i lam_i x_i xi_i."""
        r = len(lam)
        out = {}
        for i, li in enumerate(lam):
            e = [0] * r
            e[i] = 1
            out[(tuple(e), tuple(e), 0)] = li
        return cls(r, out)

    # --- arithmetic ---------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, PolySymbol):
            if other.r != self.r:
                raise ValueError("symbols live in different dimensions")
            return other
        return PolySymbol.constant(self.r, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0) + c
        return PolySymbol(self.r, out)

    __radd__ = __add__

    def __neg__(self):
        return PolySymbol(self.r, {key: -c for key, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        """Pointwise (commutative) product; scalars scale."""
        if not isinstance(other, PolySymbol):
            return PolySymbol(self.r, {key: c * other for key, c in self.terms.items()})
        other = self._coerce(other)
        out = {}
        for (a1, b1, k1), c1 in self.terms.items():
            for (a2, b2, k2), c2 in other.terms.items():
                key = (
                    tuple(x + y for x, y in zip(a1, a2)),
                    tuple(x + y for x, y in zip(b1, b2)),
                    k1 + k2,
                )
                out[key] = out.get(key, 0) + c1 * c2
        return PolySymbol(self.r, out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __pow__(self, n: int):
        out = PolySymbol.constant(self.r, 1.0)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, PolySymbol):
            return NotImplemented
        return self.r == other.r and self.terms == other.terms

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        if not self.terms:
            return f"PolySymbol(r={self.r}, 0)"
        parts = []
        for (a, b, k), c in sorted(self.terms.items(), key=lambda kv: (self.term_weight(kv[0]), kv[0])):
            parts.append(f"({c:.6g})*x^{a} xi^{b} h^{k}")
        return f"PolySymbol(r={self.r}, " + " + ".join(parts) + ")"

    # --- grading ------------------------------------------------------
    @staticmethod
    def term_weight(key, hbar_weight: int = 1) -> int:
        a, b, k = key
        return sum(a) + sum(b) + hbar_weight * k

    def weights(self, hbar_weight: int = 1):
        return sorted({self.term_weight(key, hbar_weight) for key in self.terms})

    def min_weight(self, hbar_weight: int = 1):
        return min(self.weights(hbar_weight), default=None)

    def max_weight(self, hbar_weight: int = 1):
        return max(self.weights(hbar_weight), default=None)

    def select(self, pred):
        return PolySymbol(self.r, {key: c for key, c in self.terms.items() if pred(key, c)})

    def homogeneous(self, w: int, hbar_weight: int = 1):
        return self.select(lambda key, c: self.term_weight(key, hbar_weight) == w)

    def truncate(self, max_weight: int, hbar_weight: int = 1):
        return self.select(lambda key, c: self.term_weight(key, hbar_weight) <= max_weight)

    def above(self, w: int, hbar_weight: int = 1):
        return self.select(lambda key, c: self.term_weight(key, hbar_weight) > w)

    def hbar_order(self, k: int):
        return self.select(lambda key, c: key[2] == k)

    def prune(self, tol: float = PRUNE_TOL):
        return self.select(lambda key, c: abs(c) >= tol)

    def spread(self) -> int:
        """Largest per-axis degree alpha_i + beta_i (band half-width of the quantization)."""
        return max((a[i] + b[i] for (a, b, k) in self.terms for i in range(self.r)), default=0)

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol * max(1.0, abs(c)) for c in self.terms.values())

    def real(self):
        return PolySymbol(self.r, {key: c.real for key, c in self.terms.items()})

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def distance(self, other) -> float:
        return (self - other).max_abs_coeff()

    # --- evaluation and calculus --------------------------------------
    def __call__(self, x, xi, hbar=0.0):
        """Evaluate at points; ``x`` and ``xi`` have trailing axis of length r."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        total = np.zeros(x.shape[:-1], dtype=complex)
        for (a, b, k), c in self.terms.items():
            term = c * hbar**k * np.ones(x.shape[:-1])
            for i in range(self.r):
                term = term * x[..., i] ** a[i] * xi[..., i] ** b[i]
            total = total + term
        return total

    def diff(self, var: str, i: int, order: int = 1):
        out = {}
        for (a, b, k), c in self.terms.items():
            a, b = list(a), list(b)
            if var == "x":
                if a[i] < order:
                    continue
                c = c * _falling(a[i], order)
                a[i] -= order
            else:
                if b[i] < order:
                    continue
                c = c * _falling(b[i], order)
                b[i] -= order
            key = (tuple(a), tuple(b), k)
            out[key] = out.get(key, 0) + c
        return PolySymbol(self.r, out)

    def compose_linear(self, S: np.ndarray):
        """Symbol of ``p(S z)`` with ``z = (x, xi)`` new coordinates (exact for Weyl symbols when S is symplectic)."""
        r = self.r
        S = np.asarray(S, dtype=float)
        lin = []
        for row in range(2 * r):
            lin_terms = {}
            for col in range(2 * r):
                if S[row, col] != 0:
                    a, b = [0] * r, [0] * r
                    (a if col < r else b)[col % r] = 1
                    lin_terms[(tuple(a), tuple(b), 0)] = S[row, col]
            lin.append(PolySymbol(r, lin_terms))
        powers = {}

        def power(v, n):
            if (v, n) not in powers:
                powers[(v, n)] = PolySymbol.constant(r, 1.0) if n == 0 else power(v, n - 1) * lin[v]
            return powers[(v, n)]

        out = PolySymbol(r)
        for (a, b, k), c in self.terms.items():
            term = PolySymbol.monomial([0] * r, [0] * r, k, c)
            for i in range(r):
                term = term * power(i, a[i]) * power(r + i, b[i])
            out = out + term
        return out.prune()

    # --- serialization ------------------------------------------------
    def to_jsonl(self) -> str:
        lines = []
        for (a, b, k), c in sorted(self.terms.items()):
            lines.append(json.dumps({"alpha": list(a), "beta": list(b), "k": k, "re": c.real, "im": c.imag}))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str, r: int | None = None):
        terms = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            key = (tuple(d["alpha"]), tuple(d["beta"]), int(d["k"]))
            terms[key] = terms.get(key, 0) + complex(d["re"], d.get("im", 0.0))
            r = len(d["alpha"]) if r is None else r
        if r is None:
            raise ValueError("empty symbol file needs an explicit r")
        return cls(r, terms)


# --- products and brackets ---------------------------------------------


def _axis_options(a1, b1, a2, b2):
    """Per-axis (alpha_j, beta_j, weight) for the Moyal bidifferential expansion."""
    opts = []
    for aa in range(min(a1, b2) + 1):
        for bb in range(min(b1, a2) + 1):
            w = _falling(a1, aa) * _falling(b2, aa) * _falling(b1, bb) * _falling(a2, bb)
            w = w * (-1) ** bb / (factorial(aa) * factorial(bb))
            opts.append((aa, bb, w))
    return opts


def _moyal(p: PolySymbol, q: PolySymbol, max_weight=None, hbar_weight=1, parity=None):
    if p.r != q.r:
        raise ValueError("symbols live in different dimensions")
    r = p.r
    out = {}
    half_i = 0.5j * POISSON_SIGN
    for (a1, b1, k1), c1 in p.terms.items():
        w1 = sum(a1) + sum(b1) + hbar_weight * k1
        for (a2, b2, k2), c2 in q.terms.items():
            w2 = sum(a2) + sum(b2) + hbar_weight * k2
            if max_weight is not None and hbar_weight == 2 and w1 + w2 > max_weight:
                continue
            per_axis = [_axis_options(a1[j], b1[j], a2[j], b2[j]) for j in range(r)]
            for combo in itertools.product(*per_axis):
                order = sum(aa + bb for aa, bb, _ in combo)
                if parity is not None and order % 2 != parity:
                    continue
                if max_weight is not None and w1 + w2 + order * (hbar_weight - 2) > max_weight:
                    continue
                coef = c1 * c2 * half_i**order
                for _, _, w in combo:
                    coef *= w
                alpha = tuple(a1[j] - combo[j][0] + a2[j] - combo[j][1] for j in range(r))
                beta = tuple(b1[j] - combo[j][1] + b2[j] - combo[j][0] for j in range(r))
                key = (alpha, beta, k1 + k2 + order)
                out[key] = out.get(key, 0) + coef
    return PolySymbol(r, out)


def moyal_product(p: PolySymbol, q: PolySymbol, max_weight=None, hbar_weight=1) -> PolySymbol:
    """Exact Moyal product (the series terminates for polynomials).

    ``max_weight`` drops every output term whose weight exceeds it.
    """
    return _moyal(p, q, max_weight, hbar_weight)


def moyal_bracket(p: PolySymbol, q: PolySymbol, max_weight=None, hbar_weight=1) -> PolySymbol:
    """Symbol of ``(1 / (i hbar)) [Op(p), Op(q)]``; equals ``{p, q} + O(hbar^2)``."""
    odd = _moyal(p, q, None if max_weight is None else max_weight + hbar_weight, hbar_weight, parity=1)
    out = {}
    for (a, b, k), c in odd.terms.items():
        out[(a, b, k - 1)] = 2 * c / 1j
    res = PolySymbol(p.r, out)
    return res if max_weight is None else res.truncate(max_weight, hbar_weight)


def poisson_bracket(p: PolySymbol, q: PolySymbol) -> PolySymbol:
    if p.r != q.r:
        raise ValueError("symbols live in different dimensions")
    out = PolySymbol(p.r)
    for i in range(p.r):
        out = out + p.diff("x", i) * q.diff("xi", i) - p.diff("xi", i) * q.diff("x", i)
    return out


def grading_eigenvalue(alpha, beta, lam) -> float:
    """lam . (alpha - beta): eigenvalue of f -> {f, sum lam_i x_i xi_i} on x^alpha xi^beta."""
    if not (len(alpha) == len(beta) == len(lam)):
        raise ValueError("length mismatch")
    return float(sum(l * (a - b) for l, a, b in zip(lam, alpha, beta)))


def is_resonant(symbol: PolySymbol, lam, tol: float = 1e-12) -> bool:
    return all(abs(grading_eigenvalue(a, b, lam)) <= tol for (a, b, k) in symbol.terms)


# --- quantization on the Hermite basis ---------------------------------


@lru_cache(maxsize=64)
def _ladder_1d(n: int):
    a = sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, format="csr")
    return a, a.T.tocsr()


@lru_cache(maxsize=2048)
def _monomial_unit(a: int, b: int, cap: int) -> np.ndarray:
    """Op^W(x^a xi^b) at hbar = 1 on Hermite states 0..cap-1, exact entries via padding."""
    n = cap + a + b + 2
    low, up = _ladder_1d(n)
    X = (np.sqrt(0.5) * (up + low)).astype(complex)
    P = 1j * np.sqrt(0.5) * (up - low)
    eye = sp.identity(n, dtype=complex, format="csr")
    Pb = eye
    for _ in range(b):
        Pb = Pb @ P
    Xp = [eye]
    for _ in range(a):
        Xp.append(Xp[-1] @ X)
    out = sp.csr_matrix((n, n), dtype=complex)
    for g in range(a + 1):
        out = out + comb(a, g) * (Xp[a - g] @ Pb @ Xp[g])
    out = out[:cap, :cap].toarray() / 2**a
    out.setflags(write=False)
    return out


def _monomial_1d(a: int, b: int, hbar: float, cap: int) -> np.ndarray:
    # X and P both scale as sqrt(hbar) in the ladder representation
    return hbar ** ((a + b) / 2) * _monomial_unit(a, b, cap)


@dataclass
class HamiltonianMatrix:
    """Dense operator on the Hermite basis {Phi_m : all m_i < basis_cap}.

    ``interior`` is the per-axis index bound below which the action on basis
    vectors is exact; ``spread`` is the per-axis band half-width.
    """

    hbar: float
    basis_cap: int
    r: int
    entries: np.ndarray
    interior: int
    spread: int

    @property
    def dim(self):
        return self.basis_cap**self.r

    def interior_indices(self, n=None) -> np.ndarray:
        n = self.interior if n is None else n
        grids = np.indices((self.basis_cap,) * self.r).reshape(self.r, -1)
        return np.flatnonzero(np.all(grids < n, axis=0))

    def interior_block(self, n=None) -> np.ndarray:
        idx = self.interior_indices(n)
        return self.entries[np.ix_(idx, idx)]

    def __matmul__(self, other: "HamiltonianMatrix") -> "HamiltonianMatrix":
        interior = min(other.interior, self.interior - other.spread)
        return HamiltonianMatrix(
            self.hbar, self.basis_cap, self.r, self.entries @ other.entries, interior, self.spread + other.spread
        )

    def __add__(self, other):
        return HamiltonianMatrix(
            self.hbar,
            self.basis_cap,
            self.r,
            self.entries + other.entries,
            min(self.interior, other.interior),
            max(self.spread, other.spread),
        )

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, c):
        return HamiltonianMatrix(self.hbar, self.basis_cap, self.r, c * self.entries, self.interior, self.spread)

    def hermiticity_defect(self) -> float:
        A = self.entries
        return float(np.linalg.norm(A - A.conj().T, 2) / max(np.linalg.norm(A, 2), 1e-300))


def quantize(symbol: PolySymbol, hbar: float, basis_cap: int, exact_window: int | None = None) -> HamiltonianMatrix:
    r = symbol.r
    spread = symbol.spread()
    if exact_window is not None and exact_window + spread > basis_cap:
        raise ValueError(
            f"basis_cap={basis_cap} too small: exact window {exact_window} needs {exact_window + spread}"
        )
    dim = basis_cap**r
    out = np.zeros((dim, dim), dtype=complex)
    for (a, b, k), c in symbol.terms.items():
        mat = np.array([[1.0 + 0j]])
        for i in range(r):
            mat = np.kron(mat, _monomial_1d(a[i], b[i], float(hbar), basis_cap))
        out += c * hbar**k * mat
    return HamiltonianMatrix(float(hbar), basis_cap, r, out, basis_cap - spread, spread)


def matrix_consistency(p: PolySymbol, q: PolySymbol, hbar: float, cap: int, interior: int | None = None) -> float:
    """Spectral norm of quantize(p # q) - quantize(p) quantize(q) on the untruncated block."""
    pq = quantize(moyal_product(p, q), hbar, cap)
    prod = quantize(p, hbar, cap) @ quantize(q, hbar, cap)
    n = prod.interior if interior is None else min(interior, prod.interior)
    if n <= 0:
        raise ValueError("no interior block left; increase cap")
    diff = pq.interior_block(n) - prod.interior_block(n)
    return float(np.linalg.norm(diff, 2)) if diff.size else 0.0
