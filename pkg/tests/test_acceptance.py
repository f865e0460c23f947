"""Acceptance suite: the ten numerical criteria at their stated tolerances.

Each test records a one-line PASS/FAIL verdict (printed at the end of the
pytest run) and then asserts it.  Criteria that do not hold at desk scale
fail here on purpose; the analysis lives in the decisions ledger and README.
"""

import time
from functools import lru_cache

import numpy as np
from scipy.special import beta

from scarmodes.birkhoff import (
    classical_bnf,
    default_degree_cap,
    quantum_bnf,
    quadratic_normal_form,
    roundtrip_error,
    transverse_symbol,
)
from scarmodes.fermi_model import CylinderConfig, cylinder_run, mode_for_hbar
from scarmodes.hermite_core import dilate, ground_state, inner_product
from scarmodes.propagation import EvolutionPlan, dyson_error, evolve_full, microlocal_mass_outside
from scarmodes.quasimode import (
    PARTIAL_LOCALIZATION_FACTOR,
    make_cutoff,
    s_function,
    time_average,
    width_constant,
)
from scarmodes.weyl_symbols import PolySymbol, grading_eigenvalue, matrix_consistency, moyal_product

EPS2 = 0.3
LAM = 2.0
SWEEP = [2.0**-k for k in range(8, 14)]
CYLINDER_SWEEP = [2.0**-k for k in range(8, 12)]
SLACK = 1.25


@lru_cache(maxsize=None)
def cutoff():
    return make_cutoff(EPS2)


@lru_cache(maxsize=None)
def full_plan(hbar):
    N = default_degree_cap(EPS2)
    nf = quantum_bnf(transverse_symbol(1.0, 1, N + 2), [LAM], N, hbar, 64, with_remainder=False)
    return EvolutionPlan(nf.lam, nf, 2, EPS2)


@lru_cache(maxsize=None)
def quadratic_plan(hbar):
    nf = quadratic_normal_form([LAM], hbar, 8)
    return EvolutionPlan(nf.lam, nf, 2, EPS2)


def slope(hs, errs):
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


# --- 1 -----------------------------------------------------------------------


def test_criterion_01_ground_overlap_law(verdict):
    t0 = time.time()
    s = np.round(np.arange(-500, 501) * 0.01, 10)
    worst = 0.0
    for lam in (1.0, 2.0, 4.0):
        g = ground_state(0.01, 1)
        for si in s:
            val = inner_product(g, dilate(g, [si * lam]))
            worst = max(worst, abs(val - 1 / np.sqrt(np.cosh(lam * si))))
    dt = time.time() - t0
    ok = worst <= 1e-8 and dt < 5
    assert verdict(1, ok, f"max overlap error {worst:.2e} (tol 1e-8), {dt:.1f}s (< 5s)")


# --- 2 -----------------------------------------------------------------------


def _random_symbol(rng):
    return PolySymbol(1, {((a,), (b,), 0): rng.normal() for a in range(4) for b in range(4 - a)})


def test_criterion_02_moyal_quantization_consistency(verdict):
    t0 = time.time()
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for _ in range(50):
        p, q = _random_symbol(rng), _random_symbol(rng)
        worst = max(worst, matrix_consistency(p, q, 1.0, 64, 32))
    assoc = 0.0
    for _ in range(20):
        p, q, s = (_random_symbol(rng) for _ in range(3))
        assoc = max(assoc, moyal_product(moyal_product(p, q), s).distance(moyal_product(p, moyal_product(q, s))))
    dt = time.time() - t0
    ok = worst <= 1e-8 and assoc <= 1e-12 and dt < 30
    assert verdict(2, ok, f"matrix consistency {worst:.2e} (tol 1e-8, hbar=1), associativity {assoc:.2e} "
                          f"(tol 1e-12), {dt:.1f}s")


# --- 3 -----------------------------------------------------------------------


def test_criterion_03_birkhoff_purity_roundtrip(verdict):
    t0 = time.time()
    res = classical_bnf(transverse_symbol(1.0, 1, 6), [LAM], 6)
    impure = [key for key in res.resonant.terms if abs(grading_eigenvalue(key[0], key[1], [LAM])) > 1e-12]
    rt = roundtrip_error(res)
    comm = max(full_plan(h).nf.commutator_defect() for h in (2.0**-8, 2.0**-10, 2.0**-12))
    dt = time.time() - t0
    ok = not impure and rt <= 1e-8 and comm <= 1e-8 and dt < 120
    assert verdict(3, ok, f"non-resonant terms {len(impure)}, round-trip {rt:.2e} (tol 1e-8), "
                          f"relative commutator {comm:.2e} (tol 1e-8), {dt:.1f}s")


# --- 4 -----------------------------------------------------------------------


@lru_cache(maxsize=None)
def dyson_sweep():
    errs = {1: [], 2: []}
    for h in SWEEP:
        plan = full_plan(h)
        for l in errs:
            errs[l].append(dyson_error(plan, plan.T_eps, l))
    return errs


def test_criterion_04_dyson_order_law(verdict):
    t0 = time.time()
    errs = dyson_sweep()
    slopes = {l: slope(SWEEP, errs[l]) for l in errs}
    dt = time.time() - t0
    ok = all(slopes[l] >= l + 0.7 for l in slopes) and dt < 120
    assert verdict(4, ok, "slopes " + ", ".join(f"l={l}: {slopes[l]:.3f} (need >= {l + 0.7})" for l in slopes)
                   + f", {dt:.1f}s")


# --- 5 -----------------------------------------------------------------------


def test_criterion_05_localization_at_ehrenfest_time(verdict):
    t0 = time.time()
    masses = []
    for h in SWEEP:
        plan = full_plan(h)
        st = evolve_full(plan, plan.T_eps)
        masses.append(microlocal_mass_outside(st, h ** (EPS2 / 3)))
    at12 = masses[SWEEP.index(2.0**-12)]
    monotone = all(b <= a for a, b in zip(masses, masses[1:]))
    dt = time.time() - t0
    ok = at12 <= 0.01 and monotone and dt < 60
    assert verdict(5, ok, f"mass outside at hbar=2^-12: {at12:.4f} (need <= 0.01); nonincreasing: {monotone} "
                          f"({', '.join(f'{m:.4f}' for m in masses)}), {dt:.1f}s")


# --- 6 -----------------------------------------------------------------------


def test_criterion_06_norm_asymptotics(verdict):
    t0 = time.time()
    chi = cutoff()
    S = s_function([LAM], 0.0, 1)
    oracle = abs(S - beta(0.25, 0.5) / LAM)
    plan = quadratic_plan(2.0**-12)
    devs = {}
    for T in (5.0, 10.0, 20.0, 40.0):
        avg = time_average(plan, chi, T)
        devs[T] = avg.norm_sq / (T * S * chi.l2_norm**2) - 1
    dt = time.time() - t0
    ok = oracle <= 1e-8 and all(abs(d) <= 3 / T for T, d in devs.items()) and dt < 60
    assert verdict(6, ok, f"S={S:.10f} (oracle err {oracle:.1e}); deviations "
                          + ", ".join(f"T={T:g}: {d:+.4f} (<= {3 / T:.3f})" for T, d in devs.items()) + f", {dt:.1f}s")


# --- 7 -----------------------------------------------------------------------


@lru_cache(maxsize=None)
def width_law():
    """Part 1 at T = |log hbar| (with T = T_eps as a diagnostic); part 2 at T = T_eps."""
    chi = cutoff()
    part1, part1_teps, part2 = [], [], []
    for h in SWEEP:
        plan = quadratic_plan(h)
        T = abs(np.log(h))
        part1.append(time_average(plan, chi, T).width() * T / (h * chi.ratio))
        part1_teps.append(time_average(plan, chi, plan.T_eps).width() * plan.T_eps / (h * chi.ratio))
        bound = width_constant(LAM, EPS2) * h / abs(np.log(h))
        for p in (plan, full_plan(h)):
            part2.append(time_average(p, chi, p.T_eps).width() / bound)
    return part1, part1_teps, part2


def criterion_07_ok():
    part1, _, part2 = width_law()
    return all(0.9 <= v <= 1.1 for v in part1) and all(v <= 1 for v in part2)


def test_criterion_07_width_law_and_constant(verdict):
    t0 = time.time()
    part1, part1_teps, part2 = width_law()
    dt = time.time() - t0
    ok = criterion_07_ok() and dt < 120
    assert verdict(7, ok, "law ratio at T=|log hbar|: [" + ", ".join(f"{v:.3f}" for v in part1)
                   + "] (need [0.9,1.1]); at T=T_eps: [" + ", ".join(f"{v:.3f}" for v in part1_teps)
                   + f"]; width/bound at T_eps max {max(part2):.3f} (need <= 1), {dt:.1f}s")


# --- 8 -----------------------------------------------------------------------


@lru_cache(maxsize=None)
def cylinder_sweep(L):
    cfg = CylinderConfig(L=L, epsilon1=0.5, epsilon2=EPS2, n_x=512)
    return tuple(cylinder_run(cfg, mode_for_hbar(L, h)) for h in CYLINDER_SWEEP)


def cylinder_ok(reports):
    return all(r.extra["ratio"] <= 1 and r.husimi_mass >= 0.95 and abs(r.E0 - 1) < 1e-12 for r in reports)


def test_criterion_08_cylinder_end_to_end(verdict):
    t0 = time.time()
    reps = cylinder_sweep(1.0)
    dt = time.time() - t0
    ok = cylinder_ok(reps) and dt < 600
    assert verdict(8, ok, "L=1: residual/(1.25 bound) ["
                   + ", ".join(f"{r.extra['ratio']:.3f}" for r in reps) + "] (need <= 1); Husimi mass min "
                   + f"{min(r.husimi_mass for r in reps):.6f} (need >= 0.95), {dt:.1f}s")


# --- 9 -----------------------------------------------------------------------


def test_criterion_09_partial_localization(verdict):
    t0 = time.time()
    C = width_constant(LAM, EPS2)
    eps3 = C / 4
    cfg = CylinderConfig(L=1.0, epsilon1=0.5, epsilon2=EPS2, n_x=512, epsilon3=eps3)
    rep = cylinder_run(cfg, mode_for_hbar(1.0, 2.0**-10))
    need = 0.9 * (eps3 / C) * PARTIAL_LOCALIZATION_FACTOR
    mass = rep.extra["retained_mass"]
    dt = time.time() - t0
    ok = mass >= need and dt < 120
    assert verdict(9, ok, f"retained mass {mass:.4f} (need >= {need:.4f}) at hbar={rep.hbar:.3g}, "
                          f"{rep.extra['levels_in_window']} level(s) in window, {dt:.1f}s")


# --- 10 ----------------------------------------------------------------------


def test_criterion_10_uniformity_in_length(verdict):
    t0 = time.time()
    per_L = {L: cylinder_sweep(L) for L in (1.0, 2.0, 5.0)}
    ok8 = {L: cylinder_ok(r) for L, r in per_L.items()}
    bounds_same = len({(r.extra["degree_cap"], r.extra["n_x"]) for reps in per_L.values() for r in reps}) == 1
    ratios = np.array([[r.extra["ratio"] for r in reps] for reps in per_L.values()])
    spread = float(np.max(ratios.max(axis=0) - ratios.min(axis=0)))
    ok7 = criterion_07_ok()
    dt = time.time() - t0
    ok = all(ok8.values()) and bounds_same and ok7 and dt < 1800
    assert verdict(10, ok, f"criterion 8 per L {ok8}; criterion 7 (L-independent): {'pass' if ok7 else 'fail'}; "
                           f"identical constants: {bounds_same}; max ratio spread across L {spread:.4f}, {dt:.1f}s")
