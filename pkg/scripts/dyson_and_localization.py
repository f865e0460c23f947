"""Dyson-remainder slopes and Ehrenfest-time localization along the dyadic hbar sweep.

Prints per-hbar errors at t = T_eps and at a fixed time t = 1, the fitted
log-log slopes, the predicted slope (l+1)(1 - 1/|log hbar|) averaged over the
sweep, and the anti-Wick mass outside hbar^(eps2/3) next to the Gaussian
tail prediction for the squeezed ground state.

Usage: python3 scripts/dyson_and_localization.py
"""

import numpy as np
from scipy.special import erfc

from scarmodes.birkhoff import default_degree_cap, quantum_bnf, transverse_symbol
from scarmodes.propagation import EvolutionPlan, dyson_error, evolve_full, microlocal_mass_outside

EPS2, LAM = 0.3, 2.0


def main():
    N = default_degree_cap(EPS2)
    sym = transverse_symbol(1.0, 1, N + 2)
    hs = [2.0**-k for k in range(8, 14)]
    rows = []
    print("hbar,T_eps,err_l1,err_l2,err_l3,err_l2_t1,mass_outside,gaussian_tail")
    for h in hs:
        nf = quantum_bnf(sym, [LAM], N, h, 64, with_remainder=False)
        plan = EvolutionPlan(nf.lam, nf, 2, EPS2)
        T = plan.T_eps
        errs = [dyson_error(plan, T, l) for l in (1, 2, 3)]
        fixed = dyson_error(plan, 1.0, 2)
        mass = microlocal_mass_outside(evolve_full(plan, T), h ** (EPS2 / 3))
        sigma = np.sqrt(h / 2 * (np.exp(2 * LAM * T) + 1))
        tail = erfc(h ** (EPS2 / 3) / (np.sqrt(2) * sigma))
        rows.append((h, errs, fixed))
        print(f"{h:.6g},{T:.4f},{errs[0]:.4e},{errs[1]:.4e},{errs[2]:.4e},{fixed:.4e},{mass:.5f},{tail:.5f}")
    logs = np.log(hs)
    for i, l in enumerate((1, 2, 3)):
        s = np.polyfit(logs, np.log([r[1][i] for r in rows]), 1)[0]
        pred = np.polyfit(logs, (l + 1) * (logs + np.log(np.abs(logs))), 1)[0]
        print(f"# l={l}: slope at T_eps {s:.3f}, (hbar|log hbar|)^(l+1) predicts {pred:.3f}")
    s_fixed = np.polyfit(logs, np.log([r[2] for r in rows]), 1)[0]
    print(f"# l=2 at fixed t=1: slope {s_fixed:.3f}")


if __name__ == "__main__":
    main()
