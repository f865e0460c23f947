"""Width law in the quadratic model: dependence on the averaging time T, and the bound at T_eps.

The ratio width * T / (hbar * ||chi'||/||chi||) does not depend on hbar in the
quadratic model, so it is tabulated against T; the hbar sweep then shows the
ratio at T = |log hbar| and T = T_eps, and width / (pi lam (1+3 eps2) hbar/|log hbar|).

Usage: python3 scripts/width_law.py
"""

import numpy as np

from scarmodes.birkhoff import quadratic_normal_form
from scarmodes.propagation import EvolutionPlan
from scarmodes.quasimode import make_cutoff, time_average, width_constant

EPS2, LAM = 0.3, 2.0


def plan_for(h):
    nf = quadratic_normal_form([LAM], h, 8)
    return EvolutionPlan(nf.lam, nf, 2, EPS2)


def main():
    chi = make_cutoff(EPS2)
    print(f"# cutoff: a={chi.a}, delta={chi.delta:.4f}, ratio={chi.ratio:.6f} (target {(1 + EPS2) * np.pi / 2:.6f})")
    plan = plan_for(2.0**-10)
    print("T,law_ratio")
    for T in (1, 2, 3, 5, 7, 10, 15, 20, 30, 40):
        w = time_average(plan, chi, T).width()
        print(f"{T},{w * T / (plan.hbar * chi.ratio):.5f}")
    print("hbar,T_eps,law_ratio_logT,law_ratio_Teps,width_over_bound")
    for k in range(8, 14):
        h = 2.0**-k
        p = plan_for(h)
        T = abs(np.log(h))
        r1 = time_average(p, chi, T).width() * T / (h * chi.ratio)
        w = time_average(p, chi, p.T_eps).width()
        r2 = w * p.T_eps / (h * chi.ratio)
        bound = width_constant(LAM, EPS2) * h / abs(np.log(h))
        print(f"{h:.6g},{p.T_eps:.4f},{r1:.4f},{r2:.4f},{w / bound:.4f}")


if __name__ == "__main__":
    main()
