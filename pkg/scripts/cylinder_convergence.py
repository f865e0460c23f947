"""End-to-end cylinder residuals for L in {1, 2, 5} with a transverse grid-doubling check.

Usage: python3 scripts/cylinder_convergence.py
"""

import time

from scarmodes.fermi_model import CylinderConfig, cylinder_run, mode_for_hbar


def main():
    print("L,hbar,k,n_s,ratio,husimi_mass,ratio_2x_nx,rel_change")
    t0 = time.time()
    for L in (1.0, 2.0, 5.0):
        for j in range(8, 12):
            k = mode_for_hbar(L, 2.0**-j)
            rep = cylinder_run(CylinderConfig(L=L, n_x=512), k)
            fine = cylinder_run(CylinderConfig(L=L, n_x=1024), k)
            change = abs(fine.residual - rep.residual) / rep.residual
            print(f"{L:g},{rep.hbar:.6g},{k},{rep.extra['n_s']},{rep.extra['ratio']:.6f},"
                  f"{rep.husimi_mass:.8f},{fine.extra['ratio']:.6f},{change:.2e}")
    print(f"# elapsed {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
