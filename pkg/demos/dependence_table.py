"""Solution gaps for perturbed families as the perturbation index k grows.

Run: python demos/dependence_table.py
"""
from hmde import SolverOptions, dependence_run, hypothesis_check
from hmde import catalog as cat

opts = SolverOptions(step=1e-2)
for family in ("x0_shift", "sin_forcing"):
    seq = cat.dependence_family(family, 16, options=opts)
    tab = dependence_run(seq)
    rep = hypothesis_check(seq)
    print(f"{family}: monotone fraction {tab.monotone_fraction:.2f}, C = {rep.C:.4f} (limit {rep.C_limit:.4f})")
    for k, gap in zip(tab.k[::3], tab.gaps[::3]):
        print(f"  k={k:2d}  gap {gap:.3e}")
    print("  hypotheses:", ", ".join(f"{k}={'ok' if v else 'no'}" for k, v in rep.passed.items()))
