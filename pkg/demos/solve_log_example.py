"""Solve the logarithmic example on [0, 1], with and without a jump in g.

Run: python demos/solve_log_example.py
"""
from hmde import SolverOptions, certificate_A, eval_path, solve_forward
from hmde import catalog as cat

for jumps in ([], [(0.5, 0.25)]):
    prob = cat.example_3x(gamma=1.0, eta=1.0, x0=0.0, jumps=jumps, options=SolverOptions(step=1e-3))
    rep = solve_forward(prob)
    x = rep.solution
    print(f"jumps={jumps}")
    print(f"  residual {rep.residual:.2e} after {rep.sweeps} sweep(s)")
    for t in (0.25, 0.5, 0.75, 1.0):
        print(f"  x({t}) = {eval_path(x, t)[0]:.6f}")
    if jumps:
        i = x.grid.index_of(0.5)
        print(f"  x(0.5+) - x(0.5) = {x.right[i, 0] - x.value[i, 0]:.6f}")

cert = certificate_A(cat.example_3x())
print(f"a priori bound: N = {cert.N}, margin {cert.margin:.3f}")
