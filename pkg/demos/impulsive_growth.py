"""Linear growth with multiplicative impulses, compared against the product formula.

Run: python demos/impulsive_growth.py
"""
import numpy as np

from hmde import SolverOptions, restrict_solution, solve_forward
from hmde import catalog as cat

taus = (0.2, 0.5, 0.8)
for step in (1e-2, 1e-3, 1e-4):
    spec, prob = cat.impulsive_linear(lam=1.0, beta=0.5, x0=1.0, a=1.0, taus=taus, options=SolverOptions(step=step))
    sol = solve_forward(prob).solution
    exact = cat.impulsive_oracle(sol.times, 1.0, 0.5, 1.0, taus)
    print(f"step {step:g}: sup error {np.max(np.abs(sol.value[:, 0] - exact)):.3e}")

tab = restrict_solution(sol, spec)
for tau, j in zip(tab["tau"], tab["jump"]):
    print(f"impulse at {tau}: size {j[0]:.6f}")
