"""Gap profiles |x(t+1) - x(t)| for the piecewise linear generator and a long-horizon solve.

Run: python demos/sap_profiles.py
"""
from hmde import HorizonProblem, SolverOptions, chain_solve, generate_example_path, sap_profile
from hmde import catalog as cat

for name in ("harmonic", "inverse_square", "alternating"):
    path = generate_example_path(cat.example_4x_sequence(name), 32)
    prof = sap_profile(path, 1.0, windows=4, eps=1e-2)
    sups = ", ".join(f"{s:.2e}" for s in prof.window_sup)
    print(f"{name:15s} window sups [{sups}]  SAP: {prof.is_sap}")

prob = cat.damped_horizon(H=16, options=SolverOptions(step=0.02))
sol = chain_solve(HorizonProblem(prob, 1.0)).solution
prof = sap_profile(sol, 1.0, windows=5, eps=1e-3)
print("damped horizon window sups:", ", ".join(f"{s:.2e}" for s in prof.window_sup))
