# %% [markdown]
# # Solving for the traces
#
# The quadratic field with the weights c1 = 2, c2 = 1 in the derivative
# condition. The unknowns are the characteristic data on the master grid.

# %%
import numpy as np

from parahyp import mms_case, solve_problem, validate_problem

case = mms_case("quadratic-twin")
sol = solve_problem(validate_problem(case.spec(M=64)))
print("condition number", sol.diagnostics["cond"])

# %%
s = np.linspace(0, 1, 65)
for name in ("tau1", "nu1", "tau2", "nu2", "tau3", "nu3"):
    err = np.max(np.abs(getattr(sol.traces, name).values - case.exact[name](s)))
    print(f"{name:5s} max error {err:.2e}")
