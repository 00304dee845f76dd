# %% [markdown]
# # Manufactured solutions
#
# Each catalog entry is an exact piecewise field: linear in each wave
# triangle, a heat solution in the square, glued in C^1 across the lines.

# %%
import numpy as np

from parahyp import mms_catalog

for case in mms_catalog():
    print(f"{case.name:16s} c = ({case.c[0]}, {case.c[1]}, {case.c[2]})  {case.description}")

# %%
case = mms_catalog()[2]
s = np.linspace(0, 1, 5)
print("tau1", case.exact["tau1"](s))
print("nu1 ", case.exact["nu1"](s))
print("u in the square at (0.5, 0.5):", case.u[0](0.5, 0.5))
