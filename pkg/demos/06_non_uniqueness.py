# %% [markdown]
# # Why equal derivative weights fail
#
# With all unit weights the coefficients are mirror-symmetric about x = 1/2
# and the derivative condition cancels for symmetric fields. The homogeneous
# problem then has a nonzero solution, visible as a vanishing singular value.

# %%
import numpy as np

from parahyp import mms_case
from parahyp.verify import homogeneous_mode

for name in ("quadratic", "quadratic-twin"):
    for M in (16, 32, 64):
        mode = homogeneous_mode(mms_case(name).spec(M))
        print(f"{name:15s} M={M:3d}  sigma_min/sigma_max = {mode.ratio:.2e}")

# %%
mode = homogeneous_mode(mms_case("quadratic").spec(64))
x = np.linspace(0, 1, 65)
print("tau1 of the null mode vs (x^2 - x)/3:",
      np.max(np.abs(np.abs(mode.traces["tau1"]) - np.abs(x**2 - x) / 3)))
