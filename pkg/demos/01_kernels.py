# %% [markdown]
# # Heat kernels on the unit strip
#
# The square is handled through the Green's function of the heat equation
# with zero Dirichlet data on x = 0 and x = 1, built from a sum of images.

# %%
import numpy as np

from parahyp import kernels
from parahyp.kernels import KernelConfig

cfg = KernelConfig(8, 1e-14)

# %%
# the free-space kernel as seen from the left edge towards xi = 1
print(kernels.eval_n(0.0, 0.25, 1.0, 0.0, cfg))

# %%
# the Dirichlet kernel vanishes on both walls
x = np.array([0.0, 1.0])
print(kernels.eval_gbar(x, 0.3, 0.4, 0.0, cfg))

# %%
# image truncation: K=5 and K=10 already agree to roundoff at s = 1
a = kernels.eval_gbar(0.3, 1.0, 0.7, 0.0, KernelConfig(5, 1e-14))
b = kernels.eval_gbar(0.3, 1.0, 0.7, 0.0, KernelConfig(10, 1e-14))
print(a, b, abs(a - b))
