# %% [markdown]
# # Grid refinement
#
# Max trace error against the manufactured field as M doubles.

# %%
from parahyp import mms_case
from parahyp.verify import convergence_study

table = convergence_study(mms_case("quadratic-twin"), [16, 32, 64, 128], residuals=False)
for name in ("tau1", "nu1", "phi1"):
    print(name, table.column(f"err_{name}"), "orders", table.orders(f"err_{name}"))
