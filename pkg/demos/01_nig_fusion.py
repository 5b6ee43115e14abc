# ### Fusing normal-inverse-gamma opinions
#
# A NIG distribution over the mean and variance of a Gaussian is described
# by four numbers: a location `delta`, a pseudo-count `v` for the mean, and
# the shape `alpha` and scale `beta` of the variance prior. Two such opinions
# combine into one whose pseudo-counts add up, so the combined mean becomes
# more certain while disagreement between the two locations shows up as
# extra noise.

import numpy as np

from evifuse.nig import (NIGParams, aleatoric, constrain, epistemic, nig_average, nig_fuse,
                         nig_fuse_n, predictive_interval)

a = NIGParams(0.0, 1.0, 2.0, 1.0)
b = NIGParams(2.0, 1.0, 2.0, 1.0)
ab = nig_fuse(a, b)
print("a + b =", ab.astuple())
print("aleatoric", aleatoric(ab), "epistemic", epistemic(ab))

# ### Agreement versus disagreement
#
# Fusing an opinion with itself doubles the evidence and leaves the location
# alone. Pulling the two locations apart leaves `v` and `alpha` unchanged
# but inflates `beta`.

for gap in (0.0, 0.5, 1.0, 2.0, 4.0):
    fused = nig_fuse(a, NIGParams(gap, 1.0, 2.0, 1.0))
    lo, hi = predictive_interval(fused)
    print(f"gap {gap:3.1f}: beta {fused.beta:6.3f}  aleatoric {aleatoric(fused):6.3f}  "
          f"95% width {hi - lo:6.3f}")

# ### More views, less epistemic uncertainty
#
# The variance of the mean shrinks as identical views pile up.

for k in (1, 2, 4, 8, 16):
    print(k, "copies -> epistemic", round(epistemic(nig_fuse_n([a] * k)), 5))

# ### Order does not matter
#
# The fused location is the pseudo-count weighted mean and `beta` collects the
# weighted spread around it, so any fold order gives the same answer.

rng = np.random.default_rng(0)
views = [constrain(rng.normal(size=4)) for _ in range(4)]
print(nig_fuse_n(views).astuple())
print(nig_fuse_n(views[::-1]).astuple())

# ### Averaging instead of fusing
#
# Averaging keeps the evidence level of the inputs.

print(nig_average([a, b]).astuple())
