# %% [markdown]
# # Moments and spectra from the interferometer
#
# Two labs share rho. Each prepares k copies of its half, runs the
# controlled-shift network and reports one bit per shot. The signed
# combination of the four joint frequencies estimates tr rho^k.

# %%
import numpy as np

import loccest as lc

rho = lc.werner(0.8)
print("dims", rho.dims, "trace", np.trace(rho.matrix).real)

# %%
# Exact readout: joint outcome probabilities and the moment they encode.
for k in (2, 3, 4):
    table = lc.joint_probs(rho, k)
    print(k, np.round(table.as_array(), 4), lc.moment_from_probs(table), lc.moment_direct(rho, k))

# %%
# Finite statistics: 10^5 shots for k = 2.
rec = lc.sample_shots(lc.joint_probs(rho, 2), 10 ** 5, seed=0)
est = lc.estimate_from_counts(rec)
print("counts", rec.counts().tolist())
print(f"tr rho^2 = {est.moment:.4f} +- {est.std_error:.4f}  (exact {lc.purity(rho):.4f})")

# %%
# Spectrum from the first four moments, exact and sampled.
exact = lc.spectrum_from_state(rho, "exact")
sampled = lc.spectrum_from_state(rho, lc.Interferometric(4, 10 ** 6, 0))
print("exact  ", np.round(exact.eigenvalues, 5))
print("sampled", np.round(sampled.eigenvalues, 5))
print("entropy", lc.entropy(exact.eigenvalues), lc.entropy(sampled.eigenvalues))
