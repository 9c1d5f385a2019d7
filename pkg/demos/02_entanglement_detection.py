# %% [markdown]
# # Detecting entanglement with a structural physical approximation
#
# Transposition is positive but not completely positive. Mixing it with
# enough depolarizing noise gives a channel; applied to one half of a
# state, the least output eigenvalue drops below 2/9 only for entangled
# inputs.

# %%
import numpy as np

import loccest as lc

t2 = lc.transposition(2)
res = lc.spa(t2)
dec = lc.locc_spa(t2)
print("lambda", res.lam, "alpha", res.alpha)
print("LOCC alpha", dec.alpha, "beta", dec.beta, "slack", dec.feasibility())

# %%
# Werner sweep on the exact route.
for p in np.linspace(0, 1, 11):
    v = lc.detect_entanglement(lc.werner(p), t2)
    print(f"p={p:.1f}  min eig {v.min_eig:.4f}  threshold {v.threshold:.4f}  entangled {v.entangled}")

# %%
# The same decision from 10^5-shot moments. The bootstrap margin is wide
# at this budget, so the sampled route stays conservative.
via = lc.Interferometric(4, 10 ** 5, 0)
for p in (0.0, 0.5, 1.0):
    v = lc.detect_entanglement(lc.werner(p), t2, via)
    print(f"p={p:.1f}  min eig {v.min_eig:.4f} +- {v.std_error:.4f}  entangled {v.entangled}")

# %%
# Negativity and the channel indicator.
print("negativity singlet", lc.negativity(lc.singlet()), "werner 1/2", lc.negativity(lc.werner(0.5)))
for name, ch in (("identity", lc.identity_map(2)), ("depolarizing", lc.depolarizing(2))):
    r = lc.capacity_indicator(ch)
    print(name, r.max_eig, r.capacity_possible)
