# %% [markdown]
# # The two-lab protocol
#
# A referee holds the shared state and hands each party only its own
# outcome bits. The parties exchange messages over a transport and each
# computes the moment from its own bits plus what it received.

# %%
import loccest as lc

rho = lc.werner(0.45)
tr = lc.run_protocol(rho, k=2, shots=2000, seed=7)
print(tr.estimates.to_dict())
print("messages", len(tr.messages), "first", tr.messages[0].to_dict())

# %%
# Batched exchange over the line transport and a different interleaving
# gives the same estimates.
tr_line = lc.run_protocol(rho, 2, 2000, 7, lc.line_protocol(), "batched", "random:3")
print(tr_line.estimates == tr.estimates)

# %%
# A transcript can be replayed from its messages alone.
counts, replayed = tr.replay()
print(replayed == tr.estimates, counts.counts().tolist())

# %%
# Full spectrum from one run per moment order.
est, transcripts = lc.run_spectrum_protocol(rho, 4, 20_000, seed=0)
print(est.eigenvalues, [t.k for t in transcripts])
