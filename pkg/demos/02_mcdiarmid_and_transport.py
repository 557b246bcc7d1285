# %% [markdown]
# # Fair coins: exponential moments and entropy
#
# For independent fair coins McDiarmid's inequality gives
# log E exp(f - Ef) <= (1/8) sum_i (delta_i f)^2. Written as (C/2)||delta f||_2^2
# the constant is C = 1/4. The matching transport statement bounds the
# coupling distance by sqrt(2 C H(nu|mu)). We check both on sampled laws and
# then break the transport side by asking for a smaller constant.

# %%
from latgcb import ProcessSpec, Volume, realize
from latgcb.gcb import characterization_check, edi_check, optimal_constant

spec = ProcessSpec.bernoulli(0.5)
vols = [Volume.interval(0, n) for n in (1, 2, 3)]
for size, res in characterization_check(spec, 0.25, vols, trials=100).items():
    print(size, res["transport"].to_json()["violations"], res["gcb"].max_ratio)

# %% [markdown]
# The best constant a search can certify on a single coin is 1/4, reached
# in the small-amplitude limit.

# %%
mu = realize(spec, Volume.interval(0, 2))
oc = optimal_constant(mu)
print("certified constant", oc.C_lower)

# %% [markdown]
# With C = 0.1 the inequality fails. Tilting mu along the near-optimal
# function found above produces the counterexamples.

# %%
rep = edi_check(mu, 0.1, 2, trials=40, directions=(oc.witness,))
print("violations", len(rep.violations), "of", len(rep.rows))
print(rep.violation_rows()[:3])
