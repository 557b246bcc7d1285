# %% [markdown]
# # Growing boxes
#
# Normalising the box distances by |Lambda|^(1/p) gives sequences that
# converge as the box grows, and the limit no longer depends on p. For
# product laws every term already equals the single-site total variation.
# For Markov chains the values at different p start apart and draw together.

# %%
from latgcb import INF, ProcessSpec
from latgcb.thermo import dbar_sandwich, limit_sequence, p_independence_check

a, b = ProcessSpec.bernoulli(0.5), ProcessSpec.bernoulli(0.2)
print(limit_sequence(a, b, 2, 4).normalized)

slow = ProcessSpec.markov([[0.9, 0.1], [0.1, 0.9]])
fast = ProcessSpec.markov([[0.7, 0.3], [0.3, 0.7]])
rep = p_independence_check(slow, fast, [1, 2, INF], 4)
for p, seq in rep.sequences.items():
    print(p, [round(v, 5) for v in seq.normalized])
print("spread per n", [round(s, 5) for s in rep.per_n_spread])

# %% [markdown]
# The p = 1 limit is the d-bar distance. Box values bound it from below and a
# stationary coupling run bounds it from above.

# %%
res = dbar_sandwich(slow, fast, n_max=3, mc_steps=200_000)
print(res.to_json())
