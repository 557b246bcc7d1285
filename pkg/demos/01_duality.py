# %% [markdown]
# # Couplings against test functions
#
# For two laws on a small box of spins there are two ways to say how far
# apart they are. One looks at couplings and measures the vector of per-site
# disagreement probabilities in an l^p norm. The other looks at test functions
# whose oscillation vector has l^q norm at most one. This script computes both
# and shows that they meet.

# %%
import numpy as np

from latgcb import INF, ConfigSpace, Measure, Volume, d_p, q_p

rng = np.random.default_rng(0)
space = ConfigSpace(Volume.interval(0, 3), 2)
mu = Measure.normalized(space, rng.dirichlet(np.ones(space.n_states)))
nu = Measure.normalized(space, rng.dirichlet(np.ones(space.n_states)))

# %% [markdown]
# `q_p` returns a bracket. The upper end is the norm of an actual coupling and
# the lower end is a weighted transport value, so the true infimum is pinned
# between them. `d_p` does the same from the function side and hands back the
# function that attains its value.

# %%
for p in (1, "3/2", 2, 5, INF):
    cert = q_p(mu, nu, p)
    ipm = d_p(mu, nu, p)
    print(f"p={p!s:>4}  Q in [{cert.value_lower:.10f}, {cert.value_upper:.10f}]"
          f"  D >= {ipm.value:.10f}  gap {cert.value_upper - ipm.value:.1e}")

# %% [markdown]
# The disagreement vector of the returned coupling, per site. Nothing forces
# one coupling to be optimal for every p, but on small boxes it often is.

# %%
for p in (1, 2, INF):
    print(p, np.round(q_p(mu, nu, p).m, 4))
