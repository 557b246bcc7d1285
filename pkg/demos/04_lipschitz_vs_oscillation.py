# %% [markdown]
# # Why oscillations and not a metric
#
# g_L = sqrt(|sum of 2L+1 fair spins|) has a bounded Lipschitz constant for
# the square root of the Hamming distance. Its centred log-moment still grows
# without bound, so no Gaussian bound in terms of that Lipschitz constant can
# hold uniformly in L. The oscillation bound is fine: ||delta g_L||_2^2 grows
# linearly and stays ahead.

# %%
from latgcb.counterexamples import lip_cost_gap, mcdiarmid_contrast

for L in (10, 100, 1000, 10_000):
    r = mcdiarmid_contrast(L)
    print(f"L={L:>6}  Lip2={r.lip2:.4f}  log-moment={r.log_moment:.4f}"
          f"  /L^(1/4)={r.ratio_to_L_quarter:.4f}  oscillation bound={r.mcdiarmid_rhs:.1f}")

# %% [markdown]
# A second family: scaled magnetisations with unit l^p oscillation norm whose
# extreme values drift apart like |Lambda|^(1/q).

# %%
for n in range(5):
    g = lip_cost_gap(n, 2)
    print(n, g.extreme_gap, g.closed_form, g.verified)
