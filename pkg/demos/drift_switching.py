"""Drift switching with Gaussian noise can still give a fat-tailed marginal.

y_n = 4 + e_n if y_{n-1} <= r, else -1 + e_n. Closed-form moments and ACF
are compared with one long simulated path, then the threshold is swept.
"""

import numpy as np

from tmasim import analytics, estimate, load_model, simulate_recursive
from tmasim.figures import fig1_rows

model = load_model("ex31")
c = analytics.ex31_constants(model.mu1, model.mu2, model.r)
print(f"P(y <= r) = {c.delta0:.6f}, beta = {c.beta:.6f}, lambda_1 = {c.lambda1:.6f}")

path = simulate_recursive(model, 10**6, seed=1)
mom = estimate.sample_moments(path)
sk, ku = analytics.ex31_skewness_kurtosis(model.mu1, model.mu2, model.r)
print(f"variance  {mom.variance:.4f} +- {mom.se['variance']:.4f}   exact {analytics.ex31_variance(c, 4, -1):.4f}")
print(f"skewness  {mom.skewness:.4f} +- {mom.se['skewness']:.4f}   exact {sk:.4f}")
print(f"kurtosis  {mom.kurtosis:.4f} +- {mom.se['kurtosis']:.4f}   exact {ku:.4f}")

acf = estimate.sample_acf(path, 6)
exact = analytics.ex31_acf(np.arange(1, 7), c, 4, -1)
for k in range(1, 7):
    print(f"lag {k}: sample {acf.rho_hat[k]: .4f}  exact {exact[k - 1]: .4f}")

# where does the marginal become leptokurtic?
rows = fig1_rows()
lepto = rows[:, 2] > 3
edges = np.flatnonzero(np.diff(lepto.astype(int))) + 1
for seg in np.split(np.arange(len(rows)), edges):
    if lepto[seg[0]]:
        print(f"kurtosis > 3 for r in [{rows[seg[0], 0]:.2f}, {rows[seg[-1], 0]:.2f}]")
print(f"largest kurtosis {rows[:, 2].max():.2f} at r = {rows[rows[:, 2].argmax(), 0]:.2f}")
