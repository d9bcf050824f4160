"""A TMA(1) whose delay exceeds its order keeps the MA(1) cut-off.

With d = 2 > q = 1 the lag-1 correlation depends on the stationary regime
probability, but every correlation beyond lag 1 vanishes.
"""

import math

from tmasim import analytics, estimate, load_model, simulate_recursive

model = load_model("ex32")
varrho, _ = analytics.ex32_varrho(0.2, 0.8, model.r)
rho1 = analytics.ex32_acf(1, 0.2, 0.8, varrho)
print(f"stationary P(y <= r) = {varrho:.6f}, lag-1 autocorrelation = {rho1:.6f}")

n = 10**6
rep = estimate.sample_acf(simulate_recursive(model, n, seed=3), 10)
for k in range(1, 11):
    flag = "" if k == 1 or abs(rep.rho_hat[k]) < 3 / math.sqrt(n) else "  <- outside 3/sqrt(n)"
    print(f"lag {k:2d}: {rep.rho_hat[k]: .5f}{flag}")
