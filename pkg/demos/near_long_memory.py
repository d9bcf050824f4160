"""Strong feedback: a stationary TMA(1) whose sample ACF barely decays.

y_n = 5 + e_n + 0.2 e_{n-1} below the threshold 0.5 and -3 + e_n + 0.8 e_{n-1}
above it. The process flips regime almost every step, so the ACF alternates
in sign while its magnitude decays very slowly.
"""

from tmasim import contraction_delta, estimate, load_model
from tmasim.figures import fig2_report

model = load_model("eq31")
delta = contraction_delta(model)
print(f"delta = {delta.value:.5f} +- {delta.se:.1e} (m = {model.m})")

rep = fig2_report(seed=0, n=10**4, max_lag=20)
print(f"white-noise band +-{rep.band:.3f}")
for k in (1, 2, 5, 10, 19, 20):
    print(f"lag {k:2d}: {rep.rho_hat[k]: .3f}")

fit = estimate.fit_decay(rep)
print(f"|rho_k| decays like {fit.rate:.4f}**k (r2 = {fit.r2:.3f})")
