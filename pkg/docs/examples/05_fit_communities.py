"""Fit restricted normals to each community by likelihood and by NCE."""
import numpy as np

from cdfm.fitting import fit_errors, fit_mle, fit_nce
from cdfm.mixtures import MixingSpec, sample_mixing

rng = np.random.default_rng(5)
truth = MixingSpec.restricted_normal([0.3, 0.1], 0.04)
y = sample_mixing(truth, 2000, rng)

mle = fit_mle(y, rng=rng)
nce = fit_nce(y, rng)
for name, fit in (("mle", mle), ("nce", nce)):
    err = fit_errors([fit], [truth.mu], 0.04)
    print(name, "mean", np.round(fit.mu_hat, 3), "variances", np.round(np.diag(fit.sigma_hat), 4),
          "mean error", round(err["avg_mean_error"], 4))
print("NCE constant c", round(nce.c_hat, 3))
