"""Mass of a Gaussian inside the unit disc through the Imhof integral."""
import numpy as np
from scipy import stats

from cdfm.mixtures import GeneralizedChiSq, MixingSpec, disc_probability, gchisq_cdf, sample_mixing

# a central chi-squared is a special case
g = GeneralizedChiSq(np.ones(2), np.zeros(2))
print("chi2_2 at 1:", gchisq_cdf(g, 1.0), "scipy:", stats.chi2.cdf(1.0, 2))

# P(|Y| <= 1) for Y ~ N(mu, Sigma), checked by Monte Carlo
mu, sigma = np.array([0.6, 0.2]), np.array([[0.09, 0.03], [0.03, 0.04]])
y = np.random.default_rng(0).multivariate_normal(mu, sigma, size=200_000)
print("disc mass", disc_probability(mu, sigma), "Monte Carlo", np.mean(np.sum(y**2, axis=1) <= 1))

# rejection sampler for the restricted normal
spec = MixingSpec.restricted_normal(mu, sigma)
draws = sample_mixing(spec, 5, np.random.default_rng(1))
print(np.round(draws, 3))
