"""Simulate a three-community panel, estimate loadings by PCA and cluster them."""
import numpy as np

from cdfm.clustering import kmeans, misclustering_rate, separation_stats, theorem_bound
from scipy.linalg import orthogonal_procrustes

from cdfm.estimation import pca_from_series
from cdfm.model import equidistant_means, restricted_normal_config, simulate_series

rng = np.random.default_rng(1)

# K=3 restricted normals at equidistant means on a circle of radius m
means = equidistant_means(3, 0.6)
cfg = restricted_normal_config(d=300, T=400, means=means, sigma=0.15, normalize_errors=True)
draw = simulate_series(cfg, rng)
print("panel", draw.series.shape, "community sizes", draw.membership.sizes)

# PCA on the sample correlation matrix, r=2
est = pca_from_series(draw.series, 2)
# equidistant means leave the rotation unidentified, so align by Procrustes
R, _ = orthogonal_procrustes(est.loadings, draw.loadings)
eps = float(np.max(np.linalg.norm(est.loadings @ R - draw.loadings, axis=1)))
print("largest eigenvalues", np.round(est.eigenvalues, 2), "max row error", round(eps, 3))

# k-means++ then Lloyd
res = kmeans(est.loadings, 3, rng, n_init=10, z_true=draw.membership.z)
print("iterations", res.iterations, "misclustering per step", np.round(res.misclustering_history, 3))
print("final misclustering", misclustering_rate(res.labels, draw.membership.z))

# separation diagnostics and the theoretical bound
stats = separation_stats(means, draw.membership.sizes, sigma=0.15, eps=eps)
print("rho_sigma", round(stats.rho_sigma, 2), "rho_eps", round(stats.rho_eps, 2))
print("bound", theorem_bound(stats)["bound"])
