"""Choose the number of communities with recursive SigClust."""
import numpy as np

from cdfm.estimation import pca_from_series
from cdfm.model import equidistant_means, restricted_normal_config, simulate_series
from cdfm.sigclust import choose_k

rng = np.random.default_rng(3)
cfg = restricted_normal_config(d=200, T=300, means=equidistant_means(3, 0.7), sigma=0.05,
                               normalize_errors=True)
draw = simulate_series(cfg, rng)
est = pca_from_series(draw.series, 2)

seed = int(rng.integers(2**32))


def show(node, depth=0):
    p = "-" if node.p_value is None else f"{node.p_value:.3f}"
    print("  " * depth + f"n={node.indices.size} p={p}")
    for child in node.children:
        show(child, depth + 1)


# at tau=0.30 roughly 30% of pure nodes are split again; a small tau is stricter
for tau in (0.05, 0.30):
    res = choose_k(est.loadings, tau=tau, n_sim=200, rng=np.random.default_rng(seed))
    print(f"tau={tau}: K hat {res.k_hat}")
    show(res.tree)
