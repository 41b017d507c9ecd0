"""A network VAR on a stochastic block model and its factor-model rewrite."""
import numpy as np

from cdfm._linalg import numerical_rank
from cdfm.model import Membership
from cdfm.netvar import (WsbmVarConfig, cdfm_rewrite, empirical_c_values, sample_wsbm,
                         simulate_wsbm_var, weak_factor_table)

rng = np.random.default_rng(6)
mem = Membership(np.repeat([0, 1], [40, 60]), 2)
cfg = WsbmVarConfig(mem, B=[[0.5, 0.05], [0.05, 0.4]], phi=0.9, weight_low=0.5, weight_high=1.5)

A, deg = sample_wsbm(cfg, rng)
Y, psi = simulate_wsbm_var(cfg, 300, rng, adjacency=(A, deg))
print("series", Y.shape)

avg = cdfm_rewrite(cfg, empirical_c_values(deg, mem))
print("rank of averaged transition", numerical_rank(avg.psi_bar))
print("loadings Gram\n", np.round(avg.gram, 5))
print("factor transition\n", np.round(avg.phi_mat, 4))

# trace(L'L) stays bounded as d grows: very weak factors
for row in weak_factor_table([0.4, 0.6], [[0.5, 0.05], [0.05, 0.4]], 0.9, [100, 400, 1600]):
    print(row)
