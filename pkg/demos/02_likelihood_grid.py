"""How the Dirichlet scale s pulls memberships between crisp and centred.

Evaluates the unified joint log likelihood for a single point x lying half way
between two unit-variance topics and reports where the membership z1 peaks
for each scale s and fuzzifier m. Small s pushes the peak to a vertex; large
s drags it to the proportion pi = 0.5.
"""

import numpy as np

from pmlda.blend import TopicParams
from pmlda.unified import GridSpec, UnifiedHyper, grid_argmax_z, likelihood_grid

spec = GridSpec()
topics = TopicParams(np.array([[0.0], [1.0]]), 1.0)
grid = likelihood_grid(spec, topics, UnifiedHyper([1.0, 1.0], 1.0), [0.5, 0.5])

print(f"grid shape (m, s, x, z): {grid.shape}")
print("argmax z1 at x = 0.5")
print("   m \\ s " + "".join(f"{s:7.1f}" for s in spec.s_values))
for m in spec.m_values:
    row = [grid_argmax_z(grid, spec, m, s, 0.5) for s in spec.s_values]
    print(f"{m:8.1f} " + "".join(f"{v:7.2f}" for v in row))
