"""Blending Gaussian topics in natural-parameter space.

A word with partial membership z is drawn from a single Gaussian whose
natural parameters are the z-weighted combination of the topics'. This
script shows that the result stays Gaussian and how the fuzzifier m
sharpens the blend.
"""

import numpy as np

from pmlda.blend import TopicParams, blend_natural, fdl_normalizer, log_blend_pdf, log_product_form

topics = TopicParams(np.array([[0.0], [1.0]]), 1.0)

print("Blend of N(0,1) and N(1,1) as the membership moves across the simplex")
print(" z1    m=1 mean   m=2 mean   m=5 mean")
for z1 in (0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
    z = [z1, 1 - z1]
    means = [blend_natural(z, topics, m).mean[0] for m in (1, 2, 5)]
    print(f"{z1:4.1f}  " + "  ".join(f"{v:9.4f}" for v in means))

# The weighted product of topic densities differs from the blended density
# only by a constant, which is what keeps the blend in the Gaussian family.
z = [0.3, 0.7]
gap = [log_product_form([x], z, topics) - log_blend_pdf([x], z, topics) for x in (-3, -1, 0, 1, 3)]
print("\nlog product - log blend at five x values:", np.round(gap, 12))
print("normaliser of the unnormalised-weight product:", fdl_normalizer(z, topics, 2.0))
