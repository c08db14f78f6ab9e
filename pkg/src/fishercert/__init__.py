"""Certified Wasserstein and total-variation error bounds for approximate posteriors.

The bounds only need gradients of log densities, so intractable normalizing
constants never enter.
"""

__version__ = "0.1.0"
