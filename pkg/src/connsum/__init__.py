"""connsum: numerical laboratory for low-energy resolvents and Riesz
transforms on two-ended model connected sums.

The model space glues a two-dimensional-end product R^2 x M_minus to a
higher-dimensional-end product R^{n_plus} x M_plus through a rotationally
symmetric neck, so every construction reduces to weighted one-dimensional
radial problems, one per separated-variables channel.
"""

__version__ = "0.1.0"
