"""Permute-and-Predict and Leave-One-Covariate-Out importance under collinearity.

Data generation from a latent-variable collinearity model, empirical PaP/LOCO
for linear and random-forest predictors, the closed-form expressions they are
compared against, and the Monte Carlo harness that ties them together.
"""

from vimp.datagen import DataSpec, Dataset, generate, generate_pair, make_transform, permute_column
from vimp.errors import VimpError
from vimp.linmodel import LinearFit, fit, mse, predict, t_statistics
from vimp.theory import TheoryPoint

__all__ = [
    "DataSpec",
    "Dataset",
    "LinearFit",
    "TheoryPoint",
    "VimpError",
    "fit",
    "generate",
    "generate_pair",
    "make_transform",
    "mse",
    "permute_column",
    "predict",
    "t_statistics",
]

__version__ = "0.1.0"
