"""Companion networks for point predictions and prediction intervals.

A point network is fit on MSE; a second network with the same hidden layers
learns the interval bounds under a width-plus-coverage loss whose balancing
coefficient adapts every epoch. Monte Carlo dropout averages both at
inference time.
"""

__version__ = "0.1.0"

from .data import Dataset, SyntheticSpec, generate_synthetic, ideal_bounds, load_csv
from .exceptions import ConfigurationError, DataError, NumericOverflowError, TrainingError
from .experiments import compare_methods, cross_validate, cross_validate_methods, grid_search_alpha
from .inference import PiTriple, mc_aggregate, mcdropout_pi
from .nn import Mlp
from .training import TrainConfig, select_solution, train_pi_network, train_point_network

__all__ = [
    "ConfigurationError", "DataError", "Dataset", "Mlp", "NumericOverflowError", "PiTriple",
    "SyntheticSpec", "TrainConfig", "TrainingError", "compare_methods", "cross_validate",
    "cross_validate_methods", "generate_synthetic", "grid_search_alpha", "ideal_bounds",
    "load_csv", "mc_aggregate", "mcdropout_pi", "select_solution", "train_pi_network",
    "train_point_network",
]
