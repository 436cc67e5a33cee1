"""Muscle synergy extraction with constrained Tucker decomposition, NMF
baselines and ridge-regression glove reconstruction."""

__version__ = "0.1.0"

from .errors import ArgumentError, DataError, NumericError, SchemaError, SynrgError, UndefinedMetricError
from .tensor import explained_variance, fold, khatri_rao, lstsq, mode_n_product, unfold
from .tucker import FitConfig, TuckerModel, constd_fit, project_test, shared_synergy_core, unconstrained_tucker_fit
from .nmf import SynergyFactorization, nmf_fit, project_controls, snmf_fit
from .ridge import RidgeModel, cv_optimize_k, r_squared, ridge_fit
from .stats import welch_t_test
