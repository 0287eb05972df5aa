"""Causal discovery for multivariate time series with a transfer-entropy
feature filter in front of PCMCI (F-PCMCI)."""

__version__ = "0.1.0"

from .citest import CITestResult, ols_residuals, parcorr_test
from .dataset import DataError, TimeSeriesDataset, load_csv, save_csv, standardize
from .hrsi import InteractionSpec, Trajectory, extract_features
from .pcmci import (DiscoveryConfig, LaggedEdge, LaggedGraph, ParentSet, mci_links,
                    pc1_parents, run_fpcmci, run_pcmci)
from .synth import Metrics, SCMSpec, evaluate_graph, random_scm, simulate
from .te import (CandidateLink, FilterConfig, FilterResult, binned_te, gaussian_te,
                 select_features, surrogate_pvalue)

__all__ = [
    "CITestResult", "ols_residuals", "parcorr_test",
    "DataError", "TimeSeriesDataset", "load_csv", "save_csv", "standardize",
    "InteractionSpec", "Trajectory", "extract_features",
    "DiscoveryConfig", "LaggedEdge", "LaggedGraph", "ParentSet", "mci_links",
    "pc1_parents", "run_fpcmci", "run_pcmci",
    "Metrics", "SCMSpec", "evaluate_graph", "random_scm", "simulate",
    "CandidateLink", "FilterConfig", "FilterResult", "binned_te", "gaussian_te",
    "select_features", "surrogate_pvalue",
]
