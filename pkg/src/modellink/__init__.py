"""Greedy model-linkage selection for cooperative Bayesian learners."""
from .estimator import LinkageSelector, TiedBayesianModel
from .exceptions import *  # noqa: F401,F403
from .graph import (
    LinkageEdge,
    LinkageGraph,
    TiedParameterSpace,
    build_graph,
    connected_component,
    load_graph,
    neighbors,
    tie_parameters,
)
from .inference import (
    FitResult,
    Learner,
    MarginalCache,
    conditional_log_marginal,
    fit_map,
    log_marginal_exact_gaussian,
    log_marginal_laplace,
)
from .models import (
    BinomialRates,
    Dataset,
    Gamma,
    Gaussian,
    GaussianLinear,
    InvGamma,
    Logistic,
    PoissonScaledRate,
    TruthSpec,
    Uniform01,
    simulate,
)
from .predictive import posterior_predictive
from .scoring import efficiency_ratio, score
from .selection import SelectionResult, exhaustive_select, greedy_select

__version__ = "0.1.0"
