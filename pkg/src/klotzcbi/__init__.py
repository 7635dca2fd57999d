"""Conservative Bayesian assessment of a pfd bound under dependent demands.

Failure-free operational testing is modelled with the Klotz two-state Markov
chain of Bernoulli trials.  Given a prior on the pfd and doubt masses on
negative and positive dependence, :func:`conservative_confidence` returns the
worst-case posterior confidence that the pfd is below a bound.
"""

from .cutpoints import CutPoints, classify_case, solve_cutpoints
from .engine import (AssessmentProblem, ConfidenceResult, DiscreteJointPrior, QBounds,
                     asymptotic_q_bounds, compute_q, conservative_confidence,
                     iid_posterior, iid_posterior_closed_form,
                     posterior_for_joint_prior, worst_case_prior)
from .errors import (DomainError, NonConvergence, PK4Violated, RegionError,
                     TargetOutOfRange, ZeroLikelihood)
from .gfunctions import GFunctions
from .klotz import (KlotzParams, in_region, likelihood_ff, log_likelihood_ff,
                    simulate_chain, simulate_chains, transition_probs)
from .priors import BetaPrior, PiecewisePrior, Prior, parse_prior, prior_from_config

__all__ = [
    "AssessmentProblem", "BetaPrior", "ConfidenceResult", "CutPoints",
    "DiscreteJointPrior", "DomainError", "GFunctions", "KlotzParams",
    "NonConvergence", "PK4Violated", "PiecewisePrior", "Prior", "QBounds",
    "RegionError", "TargetOutOfRange", "ZeroLikelihood",
    "asymptotic_q_bounds", "classify_case", "compute_q", "conservative_confidence",
    "iid_posterior", "iid_posterior_closed_form", "in_region", "likelihood_ff",
    "log_likelihood_ff", "parse_prior", "posterior_for_joint_prior",
    "prior_from_config", "simulate_chain", "simulate_chains", "solve_cutpoints",
    "transition_probs", "worst_case_prior",
]

__version__ = "0.1.0"
