"""Likelihood-free inference for the spatial dependence of Schlather max-stable fields."""
from ._backend import NAME as BACKEND
from .abc import (PosteriorSample, PriorSpec, abc_adaptive, abc_rejection, credible_band,
                  posterior_mean_curve)
from .corrfuncs import CorrelationModel, Family, ParamPoint, bessel_k, correlation, extremal_coeff_pair
from .design import BlockMaximaPanel, MarginScale, SpatialDesign
from .errors import ExtremeABCError
from .margins import GevParams, gev_cdf, gev_fit_mle, gev_quantile, to_unit_frechet
from .maxstable import bivariate_cdf, simulate_schlather
from .mcle import composite_loglik, mcle_fit, pair_logdensity
from .summaries import Summarizer, SummaryMethod, SummaryVector, ward_cluster

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "PosteriorSample", "PriorSpec", "abc_adaptive", "abc_rejection", "credible_band",
    "posterior_mean_curve", "CorrelationModel", "Family", "ParamPoint", "bessel_k", "correlation",
    "extremal_coeff_pair", "BlockMaximaPanel", "MarginScale", "SpatialDesign", "ExtremeABCError",
    "GevParams", "gev_cdf", "gev_fit_mle", "gev_quantile", "to_unit_frechet", "bivariate_cdf",
    "simulate_schlather", "composite_loglik", "mcle_fit", "pair_logdensity", "Summarizer",
    "SummaryMethod", "SummaryVector", "ward_cluster",
]
