"""Incremental selective decode-and-forward relaying over power lines.

Closed-form performance of the protocol under log-normal fading and
Bernoulli-Gaussian noise, checked against a seeded protocol simulator.  A
sweep runner writes the figure data.
"""

from .analytic import (
    BerMode,
    Integrator,
    PartialBer,
    SystemDerived,
    average_ber,
    derive,
    instantaneous_ber,
    outage_probability,
    partial_ber_closed,
    partial_ber_quadrature,
    relay_usage,
)
from .model import (
    LinkModel,
    NoiseModel,
    PowerSplit,
    SnrParams,
    SystemConfig,
    Thresholds,
    capacity,
    snr_cdf,
    snr_params,
    thresholds,
)
from .qexp import MixtureFit, fit_metrics, mixture_eval, qexp_target, refit, table1_fit
from .simulator import McEstimate, estimate, estimate_ber_semianalytic, simulate

__all__ = [
    "BerMode", "Integrator", "LinkModel", "McEstimate", "MixtureFit", "NoiseModel",
    "PartialBer", "PowerSplit", "SnrParams", "SystemConfig", "SystemDerived", "Thresholds",
    "average_ber", "capacity", "derive", "estimate", "estimate_ber_semianalytic",
    "fit_metrics", "instantaneous_ber", "mixture_eval", "outage_probability",
    "partial_ber_closed", "partial_ber_quadrature", "qexp_target", "refit", "relay_usage",
    "simulate", "snr_cdf", "snr_params", "table1_fit", "thresholds",
]
