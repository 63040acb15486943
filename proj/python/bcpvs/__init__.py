"""Bayesian changepoint detection with sparse variable selection."""

from ._bcpvs import (
    BcpvsError,
    Dataset,
    ModelKind,
    PriorConfig,
    SamplerConfig,
    bench_consistency,
    enumerate_exact,
    log_bayes_factor,
    log_marginal,
    pelt_detect,
    run_chain,
    simulate,
)

__all__ = [
    "BcpvsError",
    "Dataset",
    "ModelKind",
    "PriorConfig",
    "SamplerConfig",
    "bench_consistency",
    "enumerate_exact",
    "log_bayes_factor",
    "log_marginal",
    "pelt_detect",
    "run_chain",
    "simulate",
]
