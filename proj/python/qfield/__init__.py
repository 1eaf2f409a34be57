import json

from ._qfield import (
    DEFAULT_SEED,
    DomainError,
    Measure,
    ModelParams,
    NumericalError,
    density,
    derive_params,
    kernel,
    kernel_product,
    moments,
    params_from_q,
    params_residual,
    poly_eval,
    q_integer,
    quadrature,
    r_from_q,
    simulate_chain,
    simulate_counterexample,
    solve_correlations,
    verify_json,
)

__version__ = "0.1.0"


def verify(rho, R, length=1_000_000, seed=DEFAULT_SEED):
    """Simulate a chain and return the verification report as a dict."""
    return json.loads(verify_json(rho, R, length, seed))
