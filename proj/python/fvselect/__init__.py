"""Fleming-Viot selection experiments.

Thin wrapper over the compiled core; see ``fvselect._core`` for the full API.
"""

from ._core import (
    MIN_WAVE_SPEED,
    ConfigError,
    DegeneracyError,
    QsdParams,
    RunError,
    __version__,
    default_config,
    experiment_names,
    flow_theta,
    green_apply,
    green_g1,
    hitting_mgf,
    iota,
    ks,
    lambda_lower_bound,
    log_survival_prob,
    run,
    survival_prob,
    t_y_pointmass,
    t_y_qsd,
    tail_rate,
    verify,
    w1,
    w1_to_qsd,
    wave_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
