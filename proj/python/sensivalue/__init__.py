"""E-value sensitivity analysis for missing-not-at-random outcomes."""

from ._core import *  # noqa: F401,F403
from ._core import Error, DataError, MissingDataSample


def samples_from_arrays(y, observed, propensity):
    """Build MissingDataSample objects from parallel sequences.

    Unobserved entries may carry any y (NaN included).
    """
    return [
        MissingDataSample(float(yi) if oi else 0.0, bool(oi), float(pi))
        for yi, oi, pi in zip(y, observed, propensity)
    ]


__all__ = [name for name in dir() if not name.startswith("_")]
