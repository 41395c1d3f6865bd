"""Preference-based tuning of hip exoskeleton torque profiles."""

import json as _json

from . import _core
from ._core import (
    Error,
    NotFoundError,
    ParseError,
    StateError,
    UnsupportedInputError,
    ValidationError,
    choice_probability,
    default_ranges,
    familiarization_profile,
    interpolate,
    perturb,
    power_ratio,
    prior_belief,
    reward,
    sample_batch,
    torque_at,
)

__all__ = [
    "Error",
    "NotFoundError",
    "ParseError",
    "StateError",
    "UnsupportedInputError",
    "ValidationError",
    "campaign",
    "choice_probability",
    "default_ranges",
    "familiarization_profile",
    "interpolate",
    "perturb",
    "power_ratio",
    "prior_belief",
    "replay",
    "reward",
    "sample_batch",
    "simulate",
    "torque_at",
    "trace_metrics",
]


def _dump(value):
    return "" if value is None else _json.dumps(value)


def simulate(oracle, config=None, validate=False):
    """Runs one closed-loop session against a simulated responder."""
    return _json.loads(_core.simulate(_dump(config), _json.dumps(oracle), validate))


def campaign(oracle, config=None, seed_start=0, seed_count=1, jobs=1):
    """Seeded batch of simulated sessions; returns rates and the CSV table."""
    return _json.loads(
        _core.campaign(_dump(config), _json.dumps(oracle), seed_start, seed_count, jobs)
    )


def replay(path):
    """Re-runs a session log and returns the reconstructed state summary."""
    return _json.loads(_core.replay(str(path)))


def trace_metrics(csv_text):
    """Power ratio and stance/swing statistics for one gait trace CSV."""
    return _json.loads(_core.trace_metrics(csv_text))
