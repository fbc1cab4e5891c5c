"""Shared plumbing: error types, a minimal estimator base, seed handling."""

from __future__ import annotations

import inspect

import numpy as np


class SemkitError(Exception):
    """Base class for all toolkit errors."""


class InputError(SemkitError):
    """Malformed input: parse failures, bad records, invalid values. CLI exit 2."""


class AlignmentError(SemkitError):
    """Mismatched corpora: length or mention-universe disagreement. CLI exit 3."""


class NumericError(SemkitError):
    """Numeric failure: non-finite values, tolerance violations. CLI exit 4."""


class LinearizeError(InputError):
    """A graph or skeleton that cannot be rendered to the linear form."""


class DelinearizeError(InputError):
    """A linearized representation with no graph reading."""


class NotFittedError(SemkitError):
    """Estimator used before fit()."""


class BaseEstimator:
    """get_params/set_params over __init__ keyword arguments.

    Subclasses keep every constructor argument as an attribute of the same
    name and store learned state in underscore-suffixed attributes.
    """

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [name for name in sig.parameters if name != "self"]

    def get_params(self):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(f"unknown parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def _check_fitted(self, attr):
        if not hasattr(self, attr):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")


def rng_for(seed, *stream):
    """Deterministic generator for one unit of work.

    Identical (seed, stream) always yields the same stream, independent of
    call order or worker layout, so per-pair and per-sentence draws can run
    in any parallel arrangement.
    """
    if seed is None:
        seed = 0
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(int(s) for s in stream)))


def natural_key(text):
    """Sort key splitting digit runs so x2 orders before x10."""
    parts = []
    num = ""
    for ch in text:
        if ch.isdigit():
            num += ch
        else:
            if num:
                parts.append((1, int(num)))
                num = ""
            parts.append((0, ch))
    if num:
        parts.append((1, int(num)))
    return tuple(parts)
