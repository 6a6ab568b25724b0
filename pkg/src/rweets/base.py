"""Minimal estimator protocol: constructor params are hyperparameters,
fitted state lives in trailing-underscore attributes."""

import inspect

from .errors import NotFittedError, ValidationError


class BaseEstimator:
    """Provides get_params / set_params over __init__ keyword arguments."""

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "BaseEstimator":
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValidationError(f"unknown parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_is_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted; call fit() before this method"
        )


def check_equal_length(name_a: str, a, name_b: str, b) -> None:
    if len(a) != len(b):
        raise ValidationError(f"{name_a} has length {len(a)} but {name_b} has length {len(b)}")
