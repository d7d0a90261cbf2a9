"""Signed-logarithm reals: a value is stored as ``sign * exp(log)``.

Lognormal moments reach ``exp(2 m**2)`` and overflow binary64 near
``m = 19``; every moment in the package is carried in this form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SignedLog", "signed_logsumexp"]


@dataclass(frozen=True, order=False)
class SignedLog:
    sign: int
    log: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign!r}")
        if self.sign == 0 and self.log != -math.inf:
            object.__setattr__(self, "log", -math.inf)
        if self.sign != 0 and self.log == -math.inf:
            object.__setattr__(self, "sign", 0)

    # -- construction -------------------------------------------------
    @classmethod
    def zero(cls) -> "SignedLog":
        return cls(0, -math.inf)

    @classmethod
    def one(cls) -> "SignedLog":
        return cls(1, 0.0)

    @classmethod
    def from_float(cls, x: float) -> "SignedLog":
        x = float(x)
        if math.isnan(x):
            raise ValueError("cannot represent NaN")
        if x == 0.0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log: float, sign: int = 1) -> "SignedLog":
        return cls(sign if log != -math.inf else 0, float(log))

    # -- conversion ---------------------------------------------------
    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log)

    @property
    def value(self) -> float:
        return float(self)

    def is_zero(self) -> bool:
        return self.sign == 0

    # -- arithmetic ---------------------------------------------------
    def __neg__(self) -> "SignedLog":
        return SignedLog(-self.sign, self.log)

    def __abs__(self) -> "SignedLog":
        return SignedLog(abs(self.sign), self.log)

    def __mul__(self, other) -> "SignedLog":
        other = _coerce(other)
        if self.sign == 0 or other.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.log + other.log)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "SignedLog":
        other = _coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("SignedLog division by zero")
        if self.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.log - other.log)

    def __add__(self, other) -> "SignedLog":
        other = _coerce(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log >= other.log else (other, self)
        d = lo.log - hi.log
        if hi.sign == lo.sign:
            return SignedLog(hi.sign, hi.log + math.log1p(math.exp(d)))
        if d == 0.0:
            return SignedLog.zero()
        return SignedLog(hi.sign, hi.log + math.log1p(-math.exp(d)))

    __radd__ = __add__

    def __sub__(self, other) -> "SignedLog":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "SignedLog":
        return _coerce(other) - self

    def __pow__(self, p: float) -> "SignedLog":
        p = float(p)
        if p == 0:
            return SignedLog.one()
        if self.sign == 0:
            if p < 0:
                raise ZeroDivisionError("0 ** negative")
            return SignedLog.zero()
        if self.sign < 0:
            if not p.is_integer():
                raise ValueError("negative base with non-integer exponent")
            sign = -1 if int(p) % 2 else 1
        else:
            sign = 1
        return SignedLog(sign, self.log * p)

    def root(self, k: float) -> float:
        """Return ``|self| ** (1/k)`` as a float, ``inf`` on overflow."""
        if self.sign == 0:
            return 0.0
        v = self.log / k
        return math.inf if v > 709.78 else math.exp(v)

    # -- comparisons are on the real value ---------------------------
    def _key(self):
        if self.sign == 0:
            return (0, 0.0)
        return (self.sign, self.sign * self.log)

    def __lt__(self, other):
        return self._key() < _coerce(other)._key()

    def __le__(self, other):
        return self._key() <= _coerce(other)._key()

    def __gt__(self, other):
        return self._key() > _coerce(other)._key()

    def __ge__(self, other):
        return self._key() >= _coerce(other)._key()

    def isclose(self, other, rel: float = 1e-9, abs_log: float = 0.0) -> bool:
        """Relative closeness, decided in log space."""
        other = _coerce(other)
        if self.sign != other.sign:
            return False
        if self.sign == 0:
            return True
        return abs(self.log - other.log) <= max(math.log1p(rel), abs_log)

    def __repr__(self):
        return f"SignedLog(sign={self.sign}, log={self.log!r})"


def _coerce(x) -> SignedLog:
    if isinstance(x, SignedLog):
        return x
    return SignedLog.from_float(x)


def signed_logsumexp(signs, logs, weights=None):
    """Sum ``Σ w_i * sign_i * exp(log_i)`` and return it as a SignedLog.

    ``weights`` are positive linear weights; they are folded into the logs.
    """
    signs = np.asarray(signs, dtype=float)
    logs = np.asarray(logs, dtype=float)
    if weights is not None:
        logs = logs + np.log(np.asarray(weights, dtype=float))
    mask = (signs != 0) & np.isfinite(logs)
    if np.any(logs[signs != 0] == np.inf):
        pos = np.any((logs == np.inf) & (signs > 0))
        neg = np.any((logs == np.inf) & (signs < 0))
        if pos and neg:
            raise ValueError("inf - inf in signed sum")
        return SignedLog(1 if pos else -1, math.inf)
    if not mask.any():
        return SignedLog.zero()
    s, l = signs[mask], logs[mask]
    m = l.max()
    total = float(np.sum(s * np.exp(l - m)))
    if total == 0.0:
        return SignedLog.zero()
    return SignedLog(1 if total > 0 else -1, m + math.log(abs(total)))
