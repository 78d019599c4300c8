"""Prescribed performance envelopes and the error <-> transformed-error maps.

Every function is vectorized: envelope parameters may be scalars or arrays
(typically ``(n, 3)``, one entry per landmark axis) that broadcast against
the error arguments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .constants import ENVELOPE_GUARD
from .errors import ConfigInvalid, EnvelopeViolation


@dataclass(frozen=True)
class PerformanceEnvelope:
    """Exponentially shrinking bound ``xi(t)`` plus the transform limits.

    ``delta_bar`` is the upper limit of the smooth transform and
    ``delta_under`` the magnitude of its lower limit.
    """

    xi0: np.ndarray
    xi_inf: np.ndarray
    ell: np.ndarray
    delta_bar: np.ndarray
    delta_under: np.ndarray

    def __post_init__(self):
        arrays = np.broadcast_arrays(*(np.asarray(getattr(self, f), dtype=float)
                                       for f in ("xi0", "xi_inf", "ell", "delta_bar", "delta_under")))
        for name, a in zip(("xi0", "xi_inf", "ell", "delta_bar", "delta_under"), arrays):
            a = np.array(a)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        self.validate()

    def validate(self) -> None:
        if not np.all(np.isfinite([self.xi0, self.xi_inf, self.ell, self.delta_bar, self.delta_under])):
            raise ConfigInvalid("envelope parameters must be finite")
        if np.any(self.xi_inf <= 0.0) or np.any(self.xi0 <= self.xi_inf):
            raise ConfigInvalid("envelope requires xi0 > xi_inf > 0")
        if np.any(self.ell <= 0.0):
            raise ConfigInvalid("envelope decay rate ell must be positive")
        if np.any(self.delta_bar <= 0.0) or np.any(self.delta_under <= 0.0):
            raise ConfigInvalid("envelope deltas must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.xi0.shape

    @property
    def symmetric(self) -> bool:
        return bool(np.all(self.delta_bar == self.delta_under))

    def __getitem__(self, idx) -> "PerformanceEnvelope":
        return PerformanceEnvelope(self.xi0[idx], self.xi_inf[idx], self.ell[idx],
                                   self.delta_bar[idx], self.delta_under[idx])

    def to_dict(self) -> dict:
        return {k: np.asarray(getattr(self, k)).tolist()
                for k in ("xi0", "xi_inf", "ell", "delta_bar", "delta_under")}

    @classmethod
    def from_dict(cls, d: dict) -> "PerformanceEnvelope":
        try:
            return cls(**{k: np.asarray(d[k], dtype=float)
                          for k in ("xi0", "xi_inf", "ell", "delta_bar", "delta_under")})
        except KeyError as exc:
            raise ConfigInvalid(f"envelope is missing field {exc}") from None


def envelope_at(env: PerformanceEnvelope, t: float) -> np.ndarray:
    return (env.xi0 - env.xi_inf) * np.exp(-env.ell * t) + env.xi_inf


def envelope_rate(env: PerformanceEnvelope, t: float) -> np.ndarray:
    """Time derivative of :func:`envelope_at`."""
    return -env.ell * (env.xi0 - env.xi_inf) * np.exp(-env.ell * t)


def smooth_transform(E, env: PerformanceEnvelope) -> np.ndarray:
    """Strictly increasing map of R onto ``(-delta_under, delta_bar)``."""
    E = np.asarray(E, dtype=float)
    # Written with exp(-2|E|) so neither branch overflows.
    with np.errstate(over="ignore"):
        a = np.exp(-2.0 * np.abs(E))
    pos = (env.delta_bar - env.delta_under * a) / (1.0 + a)
    neg = (env.delta_bar * a - env.delta_under) / (1.0 + a)
    return np.where(E >= 0.0, pos, neg)


def _ratio(e, xi, env: PerformanceEnvelope, t=None) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0.0):
        raise ValueError("xi must be positive")
    s = np.asarray(e, dtype=float) / xi
    upper = env.delta_bar * (1.0 - ENVELOPE_GUARD)
    lower = -env.delta_under * (1.0 - ENVELOPE_GUARD)
    bad = ~((s > lower) & (s < upper))
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0]) if bad.ndim else None
        worst = float(np.broadcast_to(s, bad.shape)[idx]) if idx is not None else float(s)
        raise EnvelopeViolation(f"error left its envelope (e/xi = {worst:.6g})",
                                index=idx, t=t, ratio=worst)
    return s


def inverse_transform(e, xi, env: PerformanceEnvelope) -> np.ndarray:
    """Transformed error ``E = 0.5 ln((d_under + e/xi) / (d_bar - e/xi))``."""
    s = _ratio(e, xi, env)
    return 0.5 * np.log((env.delta_under + s) / (env.delta_bar - s))


def eta(e, xi, env: PerformanceEnvelope) -> np.ndarray:
    """Derivative of :func:`inverse_transform` with respect to ``e``."""
    s = _ratio(e, xi, env)
    xi = np.asarray(xi, dtype=float)
    return (1.0 / (2.0 * xi)) * (1.0 / (env.delta_under + s) + 1.0 / (env.delta_bar - s))


def lambda_mu(env: PerformanceEnvelope, e, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal gain ``Lambda = diag(eta)`` and ``mu = diag(xi_dot / xi)``.

    For a 3-component envelope returns two 3x3 diagonal matrices; for an
    ``(n, 3)`` envelope returns ``(n, 3, 3)`` stacks.
    """
    xi = envelope_at(env, t)
    lam = eta(e, xi, env)
    mu = envelope_rate(env, t) / xi
    return _diag(lam), _diag(np.broadcast_to(mu, lam.shape))


def _diag(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[..., :, None] * np.eye(v.shape[-1])


def envelope_from_initial_error(e0, scale: float = 1.2, offset: float = 1.8,
                                xi_inf: float = 0.1, ell: float = 1.0) -> PerformanceEnvelope:
    """Symmetric envelope with ``xi0 = delta = scale * |e0| + offset``."""
    e0 = np.asarray(e0, dtype=float)
    width = scale * np.abs(e0) + offset
    return PerformanceEnvelope(xi0=width, xi_inf=np.full_like(width, xi_inf),
                               ell=np.full_like(width, ell),
                               delta_bar=width.copy(), delta_under=width.copy())


def check_initial_error(env: PerformanceEnvelope, e0) -> None:
    """Warn when the deltas are ordered against the sign of the initial error.

    Only the symmetric case ``delta_bar == delta_under`` carries convergence
    guarantees; asymmetric envelopes are accepted but experimental.
    """
    e0 = np.asarray(e0, dtype=float)
    if env.symmetric:
        return
    wrong = np.where(e0 >= 0.0, env.delta_under > env.delta_bar, env.delta_bar > env.delta_under)
    msg = "asymmetric envelopes are experimental"
    if np.any(wrong):
        msg += "; delta ordering does not match the sign of the initial error"
    warnings.warn(msg, stacklevel=2)
