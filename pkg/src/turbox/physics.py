"""Reservoir parametrization and the pointwise scalar fields.

Natural units k_B = hbar = e = 1 throughout; energies are dimensionless and
currents are dimensionless rates.  Everything here is a pure function of an
immutable :class:`ReservoirPair`, safe for concurrent use.

The three fields that drive the rest of the library are

    delta_f(eps) = f_L(eps) - f_R(eps)
    g_noise(eps) = f_L(1 - f_L) + f_R(1 - f_R)
    g_ratio(eps) = g_noise / delta_f

All of them are evaluated through exponent-sign branches so they keep full
relative accuracy deep into the Fermi tails (|beta (eps - mu)| up to ~700),
where the naive f_L - f_R would round to zero already at ~37.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularityError, ValidationError

__all__ = [
    "ReservoirPair",
    "fermi",
    "fermi_fluct",
    "fermi_antideriv",
    "delta_f",
    "delta_f_antideriv",
    "g_noise",
    "epsilon_zero",
    "g_ratio",
    "g_ratio_limits",
]


@dataclass(frozen=True)
class ReservoirPair:
    """Two fermionic baths (beta_L, mu_L) and (beta_R, mu_R).

    Stored canonically as inverse temperatures; use
    :meth:`from_temperatures` when parameters are quoted as (T_L, T_R).
    """

    beta_L: float
    beta_R: float
    mu_L: float
    mu_R: float

    def __post_init__(self):
        for name in ("beta_L", "beta_R", "mu_L", "mu_R"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v!r}")
        if self.beta_L <= 0 or self.beta_R <= 0:
            raise ValidationError(
                f"inverse temperatures must be positive, got "
                f"beta_L={self.beta_L}, beta_R={self.beta_R}"
            )
        object.__setattr__(self, "beta_L", float(self.beta_L))
        object.__setattr__(self, "beta_R", float(self.beta_R))
        object.__setattr__(self, "mu_L", float(self.mu_L))
        object.__setattr__(self, "mu_R", float(self.mu_R))

    @classmethod
    def from_temperatures(cls, T_L, T_R, mu_L, mu_R):
        if T_L <= 0 or T_R <= 0:
            raise ValidationError(
                f"temperatures must be positive, got T_L={T_L}, T_R={T_R}"
            )
        return cls(1.0 / T_L, 1.0 / T_R, mu_L, mu_R)

    @property
    def delta_beta(self):
        """beta_L - beta_R."""
        return self.beta_L - self.beta_R

    @property
    def delta_beta_mu(self):
        """beta_L mu_L - beta_R mu_R."""
        return self.beta_L * self.mu_L - self.beta_R * self.mu_R

    @property
    def delta_mu(self):
        """mu_L - mu_R."""
        return self.mu_L - self.mu_R

    @property
    def identical(self):
        """True when both baths are the same (delta_f vanishes identically)."""
        return self.beta_L == self.beta_R and self.mu_L == self.mu_R


def _as_array(eps):
    arr = np.asarray(eps, dtype=float)
    return arr, arr.ndim == 0


def fermi(beta, mu, eps):
    """Fermi-Dirac occupation 1 / (exp(beta (eps - mu)) + 1).

    Overflow-safe for any argument; returns 0 at eps = +inf and 1 at
    eps = -inf.  `eps` may be a scalar or an ndarray.
    """
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    x, scalar = _as_array(beta * (np.asarray(eps, dtype=float) - mu))
    out = np.empty_like(x)
    pos = x >= 0
    # exp is only taken of non-positive arguments on each branch
    e = np.exp(-x[pos])
    out[pos] = e / (1.0 + e)
    e = np.exp(x[~pos])
    out[~pos] = 1.0 / (1.0 + e)
    return float(out) if scalar else out


def fermi_fluct(beta, mu, eps):
    """f (1 - f) evaluated stably: exp(-|x|) / (1 + exp(-|x|))^2.

    Keeps full relative accuracy in the tails, where computing 1 - f
    directly would lose everything to rounding.
    """
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    x, scalar = _as_array(beta * (np.asarray(eps, dtype=float) - mu))
    e = np.exp(-np.abs(x))
    out = e / (1.0 + e) ** 2
    out = np.where(np.isfinite(x), out, 0.0)
    return float(out) if scalar else out


def fermi_antideriv(beta, mu, eps):
    """Antiderivative of the Fermi function: -(1/beta) ln(1 + e^{-beta(eps-mu)}).

    Grows like (eps - mu) for eps -> -inf and tends to 0 for eps -> +inf.
    """
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    x, scalar = _as_array(beta * (np.asarray(eps, dtype=float) - mu))
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = -np.log1p(np.exp(-x[pos])) / beta
    # ln(1 + e^{-x}) = -x + ln(1 + e^{x}) for x < 0
    out[~pos] = (x[~pos] - np.log1p(np.exp(x[~pos]))) / beta
    return float(out) if scalar else out


def delta_f(res: ReservoirPair, eps):
    """f_L(eps) - f_R(eps), with full relative accuracy in both tails.

    The difference is formed from exponentials directly (never from two
    saturated occupations), so its sign is reliable wherever exp(-|x|)
    is representable.
    """
    e_arr, scalar = _as_array(eps)
    xL = res.beta_L * (e_arr - res.mu_L)
    xR = res.beta_R * (e_arr - res.mu_R)
    out = np.zeros_like(e_arr)
    finite = np.isfinite(e_arr)

    d = xR - xL
    both_pos = finite & (xL >= 0) & (xR >= 0)
    both_neg = finite & (xL < 0) & (xR < 0)
    mixed = finite & ~(both_pos | both_neg)

    # f_L - f_R = (e^{-xL} - e^{-xR}) / ((1+e^{-xL})(1+e^{-xR}))
    m = both_pos
    if np.any(m):
        a = np.exp(-xL[m])
        b = np.exp(-xR[m])
        close = np.abs(d[m]) < 30.0
        num = np.where(close, b * np.expm1(np.where(close, d[m], 0.0)), a - b)
        out[m] = num / ((1.0 + a) * (1.0 + b))

    # f_L - f_R = (e^{xR} - e^{xL}) / ((1+e^{xL})(1+e^{xR}))
    m = both_neg
    if np.any(m):
        a = np.exp(xL[m])
        b = np.exp(xR[m])
        close = np.abs(d[m]) < 30.0
        num = np.where(close, a * np.expm1(np.where(close, d[m], 0.0)), b - a)
        out[m] = num / ((1.0 + a) * (1.0 + b))

    # opposite exponent signs: the difference is O(1), no cancellation
    m = mixed
    if np.any(m):
        out[m] = 1.0 / (1.0 + np.exp(xL[m])) - 1.0 / (1.0 + np.exp(xR[m]))

    return float(out) if scalar else out


def delta_f_antideriv(res: ReservoirPair, eps):
    """Antiderivative of delta_f, finite at both infinities.

    Equals F_L(eps) - F_R(eps) with F the Fermi antiderivative; the limits
    are mu_R - mu_L at -inf and 0 at +inf, so integrals of delta_f over any
    (possibly semi-infinite) interval are exact differences of this.
    """
    e_arr, scalar = _as_array(eps)
    out = np.empty_like(e_arr)
    finite = np.isfinite(e_arr)
    if np.any(finite):
        ef = e_arr[finite]
        out[finite] = fermi_antideriv(res.beta_L, res.mu_L, ef) - fermi_antideriv(
            res.beta_R, res.mu_R, ef
        )
    out[e_arr == np.inf] = 0.0
    out[e_arr == -np.inf] = res.mu_R - res.mu_L
    return float(out) if scalar else out


def g_noise(res: ReservoirPair, eps):
    """g(eps) = f_L(1 - f_L) + f_R(1 - f_R), in [0, 1/2]."""
    e_arr, scalar = _as_array(eps)
    out = fermi_fluct(res.beta_L, res.mu_L, e_arr) + fermi_fluct(
        res.beta_R, res.mu_R, e_arr
    )
    return float(out) if scalar else out


def df_g_arrays(res: ReservoirPair, eps):
    """(delta_f, g) on a finite-energy array, branch-free.

    Quadrature fast path: absolutely accurate everywhere (error ~1e-16 of
    the local Fermi scale) but loses the deep-tail *relative* accuracy of
    delta_f below |x| ~ 37, which integrals cannot see.  Root finding must
    use delta_f/g_noise instead.
    """
    x = np.asarray(eps, dtype=float)
    xL = res.beta_L * (x - res.mu_L)
    xR = res.beta_R * (x - res.mu_R)
    eL = np.exp(-np.abs(xL))
    eR = np.exp(-np.abs(xR))
    fL = np.where(xL >= 0.0, eL, 1.0) / (1.0 + eL)
    fR = np.where(xR >= 0.0, eR, 1.0) / (1.0 + eR)
    g = eL / (1.0 + eL) ** 2 + eR / (1.0 + eR) ** 2
    return fL - fR, g


def epsilon_zero(res: ReservoirPair):
    """The unique sign change of delta_f, or None when delta_beta == 0.

    eps0 = delta_beta_mu / delta_beta; with equal inverse temperatures
    delta_f never changes sign (its sign is that of mu_L - mu_R).
    """
    if res.delta_beta == 0.0:
        return None
    return res.delta_beta_mu / res.delta_beta


def g_ratio(res: ReservoirPair, eps):
    """Pointwise ratio g(eps) / delta_f(eps).

    Raises SingularityError at eps0 (g > 0 there while delta_f = 0) and for
    identical reservoirs (delta_f vanishes identically).
    """
    if res.identical:
        raise SingularityError("g_ratio undefined: identical reservoirs, delta_f == 0")
    e_arr, scalar = _as_array(eps)
    df = np.asarray(delta_f(res, e_arr))
    if np.any(df == 0.0):
        raise SingularityError(
            "g_ratio evaluated at a zero of delta_f (eps == eps0)"
        )
    out = np.asarray(g_noise(res, e_arr)) / df
    return float(out) if scalar else out


def g_ratio_limits(res: ReservoirPair):
    """The finite limits of g/delta_f at -inf and +inf.

    Computed from the dominant exponentials, never by sampling at huge
    energies.  For beta_L != beta_R the slower-decaying reservoir wins and
    the limits are -sign(delta_beta) at -inf... concretely:

        delta_beta < 0:  (-1, +1)
        delta_beta > 0:  (+1, -1)
        delta_beta == 0: both limits equal coth(beta delta_mu / 2)

    Returns (limit at -inf, limit at +inf).
    """
    if res.identical:
        raise SingularityError(
            "g_ratio_limits undefined: identical reservoirs, delta_f == 0"
        )
    db = res.delta_beta
    if db < 0:
        return (-1.0, 1.0)
    if db > 0:
        return (1.0, -1.0)
    c = 1.0 / math.tanh(res.beta_L * res.delta_mu / 2.0)
    return (c, c)


def tail_signs(res: ReservoirPair):
    """Sign of delta_f deep in each tail: (sign at -inf, sign at +inf).

    0 only for identical reservoirs.
    """
    db = res.delta_beta
    if db != 0.0:
        s = 1.0 if db > 0 else -1.0
        return (s, -s)
    s = math.copysign(1.0, res.delta_mu) if res.delta_mu != 0.0 else 0.0
    return (s, s)
