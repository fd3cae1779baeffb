"""Beam-wander fading channel (log-negative Weibull transmittance).

The transmittance of a beam whose centre wanders around the receiver
aperture with standard deviation ``sigma_b`` has density

    p(eta) = 2 L^2 / (sigma_b^2 lambda eta) * x^(2/lambda - 1)
             * exp(-L^2 / (2 sigma_b^2) * x^(2/lambda)),   x = 2 ln(eta0 / eta)

on ``(0, eta0]``. Every computation here goes through the coordinate

    s = L^2 / (2 sigma_b^2) * (2 ln(eta0 / eta))^(2/lambda),

in which ``s ~ Exp(1)`` exactly. In that coordinate

    eta(s) = eta0 * exp(-theta * s^(lambda/2) / 2),   theta = (2 sigma_b^2 / L^2)^(lambda/2),

so the density singularity at ``eta0`` disappears and sampling is exact.
``u = 2 ln(eta0 / eta) = theta * s^(lambda/2)`` is the "log-loss"
variable used for thresholds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .gaussian import DomainError
from .special import i0e, i1e

# rel. tolerance requested from the adaptive integrator
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 400
# exp(-s) underflows beyond this
_S_MAX = 745.0


class IntegrationError(ArithmeticError):
    pass


def derive_params(beta: float, W: float) -> tuple[float, float, float]:
    """Shape ``lambda``, scale ``L`` and maximum transmittance ``eta0``.

    ``h = (beta / W)^2``; ``L`` carries the length unit of ``beta``.
    """
    if not (beta > 0.0 and W > 0.0):
        raise DomainError(f"beta and W must be > 0, got beta={beta!r}, W={W!r}")
    h = (beta / W) ** 2
    x = 4.0 * h
    denom = 1.0 - i0e(x)  # 1 - exp(-4h) I0(4h)
    if not denom > 0.0:
        raise DomainError(
            f"h = {h!r} too small: 1 - exp(-4h) I0(4h) = {denom!r} is not positive"
        )
    eta0_sq = -math.expm1(-2.0 * h)
    log_term = math.log(2.0 * eta0_sq / denom)
    if not log_term > 0.0:
        raise DomainError(f"h = {h!r} gives non-positive log term {log_term!r}")
    lam = 8.0 * h * i1e(x) / denom / log_term
    L = beta * log_term ** (-1.0 / lam)
    return lam, L, math.sqrt(eta0_sq)


def laplace_weibull_integral(A: float, p: float, S: float = math.inf) -> float:
    """``int_0^S exp(-A s^p - s) ds`` for ``A >= 0``, ``p > 0``.

    This is the workhorse behind every (truncated) moment: with
    ``A = k theta / 2`` and ``p = lambda / 2`` it equals ``E[(eta/eta0)^k ; s < S]``.
    """
    if S <= 0.0:
        return 0.0
    if A == 0.0:
        return -math.expm1(-S) if math.isfinite(S) else 1.0
    S = min(S, _S_MAX)

    def f(s: float) -> float:
        return math.exp(-A * s**p - s)

    # the integrand decays on the scale s* where A s*^p ~ 1
    s_star = min(1.0, A ** (-1.0 / p))
    edges = [0.0]
    for mult in (1.0, 8.0, 64.0):
        e = mult * s_star
        if e < S:
            edges.append(e)
    edges.append(S)

    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e = integrate.quad(
                f, lo, hi, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT
            )
        total += val
        err += e
    if total > 0.0 and err > 1e-9 * total:
        raise IntegrationError(
            f"laplace_weibull_integral(A={A}, p={p}, S={S}) rel. error {err / total:.2e}"
        )
    return total


@dataclass(frozen=True)
class BeamWanderChannel:
    """Fading channel with aperture radius ``beta``, beam-spot radius ``W``
    and beam-wander standard deviation ``sigma_b`` (all in the same unit).

    ``sigma_b == 0`` is a fixed channel with transmittance ``eta0``.
    """

    beta: float = 1.0
    W: float = 1.0
    sigma_b: float = 0.0
    lambda_shape: float = field(init=False, repr=False)
    L_scale: float = field(init=False, repr=False)
    eta0: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.sigma_b >= 0.0:
            raise DomainError(f"sigma_b must be >= 0, got {self.sigma_b!r}")
        lam, L, eta0 = derive_params(self.beta, self.W)
        object.__setattr__(self, "lambda_shape", lam)
        object.__setattr__(self, "L_scale", L)
        object.__setattr__(self, "eta0", eta0)

    @property
    def h(self) -> float:
        return (self.beta / self.W) ** 2

    @property
    def is_fixed(self) -> bool:
        return self.sigma_b == 0.0

    @property
    def theta(self) -> float:
        """Scale of the log-loss ``u = theta * s^(lambda/2)``."""
        return (2.0 * self.sigma_b**2 / self.L_scale**2) ** (0.5 * self.lambda_shape)

    # coordinate maps ---------------------------------------------------

    def log_loss(self, s):
        """``u = 2 ln(eta0/eta)`` as a function of the exponential coordinate."""
        return self.theta * np.power(s, 0.5 * self.lambda_shape)

    def eta_of_s(self, s):
        return self.eta0 * np.exp(-0.5 * self.log_loss(s))

    def s_of_log_loss(self, u):
        """Inverse of :meth:`log_loss` (``inf`` stays ``inf``)."""
        if self.is_fixed:
            return np.where(np.asarray(u) > 0.0, np.inf, 0.0)
        return np.power(np.asarray(u, dtype=float) / self.theta, 2.0 / self.lambda_shape)

    # distribution ----------------------------------------------------

    def pdf(self, eta):
        """Density of the transmittance. Returns ``inf`` at ``eta0`` when the
        density is singular there (``lambda > 2``) and for fixed channels."""
        eta = np.asarray(eta, dtype=float)
        out = np.zeros_like(eta)
        if self.is_fixed:
            out[eta == self.eta0] = np.inf
            return out[()] if out.ndim == 0 else out
        lam, L, sb = self.lambda_shape, self.L_scale, self.sigma_b
        inside = (eta > 0.0) & (eta < self.eta0)
        log_e = np.log(eta[inside])
        x = 2.0 * (math.log(self.eta0) - log_e)
        s = L**2 / (2.0 * sb**2) * x ** (2.0 / lam)
        # fold 1/eta into the exponential so subnormal eta cannot give inf * 0
        out[inside] = 2.0 * L**2 / (sb**2 * lam) * x ** (2.0 / lam - 1.0) * np.exp(-s - log_e)
        top = eta == self.eta0
        if np.any(top):
            expo = 2.0 / lam - 1.0
            if expo < 0.0:
                out[top] = np.inf
            elif expo == 0.0:
                out[top] = 2.0 * L**2 / (sb**2 * lam * self.eta0)
        return out[()] if out.ndim == 0 else out

    def log_loss_pdf(self, u):
        """Density of ``u = 2 ln(eta0/eta)`` on ``(0, inf)``.

        Equivalent to :meth:`pdf` but representable where ``eta`` itself
        underflows (strong fading puts most of the mass there)."""
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        if self.is_fixed:
            out[u == 0.0] = np.inf
            return out[()] if out.ndim == 0 else out
        kappa = 2.0 / self.lambda_shape
        pos = u > 0.0
        z = u[pos] / self.theta
        out[pos] = kappa / self.theta * z ** (kappa - 1.0) * np.exp(-(z**kappa))
        return out[()] if out.ndim == 0 else out

    def cdf(self, x):
        """``P(eta <= x)``."""
        x = np.asarray(x, dtype=float)
        out = np.where(x >= self.eta0, 1.0, 0.0)
        if self.is_fixed:
            return out[()] if out.ndim == 0 else out
        inside = (x > 0.0) & (x < self.eta0)
        u = 2.0 * np.log(self.eta0 / x[inside])
        out[inside] = np.exp(-self.s_of_log_loss(u))
        return out[()] if out.ndim == 0 else out

    def quantile(self, p):
        """Inverse of :meth:`cdf` for ``p`` in (0, 1]."""
        p = np.asarray(p, dtype=float)
        return self.eta_of_s(-np.log(p))

    def sample(self, rng: np.random.Generator, size=None):
        """Exact draws via ``s ~ Exp(1)``; all values lie in ``(0, eta0]``."""
        if self.is_fixed:
            if size is None:
                return self.eta0
            return np.full(size, self.eta0)
        return self.eta_of_s(rng.standard_exponential(size))

    def sample_log_loss(self, rng: np.random.Generator, size=None):
        """Draws of ``u = 2 ln(eta0/eta)``; exact even where ``eta`` underflows."""
        if self.is_fixed:
            return 0.0 if size is None else np.zeros(size)
        return self.log_loss(rng.standard_exponential(size))

    # moments -----------------------------------------------------------

    def truncated_moment(self, k: float, u_max: float = math.inf) -> float:
        """``E[eta^k ; 2 ln(eta0/eta) < u_max]``, i.e. the k-th moment restricted
        to ``eta > eta0 * exp(-u_max / 2)``."""
        if u_max <= 0.0:
            return 0.0
        if self.is_fixed:
            return self.eta0**k
        if not math.isfinite(u_max):
            return _full_moment(self, float(k))
        S = float(self.s_of_log_loss(u_max))
        return self.eta0**k * laplace_weibull_integral(
            0.5 * k * self.theta, 0.5 * self.lambda_shape, S
        )

    def moment(self, k: float) -> float:
        """``E[eta^k]``."""
        if not k > 0.0:
            raise DomainError(f"moment order must be > 0, got {k!r}")
        return self.truncated_moment(k)

    def mean_loss_db(self) -> float:
        """Mean loss ``-10 log10 E[eta]`` in dB."""
        return -10.0 * math.log10(self.moment(1.0))

    def amplitude_loss_db(self) -> float:
        """``-10 log10 E[eta^2]``: the loss obtained when ``eta`` is read as an
        amplitude transmission coefficient (power transmittance ``eta^2``)."""
        return -10.0 * math.log10(self.moment(2.0))


@lru_cache(maxsize=1024)
def _full_moment(ch: BeamWanderChannel, k: float) -> float:
    return ch.eta0**k * laplace_weibull_integral(0.5 * k * ch.theta, 0.5 * ch.lambda_shape)
