"""Two independent fading links traversed in sequence or in parallel.

For a beam reflected off a satellite the receiver sees the product
``zeta = eta * eta'`` of the uplink and downlink transmittances. With
``u = 2 ln(eta0/eta)`` on each link the post-selection event
``zeta > zeta_th`` is the triangle ``u + u' < U``, ``U = 2 ln(eta0 eta0' / zeta_th)``,
and every conditional expectation needed for the post-selected CM has the form

    E[eta^k1 eta'^k2 ; u + u' < U]
      = int_0^{S(U)} e^{-s} eta(s)^k1 * E[eta'^k2 ; u' < U - u(s)] ds

where the inner factor is a one-dimensional truncated moment of the second
link (closed form for ``k2 = 0``). Both levels are evaluated adaptively.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .fading import BeamWanderChannel, IntegrationError
from .gaussian import DomainError, SqueezingSpec, TwoModeCM, UnphysicalStateError, check_physical

OUTER_EPSREL = 1e-10
OUTER_LIMIT = 400
DEFAULT_PS_FLOOR = 1e-7
DEFAULT_MIN_ACCEPTED = 100
DEFAULT_MC_SAMPLES = 10_000_000
MC_CHUNK = 1 << 20


class ThresholdTooAggressive(RuntimeError):
    """Raised when the success probability falls below the configured floor."""

    def __init__(self, p_s: float, zeta_th: float, detail: str = ""):
        self.p_s = p_s
        self.zeta_th = zeta_th
        msg = f"threshold too aggressive: zeta_th={zeta_th!r} gives P_s={p_s:.3e}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class Estimator(enum.Enum):
    QUADRATURE = "quadrature"
    MONTE_CARLO = "montecarlo"


@dataclass(frozen=True)
class CombinedChannel:
    """Independent uplink (A to satellite) and downlink (satellite to B)."""

    uplink: BeamWanderChannel
    downlink: BeamWanderChannel
    k1: float | None = None
    k2: float | None = None

    @classmethod
    def coupled(
        cls, sigma_as: float, k1: float, k2: float, beta: float = 1.0, W: float = 1.0
    ) -> "CombinedChannel":
        """Links with ``sigma_sb = k1 * k2 * sigma_as`` and equal apertures."""
        if not 0.0 <= k1 <= 1.0:
            raise DomainError(f"k1 must lie in [0, 1], got {k1!r}")
        if not k2 >= 0.0:
            raise DomainError(f"k2 must be >= 0, got {k2!r}")
        return cls(
            BeamWanderChannel(beta, W, sigma_as),
            BeamWanderChannel(beta, W, k1 * k2 * sigma_as),
            k1,
            k2,
        )

    @classmethod
    def from_sigmas(
        cls, sigma_as: float, sigma_sb: float, beta: float = 1.0, W: float = 1.0
    ) -> "CombinedChannel":
        return cls(BeamWanderChannel(beta, W, sigma_as), BeamWanderChannel(beta, W, sigma_sb))

    @property
    def zeta_max(self) -> float:
        return self.uplink.eta0 * self.downlink.eta0


@dataclass(frozen=True)
class PostSelectionConfig:
    zeta_th: float = 0.0
    estimator: Estimator = Estimator.QUADRATURE
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0
    ps_floor: float = DEFAULT_PS_FLOOR
    min_accepted: int = DEFAULT_MIN_ACCEPTED

    def __post_init__(self) -> None:
        if not self.zeta_th >= 0.0:
            raise DomainError(f"zeta_th must be >= 0, got {self.zeta_th!r}")
        if isinstance(self.estimator, str):
            object.__setattr__(self, "estimator", Estimator(self.estimator))
        if self.mc_samples <= 0:
            raise DomainError(f"mc_samples must be positive, got {self.mc_samples!r}")


class MCError(NamedTuple):
    """One-sigma standard errors of a Monte Carlo post-selection estimate."""

    p_s: float
    b: float
    c: float
    n_accepted: int


class PostSelectedCM(NamedTuple):
    cm: TwoModeCM
    p_s: float
    stderr: MCError | None = None


# --------------------------------------------------------------------------
# joint moments over the acceptance region


def _log_threshold(ch1: BeamWanderChannel, ch2: BeamWanderChannel, zeta_th: float) -> float:
    if zeta_th <= 0.0:
        return math.inf
    zmax = ch1.eta0 * ch2.eta0
    if zeta_th >= zmax:
        return 0.0
    return 2.0 * math.log(zmax / zeta_th)


def joint_moment(
    ch1: BeamWanderChannel,
    ch2: BeamWanderChannel,
    k1: float,
    k2: float,
    zeta_th: float = 0.0,
) -> float:
    """``E[eta1^k1 eta2^k2 ; eta1 * eta2 > zeta_th]`` for independent links."""
    U = _log_threshold(ch1, ch2, zeta_th)
    if U <= 0.0:
        return 0.0
    if not math.isfinite(U):
        m1 = 1.0 if k1 == 0 else ch1.truncated_moment(k1)
        m2 = 1.0 if k2 == 0 else ch2.truncated_moment(k2)
        return m1 * m2
    # integrate over the link with the wider log-loss spread on the outside
    if ch1.is_fixed or (not ch2.is_fixed and ch2.theta > ch1.theta):
        ch1, ch2, k1, k2 = ch2, ch1, k2, k1
    if ch1.is_fixed:
        return ch1.eta0**k1 * ch2.eta0**k2
    if ch2.is_fixed:
        return ch2.eta0**k2 * ch1.truncated_moment(k1, U)

    S1 = float(ch1.s_of_log_loss(U))
    half_lam = 0.5 * ch1.lambda_shape
    theta = ch1.theta
    eta0 = ch1.eta0

    def outer(s: float) -> float:
        u = theta * s**half_lam
        rest = U - u
        if rest <= 0.0:
            return 0.0
        if k2 == 0:
            inner = -math.expm1(-float(ch2.s_of_log_loss(rest)))
        else:
            inner = ch2.truncated_moment(k2, rest)
        return math.exp(-s) * eta0**k1 * math.exp(-0.5 * k1 * u) * inner

    edges = [0.0]
    if k1 > 0:
        s_star = (2.0 / (k1 * theta)) ** (1.0 / half_lam)
        edges += [m * s_star for m in (1.0, 8.0) if m * s_star < S1]
    edges.append(S1)
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e = integrate.quad(
                outer, lo, hi, epsabs=0.0, epsrel=OUTER_EPSREL, limit=OUTER_LIMIT
            )
        total += val
        err += e
    if total > 0.0 and err > 1e-7 * total:
        raise IntegrationError(
            f"joint_moment(k1={k1}, k2={k2}, zeta_th={zeta_th}) rel. error {err / total:.2e}"
        )
    return total


def success_probability(ch: CombinedChannel, zeta_th: float) -> float:
    """``P(eta * eta' > zeta_th)``."""
    return joint_moment(ch.uplink, ch.downlink, 0.0, 0.0, zeta_th)


def _mc_joint_moments(
    ch1: BeamWanderChannel,
    ch2: BeamWanderChannel,
    exponents: Sequence[tuple[float, float]],
    zeta_th: float,
    n: int,
    seed: int,
):
    """Conditional means of ``eta1^k1 eta2^k2`` given ``zeta > zeta_th``.

    Samples are drawn in fixed-size chunks, each from its own child of
    ``SeedSequence(seed)``, and reduced in chunk order, so results depend
    only on ``(seed, n)``.
    """
    n_chunks = -(-n // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    U = _log_threshold(ch1, ch2, zeta_th)
    m = len(exponents)
    acc = 0
    sums = np.zeros(m)
    sumsq = np.zeros(m)
    for i, child in enumerate(children):
        size = min(MC_CHUNK, n - i * MC_CHUNK)
        rng = np.random.default_rng(child)
        u1 = ch1.sample_log_loss(rng, size)
        u2 = ch2.sample_log_loss(rng, size)
        # acceptance decided on log-losses: eta itself underflows on deep fades
        keep = u1 + u2 < U
        acc += int(np.count_nonzero(keep))
        u1, u2 = u1[keep], u2[keep]
        for j, (a, b) in enumerate(exponents):
            f = ch1.eta0**a * ch2.eta0**b * np.exp(-0.5 * (a * u1 + b * u2))
            sums[j] += f.sum()
            sumsq[j] += np.dot(f, f)
    p_s = acc / n
    if acc == 0:
        return p_s, acc, np.full(m, np.nan), np.full(m, np.nan)
    mean = sums / acc
    var = np.maximum(sumsq / acc - mean**2, 0.0)
    se = np.sqrt(var / acc)
    return p_s, acc, mean, se


# --------------------------------------------------------------------------
# covariance matrices


def _check(cm: TwoModeCM) -> TwoModeCM:
    if not check_physical(cm):
        raise UnphysicalStateError(f"unphysical averaged CM {cm}")
    return cm


def ensemble_cm(ch: CombinedChannel, s: SqueezingSpec, chi: float = 0.0) -> TwoModeCM:
    """CM averaged over all realisations of both links (reflection scheme)."""
    if not chi >= 0.0:
        raise DomainError(f"excess noise chi must be >= 0, got {chi!r}")
    v, sh = s.v, math.sinh(2.0 * s.r)
    e_zeta = ch.uplink.truncated_moment(1.0) * ch.downlink.truncated_moment(1.0)
    e_sqrt = ch.uplink.truncated_moment(0.5) * ch.downlink.truncated_moment(0.5)
    return _check(TwoModeCM(v, 1.0 + e_zeta * (v - 1.0) + chi, e_sqrt * sh))


def _post_select(
    ch1: BeamWanderChannel,
    ch2: BeamWanderChannel,
    exponents: Sequence[tuple[float, float]],
    ps: PostSelectionConfig,
):
    """Return ``(P_s, conditional means, their MC std. errors or None)``."""
    zmax = ch1.eta0 * ch2.eta0
    if ps.zeta_th >= zmax:
        raise ThresholdTooAggressive(0.0, ps.zeta_th, f"maximum transmittance is {zmax!r}")
    if ps.estimator is Estimator.MONTE_CARLO:
        p_s, acc, means, se = _mc_joint_moments(
            ch1, ch2, exponents, ps.zeta_th, ps.mc_samples, ps.seed
        )
        if acc < ps.min_accepted:
            raise ThresholdTooAggressive(
                p_s, ps.zeta_th, f"{acc} of {ps.mc_samples} samples accepted"
            )
        p_se = math.sqrt(p_s * (1.0 - p_s) / ps.mc_samples)
        return p_s, means, (p_se, se, acc)
    p_s = joint_moment(ch1, ch2, 0.0, 0.0, ps.zeta_th)
    if p_s < ps.ps_floor:
        raise ThresholdTooAggressive(p_s, ps.zeta_th, f"floor is {ps.ps_floor:.1e}")
    means = np.array([joint_moment(ch1, ch2, a, b, ps.zeta_th) / p_s for a, b in exponents])
    return p_s, means, None


def post_selected_cm(
    ch: CombinedChannel, s: SqueezingSpec, chi: float, ps: PostSelectionConfig
) -> PostSelectedCM:
    """CM of the pulses kept when ``eta * eta' > ps.zeta_th`` (reflection scheme)."""
    if not chi >= 0.0:
        raise DomainError(f"excess noise chi must be >= 0, got {chi!r}")
    v, sh = s.v, math.sinh(2.0 * s.r)
    p_s, (e_zeta, e_sqrt), err = _post_select(
        ch.uplink, ch.downlink, [(1.0, 1.0), (0.5, 0.5)], ps
    )
    cm = _check(TwoModeCM(v, 1.0 + e_zeta * (v - 1.0) + chi, e_sqrt * sh))
    stderr = None
    if err is not None:
        p_se, se, acc = err
        stderr = MCError(p_se, float(se[0] * (v - 1.0)), float(se[1] * sh), acc)
    return PostSelectedCM(cm, p_s, stderr)


def onboard_ensemble_cm(
    link_a: BeamWanderChannel, link_b: BeamWanderChannel, s: SqueezingSpec, chi: float = 0.0
) -> TwoModeCM:
    """Averaged CM when the source sits on the satellite and each mode
    crosses its own downlink (excess noise on mode B only)."""
    return onboard_post_selected_cm(link_a, link_b, s, chi, PostSelectionConfig(0.0)).cm


def onboard_post_selected_cm(
    link_a: BeamWanderChannel,
    link_b: BeamWanderChannel,
    s: SqueezingSpec,
    chi: float,
    ps: PostSelectionConfig,
) -> PostSelectedCM:
    """On-board source, post-selected on the product ``eta_a * eta_b``."""
    if not chi >= 0.0:
        raise DomainError(f"excess noise chi must be >= 0, got {chi!r}")
    v, sh = s.v, math.sinh(2.0 * s.r)
    p_s, (e_a, e_b, e_ab), err = _post_select(
        link_a, link_b, [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)], ps
    )
    cm = _check(
        TwoModeCM(1.0 + e_a * (v - 1.0), 1.0 + e_b * (v - 1.0) + chi, e_ab * sh)
    )
    stderr = None
    if err is not None:
        p_se, se, acc = err
        stderr = MCError(p_se, float(se[1] * (v - 1.0)), float(se[2] * sh), acc)
    return PostSelectedCM(cm, p_s, stderr)


# --------------------------------------------------------------------------
# density of the combined transmittance


def _weibull_log_loss_params(ch: BeamWanderChannel) -> tuple[float, float]:
    """``(kappa, theta)``: ``u`` is Weibull with shape kappa and scale theta."""
    return 2.0 / ch.lambda_shape, ch.theta


def combined_pdf(ch: CombinedChannel, zeta: float) -> float:
    """Density of ``zeta = eta * eta'`` (diagnostic; not used for key rates)."""
    up, down = ch.uplink, ch.downlink
    zmax = ch.zeta_max
    if not 0.0 < zeta < zmax:
        return 0.0
    if up.is_fixed and down.is_fixed:
        raise DomainError("both links are fixed: zeta has no density")
    if up.is_fixed:
        return float(down.pdf(zeta / up.eta0)) / up.eta0
    if down.is_fixed:
        return float(up.pdf(zeta / down.eta0)) / down.eta0
    W = 2.0 * math.log(zmax / zeta)
    k1, t1 = _weibull_log_loss_params(up)
    k2, t2 = _weibull_log_loss_params(down)
    c1 = k1 / t1**k1
    c2 = k2 / t2**k2

    def g(u: float) -> float:
        rest = max(W - u, 0.0)
        return c1 * c2 * math.exp(-((u / t1) ** k1) - (rest / t2) ** k2)

    # density of u + u' is int_0^W p1(u) p2(W - u) du with the algebraic
    # endpoint factors u^(k1-1) (W-u)^(k2-1) carried by the weight
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(
            g, 0.0, W, weight="alg", wvar=(k1 - 1.0, k2 - 1.0), limit=OUTER_LIMIT,
            epsabs=0.0, epsrel=1e-11,
        )
    # dW/dzeta = -2/zeta
    return val * 2.0 / zeta
