"""Standard-form two-mode Gaussian states.

All variances are in shot-noise units (vacuum variance = 1). A two-mode
state in standard form is fully described by three numbers ``(a, b, c)``:

    M = [[a I,  c Z],
         [c Z,  b I]],   Z = diag(1, -1)

Only pure loss and additive receiver noise act on the states handled
here, so the standard form is preserved throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

# |Delta^2 - 4 det M| below this is treated as zero
DISCRIMINANT_ATOL = 1e-12
# symplectic eigenvalues in [1 - NU_SNAP, 1) are snapped to 1
NU_SNAP = 1e-9
# G(x) is returned as 0 below this argument
ENTROPY_XMIN = 1e-12
PHYSICAL_TOL = 1e-9


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class UnphysicalStateError(ArithmeticError):
    """A covariance matrix violates the uncertainty principle."""


@dataclass(frozen=True)
class SqueezingSpec:
    """Two-mode squeezing parameter ``r`` and its quadrature variance ``v``."""

    r: float

    def __post_init__(self) -> None:
        if not self.r >= 0.0:
            raise DomainError(f"squeezing r must be >= 0, got {self.r!r}")

    @property
    def v(self) -> float:
        return math.cosh(2.0 * self.r)

    @classmethod
    def from_variance(cls, v: float) -> "SqueezingSpec":
        if not v >= 1.0:
            raise DomainError(f"quadrature variance must be >= 1, got {v!r}")
        return cls(0.5 * math.acosh(v))


@dataclass(frozen=True)
class TwoModeCM:
    """Standard-form CM: ``A = a I``, ``B = b I``, ``C = diag(c, -c)``."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def __iter__(self):
        return iter((self.a, self.b, self.c))


class SymplecticSpectrum(NamedTuple):
    nu1: float
    nu2: float


def _squeezing_variance(s: SqueezingSpec) -> tuple[float, float]:
    v = s.v
    # sqrt(v^2 - 1) = sinh(2r), exact for large r where v^2 - 1 would cancel
    return v, math.sinh(2.0 * s.r)


def tmsv_cm(s: SqueezingSpec) -> TwoModeCM:
    """Two-mode squeezed vacuum with squeezing ``s.r``."""
    if s.r < 0:
        raise DomainError(f"squeezing r must be >= 0, got {s.r!r}")
    v, sh = _squeezing_variance(s)
    return TwoModeCM(v, v, sh)


def _check_tau(name: str, tau: float) -> None:
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {tau!r}")


def _check_chi(chi: float) -> None:
    if not chi >= 0.0:
        raise DomainError(f"excess noise chi must be >= 0, got {chi!r}")


def lossy_cm(s: SqueezingSpec, tau: float, chi: float = 0.0) -> TwoModeCM:
    """TMSV with mode B sent through a pure-loss channel of transmittance
    ``tau`` followed by excess noise ``chi`` at the receiver."""
    _check_tau("tau", tau)
    _check_chi(chi)
    v, sh = _squeezing_variance(s)
    return TwoModeCM(v, 1.0 + tau * (v - 1.0) + chi, math.sqrt(tau) * sh)


def two_sided_lossy_cm(
    s: SqueezingSpec, tau_a: float, tau_b: float, chi: float = 0.0
) -> TwoModeCM:
    """TMSV with both modes attenuated (source between the two receivers).

    Excess noise is placed on mode B only, as in the one-sided case.
    """
    _check_tau("tau_a", tau_a)
    _check_tau("tau_b", tau_b)
    _check_chi(chi)
    v, sh = _squeezing_variance(s)
    if tau_a == 1.0:
        return lossy_cm(s, tau_b, chi)
    return TwoModeCM(
        1.0 + tau_a * (v - 1.0),
        1.0 + tau_b * (v - 1.0) + chi,
        math.sqrt(tau_a * tau_b) * sh,
    )


def symplectic_eigenvalues(m: TwoModeCM) -> SymplecticSpectrum:
    """Ordered symplectic eigenvalues ``nu1 >= nu2`` of a standard-form CM."""
    a, b, c = m
    if c * c > a * b * (1.0 + 1e-12) + PHYSICAL_TOL:
        raise DomainError(f"c^2 > ab for CM {m}: matrix is not positive semidefinite")
    delta = a * a + b * b - 2.0 * c * c
    det_m = (a * b - c * c) ** 2
    disc = delta * delta - 4.0 * det_m
    if disc < 0.0:
        if disc < -DISCRIMINANT_ATOL * max(1.0, delta * delta):
            raise UnphysicalStateError(f"negative discriminant {disc!r} for CM {m}")
        disc = 0.0
    root = math.sqrt(disc)
    nu1 = math.sqrt(0.5 * (delta + root))
    # (delta - root) cancels badly; use nu1 * nu2 = sqrt(det M)
    prod = abs(a * b - c * c)
    nu2 = prod / nu1 if nu1 > 0.0 else 0.0
    if 1.0 - NU_SNAP <= nu2 < 1.0:
        nu2 = 1.0
    if 1.0 - NU_SNAP <= nu1 < 1.0:
        nu1 = 1.0
    return SymplecticSpectrum(nu1, nu2)


def entropy_g(x: float) -> float:
    """Bosonic entropy function ``(x+1) log2(x+1) - x log2(x)``, in bits."""
    if x < 0.0:
        raise DomainError(f"entropy_g needs x >= 0, got {x!r}")
    if x < ENTROPY_XMIN:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def entropy_of_nu(nu: float) -> float:
    """von Neumann entropy of a single-mode thermal state with symplectic
    eigenvalue ``nu`` (``nu`` slightly below 1 is treated as 1)."""
    if nu < 1.0:
        if nu < 1.0 - NU_SNAP:
            raise UnphysicalStateError(f"symplectic eigenvalue {nu!r} < 1")
        nu = 1.0
    return entropy_g(0.5 * (nu - 1.0))


def entropy_two_mode(m: TwoModeCM) -> float:
    nu1, nu2 = symplectic_eigenvalues(m)
    return entropy_of_nu(nu1) + entropy_of_nu(nu2)


def check_physical(m: TwoModeCM, tol: float = PHYSICAL_TOL) -> bool:
    """True when ``M + i Omega >= 0`` (up to ``tol``)."""
    a, b, c = m
    if not all(math.isfinite(x) for x in (a, b, c)):
        return False
    if c * c > a * b + tol:
        return False
    try:
        _, nu2 = symplectic_eigenvalues(m)
    except (DomainError, UnphysicalStateError):
        return False
    return nu2 >= 1.0 - tol
