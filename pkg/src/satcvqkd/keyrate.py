"""Asymptotic secret-key rates for entanglement-based CV-QKD.

Bob always measures homodyne. Alice measures homodyne or heterodyne, and
reconciliation is direct (Alice's data is the reference) or reverse (Bob's
data is the reference). Eve's information is the Holevo bound of the
purifying system under collective attacks, evaluated on the Gaussian state
with the given CM, so the resulting rates are Gaussian lower bounds.
All rates are in bits per pulse.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .gaussian import (
    DomainError,
    TwoModeCM,
    UnphysicalStateError,
    entropy_of_nu,
    entropy_two_mode,
)


class Measurement(enum.Enum):
    HOMODYNE = "hom"
    HETERODYNE = "het"


class Reconciliation(enum.Enum):
    DIRECT = "dr"
    REVERSE = "rr"


@dataclass(frozen=True)
class ProtocolSpec:
    alice_measurement: Measurement
    reconciliation: Reconciliation

    def __post_init__(self) -> None:
        if (
            self.alice_measurement is Measurement.HETERODYNE
            and self.reconciliation is Reconciliation.DIRECT
        ):
            raise DomainError("direct reconciliation with heterodyne Alice is not supported")

    @property
    def name(self) -> str:
        return f"{self.reconciliation.value}-{self.alice_measurement.value}"

    @classmethod
    def parse(cls, text: str) -> "ProtocolSpec":
        """Parse ``"rr-hom"``, ``"dr-hom"`` or ``"rr-het"`` (case-insensitive)."""
        key = text.strip().lower().replace("_", "-")
        try:
            rec, meas = key.split("-")
            return cls(Measurement(meas), Reconciliation(rec))
        except ValueError as exc:
            raise DomainError(
                f"unknown protocol {text!r}; expected one of rr-hom, dr-hom, rr-het"
            ) from exc

    def __str__(self) -> str:
        return self.name


RR_HOM = ProtocolSpec(Measurement.HOMODYNE, Reconciliation.REVERSE)
DR_HOM = ProtocolSpec(Measurement.HOMODYNE, Reconciliation.DIRECT)
RR_HET = ProtocolSpec(Measurement.HETERODYNE, Reconciliation.REVERSE)


@dataclass(frozen=True)
class KeyRateBreakdown:
    mutual_info: float
    holevo: float
    key_rate: float
    nu3: float


def _conditional_variance(m: TwoModeCM) -> float:
    if m.b <= 0.0:
        raise DomainError(f"b must be > 0, got {m.b!r}")
    v_cond = m.a - m.c * m.c / m.b
    if v_cond <= 0.0:
        raise UnphysicalStateError(f"conditional variance {v_cond!r} <= 0 for CM {m}")
    return v_cond


def mutual_information(m: TwoModeCM, alice: Measurement = Measurement.HOMODYNE) -> float:
    """Alice-Bob mutual information with Bob homodyning."""
    v_a = m.a
    v_cond = _conditional_variance(m)
    if alice is Measurement.HOMODYNE:
        info = 0.5 * math.log2(v_a / v_cond)
    else:
        info = 0.5 * math.log2((v_a + 1.0) / (v_cond + 1.0))
    return max(info, 0.0)


def nu3_rr(m: TwoModeCM) -> float:
    """Symplectic eigenvalue of Eve's state conditioned on Bob's homodyne."""
    sq = m.a * _conditional_variance(m)
    if sq < 0.0:
        raise UnphysicalStateError(f"nu3^2 = {sq!r} < 0 for CM {m}")
    return math.sqrt(sq)


def nu3_dr(m: TwoModeCM) -> float:
    """Symplectic eigenvalue of Eve's state conditioned on Alice's homodyne."""
    if m.a <= 0.0:
        raise DomainError(f"a must be > 0, got {m.a!r}")
    sq = m.b * (m.b - m.c * m.c / m.a)
    if sq < 0.0:
        raise UnphysicalStateError(f"nu3^2 = {sq!r} < 0 for CM {m}")
    return math.sqrt(sq)


def holevo_rr(m: TwoModeCM) -> float:
    """Holevo bound on Eve's information about Bob's data."""
    return entropy_two_mode(m) - entropy_of_nu(nu3_rr(m))


def holevo_dr(m: TwoModeCM) -> float:
    """Holevo bound on Eve's information about Alice's data."""
    return entropy_two_mode(m) - entropy_of_nu(nu3_dr(m))


def key_rate(m: TwoModeCM, p: ProtocolSpec = RR_HOM) -> KeyRateBreakdown:
    """Key rate ``K = I_AB - holevo``; negative values are returned as-is."""
    info = mutual_information(m, p.alice_measurement)
    if p.reconciliation is Reconciliation.REVERSE:
        nu3 = nu3_rr(m)
    else:
        nu3 = nu3_dr(m)
    holevo = entropy_two_mode(m) - entropy_of_nu(nu3)
    return KeyRateBreakdown(info, holevo, info - holevo, nu3)
