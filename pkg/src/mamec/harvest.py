"""Non-linear energy-harvesting model and received RF power."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EhParams",
    "eh_constants",
    "received_rf_power",
    "received_rf_power_batch",
    "harvested_power",
]


@dataclass(frozen=True)
class EhParams:
    """Rectifier constants of the sigmoid power-conversion curve."""

    m_sat: float   # saturation power, W
    a: float       # steepness, 1/W
    b: float       # turn-on midpoint, W
    x_const: float
    y_const: float


def eh_constants(m_sat: float, a: float, b: float) -> EhParams:
    """Derive the two affine constants that zero the curve at no input."""
    if not (m_sat > 0 and a > 0 and b > 0):
        raise ValueError("EH constants must be positive")
    eab = np.exp(a * b)
    x = m_sat * (1.0 + eab) / eab
    y = m_sat / eab
    return EhParams(m_sat=float(m_sat), a=float(a), b=float(b),
                    x_const=float(x), y_const=float(y))


def received_rf_power(h: np.ndarray, q: np.ndarray) -> float:
    """RF power seen by a device with downlink channel transpose(h).

    Evaluates the quadratic form of conj(h) with the beam covariance;
    the result is clamped at zero to absorb projection round-off.
    """
    h = np.asarray(h, dtype=complex)
    q = np.asarray(q, dtype=complex)
    if q.shape != (h.size, h.size):
        raise ValueError("channel/beam-matrix dimension mismatch")
    p = float(np.real(h @ q @ np.conj(h)))
    return max(p, 0.0)


def received_rf_power_batch(hs: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise received power for channel vectors stacked as (B, M)."""
    hs = np.asarray(hs, dtype=complex)
    p = np.real(np.einsum("bm,mn,bn->b", hs, q, np.conj(hs)))
    return np.maximum(p, 0.0)


def harvested_power(p_in, eh: EhParams):
    """Harvested power (W) of the sigmoid rectifier; zero at zero input."""
    p = np.asarray(p_in, dtype=float)
    if np.any(p < 0):
        raise ValueError("input power must be nonnegative")
    out = eh.x_const / (1.0 + np.exp(-eh.a * (p - eh.b))) - eh.y_const
    if np.ndim(p_in) == 0:
        return float(out)
    return out
