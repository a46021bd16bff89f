"""Field-response channel model for a planar movable-antenna array.

Antennas move inside a square region centered at the origin. Each
propagation path is a far-field plane wave; only the per-path phase
depends on an antenna position, through the extra propagation length
relative to the region center. The per-device channel vector is the
conjugate field response of every antenna accumulated over its paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WdChannel",
    "propagation_difference",
    "field_response_vector",
    "channel_response",
    "channel_response_batch",
    "sample_wd_channel",
]


@dataclass
class WdChannel:
    """Multipath description of a single device.

    thetas/phis hold the elevation and azimuth departure angles of each
    path (radians, both restricted to [0, pi]); prv holds the complex
    gain of each path; distance_m is the device range used for
    large-scale fading.
    """

    thetas: np.ndarray
    phis: np.ndarray
    prv: np.ndarray
    distance_m: float

    def __post_init__(self):
        self.thetas = np.atleast_1d(np.asarray(self.thetas, dtype=float))
        self.phis = np.atleast_1d(np.asarray(self.phis, dtype=float))
        self.prv = np.atleast_1d(np.asarray(self.prv, dtype=complex))
        if self.prv.size < 1:
            raise ValueError("need at least one path")
        if not (self.thetas.size == self.phis.size == self.prv.size):
            raise ValueError("angle and path-gain arrays must have equal length")
        if np.any(self.thetas < 0) or np.any(self.thetas > np.pi):
            raise ValueError("elevation angles must lie in [0, pi]")
        if np.any(self.phis < 0) or np.any(self.phis > np.pi):
            raise ValueError("azimuth angles must lie in [0, pi]")
        if not self.distance_m > 0:
            raise ValueError("distance must be positive")

    @property
    def n_paths(self) -> int:
        return int(self.prv.size)


def propagation_difference(pos, theta: float, phi: float) -> float:
    """Extra propagation length (m) at ``pos`` relative to the origin."""
    x, y = float(pos[0]), float(pos[1])
    return x * np.sin(theta) * np.cos(phi) + y * np.cos(theta)


def field_response_vector(pos, thetas, phis, lambda_m: float) -> np.ndarray:
    """Per-path unit-modulus phase response of one antenna position."""
    if not lambda_m > 0:
        raise ValueError("wavelength must be positive")
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    rho = float(pos[0]) * np.sin(thetas) * np.cos(phis) + float(pos[1]) * np.cos(thetas)
    return np.exp(1j * (2.0 * np.pi / lambda_m) * rho)


def _path_geometry(ch: WdChannel):
    # x- and y-direction cosines shared by every antenna position
    return np.sin(ch.thetas) * np.cos(ch.phis), np.cos(ch.thetas)


def channel_response(apv, ch: WdChannel, lambda_m: float) -> np.ndarray:
    """Uplink channel vector h of shape (M,) for one antenna layout.

    Entry m is the inner product of the conjugate field response at
    position m with the path gains; the downlink channel is its
    transpose by reciprocity, so a single vector serves both directions.
    """
    apv = np.atleast_2d(np.asarray(apv, dtype=float))
    if apv.shape[1] != 2:
        raise ValueError("antenna positions must be (M, 2)")
    gx, gy = _path_geometry(ch)
    rho = np.outer(apv[:, 0], gx) + np.outer(apv[:, 1], gy)  # (M, L)
    return np.exp(-1j * (2.0 * np.pi / lambda_m) * rho) @ ch.prv


def channel_response_batch(apvs, ch: WdChannel, lambda_m: float) -> np.ndarray:
    """Channel vectors for a batch of layouts: (B, M, 2) -> (B, M)."""
    apvs = np.asarray(apvs, dtype=float)
    if apvs.ndim != 3 or apvs.shape[2] != 2:
        raise ValueError("batch must be (B, M, 2)")
    gx, gy = _path_geometry(ch)
    rho = apvs[..., 0, None] * gx + apvs[..., 1, None] * gy  # (B, M, L)
    return np.exp(-1j * (2.0 * np.pi / lambda_m) * rho) @ ch.prv


def sample_wd_channel(rng: np.random.Generator, n_paths: int, distance_m: float,
                      c0: float, alpha: float) -> WdChannel:
    """Draw a random device channel.

    Angles are i.i.d. uniform on [0, pi]; path gains are circularly
    symmetric complex Gaussian with per-path variance c0 * d^(-alpha).
    """
    if n_paths < 1:
        raise ValueError("need at least one path")
    if not distance_m > 0:
        raise ValueError("distance must be positive")
    angles = rng.uniform(0.0, np.pi, size=(n_paths, 2))
    var = c0 * distance_m ** (-alpha)
    gz = rng.standard_normal(size=(n_paths, 2))
    prv = np.sqrt(var / 2.0) * (gz[:, 0] + 1j * gz[:, 1])
    return WdChannel(thetas=angles[:, 0], phis=angles[:, 1], prv=prv,
                     distance_m=float(distance_m))
