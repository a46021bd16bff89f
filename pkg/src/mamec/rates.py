"""Local/offload computing rates, edge-capability check, and the objective."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .harvest import EhParams

__all__ = [
    "SystemParams",
    "Allocation",
    "local_rate",
    "local_energy",
    "offload_rate",
    "combining_gain",
    "edge_feasible",
    "scr",
    "suffix_sums",
]

FEAS_TOL = 1e-9


@dataclass
class SystemParams:
    """All scalar constants of the system plus per-device task complexity."""

    t_block: float      # block duration T, s
    bandwidth: float    # B, Hz
    lambda_m: float     # carrier wavelength, m
    region_a: float     # side length A of the antenna region, m
    min_dist: float     # minimum inter-antenna distance D, m
    m_antennas: int
    k_wds: int
    p_max: float        # transmit power budget, W
    noise: float        # receiver noise power, W
    kappa: float        # CPU capacitance coefficient, W/Hz^3
    f_edge: float       # edge CPU frequency, Hz
    phi: np.ndarray     # task complexity per device, cycles/bit
    eh: EhParams
    c0: float           # large-scale fading at 1 m
    alpha: float        # path-loss exponent
    l_paths: int = 10   # channel paths per device

    def __post_init__(self):
        self.phi = np.broadcast_to(np.asarray(self.phi, dtype=float),
                                   (self.k_wds,)).copy()
        for name in ("t_block", "bandwidth", "lambda_m", "region_a", "min_dist",
                     "p_max", "noise", "kappa", "f_edge", "c0", "alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.m_antennas < 1 or self.k_wds < 1 or self.l_paths < 1:
            raise ValueError("m_antennas, k_wds and l_paths must be >= 1")
        if np.any(self.phi <= 0):
            raise ValueError("phi must be positive")
        if not self.min_dist < self.region_a:
            raise ValueError("min_dist must be smaller than region side")


@dataclass
class Allocation:
    """Time slots, offload energies/powers, CPU frequencies and partitions."""

    tau0: float
    tau: np.ndarray     # offload slot per device, s
    dtau: float         # residual edge-computing slot, s
    e: np.ndarray       # offload energy per device, J
    p: np.ndarray       # offload transmit power per device, W
    f: np.ndarray       # local CPU frequency per device, Hz
    beta: np.ndarray = field(default=None)  # energy split toward offloading

    def __post_init__(self):
        k = np.asarray(self.tau).size
        self.tau = np.asarray(self.tau, dtype=float)
        self.e = np.asarray(self.e, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if self.beta is None:
            self.beta = np.zeros(k)
        self.beta = np.asarray(self.beta, dtype=float)

    def total_time(self) -> float:
        return float(self.tau0 + self.tau.sum() + self.dtau)


def local_rate(f_k, phi_k):
    """Bits per second computed locally at CPU frequency f_k."""
    return np.asarray(f_k, dtype=float) / np.asarray(phi_k, dtype=float)


def local_energy(f_k, kappa: float, t_block: float):
    """Energy burned by the local CPU over the whole block."""
    return kappa * np.asarray(f_k, dtype=float) ** 3 * t_block


def offload_rate(tau_k, e_k, gain, bandwidth: float, t_block: float):
    """Offloading rate over a slot of length tau_k using energy e_k.

    ``gain`` is the combining SNR factor per joule-per-second; an empty
    slot contributes zero rate by the limit convention.
    """
    tau = np.asarray(tau_k, dtype=float)
    e = np.asarray(e_k, dtype=float)
    if np.any(tau < 0) or np.any(e < 0):
        raise ValueError("slot lengths and energies must be nonnegative")
    safe_tau = np.where(tau > 0, tau, 1.0)
    snr = np.asarray(gain, dtype=float) * e / safe_tau
    out = np.where(tau > 0,
                   (bandwidth * tau / t_block) * np.log1p(snr) / np.log(2.0),
                   0.0)
    if np.ndim(tau_k) == 0 and np.ndim(e_k) == 0:
        return float(out)
    return out


def combining_gain(w: np.ndarray, h: np.ndarray, noise: float) -> float:
    """SNR factor |w^H h|^2 / (||w||^2 sigma^2) of a receive combiner."""
    w = np.asarray(w, dtype=complex)
    h = np.asarray(h, dtype=complex)
    wn = float(np.real(np.vdot(w, w)))
    if wn == 0.0:
        raise ValueError("combiner must be nonzero")
    return float(np.abs(np.vdot(w, h)) ** 2 / (wn * noise))


def suffix_sums(x: np.ndarray) -> np.ndarray:
    """Tail sums: out[k] = sum of x[k:]."""
    return np.cumsum(np.asarray(x, dtype=float)[::-1])[::-1]


def edge_feasible(alloc: Allocation, offload_rates, params: SystemParams,
                  tol: float = FEAS_TOL):
    """Check that the edge server can finish every tail of offloaded work.

    Returns (feasible, slack) where slack[k] is the spare edge capacity
    (cycles) for the tail starting at device k.
    """
    ro = np.asarray(offload_rates, dtype=float)
    demand = suffix_sums(params.phi * ro * params.t_block)
    cap = params.f_edge * (alloc.dtau + suffix_sums(alloc.tau))
    slack = cap - demand
    return bool(np.all(slack >= -tol)), slack


def scr(alloc: Allocation, local_rates, offload_rates) -> float:
    """Sum computational rate over all devices, bps."""
    rl = np.asarray(local_rates, dtype=float)
    ro = np.asarray(offload_rates, dtype=float)
    if rl.shape != ro.shape or rl.size != alloc.tau.size:
        raise ValueError("rate vectors must match the allocation size")
    return float(rl.sum() + ro.sum())
