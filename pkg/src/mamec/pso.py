"""Particle swarm search over antenna layouts, with variable local search.

The variable-local-search variant replaces the global-best attractor by
the best personal-best inside a distance-defined neighborhood whose size
starts at one (the particle itself) and grows every iteration until it
covers the whole swarm. ``mode="standard"`` falls back to the classic
global-best update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PsoConfig",
    "Swarm",
    "PsoResult",
    "init_swarm",
    "inertia",
    "grow_neighborhood",
    "select_nbest",
    "step",
    "run",
    "min_distance_feasible",
    "min_distance_mask",
]

_MODES = ("vls", "standard")


@dataclass
class PsoConfig:
    v_min: float
    v_max: float
    n_particles: int = 50
    max_iters: int = 200
    omega_min: float = 0.4
    omega_max: float = 0.9
    c1: float = 1.4
    c2: float = 1.4
    nbh_growth: int = 1
    mode: str = "vls"

    def __post_init__(self):
        if not (0 < self.omega_min <= self.omega_max):
            raise ValueError("need 0 < omega_min <= omega_max")
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        if not self.v_min < self.v_max:
            raise ValueError("need v_min < v_max")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")


@dataclass
class Swarm:
    positions: np.ndarray    # (N, 2M)
    velocities: np.ndarray   # (N, 2M)
    pbest_pos: np.ndarray
    pbest_fit: np.ndarray    # (N,)
    nbest_pos: np.ndarray
    nbest_fit: np.ndarray
    nbh_size: np.ndarray     # (N,) ints
    region_a: float
    m_antennas: int
    last_fits: np.ndarray = field(default=None)

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]


@dataclass
class PsoResult:
    position: np.ndarray     # (M, 2)
    fitness: float
    trace: np.ndarray        # best fitness so far, per iteration
    trace_mean: np.ndarray   # mean swarm fitness, per iteration


def init_swarm(rng: np.random.Generator, config: PsoConfig, m_antennas: int,
               region_a: float) -> Swarm:
    """Uniform-random positions and velocities inside their boxes."""
    n, d = config.n_particles, 2 * m_antennas
    half = region_a / 2.0
    pos = rng.uniform(-half, half, size=(n, d))
    vel = rng.uniform(config.v_min, config.v_max, size=(n, d))
    return Swarm(
        positions=pos,
        velocities=vel,
        pbest_pos=pos.copy(),
        pbest_fit=np.full(n, -np.inf),
        nbest_pos=pos.copy(),
        nbest_fit=np.full(n, -np.inf),
        nbh_size=np.ones(n, dtype=int),
        region_a=float(region_a),
        m_antennas=int(m_antennas),
    )


def inertia(t: int, max_iters: int, omega_min: float, omega_max: float) -> float:
    """Linearly decaying inertia weight."""
    return omega_max - (omega_max - omega_min) * (t / max_iters)


def grow_neighborhood(current, growth: int, n_particles: int):
    """Increment neighborhood sizes, capped at the swarm size."""
    return np.minimum(np.asarray(current) + growth, n_particles)


def _best_index(fits: np.ndarray) -> int:
    # np.argmax returns the first maximum, i.e. the lowest index on ties
    return int(np.argmax(fits))


def select_nbest(swarm: Swarm, n: int):
    """Best personal best among the nbh_size[n] particles nearest to n.

    Distances are Euclidean on current positions (self included); fitness
    ties break toward the lowest particle index.
    """
    size = int(swarm.nbh_size[n])
    if size >= swarm.n_particles:
        j = _best_index(swarm.pbest_fit)
        return swarm.pbest_pos[j].copy(), float(swarm.pbest_fit[j])
    d = np.linalg.norm(swarm.positions - swarm.positions[n], axis=1)
    order = np.argsort(d, kind="stable")[:size]
    local = swarm.pbest_fit[order]
    members = order[local == local.max()]
    j = int(members.min())
    return swarm.pbest_pos[j].copy(), float(swarm.pbest_fit[j])


def _update_nbest(swarm: Swarm, mode: str) -> None:
    n = swarm.n_particles
    if mode == "standard" or np.all(swarm.nbh_size >= n):
        j = _best_index(swarm.pbest_fit)
        cand_fit = swarm.pbest_fit[j]
        better = cand_fit > swarm.nbest_fit
        swarm.nbest_pos[better] = swarm.pbest_pos[j]
        swarm.nbest_fit[better] = cand_fit
        return
    for i in range(n):
        pos, fit = select_nbest(swarm, i)
        if fit > swarm.nbest_fit[i]:
            swarm.nbest_pos[i] = pos
            swarm.nbest_fit[i] = fit


def step(swarm: Swarm, fitness_fn, t: int, config: PsoConfig,
         rng: np.random.Generator) -> Swarm:
    """One synchronous swarm update.

    Velocities blend the decayed previous velocity with pulls toward the
    personal and neighborhood bests, using one fresh uniform draw per
    particle per attractor, then both velocity and position are clamped
    to their boxes. Bests update only on strict improvement.
    """
    n = swarm.n_particles
    half = swarm.region_a / 2.0
    w = inertia(t, config.max_iters, config.omega_min, config.omega_max)
    phi1 = rng.random((n, 1))
    phi2 = rng.random((n, 1))
    vel = (w * swarm.velocities
           + config.c1 * phi1 * (swarm.pbest_pos - swarm.positions)
           + config.c2 * phi2 * (swarm.nbest_pos - swarm.positions))
    np.clip(vel, config.v_min, config.v_max, out=vel)
    swarm.velocities = vel
    swarm.positions = np.clip(swarm.positions + vel, -half, half)

    fits = np.asarray(fitness_fn(swarm.positions), dtype=float)
    swarm.last_fits = fits
    improved = fits > swarm.pbest_fit
    swarm.pbest_pos[improved] = swarm.positions[improved]
    swarm.pbest_fit[improved] = fits[improved]
    _update_nbest(swarm, config.mode)
    return swarm


def run(fitness_fn, config: PsoConfig, m_antennas: int, region_a: float,
        rng: np.random.Generator, seed_position=None) -> PsoResult:
    """Full swarm optimization; returns the best neighborhood best found.

    ``fitness_fn`` must accept a (B, 2M) batch of flattened layouts and
    return (B,) fitness values. ``seed_position`` optionally replaces
    particle 0 with a known-good layout (zero initial velocity), which
    makes the returned fitness at least that layout's fitness.
    """
    swarm = init_swarm(rng, config, m_antennas, region_a)
    if seed_position is not None:
        swarm.positions[0] = np.asarray(seed_position, dtype=float).ravel()
        swarm.velocities[0] = 0.0
        swarm.pbest_pos[0] = swarm.positions[0]
        swarm.nbest_pos[0] = swarm.positions[0]

    fits = np.asarray(fitness_fn(swarm.positions), dtype=float)
    swarm.last_fits = fits
    swarm.pbest_fit = fits.copy()
    swarm.nbest_fit = fits.copy()
    trace = [float(fits.max())]
    trace_mean = [float(fits.mean())]

    for t in range(1, config.max_iters + 1):
        if t >= 2:
            swarm.nbh_size = grow_neighborhood(swarm.nbh_size, config.nbh_growth,
                                               config.n_particles)
        step(swarm, fitness_fn, t, config, rng)
        trace.append(max(trace[-1], float(swarm.pbest_fit.max())))
        trace_mean.append(float(swarm.last_fits.mean()))

    j = _best_index(swarm.nbest_fit)
    return PsoResult(
        position=swarm.nbest_pos[j].reshape(m_antennas, 2).copy(),
        fitness=float(swarm.nbest_fit[j]),
        trace=np.asarray(trace),
        trace_mean=np.asarray(trace_mean),
    )


def min_distance_feasible(apv, min_dist: float) -> bool:
    """True iff all pairwise antenna distances are at least min_dist."""
    apv = np.atleast_2d(np.asarray(apv, dtype=float))
    m = apv.shape[0]
    if m < 2:
        return True
    diff = apv[:, None, :] - apv[None, :, :]
    d2 = (diff ** 2).sum(axis=-1)
    iu = np.triu_indices(m, k=1)
    return bool(np.all(d2[iu] >= min_dist * min_dist * (1.0 - 1e-12)))


def min_distance_mask(apvs: np.ndarray, min_dist: float) -> np.ndarray:
    """Vectorized feasibility over a batch of layouts (B, M, 2) -> (B,)."""
    m = apvs.shape[1]
    if m < 2:
        return np.ones(apvs.shape[0], dtype=bool)
    diff = apvs[:, :, None, :] - apvs[:, None, :, :]
    d2 = (diff ** 2).sum(axis=-1)
    iu = np.triu_indices(m, k=1)
    return np.all(d2[:, iu[0], iu[1]] >= min_dist * min_dist * (1.0 - 1e-12),
                  axis=1)
