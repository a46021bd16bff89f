import numpy as np
import pytest

from mamec.pso import (PsoConfig, grow_neighborhood, inertia, init_swarm,
                       min_distance_feasible, min_distance_mask, run,
                       select_nbest, step)


def _config(**kw):
    base = dict(v_min=-0.05, v_max=0.05, n_particles=20, max_iters=40)
    base.update(kw)
    return PsoConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        PsoConfig(v_min=0.05, v_max=-0.05)
    with pytest.raises(ValueError):
        PsoConfig(v_min=-0.05, v_max=0.05, omega_min=0.0)
    with pytest.raises(ValueError):
        PsoConfig(v_min=-0.05, v_max=0.05, mode="annealed")


def test_init_swarm_boxes(rng):
    cfg = _config(n_particles=50)
    swarm = init_swarm(rng, cfg, 4, 0.3)
    assert swarm.positions.shape == (50, 8)
    assert np.all(np.abs(swarm.positions) <= 0.15)
    assert np.all((swarm.velocities >= cfg.v_min) & (swarm.velocities <= cfg.v_max))
    assert np.all(swarm.nbh_size == 1)
    assert np.array_equal(swarm.pbest_pos, swarm.positions)


def test_init_swarm_deterministic():
    cfg = _config()
    a = init_swarm(np.random.default_rng(3), cfg, 2, 0.3)
    b = init_swarm(np.random.default_rng(3), cfg, 2, 0.3)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.velocities, b.velocities)


def test_inertia_schedule():
    assert inertia(0, 200, 0.4, 0.9) == pytest.approx(0.9)
    assert inertia(200, 200, 0.4, 0.9) == pytest.approx(0.4)
    assert inertia(100, 200, 0.4, 0.9) == pytest.approx(0.65)


def test_grow_neighborhood():
    assert grow_neighborhood(1, 1, 50) == 2
    assert grow_neighborhood(49, 1, 50) == 50
    assert grow_neighborhood(50, 1, 50) == 50


def test_select_nbest_self_and_global(rng):
    cfg = _config(n_particles=5)
    swarm = init_swarm(rng, cfg, 1, 0.3)
    swarm.pbest_fit = np.array([1.0, 5.0, 3.0, 2.0, 4.0])
    # self neighborhood
    pos, fit = select_nbest(swarm, 0)
    assert fit == 1.0
    assert np.array_equal(pos, swarm.pbest_pos[0])
    # full neighborhood equals the global best
    swarm.nbh_size[:] = 5
    pos, fit = select_nbest(swarm, 0)
    assert fit == 5.0
    assert np.array_equal(pos, swarm.pbest_pos[1])


def test_select_nbest_nearest_two_matches_brute_force(rng):
    cfg = _config(n_particles=3)
    swarm = init_swarm(rng, cfg, 1, 0.3)
    swarm.positions = np.array([[0.0, 0.0], [0.01, 0.0], [0.1, 0.1]])
    swarm.pbest_pos = swarm.positions.copy()
    swarm.pbest_fit = np.array([1.0, 7.0, 9.0])
    swarm.nbh_size[:] = 2
    # particle 0's nearest two are {0, 1}; best pbest among them is 7
    pos, fit = select_nbest(swarm, 0)
    assert fit == 7.0
    # particle 2's nearest two are {2, 1}; best is 9
    _, fit2 = select_nbest(swarm, 2)
    assert fit2 == 9.0


def test_select_nbest_tie_breaks_to_lowest_index(rng):
    cfg = _config(n_particles=4)
    swarm = init_swarm(rng, cfg, 1, 0.3)
    swarm.pbest_fit = np.array([3.0, 3.0, 3.0, 3.0])
    swarm.nbh_size[:] = 4
    pos, fit = select_nbest(swarm, 2)
    assert np.array_equal(pos, swarm.pbest_pos[0])


def test_step_stationary_fixed_point(rng):
    cfg = _config(n_particles=3)
    swarm = init_swarm(rng, cfg, 2, 0.3)
    swarm.velocities[:] = 0.0
    swarm.pbest_pos = swarm.positions.copy()
    swarm.nbest_pos = swarm.positions.copy()
    before = swarm.positions.copy()
    step(swarm, lambda x: np.zeros(len(x)), 1, cfg, rng)
    assert np.array_equal(swarm.positions, before)


def test_step_velocity_clamp(rng):
    cfg = _config(n_particles=4, c1=100.0, c2=100.0)
    swarm = init_swarm(rng, cfg, 2, 0.3)
    swarm.pbest_pos = swarm.positions + 1.0  # huge pull
    step(swarm, lambda x: np.zeros(len(x)), 1, cfg, rng)
    assert np.all(swarm.velocities <= cfg.v_max + 1e-15)
    assert np.all(swarm.velocities >= cfg.v_min - 1e-15)
    assert np.all(np.abs(swarm.positions) <= 0.15 + 1e-15)


def test_run_constant_fitness(rng):
    cfg = _config(max_iters=10)
    res = run(lambda x: np.full(len(x), 2.5), cfg, 2, 0.3, rng)
    assert res.fitness == 2.5
    assert np.all(np.abs(res.position) <= 0.15)


def test_run_trace_monotone(rng):
    target = np.array([0.03, -0.06, 0.09, 0.012])

    def fit(x):
        return -np.sum((x - target) ** 2, axis=1)

    for seed in range(5):
        res = run(fit, _config(), 2, 0.3, np.random.default_rng(seed))
        assert np.all(np.diff(res.trace) >= 0)


def test_run_smooth_benchmark_convergence():
    # unimodal quadratic with an interior optimum; swarm should land
    # within half a wavelength-twentieth of it in nearly every run
    target = np.array([0.03, -0.06, 0.09, 0.012])

    def fit(x):
        return -np.sum((x - target) ** 2, axis=1)

    cfg = PsoConfig(v_min=-0.05, v_max=0.05, n_particles=50, max_iters=200)
    hits = 0
    for seed in range(20):
        res = run(fit, cfg, 2, 0.3, np.random.default_rng(seed))
        if np.linalg.norm(res.position.ravel() - target) <= 0.005:
            hits += 1
    assert hits >= 18


def test_run_seed_position_floor(rng):
    # the seeded incumbent bounds the final fitness from below
    target = np.zeros(4)

    def fit(x):
        return -np.sum((x - target) ** 2, axis=1)

    seed_apv = np.array([[0.001, 0.0], [0.0, 0.001]])
    res = run(fit, _config(max_iters=5, n_particles=5), 2, 0.3, rng,
              seed_position=seed_apv)
    assert res.fitness >= fit(seed_apv.reshape(1, -1))[0]


def test_run_deterministic():
    def fit(x):
        return -np.sum(x ** 2, axis=1)

    a = run(fit, _config(), 2, 0.3, np.random.default_rng(11))
    b = run(fit, _config(), 2, 0.3, np.random.default_rng(11))
    assert np.array_equal(a.position, b.position)
    assert a.fitness == b.fitness
    assert np.array_equal(a.trace, b.trace)


def test_standard_mode_uses_global_best():
    def fit(x):
        return -np.sum(x ** 2, axis=1)

    res = run(fit, _config(mode="standard"), 2, 0.3, np.random.default_rng(0))
    assert np.all(np.diff(res.trace) >= 0)
    assert res.fitness == res.trace[-1]


def test_min_distance_feasible():
    assert min_distance_feasible(np.array([[0.0, 0.0]]), 0.05)
    two = np.array([[0.0, 0.0], [0.05, 0.0]])
    assert min_distance_feasible(two, 0.05)  # boundary inclusive
    close = np.array([[0.0, 0.0], [0.05 - 1e-6, 0.0]])
    assert not min_distance_feasible(close, 0.05)


def test_min_distance_mask_matches_scalar(rng):
    apvs = rng.uniform(-0.15, 0.15, (50, 3, 2))
    mask = min_distance_mask(apvs, 0.05)
    for i in range(50):
        assert mask[i] == min_distance_feasible(apvs[i], 0.05)
