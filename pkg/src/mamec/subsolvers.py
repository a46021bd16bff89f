"""Convex sub-problem solvers for the alternating frameworks.

Three solvers live here:

* ``solve_time_energy``: joint time/energy allocation. The objective is
  concave in (tau0, tau, dtau, e) after the usual energy substitution
  e = p * tau; it is maximized by projected gradient ascent with an
  Armijo backtracking line search. The feasible polytope is handled by
  Dykstra's alternating projections over a small collection of exactly
  projectable sets (time simplex, energy-coupling cone, halfspaces).
  The edge-capability constraint puts a concave function on the small
  side of an inequality, so it is replaced by its tangent overestimate
  at the incumbent (a conservative inner approximation) and the
  linearization point is refreshed over a few outer rounds.

* ``sca_beamforming``: energy-beam covariance update. The harvested
  power is convex in the auxiliary exponential variable, so its tangent
  minorizes the true curve; each outer round maximizes the resulting
  concave surrogate by projected gradient ascent over the PSD set with
  a trace budget, which makes the true objective non-decreasing.

* ``mrc_combiner`` plus the PSD/trace projection and beam recovery
  helpers used by the other two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .rates import SystemParams, Allocation, suffix_sums

__all__ = [
    "TimeEnergySolution",
    "ScaState",
    "solve_time_energy",
    "mrc_combiner",
    "project_psd_trace",
    "sca_beamforming",
    "recover_beams",
]

KKT_TOL = 1e-6
MAX_PGA_ITERS = 5000
_ARMIJO = 1e-4
_STEP_FLOOR = 1e-12
# slope cap for the cube root near its boundary; the value stays exact,
# only the reported gradient is bounded (the cap sits far below the
# energy scale of any optimum, which has strictly interior residuals)
_GRAD_EPS = 1e-9
_TAU_EPS = 1e-12
_LN2 = float(np.log(2.0))
# edge-capability margins (cycles): constraints are enforced slightly
# tighter than they are later accepted, so recomputation round-off on
# the ~1e8-cycle scale can never flip a feasible solution to infeasible
EDGE_ENFORCE_MARGIN = 2e-6
EDGE_ACCEPT_MARGIN = 1e-6


def edge_slack_ok(demand: np.ndarray, cap: np.ndarray,
                  margin: float = EDGE_ACCEPT_MARGIN) -> bool:
    """Margin-aware edge feasibility: near-zero demand is always fine."""
    return bool(np.all((cap - demand >= margin) | (demand <= margin)))


# ---------------------------------------------------------------------------
# projections


def _project_simplex_box(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) <= total}."""
    if total <= 0:
        return np.zeros_like(v)
    vmin = v.min()
    if vmin >= 0.0 and v.sum() <= total:
        return v
    w = np.clip(v, 0.0, None)
    if w.sum() <= total:
        return w
    # budget is active: project onto the simplex {x >= 0, sum(x) = total}
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = np.nonzero(u > (css - total) / j)[0][-1]
    theta = (css[rho] - total) / (rho + 1.0)
    return np.clip(v - theta, 0.0, None)


def _project_energy_cone(tau0: float, et: np.ndarray, t_block: float):
    """Project (tau0, et) onto {et_k <= tau0 / T for all k}.

    KKT active-set scan on the descending-sorted coordinates; the shared
    tau0 absorbs part of every active violation.
    """
    thr = tau0 / t_block
    if np.all(et <= thr):
        return tau0, et
    order = np.argsort(et)[::-1]
    s = et[order]
    t2 = t_block * t_block
    prefix = np.cumsum(s)
    k = s.size
    t_new = None
    j_sel = k
    for j in range(1, k + 1):
        t = (tau0 + prefix[j - 1] / t_block) / (1.0 + j / t2)
        ok_in = s[j - 1] >= t / t_block
        ok_out = (j == k) or (s[j] <= t / t_block)
        if ok_in and ok_out:
            t_new, j_sel = t, j
            break
    if t_new is None:
        j_sel = k
        t_new = (tau0 + prefix[-1] / t_block) / (1.0 + k / t2)
    v = et.copy()
    v[order[:j_sel]] = t_new / t_block
    return t_new, v


def _project_polytope(z: np.ndarray, g_mat: np.ndarray, h_vec: np.ndarray):
    """Exact Euclidean projection onto {y : G y <= h}.

    Uses the Lawson-Hanson least-distance-programming reduction: with
    u = y - z the problem is min ||u|| s.t. (-G) u >= G z - h, which one
    non-negative least squares solve settles. Returns None when the
    residual degenerates (empty or numerically hostile polytope) so the
    caller can fall back to alternating projections. Rows must be
    normalized for good conditioning.
    """
    q = g_mat @ z - h_vec
    scale = 1.0 + float(np.max(np.abs(z)))
    if float(q.max()) <= 1e-12 * scale:
        return z
    n = z.size
    h_stack = np.vstack((-g_mat.T, q[None, :]))
    b = np.zeros(n + 1)
    b[n] = 1.0
    try:
        x, _ = nnls(h_stack, b)
    except Exception:
        return None
    r = h_stack @ x - b
    denom = r[n]
    if not np.isfinite(denom) or abs(denom) < 1e-12:
        return None
    y = z - r[:n] / denom
    if float((g_mat @ y - h_vec).max()) > 1e-9 * scale:
        return None
    return y


def _feasible_all(y: np.ndarray, projs) -> bool:
    z = y
    for proj in projs:
        z = proj(z)
        if z is not y:
            return False
    return True


def _dykstra(y: np.ndarray, projs, max_sweeps: int = 400, tol: float = 1e-12):
    """Dykstra's alternating projections onto the intersection.

    Projectors must return their argument unchanged (same object) when
    it is already inside their set. Small per-sweep movement alone is
    not a valid stop (the point can transiently repeat while the
    corrections still evolve), so termination additionally verifies
    membership in every set; if the sweep budget runs out, plain cyclic
    projections restore feasibility at the cost of exactness.
    """
    z = y
    for proj in projs:
        z = proj(z)
    if z is y:
        return y
    if len(projs) == 1:
        return z
    corr = [None] * len(projs)
    scale = 1.0 + float(np.max(np.abs(y)))
    for _ in range(max_sweeps):
        y_start = y
        for i, proj in enumerate(projs):
            z = y if corr[i] is None else y + corr[i]
            ynew = proj(z)
            if ynew is z:
                corr[i] = None
                y = z
            else:
                corr[i] = z - ynew
                y = ynew
        if float(np.max(np.abs(y - y_start))) <= tol * scale \
                and _feasible_all(y, projs):
            return y
    for _ in range(200):  # feasibility fallback
        if _feasible_all(y, projs):
            break
        for proj in projs:
            y = proj(y)
    return y


# ---------------------------------------------------------------------------
# time/energy allocation


@dataclass
class TimeEnergySolution:
    tau0: float
    tau: np.ndarray
    dtau: float
    e: np.ndarray
    p: np.ndarray
    f: np.ndarray
    objective: float
    kkt_residual: float
    n_iters: int = 0
    trace: list = field(default=None)

    def as_allocation(self, beta=None) -> Allocation:
        return Allocation(tau0=self.tau0, tau=self.tau.copy(), dtau=self.dtau,
                          e=self.e.copy(), p=self.p.copy(), f=self.f.copy(),
                          beta=beta)


def _offload_terms(tau, e, gains, bw_over_t):
    """Value and partial derivatives of every offloading rate."""
    live = tau > _TAU_EPS
    stau = np.where(live, tau, 1.0)
    x = np.maximum(gains * e / stau, 0.0)  # guard vs projection round-off
    lg = np.log1p(x) / _LN2
    ro = np.where(live, bw_over_t * tau * lg, 0.0)
    d_tau = np.where(live, bw_over_t * (lg - x / ((1.0 + x) * _LN2)), 0.0)
    d_e = np.where(live, bw_over_t * gains / ((1.0 + x) * _LN2), 0.0)
    return ro, d_tau, d_e


def _make_e_polish(params: SystemParams, xi, gains, s, rows=None):
    """Per-device maximization over the offload energies.

    For fixed times the objective separates across devices into concave
    one-dimensional problems on e in [0, tau0 * xi]; a vectorized
    bisection on the stationarity condition solves them all at once.
    The result is kept only where it beats the incumbent coordinate, so
    the polish never lowers the objective. When edge-constraint rows are
    supplied, each device may additionally climb only by its share of
    every row's slack, which keeps the joint move feasible.
    """
    k = xi.size
    t = params.t_block
    bw_over_t = params.bandwidth / t
    cl = 1.0 / (params.phi * np.cbrt(params.kappa * t))
    c1 = cl / 3.0

    def polish(y):
        tau0 = y[0]
        tau = y[1:k + 1]
        et = y[k + 2:]
        live = (tau > _TAU_EPS) & (s > 0)
        budget = tau0 * xi
        stau = np.where(live, tau, 1.0)
        lo = np.zeros(k)
        hi = np.where(live, budget, 0.0)
        n_bisect = 30
        if rows is not None:
            a, c = rows
            headroom = np.maximum(c - a @ y, 0.0)
            coef = a[:, k + 2:]
            with np.errstate(divide="ignore", invalid="ignore"):
                lift = np.where(coef > 0, headroom[:, None] / (k * coef),
                                np.inf)
            lift = np.where(np.isnan(lift), np.inf, lift).min(axis=0) \
                if lift.size else np.full(k, np.inf)
            capped = np.where(np.isfinite(lift),
                              np.clip(et * s, 0.0, budget) + lift * s, np.inf)
            hi = np.minimum(hi, capped)
        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            d = (bw_over_t * gains / ((1.0 + gains * mid / stau) * _LN2)
                 - c1 * np.maximum(budget - mid, _GRAD_EPS) ** (-2.0 / 3.0))
            up = d > 0
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
        e_new = np.where(live, 0.5 * (lo + hi), 0.0)
        e_old = np.clip(et * s, 0.0, budget)
        off_old = np.where(live, bw_over_t * tau
                           * np.log1p(np.maximum(gains * e_old / stau, 0.0))
                           / _LN2, 0.0)
        off_new = np.where(live, bw_over_t * tau
                           * np.log1p(gains * e_new / stau) / _LN2, 0.0)
        val_old = cl * np.cbrt(budget - e_old) + off_old
        val_new = cl * np.cbrt(np.maximum(budget - e_new, 0.0)) + off_new
        take = val_new > val_old
        if not np.any(take):
            return y
        e_fin = np.where(take, e_new, e_old)
        out = y.copy()
        out[k + 2:] = np.where(s > 0, e_fin / np.where(s > 0, s, 1.0), 0.0)
        np.minimum(out[k + 2:], tau0 / t, out=out[k + 2:])
        return out

    return polish


def _make_alloc_objective(params: SystemParams, xi, gains, s, offloading_only):
    k = xi.size
    bw_over_t = params.bandwidth / params.t_block
    cl = 1.0 / (params.phi * np.cbrt(params.kappa * params.t_block))

    def fg(y):
        tau0 = y[0]
        tau = y[1:k + 1]
        grad = np.zeros_like(y)
        if offloading_only:
            e = tau0 * xi
            ro, d_tau, d_e = _offload_terms(tau, e, gains, bw_over_t)
            grad[0] = float(np.sum(d_e * xi))
            grad[1:k + 1] = d_tau
            return float(ro.sum()), grad
        et = y[k + 2:]
        e = et * s
        rem = tau0 * xi - e
        rl = cl * np.cbrt(np.maximum(rem, 0.0))
        # slope capped near the boundary; values stay exact
        gl = cl * (1.0 / 3.0) * np.maximum(rem, _GRAD_EPS) ** (-2.0 / 3.0)
        ro, d_tau, d_e = _offload_terms(tau, e, gains, bw_over_t)
        grad[0] = float(np.sum(gl * xi))
        grad[1:k + 1] = d_tau
        grad[k + 2:] = (d_e - gl) * s
        return float(rl.sum() + ro.sum()), grad

    return fg


def _edge_rows(params: SystemParams, xi, gains, tau_bar, e_bar, s,
               offloading_only, dim):
    """Tangent overestimates of the edge-capability constraint.

    Each row k demands that the linearized tail of offloaded work from
    device k on fits the edge budget; satisfying the rows implies the
    true constraint because the tangents upper-bound the concave rates.
    """
    k = xi.size
    bw_over_t = params.bandwidth / params.t_block
    ro, d_tau, d_e = _offload_terms(tau_bar, e_bar, gains, bw_over_t)
    # a dead slot needs a sloped majorant, not the zero tangent: the rate
    # is positively homogeneous, so any tangent of the 1-D ray function
    # at a reference SNR upper-bounds it on the whole domain
    dead = tau_bar <= _TAU_EPS
    if np.any(dead):
        x_ref = np.maximum(gains * s * k / params.t_block, 1.0)
        d_tau = np.where(dead, bw_over_t * (np.log1p(x_ref) / _LN2
                                            - x_ref / ((1.0 + x_ref) * _LN2)),
                         d_tau)
        d_e = np.where(dead, bw_over_t * gains / ((1.0 + x_ref) * _LN2), d_e)
        ro = np.where(dead, 0.0, ro)
    phi_t = params.phi * params.t_block
    const = phi_t * (ro - d_tau * tau_bar - d_e * e_bar)
    if np.any(dead):
        const = np.where(dead, 0.0, const)
    a = np.zeros((k, dim))
    c = np.zeros(k)
    for i in range(k):
        a[i, 1 + i:1 + k] = phi_t[i:] * d_tau[i:] - params.f_edge
        a[i, k + 1] = -params.f_edge
        if offloading_only:
            a[i, 0] = float(np.sum(phi_t[i:] * d_e[i:] * xi[i:]))
        else:
            a[i, k + 2 + i:] = phi_t[i:] * d_e[i:] * s[i:]
        c[i] = -float(np.sum(const[i:])) - EDGE_ENFORCE_MARGIN
    return a, c


def _make_projector(t_block, k, offloading_only, edge_a, edge_c, tau0_fixed):
    n_time = k + 2
    dim = n_time + (0 if offloading_only else k)

    # full constraint system G y <= h for the exact active-set projection
    rows, rhs = [], []
    for i in range(dim):
        r = np.zeros(dim)
        r[i] = -1.0
        rows.append(r)
        rhs.append(0.0)
    r = np.zeros(dim)
    r[:n_time] = 1.0
    rows.append(r)
    rhs.append(t_block)
    if not offloading_only:
        for j in range(k):
            r = np.zeros(dim)
            r[n_time + j] = 1.0
            r[0] = -1.0 / t_block
            rows.append(r)
            rhs.append(0.0)
    if edge_a is not None:
        for i in range(edge_a.shape[0]):
            rows.append(np.asarray(edge_a[i], dtype=float))
            rhs.append(float(edge_c[i]))
    g_full = np.asarray(rows)
    h_full = np.asarray(rhs)
    norms = np.linalg.norm(g_full, axis=1)
    g_full = g_full / norms[:, None]
    h_full = h_full / norms
    if tau0_fixed is not None:
        h_red = h_full - g_full[:, 0] * tau0_fixed
        g_red = g_full[:, 1:]
        keep = np.any(g_red != 0.0, axis=1)
        g_red, h_red = g_red[keep], h_red[keep]
        rn = np.linalg.norm(g_red, axis=1)
        g_red = g_red / rn[:, None]
        h_red = h_red / rn

    # alternating-projection fallback for degenerate corners
    def proj_main(y):
        time_part = y[:n_time] if tau0_fixed is None else y[1:n_time]
        budget = t_block if tau0_fixed is None else t_block - tau0_fixed
        et_hi = np.inf if tau0_fixed is None else tau0_fixed / t_block
        time_ok = time_part.min() >= 0.0 and time_part.sum() <= budget
        if tau0_fixed is not None:
            time_ok = time_ok and y[0] == tau0_fixed
        et_ok = offloading_only or (y[n_time:].min() >= 0.0
                                    and y[n_time:].max() <= et_hi)
        if time_ok and et_ok:
            return y
        out = y.copy()
        if tau0_fixed is None:
            out[:n_time] = _project_simplex_box(out[:n_time], t_block)
        else:
            out[0] = tau0_fixed
            out[1:n_time] = _project_simplex_box(out[1:n_time],
                                                 t_block - tau0_fixed)
        if not offloading_only:
            hi = None if tau0_fixed is None else tau0_fixed / t_block
            out[n_time:] = np.clip(out[n_time:], 0.0, hi)
        return out

    projs = [proj_main]
    if not offloading_only and tau0_fixed is None:
        def proj_cone(y):
            if np.all(y[n_time:] <= y[0] / t_block):
                return y
            out = y.copy()
            t0, v = _project_energy_cone(out[0], out[n_time:], t_block)
            out[0] = t0
            out[n_time:] = v
            return out
        projs.append(proj_cone)
    if edge_a is not None:
        for i in range(edge_a.shape[0]):
            row = edge_a[i].copy()
            ci = float(edge_c[i])
            if tau0_fixed is not None and row[0] != 0.0:
                ci -= row[0] * tau0_fixed
                row[0] = 0.0
            nrm2 = float(row @ row)
            if nrm2 <= 0.0:
                continue

            def proj_half(y, row=row, ci=ci, nrm2=nrm2):
                v = float(row @ y) - ci
                if v <= 0.0:
                    return y
                return y - (v / nrm2) * row

            projs.append(proj_half)

    def project(y):
        if tau0_fixed is None:
            out = _project_polytope(y, g_full, h_full)
        else:
            y_red = y[1:]
            out_red = _project_polytope(y_red, g_red, h_red)
            if out_red is None:
                out = None
            elif out_red is y_red and y[0] == tau0_fixed:
                out = y
            else:
                out = np.concatenate(([tau0_fixed], out_red))
        if out is None:
            out = _dykstra(y, projs, max_sweeps=400)
        return out

    return project


def _pga(y0, fg, project, max_iter, kkt_tol, trace=None, improve=None):
    """Projected gradient ascent with Armijo backtracking.

    Every accepted step strictly improves the objective, so a feasible
    warm start is never worsened. ``improve`` may map an accepted
    iterate to a feasible point with no smaller objective (an exact
    coordinate-block polish); it is applied after each acceptance.
    Returns (y, value, kkt_residual, iterations); the residual is the
    normalized fixed-point gap of the projected-gradient map.
    """
    y = project(np.array(y0, dtype=float))
    if improve is not None:
        y = improve(y)
    f, g = fg(y)
    step = 1.0 / (1.0 + float(np.linalg.norm(g)))
    stall = 0
    it = 0

    def residual(y, g):
        gn = float(np.linalg.norm(g))
        tref = 1.0 / (1.0 + gn)
        moved = float(np.linalg.norm(y - project(y + tref * g)))
        return moved / (tref * (1.0 + gn))

    move_tol = 1e-15
    for it in range(1, max_iter + 1):
        s_try = step
        accepted = False
        fc = gc = None
        for _ in range(80):
            cand = project(y + s_try * g)
            d = cand - y
            if float(np.max(np.abs(d))) <= move_tol * (1.0 + float(np.max(np.abs(y)))):
                break
            fc, gc = fg(cand)
            if fc >= f + _ARMIJO * float(g @ d):
                accepted = True
                break
            s_try *= 0.5
        if not accepted:
            break
        if improve is not None:
            cand2 = improve(cand)
            if cand2 is not cand:
                fc2, gc2 = fg(cand2)
                if fc2 > fc:
                    cand, fc, gc = cand2, fc2, gc2
        gain = fc - f
        y, f, g = cand, fc, gc
        step = min(s_try * 2.0, 1e8)
        if trace is not None:
            trace.append((it, f, s_try))
        if gain <= 1e-10 * (abs(f) + 1e-30):
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0
        if it % 10 == 0 and residual(y, g) <= kkt_tol:
            break
    return y, f, residual(y, g), it


def _default_starts(t_block, k, offloading_only):
    def pack(tau0, tau_each, dtau, efrac):
        y = np.concatenate(([tau0], np.full(k, tau_each), [dtau]))
        if not offloading_only:
            y = np.concatenate((y, np.full(k, efrac * tau0 / t_block)))
        return y

    t = t_block
    starts = [
        pack(0.40 * t, 0.50 * t / k, 0.10 * t, 0.5),
        pack(0.50 * t, 0.45 * t / k, 0.05 * t, 0.999),
    ]
    if not offloading_only:
        starts.append(pack(0.60 * t, 0.30 * t / k, 0.10 * t, 0.02))
    return starts


def solve_time_energy(params: SystemParams, xi, gains, mode: str = "partial", *,
                      init: Allocation | None = None, enforce_edge: bool = True,
                      edge_rounds: int = 6, tau0_grid: int | None = None,
                      tau0_fixed: float | None = None,
                      max_iter: int = MAX_PGA_ITERS, kkt_tol: float = KKT_TOL,
                      multi_start: bool = True,
                      keep_trace: bool = False) -> TimeEnergySolution:
    """Maximize the sum computational rate over times and offload energies.

    ``xi`` holds the harvested power of each device during the charging
    slot and ``gains`` the combining SNR factor of each offload link.
    In ``offloading_only`` mode the local terms are dropped and every
    device spends its full harvest on offloading. ``tau0_grid`` snaps
    the charging slot to a uniform grid with that many levels by
    re-solving at the two neighboring grid points. A feasible ``init``
    makes the returned objective at least the initial one.
    """
    if not params.t_block > 0:
        raise ValueError("block duration must be positive")
    if mode not in ("partial", "offloading_only"):
        raise ValueError("mode must be 'partial' or 'offloading_only'")
    xi = np.asarray(xi, dtype=float)
    gains = np.asarray(gains, dtype=float)
    if np.any(xi < 0) or np.any(gains < 0):
        raise ValueError("harvested powers and gains must be nonnegative")
    k = xi.size
    if k != params.k_wds:
        raise ValueError("xi length must match the number of devices")
    offloading_only = mode == "offloading_only"
    t = params.t_block
    s = xi * t
    fg = _make_alloc_objective(params, xi, gains, s, offloading_only)
    trace_rows = [] if keep_trace else None

    def y_from_alloc(alloc: Allocation):
        y = np.concatenate(([alloc.tau0], alloc.tau, [alloc.dtau]))
        if not offloading_only:
            et = np.where(s > 0, alloc.e / np.where(s > 0, s, 1.0), 0.0)
            et = np.minimum(et, alloc.tau0 / t)
            y = np.concatenate((y, et))
        return y

    def edge_profile(y):
        tau_ = y[1:k + 1]
        e_ = (y[k + 2:] * s) if not offloading_only else y[0] * xi
        ro, _, _ = _offload_terms(tau_, e_, gains,
                                  params.bandwidth / params.t_block)
        demand = suffix_sums(params.phi * params.t_block * ro)
        cap = params.f_edge * (y[k + 1] + suffix_sums(tau_))
        return demand, cap

    def edge_ok_at(y):
        demand, cap = edge_profile(y)
        return edge_slack_ok(demand, cap)

    def edge_tightish(y):
        # with little spare capacity the relaxed phase is a wasted detour
        demand, cap = edge_profile(y)
        return bool(np.any(demand >= 0.7 * cap))

    def make_edge_feasible(y):
        """Scale the offload load down until the true edge check passes,
        so the tangent rows are always anchored at a feasible point."""
        if edge_ok_at(y):
            return y
        lo, hi = 0.0, 1.0
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            yt = y.copy()
            if offloading_only:
                yt[0] = y[0] * mid
            else:
                yt[k + 2:] = y[k + 2:] * mid
            if edge_ok_at(yt):
                lo = mid
            else:
                hi = mid
        yt = y.copy()
        if offloading_only:
            yt[0] = y[0] * lo
        else:
            yt[k + 2:] = y[k + 2:] * lo
        return yt

    polish = None if offloading_only else _make_e_polish(params, xi, gains, s)

    def rows_pass(y_seed, fixed, mi, kt):
        # tangent inner approximations of the edge constraint, refreshed
        # around the iterate; anchoring at a feasible point keeps the
        # linearized polytope nonempty
        y = make_edge_feasible(np.array(y_seed, dtype=float))
        prev = -np.inf
        cur = None
        for _ in range(edge_rounds):
            tau_bar = y[1:k + 1]
            e_bar = (y[k + 2:] * s) if not offloading_only else y[0] * xi
            a, c = _edge_rows(params, xi, gains, tau_bar, e_bar, s,
                              offloading_only, y.size)
            # absorb rounding-level seed violations so a feasible warm
            # start is never nudged off its own linearization boundary
            c = np.maximum(c, np.minimum(a @ y, c + 1e-5))
            # only near-active rows enter the projections; any row that
            # turns out violated is added and the solve is repeated
            edge_scale = params.f_edge * params.t_block
            keep = (a @ y - c) >= -0.1 * edge_scale
            for _cycle in range(k + 1):
                ak, ck = a[keep], c[keep]
                project = _make_projector(t, k, offloading_only, ak, ck, fixed)
                row_polish = None if offloading_only else _make_e_polish(
                    params, xi, gains, s, rows=(ak, ck))
                y_new, f, kkt, n_it = _pga(y, fg, project, mi, kt,
                                           trace=trace_rows,
                                           improve=row_polish)
                violated = (a @ y_new - c) > 0.0
                if not np.any(violated & ~keep):
                    y = y_new
                    break
                keep = keep | violated
            cur = (y, f, kkt, n_it)
            if f - prev <= 1e-9 * (abs(f) + 1e-30):
                break
            prev = f
        return cur

    def solve_from(y0, fixed, mi, kt, skip_edge=False):
        y = np.array(y0, dtype=float)
        project = _make_projector(t, k, offloading_only, None, None, fixed)
        if enforce_edge and not skip_edge and edge_tightish(project(y)):
            best = rows_pass(y, fixed, mi, kt)
        else:
            # the relaxation is exact whenever its optimum happens to
            # satisfy the edge constraint, which is the common regime
            y_rel, f_rel, kkt_rel, it_rel = _pga(y, fg, project, mi, kt,
                                                 trace=trace_rows,
                                                 improve=polish)
            if skip_edge or not enforce_edge or edge_ok_at(y_rel):
                return y_rel, f_rel, kkt_rel, it_rel
            best = rows_pass(y_rel, fixed, mi, kt)
        # a feasible warm start must never be worsened: fall back to a
        # pass seeded at the original point when the main pass lost
        # meaningful ground (float-hair gaps are left to the callers)
        y0p = project(np.array(y0, dtype=float))
        if edge_ok_at(y0p):
            f0 = fg(y0p)[0]
            if best[1] < f0 - 1e-9 * (abs(f0) + 1e-30):
                alt = rows_pass(y0, fixed, mi, kt)
                if alt[1] > best[1]:
                    best = alt
        return best

    if init is not None:
        starts = [y_from_alloc(init)]
    elif multi_start:
        starts = _default_starts(t, k, offloading_only)
    else:
        starts = _default_starts(t, k, offloading_only)[:1]

    if len(starts) == 1:
        best = solve_from(starts[0], tau0_fixed, max_iter, kkt_tol)
    else:
        # coarse edge-free pass over the starts, then polish the winner
        coarse = None
        for y0 in starts:
            cand = solve_from(y0, tau0_fixed, min(max_iter, 300),
                              max(kkt_tol, 1e-4), skip_edge=True)
            if coarse is None or cand[1] > coarse[1]:
                coarse = cand
        best = solve_from(coarse[0], tau0_fixed, max_iter, kkt_tol)

    if tau0_grid is not None and tau0_fixed is None:
        stepsz = t / tau0_grid
        tau0_cur = best[0][0]
        lo = np.floor(tau0_cur / stepsz) * stepsz
        cands = {min(max(lo, 0.0), t), min(lo + stepsz, t)}
        snapped = None
        for v in sorted(cands):
            y0 = best[0].copy()
            y0[0] = v
            if not offloading_only:
                y0[k + 2:] = np.minimum(y0[k + 2:], v / t)
            c = solve_from(y0, v, max_iter, kkt_tol)
            if snapped is None or c[1] > snapped[1]:
                snapped = c
        best = snapped

    y, f_val, kkt, n_it = best
    # scrub projection residue: nonnegativity, then the time budget.
    # Overshoot is removed from the charging slot (falling back to the
    # spare edge slot), which leaves the offload rates and the edge
    # capacity untouched; the energy box is re-clipped afterwards.
    y = np.clip(y, 0.0, None)
    over = float(y[:k + 2].sum()) - t
    if over > 0:
        take0 = min(over, float(y[0]))
        y[0] -= take0
        over -= take0
        if over > 0:
            y[k + 1] = max(y[k + 1] - over, 0.0)
    tau0 = float(y[0])
    tau = y[1:k + 1].copy()
    dtau = float(y[k + 1])
    if offloading_only:
        e = np.where(tau > _TAU_EPS, tau0 * xi, 0.0)
        f_cpu = np.zeros(k)
    else:
        e = np.minimum(y[k + 2:] * s, tau0 * xi)
        e = np.where(tau > _TAU_EPS, e, 0.0)  # a dead slot cannot transmit
        rem = np.maximum(tau0 * xi - e, 0.0)
        f_cpu = np.cbrt(rem / (params.kappa * t))
    p = np.where(tau > _TAU_EPS, e / np.where(tau > _TAU_EPS, tau, 1.0), 0.0)
    # report the objective of the cleaned point
    y_clean = np.concatenate(([tau0], tau, [dtau]))
    if not offloading_only:
        y_clean = np.concatenate((y_clean, np.where(s > 0, e / np.where(s > 0, s, 1.0), 0.0)))
    f_val = fg(y_clean)[0]
    return TimeEnergySolution(tau0=tau0, tau=tau, dtau=dtau, e=e, p=p, f=f_cpu,
                              objective=float(f_val), kkt_residual=float(kkt),
                              n_iters=n_it, trace=trace_rows)


# ---------------------------------------------------------------------------
# combiner and PSD helpers


def mrc_combiner(h: np.ndarray, p_k: float, noise: float) -> np.ndarray:
    """Maximum-ratio combiner; its combining gain is ||h||^2 / noise."""
    h = np.asarray(h, dtype=complex)
    if float(np.real(np.vdot(h, h))) == 0.0:
        raise ValueError("channel must be nonzero")
    return np.sqrt(p_k) * h / noise


def project_psd_trace(m: np.ndarray, budget: float) -> np.ndarray:
    """Frobenius-nearest PSD matrix with trace at most ``budget``.

    Hermitian eigendecomposition followed by projecting the eigenvalue
    vector onto {lam >= 0, sum(lam) <= budget} via the water-filling
    rule lam_i = max(a_i - mu, 0).
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if float(np.max(np.abs(m - m.conj().T))) > 1e-9:
        raise ValueError("matrix is not Hermitian")
    sym = 0.5 * (m + m.conj().T)
    a, v = np.linalg.eigh(sym)
    if a[0] >= 0.0 and a.sum() <= budget:
        return sym
    lam = np.clip(a, 0.0, None)
    if lam.sum() > budget:
        u = np.sort(a)[::-1]
        css = np.cumsum(u)
        j = np.arange(1, a.size + 1)
        rho = np.nonzero(u > (css - budget) / j)[0][-1]
        mu = (css[rho] - budget) / (rho + 1.0)
        lam = np.maximum(a - mu, 0.0)
    q = (v * lam) @ v.conj().T
    return 0.5 * (q + q.conj().T)


def recover_beams(q: np.ndarray, rel_tol: float = 1e-9):
    """Eigen-beams of a PSD covariance: list of (vector, power) pairs."""
    q = np.asarray(q, dtype=complex)
    a, v = np.linalg.eigh(0.5 * (q + q.conj().T))
    thr = rel_tol * max(float(np.real(np.trace(q))), 0.0)
    out = []
    for i in range(a.size - 1, -1, -1):
        if a[i] > thr:
            out.append((v[:, i].copy(), float(a[i])))
    return out


# ---------------------------------------------------------------------------
# SCA beamforming


@dataclass
class ScaState:
    q: np.ndarray
    z: np.ndarray
    trace: np.ndarray
    line_search_failures: int = 0
    outer_iters: int = 0


def sca_beamforming(params: SystemParams, h_wpt: np.ndarray, beta, tau0: float,
                    tau, dtau: float, gains, *, q0: np.ndarray | None = None,
                    enforce_edge: bool = True, max_outer: int = 50,
                    outer_tol: float = 1e-5,
                    inner_max_iter: int = 300) -> ScaState:
    """Optimize the energy-beam covariance for fixed times and splits.

    ``h_wpt`` stacks the charging-slot channel vectors as rows (K, M);
    ``beta`` is each device's energy fraction spent on offloading and
    ``gains`` the fixed combining factors of the offload links. Each
    outer round linearizes the harvest curve in its exponential
    auxiliary variable, which minorizes the true objective, and the
    resulting concave surrogate is maximized by projected gradient
    ascent over {Q PSD, tr(Q) <= p_max}; candidates that would break
    the edge-capability constraint are rejected during the line search.
    """
    h = np.atleast_2d(np.asarray(h_wpt, dtype=complex))
    beta = np.asarray(beta, dtype=float)
    tau = np.asarray(tau, dtype=float)
    gains = np.asarray(gains, dtype=float)
    eh = params.eh
    a_, b_, xc, yc = eh.a, eh.b, eh.x_const, eh.y_const
    t = params.t_block
    cl = 1.0 / (params.phi * np.cbrt(params.kappa * t))
    bw_over_t = params.bandwidth / t
    live = tau > _TAU_EPS
    c_off = np.where(live, beta * tau0 * gains / np.where(live, tau, 1.0), 0.0)
    coef_l = (1.0 - beta) * tau0
    cap = params.f_edge * (dtau + suffix_sums(tau))
    phi_t = params.phi * t

    def powers(q):
        return np.maximum(np.real(np.einsum("km,mn,kn->k", h, q, np.conj(h))), 0.0)

    def rates_from_xi(xi):
        xi_pos = np.maximum(xi, 0.0)
        rl = cl * np.cbrt(coef_l * xi_pos)
        ro = np.where(live, bw_over_t * tau * np.log1p(c_off * xi_pos) / _LN2, 0.0)
        return rl, ro

    def true_state(q):
        p = powers(q)
        z = np.exp(-a_ * (p - b_))
        xi = xc * (1.0 / (1.0 + z)) - yc
        rl, ro = rates_from_xi(xi)
        return float(rl.sum() + ro.sum()), ro, z

    def edge_ok(ro):
        return edge_slack_ok(suffix_sums(phi_t * ro), cap)

    m = h.shape[1]
    q = np.asarray(q0, dtype=complex).copy() if q0 is not None \
        else (params.p_max / m) * np.eye(m, dtype=complex)
    q = project_psd_trace(q, params.p_max)
    if enforce_edge:
        for fac in (1.0, 0.1, 0.01, 0.0):
            _, ro0, _ = true_state(fac * q)
            if edge_ok(ro0):
                q = fac * q
                break

    obj_prev, _, _ = true_state(q)
    trace = [obj_prev]
    ls_failures = 0
    outer_done = 0

    for outer in range(1, max_outer + 1):
        outer_done = outer
        q_prev = q
        p = powers(q)
        zhat = np.exp(-a_ * (p - b_))
        inv1 = 1.0 / (1.0 + zhat)
        inv2 = inv1 * inv1

        def surr_fg(qm):
            pw = powers(qm)
            z = np.exp(-a_ * (pw - b_))
            xihat = xc * inv1 - xc * (z - zhat) * inv2 - yc
            pos = xihat > 0.0
            rl, ro = rates_from_xi(xihat)
            el = coef_l * np.maximum(xihat, 0.0)
            dl = np.where(pos, cl * (1.0 / 3.0)
                          * np.maximum(el, _GRAD_EPS) ** (-2.0 / 3.0) * coef_l, 0.0)
            arg = c_off * np.maximum(xihat, 0.0)
            do = np.where(live & pos,
                          bw_over_t * tau * c_off / ((1.0 + arg) * _LN2), 0.0)
            wgt = (dl + do) * (a_ * xc * z * inv2)
            grad = (h.conj().T * wgt) @ h
            grad = 0.5 * (grad + grad.conj().T)  # exact Hermitian symmetry
            return float(rl.sum() + ro.sum()), grad

        f, g = surr_fg(q)
        step = 1.0 / (1.0 + float(np.linalg.norm(g)))
        stall = 0
        for _ in range(inner_max_iter):
            s_try = step
            accepted = False
            backtracked = False
            while s_try >= _STEP_FLOOR:
                cand = project_psd_trace(q + s_try * g, params.p_max)
                d = cand - q
                if float(np.max(np.abs(d))) <= 1e-18:
                    break
                if enforce_edge:
                    _, ro_c, _ = true_state(cand)
                    if not edge_ok(ro_c):
                        s_try *= 0.5
                        backtracked = True
                        continue
                fc, gc = surr_fg(cand)
                if fc >= f + _ARMIJO * float(np.real(np.sum(np.conj(g) * d))):
                    accepted = True
                    break
                s_try *= 0.5
                backtracked = True
            if not accepted:
                if backtracked and s_try < _STEP_FLOOR:
                    ls_failures += 1
                break
            gain = fc - f
            q, f, g = cand, fc, gc
            step = min(s_try * 2.0, 1e8) if not backtracked else max(s_try, _STEP_FLOOR)
            if gain <= 1e-12 * (abs(f) + 1e-30):
                stall += 1
                if stall >= 4:
                    break
            else:
                stall = 0

        obj_new, _, _ = true_state(q)
        if obj_new < obj_prev:
            q = q_prev  # float-level regression: keep the previous iterate
            break
        trace.append(obj_new)
        if obj_new - obj_prev <= outer_tol * (abs(obj_prev) + 1e-30):
            obj_prev = obj_new
            break
        obj_prev = obj_new

    z_final = np.exp(-a_ * (powers(q) - b_))
    return ScaState(q=q, z=z_final, trace=np.asarray(trace),
                    line_search_failures=ls_failures, outer_iters=outer_done)
