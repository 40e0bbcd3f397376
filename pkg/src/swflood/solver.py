"""Second-order well-balanced finite-volume solver for the 2D shallow water
equations with topography and Manning friction.

One step runs a two-stage Heun (TVD-RK2) update.  Each stage evaluates the
spatial residual built from MUSCL traces, the hydrostatic interface
reconstruction and HLLC fluxes plus interface and centered momentum sources,
then applies the semi-implicit friction update.  Depth stays nonnegative and
dry cells carry no momentum after every stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .state import GHOSTS, INT, PhysicalParams, State, velocity

# Depth this far below zero is attributed to roundoff and clamped; anything
# worse aborts the run as a positivity failure.
POSITIVITY_TOL = 1.0e-12


class NumericalAbort(RuntimeError):
    """Unrecoverable numerical failure (NaN, negative depth, dt collapse)."""


@dataclass
class StepDiagnostics:
    dt: float
    max_wave_speed: float
    min_h: float
    inflow_volume: float = 0.0
    outflow_volume: float = 0.0
    critical_inflow_fallbacks: int = 0


@dataclass
class StageFluxes:
    """Mass flux across the four domain-edge interface lines, signed along +x/+row."""

    west: np.ndarray = None
    east: np.ndarray = None
    north: np.ndarray = None
    south: np.ndarray = None
    min_h: float = field(default=np.inf)


def _axis_residual(h, qn, qt, z, dx, g, h_dry, order):
    """Residual contribution of one sweep direction.

    Arrays are oriented with the sweep along the last axis, which carries two
    ghost cells per side; the leading axis holds only the rows being updated.
    Returns interior-shaped (Lh, Lqn, Lqt) and the mass flux at the first and
    last interior interface (the domain edges when the strip spans the grid).
    """
    un = velocity(h, qn, h_dry)
    ut = velocity(h, qt, h_dry)
    w = h + z

    hc = h[:, 1:-1]
    if order == 1:
        h_m = h_p = hc
        w_m = w_p = w[:, 1:-1]
        u_m = u_p = un[:, 1:-1]
        v_m = v_p = ut[:, 1:-1]
    else:
        h_m, h_p = kernels.muscl_reconstruct(h[:, :-2], hc, h[:, 2:], dx)
        w_m, w_p = kernels.muscl_reconstruct(w[:, :-2], w[:, 1:-1], w[:, 2:], dx)
        du = kernels.muscl_slope(un[:, :-2], un[:, 1:-1], un[:, 2:], dx)
        dv = kernels.muscl_slope(ut[:, :-2], ut[:, 1:-1], ut[:, 2:], dx)
        u_m, u_p = kernels.velocity_reconstruct(
            un[:, 1:-1], hc, h_m, h_p, du, dx, h_dry
        )
        v_m, v_p = kernels.velocity_reconstruct(
            ut[:, 1:-1], hc, h_m, h_p, dv, dx, h_dry
        )
    z_m = w_m - h_m
    z_p = w_p - h_p

    # Interface k joins trace cell k (its plus face) to trace cell k+1 (minus face).
    h_left, h_right = kernels.hydrostatic_reconstruct(
        h_p[:, :-1], z_p[:, :-1], h_m[:, 1:], z_m[:, 1:]
    )
    fh, fqn, fqt = kernels.hllc_flux(
        h_left, u_p[:, :-1], v_p[:, :-1], h_right, u_m[:, 1:], v_m[:, 1:], g
    )
    s_left, s_right = kernels.interface_sources(
        h_p[:, :-1], h_m[:, 1:], h_left, h_right, g
    )
    ctr = slice(1, -1)
    fc = kernels.centered_source(h_m[:, ctr], h_p[:, ctr], z_m[:, ctr], z_p[:, ctr], g)

    l_h = -(fh[:, 1:] - fh[:, :-1]) / dx
    l_qn = -((fqn[:, 1:] + s_left[:, 1:]) - (fqn[:, :-1] + s_right[:, :-1]) - fc) / dx
    l_qt = -(fqt[:, 1:] - fqt[:, :-1]) / dx
    return l_h, l_qn, l_qt, fh[:, 0], fh[:, -1]


def residual_arrays(h, hu, hv, z, dx, dy, params: PhysicalParams):
    """L(U) on the interior of padded arrays; ghosts must be current.

    Returns (Lh, Lhu, Lhv, edges) where edges holds the mass flux lines at
    the four domain-edge interfaces (west/east signed along +x, north/south
    along +row, i.e. positive means southward).
    """
    rows = slice(GHOSTS, h.shape[0] - GHOSTS)
    cols = slice(GHOSTS, h.shape[1] - GHOSTS)

    xh, xqn, xqt, fh_w, fh_e = _axis_residual(
        h[rows, :], hu[rows, :], hv[rows, :], z[rows, :],
        dx, params.g, params.h_dry, params.space_order,
    )
    yh, yqn, yqt, fh_n, fh_s = _axis_residual(
        h[:, cols].T, hv[:, cols].T, hu[:, cols].T, z[:, cols].T,
        dy, params.g, params.h_dry, params.space_order,
    )
    l_h = xh + yh.T
    l_hu = xqn + yqt.T
    l_hv = xqt + yqn.T
    edges = StageFluxes(west=fh_w, east=fh_e, north=fh_n, south=fh_s)
    return l_h, l_hu, l_hv, edges


def spatial_residual(state: State, params: PhysicalParams):
    """L(U) for a state whose boundary ghosts are already filled."""
    l_h, l_hu, l_hv, _ = residual_arrays(
        state.h, state.hu, state.hv, state.z, state.dx, state.dy, params
    )
    return l_h, l_hu, l_hv


def max_wave_speed(state: State, params: PhysicalParams) -> float:
    """max(|u| + sqrt(g h), |v| + sqrt(g h)) over wet cells; 0 if all dry.

    Ghost strips participate so boundary-driven waves (a discharge inflow
    onto a dry bed, say) bound the time step; corner ghosts never feed a
    flux and are skipped.
    """
    nr, nc = state.h.shape
    best = 0.0
    for rows, cols in (
        (slice(None), slice(GHOSTS, nc - GHOSTS)),
        (slice(GHOSTS, nr - GHOSTS), slice(0, GHOSTS)),
        (slice(GHOSTS, nr - GHOSTS), slice(nc - GHOSTS, None)),
    ):
        h = state.h[rows, cols]
        wet = h > params.h_dry
        if not wet.any():
            continue
        hw = h[wet]
        c = np.sqrt(params.g * hw)
        speed_u = np.abs(state.hu[rows, cols][wet]) / hw + c
        speed_v = np.abs(state.hv[rows, cols][wet]) / hw + c
        best = max(best, float(speed_u.max()), float(speed_v.max()))
    return best


def dt_from_wave_speed(speed: float, dx: float, dy: float, params: PhysicalParams) -> float:
    """CFL time step, clamped to dt_max; a collapse below dt_min aborts."""
    if speed <= 0.0:
        return params.dt_max
    dt = params.cfl * min(dx, dy) / speed
    if dt < params.dt_min:
        raise NumericalAbort(
            f"time step {dt:.3e} fell below dt_min {params.dt_min:.3e}"
        )
    return min(dt, params.dt_max)


def compute_dt(state: State, params: PhysicalParams) -> float:
    return dt_from_wave_speed(max_wave_speed(state, params), state.dx, state.dy, params)


def friction_step(h_star, q_star, h_n, q_n, dt, params: PhysicalParams, q_mag=None):
    """Semi-implicit Manning friction applied after a hyperbolic stage.

        q_next = q_star / (1 + dt * n^2 * |q_n| / (h_n * h_star^(4/3)))

    on cells wet before and after the stage; q_next = q_star where n = 0 or
    the cell just wetted; q_next = 0 on dry cells.  |q_next| never exceeds
    |q_star|.  ``q_mag`` overrides |q_n| for full velocity-magnitude coupling.
    """
    n = params.manning_n
    h_star = np.asarray(h_star, dtype=np.float64)
    q_star = np.asarray(q_star, dtype=np.float64)
    wet_now = h_star > params.h_dry
    if n == 0.0:
        return np.where(wet_now, q_star, 0.0)
    h_n = np.asarray(h_n, dtype=np.float64)
    mag = np.abs(q_n) if q_mag is None else np.asarray(q_mag, dtype=np.float64)
    wet_pair = (h_n > params.h_dry) & wet_now
    # np.where evaluates both branches; keep the power off negative depths
    safe = np.where(wet_pair, h_n, 1.0) * np.where(wet_pair, h_star, 1.0) ** (4.0 / 3.0)
    denom = np.where(wet_pair, 1.0 + (dt * n * n) * mag / safe, 1.0)
    return np.where(wet_now, q_star / denom, 0.0)


def _check_and_clamp(h, hu, hv, h_dry, context):
    """Positivity and sanity checks on interior views, mutated in place.

    Returns min depth before clamping.  NaN anywhere or depth below the
    roundoff tolerance aborts.
    """
    if not (np.isfinite(h).all() and np.isfinite(hu).all() and np.isfinite(hv).all()):
        raise NumericalAbort(f"non-finite field values after {context}")
    min_h = float(h.min())
    if min_h < -POSITIVITY_TOL:
        r, c = np.unravel_index(int(np.argmin(h)), h.shape)
        raise NumericalAbort(
            f"negative depth {min_h:.3e} at cell ({r}, {c}) after {context}"
        )
    if min_h < 0.0:
        np.maximum(h, 0.0, out=h)
    dry = h <= h_dry
    hu[dry] = 0.0
    hv[dry] = 0.0
    return min_h


def euler_friction_stage(state: State, params: PhysicalParams, dt: float) -> StageFluxes:
    """Advance the state in place by one Euler hyperbolic substep plus friction."""
    l_h, l_hu, l_hv, edges = residual_arrays(
        state.h, state.hu, state.hv, state.z, state.dx, state.dy, params
    )
    h_prev = state.h[INT].copy()
    qx_prev = state.hu[INT].copy()
    qy_prev = state.hv[INT].copy()

    h_new = h_prev + dt * l_h
    qx_star = qx_prev + dt * l_hu
    qy_star = qy_prev + dt * l_hv

    q_mag = None
    if params.friction_full_velocity:
        q_mag = np.sqrt(qx_prev * qx_prev + qy_prev * qy_prev)
    qx_new = friction_step(h_new, qx_star, h_prev, qx_prev, dt, params, q_mag)
    qy_new = friction_step(h_new, qy_star, h_prev, qy_prev, dt, params, q_mag)

    state.h[INT] = h_new
    state.hu[INT] = qx_new
    state.hv[INT] = qy_new
    edges.min_h = _check_and_clamp(
        state.h[INT], state.hu[INT], state.hv[INT], params.h_dry, "hyperbolic stage"
    )
    return edges


def combine_heun(state: State, h_n, hu_n, hv_n, params: PhysicalParams) -> None:
    """U^(n+1) = (U^n + U2) / 2, preserving nonnegativity and dry momentum."""
    state.h[INT] = 0.5 * (h_n + state.h[INT])
    state.hu[INT] = 0.5 * (hu_n + state.hu[INT])
    state.hv[INT] = 0.5 * (hv_n + state.hv[INT])
    _check_and_clamp(state.h[INT], state.hu[INT], state.hv[INT], params.h_dry, "Heun average")


def accumulate_edge_volumes(diag: StepDiagnostics, edges: StageFluxes,
                            dx: float, dy: float, weight: float) -> None:
    """Add boundary flux volumes of one stage; ``weight`` is the stage's share of dt."""
    for line, width, inward in (
        (edges.west, dy, 1.0), (edges.east, dy, -1.0),
        (edges.north, dx, 1.0), (edges.south, dx, -1.0),
    ):
        if line is None:
            continue
        q_in = inward * line * width
        diag.inflow_volume += float(np.maximum(q_in, 0.0).sum()) * weight
        diag.outflow_volume += float(np.maximum(-q_in, 0.0).sum()) * weight


def rk2_step(state: State, params: PhysicalParams, boundary_spec, t: float,
             dt: float | None = None) -> StepDiagnostics:
    """One full time step; boundaries are re-applied before each residual.

    A flat lake at rest is a bitwise fixed point.  With ``time_order = 1`` a
    single Euler stage runs instead of the Heun pair.
    """
    from .boundary import apply_boundaries

    fallbacks = apply_boundaries(state, boundary_spec, t, params)
    speed = max_wave_speed(state, params)
    if dt is None:
        dt = dt_from_wave_speed(speed, state.dx, state.dy, params)
    diag = StepDiagnostics(dt=dt, max_wave_speed=speed, min_h=np.inf,
                           critical_inflow_fallbacks=fallbacks)

    if params.time_order == 1:
        edges = euler_friction_stage(state, params, dt)
        diag.min_h = min(diag.min_h, edges.min_h)
        accumulate_edge_volumes(diag, edges, state.dx, state.dy, dt)
        return diag

    h_n = state.h[INT].copy()
    hu_n = state.hu[INT].copy()
    hv_n = state.hv[INT].copy()

    edges = euler_friction_stage(state, params, dt)
    diag.min_h = min(diag.min_h, edges.min_h)
    accumulate_edge_volumes(diag, edges, state.dx, state.dy, 0.5 * dt)

    diag.critical_inflow_fallbacks += apply_boundaries(state, boundary_spec, t + dt, params)
    edges = euler_friction_stage(state, params, dt)
    diag.min_h = min(diag.min_h, edges.min_h)
    accumulate_edge_volumes(diag, edges, state.dx, state.dy, 0.5 * dt)

    combine_heun(state, h_n, hu_n, hv_n, params)
    diag.min_h = min(diag.min_h, float(state.h[INT].min()))
    return diag
