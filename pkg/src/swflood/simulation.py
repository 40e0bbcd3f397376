"""Scenario driver: spin-up plus hydrograph inflow, maxima tracking,
mass-balance accounting, snapshot output and binary checkpoints.

A scenario is described by a `key = value` config file.  The run loop clips
the CFL time step so that steps land exactly on snapshot boundaries; the
schedule is a pure function of the configuration, which makes a run
restartable from any checkpoint bitwise.
"""

from __future__ import annotations

import hashlib
import logging
import struct
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boundary import (
    BoundarySpec,
    EdgeCondition,
    EdgeKind,
    edge_mask_from_cells,
    read_riverbed_mask,
)
from .partition import BlockEngine
from .raster import RasterGrid, load_raster, write_ascii_grid
from .solver import NumericalAbort
from .state import INT, PhysicalParams, State, velocity

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"SWFCHK01"
SNAPSHOT_PRECISION = 9


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


@dataclass(frozen=True)
class Hydrograph:
    """Piecewise-linear discharge series Q(t), clamped outside the knots."""

    times: np.ndarray
    flows: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        q = np.asarray(self.flows, dtype=np.float64)
        if t.ndim != 1 or t.size == 0 or q.shape != t.shape:
            raise ValueError("hydrograph needs at least one (t, Q) knot")
        if t.size > 1 and not (np.diff(t) > 0).all():
            raise ValueError("hydrograph times must be strictly increasing")
        if (q < 0).any():
            raise ValueError("hydrograph discharge must be nonnegative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "flows", q)

    def q_at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.flows))


def interpolate_q(hg: Hydrograph, t: float) -> float:
    return hg.q_at(t)


def read_hydrograph(source) -> Hydrograph:
    """Two whitespace-separated columns `t Q` per line; `#` comments."""
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text().splitlines()
    else:
        lines = source.read().splitlines()
    times, flows = [], []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"hydrograph line {lineno}: expected 't Q', got {raw!r}")
        try:
            times.append(float(parts[0]))
            flows.append(float(parts[1]))
        except ValueError:
            raise ValueError(f"hydrograph line {lineno}: non-numeric value in {raw!r}")
    return Hydrograph(np.array(times), np.array(flows))


@dataclass
class Scenario:
    dsm_path: Path
    output_dir: Path
    total_duration: float
    snapshot_interval: float
    boundary_kinds: dict[str, str]
    riverbed_mask_path: Path | None
    hydrograph_path: Path | None
    spinup_q: float
    spinup_duration: float
    params: PhysicalParams
    initial_h: float = 0.0
    nodata_walls: bool = False


_EDGE_KEYS = ("boundary.north", "boundary.south", "boundary.east", "boundary.west")
_FLOAT_KEYS = {
    "g", "manning_n", "cfl", "h_dry", "dt_min", "dt_max",
    "spinup_q", "spinup_duration", "total_duration", "snapshot_interval",
    "initial_h",
}
_KNOWN_KEYS = (
    {"dsm", "riverbed_mask", "hydrograph", "output_dir", "nodata_walls"}
    | _FLOAT_KEYS | set(_EDGE_KEYS)
)
_BOUNDARY_VALUES = ("wall", "free_outflow", "discharge")


def _parse_bool(key: str, value: str) -> bool:
    low = value.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"key {key!r}: expected a boolean, got {value!r}")


def load_scenario(path) -> Scenario:
    """Parse a `key = value` scenario file; paths resolve relative to it."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    base = path.parent

    raw: dict[str, str] = {}
    for lineno, text in enumerate(lines, 1):
        line = text.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    def take_float(key, default=None):
        if key not in raw:
            if default is None:
                raise ConfigError(f"missing required key {key!r} in {path}")
            return default
        try:
            return float(raw[key])
        except ValueError:
            raise ConfigError(f"key {key!r}: expected a number, got {raw[key]!r}")

    def take_path(key, required):
        if key not in raw:
            if required:
                raise ConfigError(f"missing required key {key!r} in {path}")
            return None
        p = Path(raw[key])
        return p if p.is_absolute() else base / p

    total = take_float("total_duration")
    if total <= 0:
        raise ConfigError("total_duration must be positive")
    snap = take_float("snapshot_interval", total)
    if snap <= 0:
        raise ConfigError("snapshot_interval must be positive")
    spin_t = take_float("spinup_duration", 0.0)
    if spin_t < 0 or spin_t > total:
        raise ConfigError("spinup_duration must lie in [0, total_duration]")
    spin_q = take_float("spinup_q", 0.0)
    if spin_q < 0:
        raise ConfigError("spinup_q must be nonnegative")
    initial_h = take_float("initial_h", 0.0)
    if initial_h < 0:
        raise ConfigError("initial_h must be nonnegative")

    kinds = {}
    for key in _EDGE_KEYS:
        value = raw.get(key, "wall")
        if value not in _BOUNDARY_VALUES:
            raise ConfigError(
                f"key {key!r}: expected one of {_BOUNDARY_VALUES}, got {value!r}"
            )
        kinds[key.split(".", 1)[1]] = value
    n_discharge = sum(1 for v in kinds.values() if v == "discharge")
    if n_discharge > 1:
        raise ConfigError("at most one edge may carry the discharge condition")

    mask_path = take_path("riverbed_mask", required=n_discharge > 0)
    hydro_path = take_path("hydrograph", required=n_discharge > 0)

    try:
        params = PhysicalParams(
            g=take_float("g", 9.81),
            manning_n=take_float("manning_n", 0.0),
            cfl=take_float("cfl", 0.5),
            h_dry=take_float("h_dry", 1e-10),
            dt_min=take_float("dt_min", 1e-8),
            dt_max=take_float("dt_max", 10.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))

    return Scenario(
        dsm_path=take_path("dsm", required=True),
        output_dir=take_path("output_dir", required=True),
        total_duration=total,
        snapshot_interval=snap,
        boundary_kinds=kinds,
        riverbed_mask_path=mask_path,
        hydrograph_path=hydro_path,
        spinup_q=spin_q,
        spinup_duration=spin_t,
        params=params,
        initial_h=initial_h,
        nodata_walls="nodata_walls" in raw and _parse_bool(
            "nodata_walls", raw["nodata_walls"]
        ),
    )


def scenario_discharge(spinup_q: float, spinup_duration: float,
                       hg: Hydrograph):
    """Q(t): constant spin-up flow, then the hydrograph on its own clock."""

    def q_of_t(t: float) -> float:
        if t < spinup_duration:
            return spinup_q
        return hg.q_at(t - spinup_duration)

    return q_of_t


def assemble(scenario: Scenario):
    """Load inputs and build (state, boundary spec, template grid)."""
    try:
        grid = load_raster(scenario.dsm_path)
    except OSError as exc:
        raise ConfigError(f"cannot read DSM {scenario.dsm_path}: {exc}")
    try:
        state = State.from_dsm(
            grid, initial_h=scenario.initial_h, nodata_walls=scenario.nodata_walls
        )
    except ValueError as exc:
        raise ConfigError(str(exc))

    conditions = {}
    for edge, kind in scenario.boundary_kinds.items():
        if kind == "wall":
            conditions[edge] = EdgeCondition(EdgeKind.WALL)
        elif kind == "free_outflow":
            conditions[edge] = EdgeCondition(EdgeKind.FREE_OUTFLOW)
        else:
            try:
                cells = read_riverbed_mask(scenario.riverbed_mask_path.read_text())
                mask = edge_mask_from_cells(cells, edge, state.nrows, state.ncols)
            except OSError as exc:
                raise ConfigError(
                    f"cannot read riverbed mask {scenario.riverbed_mask_path}: {exc}"
                )
            except ValueError as exc:
                raise ConfigError(str(exc))
            hg = read_hydrograph(scenario.hydrograph_path)
            q_of_t = scenario_discharge(
                scenario.spinup_q, scenario.spinup_duration, hg
            )
            conditions[edge] = EdgeCondition(
                EdgeKind.DISCHARGE, discharge=q_of_t, mask=mask
            )
    return state, BoundarySpec(**conditions), grid


@dataclass
class MaximaMaps:
    """Cellwise running maxima of depth and speed, with the time of peak depth."""

    max_h: np.ndarray
    max_speed: np.ndarray
    time_of_max_h: np.ndarray

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "MaximaMaps":
        shape = (nrows, ncols)
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape))

    def update(self, h, hu, hv, t: float, h_dry: float) -> None:
        u = velocity(h, hu, h_dry)
        v = velocity(h, hv, h_dry)
        speed = np.hypot(u, v)
        rising = h > self.max_h
        self.time_of_max_h[rising] = t
        np.maximum(self.max_h, h, out=self.max_h)
        np.maximum(self.max_speed, speed, out=self.max_speed)


@dataclass
class MassBalance:
    initial_volume: float
    inflow: float = 0.0
    outflow: float = 0.0
    final_volume: float = 0.0

    def closure(self) -> float:
        """|inflow − outflow − Δstorage| relative to the largest water budget
        term, so a zero-inflow closed basin reports its drift rather than 0/0."""
        err = abs(self.inflow - self.outflow
                  - (self.final_volume - self.initial_volume))
        return err / max(self.inflow, self.initial_volume, 1e-30)


def steady_state_monitor(h_samples) -> list[float]:
    """Max-norm relative change of h between consecutive sampled states."""
    samples = [np.asarray(h, dtype=np.float64) for h in h_samples]
    if len(samples) < 2:
        raise ValueError("need at least two sampled states")
    changes = []
    for prev, cur in zip(samples, samples[1:]):
        scale = max(float(np.abs(prev).max()), 1e-30)
        changes.append(float(np.abs(cur - prev).max()) / scale)
    return changes


def _config_digest(params: PhysicalParams, state: State) -> bytes:
    """Fingerprint of everything a checkpoint must agree with to be resumable."""
    hasher = hashlib.sha256()
    hasher.update(struct.pack(
        "<8d2q",
        params.g, params.manning_n, params.h_dry, params.cfl,
        params.dt_min, params.dt_max, state.dx, state.dy,
        params.space_order, params.time_order,
    ))
    hasher.update(struct.pack("<2q2d", state.nrows, state.ncols, state.xll, state.yll))
    hasher.update(np.ascontiguousarray(state.z[INT], dtype="<f8").tobytes())
    return hasher.digest()


_HEADER = struct.Struct("<qd2q3dq")  # step, t, nrows, ncols, in, out, V0, fallbacks


def save_checkpoint(path, state: State, params: PhysicalParams, t: float,
                    step: int, maxima: MaximaMaps, balance: MassBalance,
                    fallbacks: int) -> None:
    fields = (
        state.h[INT], state.hu[INT], state.hv[INT],
        maxima.max_h, maxima.max_speed, maxima.time_of_max_h,
    )
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(_config_digest(params, state))
        f.write(_HEADER.pack(step, t, state.nrows, state.ncols,
                             balance.inflow, balance.outflow,
                             balance.initial_volume, fallbacks))
        for arr in fields:
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path, state: State, params: PhysicalParams):
    """Restore fields into ``state``; returns (t, step, maxima, balance, fallbacks)."""
    blob = Path(path).read_bytes()
    if blob[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ConfigError(f"{path} is not a checkpoint file")
    offset = len(CHECKPOINT_MAGIC)
    digest = blob[offset : offset + 32]
    if digest != _config_digest(params, state):
        raise ConfigError(
            f"checkpoint {path} was written for a different scenario "
            "(parameters, grid or topography differ)"
        )
    offset += 32
    step, t, nrows, ncols, inflow, outflow, v0, fallbacks = _HEADER.unpack_from(
        blob, offset
    )
    offset += _HEADER.size
    count = nrows * ncols
    expected = offset + 6 * count * 8
    if (nrows, ncols) != (state.nrows, state.ncols) or len(blob) != expected:
        raise ConfigError(f"checkpoint {path} does not match the grid size")

    def read_field():
        nonlocal offset
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        offset += count * 8
        return arr.reshape(nrows, ncols).astype(np.float64)

    state.h[INT] = read_field()
    state.hu[INT] = read_field()
    state.hv[INT] = read_field()
    maxima = MaximaMaps(read_field(), read_field(), read_field())
    balance = MassBalance(initial_volume=v0, inflow=inflow, outflow=outflow)
    return t, step, maxima, balance, fallbacks


@dataclass
class RunResult:
    state: State
    maxima: MaximaMaps
    balance: MassBalance
    steps: int
    final_t: float
    critical_inflow_fallbacks: int
    output_dir: Path


def _event_schedule(scenario: Scenario) -> tuple[list[float], set[float]]:
    """Times every run of this scenario must land on exactly.

    Returns (sorted events, snapshot subset).  The schedule depends only on
    the configuration, so a restarted run reproduces it bit for bit.
    """
    total = scenario.total_duration
    interval = scenario.snapshot_interval
    snaps = []
    k = 1
    while k * interval < total * (1.0 - 1e-12):
        snaps.append(k * interval)
        k += 1
    snaps.append(total)
    events = set(snaps)
    if 0.0 < scenario.spinup_duration < total:
        events.add(scenario.spinup_duration)
    return sorted(events), set(snaps)


def _write_grid(path: Path, template: RasterGrid, values: np.ndarray,
                precision: int = SNAPSHOT_PRECISION) -> None:
    grid = RasterGrid(
        ncols=template.ncols, nrows=template.nrows, xll=template.xll,
        yll=template.yll, cellsize=template.cellsize, nodata=template.nodata,
        values=np.asarray(values, dtype=np.float64),
    )
    path.write_text(write_ascii_grid(grid, precision=precision))


def _write_snapshot(outdir: Path, template: RasterGrid, state: State,
                    t: float, params: PhysicalParams, tag: str = "") -> None:
    h = state.h[INT]
    u = velocity(h, state.hu[INT], params.h_dry)
    v = velocity(h, state.hv[INT], params.h_dry)
    stamp = f"{tag}{int(round(t)):06d}"
    for name, values in (("h", h), ("u", u), ("v", v)):
        _write_grid(outdir / f"{name}_{stamp}.asc", template, values)


def run(scenario: Scenario, blocks: int = 1, restart_path=None,
        checkpoint_time: float | None = None,
        checkpoint_path=None) -> RunResult:
    """Drive a scenario to total_duration; returns maxima and mass balance.

    Writes h/u/v snapshots at every snapshot boundary, maxima maps and a
    key = value summary at the end.  On a numerical abort the last completed
    state is written with an ``abort_`` prefix and the abort propagates.
    """
    state, spec, grid = assemble(scenario)
    params = scenario.params
    outdir = Path(scenario.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    events, snapshot_times = _event_schedule(scenario)

    if checkpoint_time is not None:
        if checkpoint_path is None:
            raise ConfigError("checkpoint_time given without checkpoint_path")
        if checkpoint_time not in events:
            raise ConfigError(
                "checkpoint_time must coincide with a snapshot boundary "
                f"(got {checkpoint_time}, boundaries {events})"
            )

    if restart_path is not None:
        t, step, maxima, balance, fallbacks = load_checkpoint(
            restart_path, state, params
        )
        logger.info("restarted from %s at t = %.6f (step %d)", restart_path, t, step)
    else:
        t, step, fallbacks = 0.0, 0, 0
        maxima = MaximaMaps.zeros(state.nrows, state.ncols)
        maxima.update(state.h[INT], state.hu[INT], state.hv[INT], 0.0, params.h_dry)
        balance = MassBalance(initial_volume=state.total_volume())

    engine = BlockEngine(state, params, spec, nblocks=blocks)
    last_good = engine.gather()
    last_good_t = t
    status = "completed"
    try:
        while t < scenario.total_duration:
            target = events[bisect_right(events, t)]
            dt = engine.compute_dt(t)
            if t + dt >= target:
                dt = target - t
                t_next = target
            else:
                t_next = t + dt
            diag = engine.step(t, dt)
            step += 1
            t = t_next
            balance.inflow += diag.inflow_volume
            balance.outflow += diag.outflow_volume
            fallbacks += diag.critical_inflow_fallbacks

            current = engine.gather()
            maxima.update(current.h[INT], current.hu[INT], current.hv[INT],
                          t, params.h_dry)
            last_good, last_good_t = current, t

            if t in snapshot_times:
                _write_snapshot(outdir, grid, current, t, params)
            if checkpoint_time is not None and t == checkpoint_time:
                save_checkpoint(checkpoint_path, current, params, t, step,
                                maxima, balance, fallbacks)
                logger.info("checkpoint written to %s at t = %.6f", checkpoint_path, t)
    except NumericalAbort as exc:
        status = "aborted"
        logger.error("numerical abort at step %d, t = %.6f: %s", step + 1, t, exc)
        _write_snapshot(outdir, grid, last_good, last_good_t, params, tag="abort_")
        balance.final_volume = last_good.total_volume()
        _write_summary(outdir, status, step, last_good_t, balance, fallbacks, blocks)
        raise
    finally:
        engine.close()

    balance.final_volume = last_good.total_volume()
    _write_grid(outdir / "max_h.asc", grid, maxima.max_h)
    _write_grid(outdir / "max_speed.asc", grid, maxima.max_speed)
    _write_grid(outdir / "time_of_max_h.asc", grid, maxima.time_of_max_h)
    _write_summary(outdir, status, step, t, balance, fallbacks, blocks)
    logger.info(
        "run complete: %d steps to t = %.6f, mass closure %.3e",
        step, t, balance.closure(),
    )
    return RunResult(
        state=last_good, maxima=maxima, balance=balance, steps=step,
        final_t=t, critical_inflow_fallbacks=fallbacks, output_dir=outdir,
    )


def _write_summary(outdir: Path, status: str, steps: int, final_t: float,
                   balance: MassBalance, fallbacks: int, blocks: int) -> None:
    lines = [
        f"status = {status}",
        f"steps = {steps}",
        f"final_t = {final_t:.17g}",
        f"initial_volume = {balance.initial_volume:.17g}",
        f"final_volume = {balance.final_volume:.17g}",
        f"inflow_volume = {balance.inflow:.17g}",
        f"outflow_volume = {balance.outflow:.17g}",
        f"mass_closure = {balance.closure():.17g}",
        f"critical_inflow_fallbacks = {fallbacks}",
        f"blocks = {blocks}",
    ]
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n")
