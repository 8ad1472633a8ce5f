"""End-to-end estimation over IMU and LiDAR logs.

The IMU stream drives a dead-reckoned state (position, yaw, speed) which
serves as the rough pose for marker identification. LiDAR clusters are
identified and paired as they arrive:

* a marker seen again (within ``max_pair_dt``) gives a velocity fix;
* two consecutive observations of different markers give a pose fix.

Fixes overwrite the dead-reckoned state at their own timestamp, and the
state is carried forward to the current IMU instant.
"""

from __future__ import annotations

import bisect
import cmath
import dataclasses
import logging
import math
import os
from collections import Counter
from typing import NamedTuple, Sequence

from . import config as cfgmod
from .errors import AmbiguousMatch, DegeneratePair, InvalidConfig, NegativeDiscriminant, NoMarkerInRange
from .estimator import (
    MarkerObservation,
    Quality,
    VehicleStateEstimate,
    ctrv_delta,
    estimate_pose,
    estimate_velocity,
)
from .geometry import rotate2d, wrap_angle
from .horizontation import (
    T_INIT,
    ImuSample,
    gyro_update,
    init_standstill,
    level,
    project_motion,
    set_yaw,
)
from .marker_map import MarkerLibrary, RoughPose, identify
from .pointcloud import LidarReturn, PipelineConfig, cluster_by_time, filter_reflectivity

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    markers: str = "markers.csv"
    imu: str = "imu.csv"
    lidar: str = "lidar.csv"
    x0: float = 0.0
    y0: float = 0.0
    yaw0: float = 0.0  # rad
    v0: float = 0.0
    pipeline: PipelineConfig = PipelineConfig()
    max_pair_dt: float = 0.25  # s, oldest partner accepted for a fix
    dv_gate: float = 0.5  # m/s, IMU speed change above which a pair is not constant-speed
    dr_rate: float = 10.0  # Hz, dead-reckoned trajectory rows

    def with_pipeline(self, **overrides) -> "RunConfig":
        return dataclasses.replace(self, pipeline=dataclasses.replace(self.pipeline, **overrides))


def load_run_config(path: str | os.PathLike) -> RunConfig:
    """Read a run file; relative log paths resolve against the file's directory."""
    base = os.path.dirname(os.path.abspath(path))
    kw: dict = {}
    pipe: dict = {}
    for e in cfgmod.parse_file(path):
        if e.key in ("markers", "imu", "lidar"):
            kw[e.key] = os.path.join(base, e.value)
        elif e.key in ("x0", "y0", "v0", "max_pair_dt", "dv_gate", "dr_rate"):
            kw[e.key] = cfgmod.to_float(e)
        elif e.key == "yaw0_deg":
            kw["yaw0"] = math.radians(cfgmod.to_float(e))
        elif e.key in ("reflectivity_threshold", "n_min"):
            pipe[e.key] = cfgmod.to_int(e)
        elif e.key == "cluster_ms":
            pipe["cluster_time"] = cfgmod.to_float(e) / 1000.0
        elif e.key in ("d_velo_max", "d_c_max", "lidar_max_rpm"):
            pipe[e.key] = cfgmod.to_float(e)
        else:
            raise InvalidConfig(e.key, f"line {e.line}: unknown key")
    try:
        kw["pipeline"] = PipelineConfig(**pipe)
    except ValueError as exc:
        raise InvalidConfig("pipeline", str(exc)) from None
    return RunConfig(**kw)


def write_run_config(path, run: RunConfig) -> None:
    p = run.pipeline
    lines = [
        f"markers = {run.markers}",
        f"imu = {run.imu}",
        f"lidar = {run.lidar}",
        f"x0 = {run.x0:.6f}",
        f"y0 = {run.y0:.6f}",
        f"yaw0_deg = {math.degrees(run.yaw0):.6f}",
        f"reflectivity_threshold = {p.reflectivity_threshold}",
        f"cluster_ms = {p.cluster_time * 1000.0:.6f}",
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


class _State(NamedTuple):
    t: float
    yaw_int: float  # integrated LTP yaw rate
    u_int: float  # integrated longitudinal acceleration (IMU only)
    s_int: float  # integrated dead-reckoned speed
    x: float
    y: float
    yaw: float
    v: float


def _lerp(a: _State, b: _State, t: float) -> _State:
    span = b.t - a.t
    f = 0.0 if span <= 0.0 else (t - a.t) / span
    # acceleration is constant inside an interval, so distance is quadratic in time
    bend = 0.5 * (b.u_int - a.u_int) * span * f * (1.0 - f)
    return _State(
        t,
        a.yaw_int + f * (b.yaw_int - a.yaw_int),
        a.u_int + f * (b.u_int - a.u_int),
        a.s_int + f * (b.s_int - a.s_int) - bend,
        a.x + f * (b.x - a.x),
        a.y + f * (b.y - a.y),
        wrap_angle(a.yaw + f * wrap_angle(b.yaw - a.yaw)),
        a.v + f * (b.v - a.v),
    )


class PipelineResult(NamedTuple):
    estimates: list[VehicleStateEstimate]
    counts: Counter


class _Runner:
    def __init__(self, library: MarkerLibrary, run: RunConfig):
        self.library = library
        self.run = run
        self.hist: list[_State] = []
        self.times: list[float] = []
        self.out: list[VehicleStateEstimate] = []
        self.counts: Counter = Counter()
        self.last: tuple[MarkerObservation, _State] | None = None
        self.last_by_id: dict[int, tuple[MarkerObservation, _State]] = {}
        self.tracker = None

    # history ---------------------------------------------------------------
    def push(self, s: _State) -> None:
        self.hist.append(s)
        self.times.append(s.t)

    def at(self, t: float) -> _State:
        k = bisect.bisect_left(self.times, t)
        if k == 0:
            return self.hist[0]._replace(t=t) if t < self.times[0] else self.hist[0]
        if k >= len(self.hist):
            return self.hist[-1]
        return _lerp(self.hist[k - 1], self.hist[k], t)

    def mean_u(self, t1: float, t2: float) -> float:
        """Time average of the IMU speed integral over [t1, t2] (exact: it is piecewise linear)."""
        k1 = bisect.bisect_right(self.times, t1)
        k2 = bisect.bisect_left(self.times, t2)
        pts = [(t1, self.at(t1).u_int)]
        pts += [(s.t, s.u_int) for s in self.hist[k1:k2]]
        pts.append((t2, self.at(t2).u_int))
        area = sum(0.5 * (ua + ub) * (tb - ta) for (ta, ua), (tb, ub) in zip(pts, pts[1:]))
        return area / (t2 - t1)

    def chord_ratio(self, t1: float, t2: float) -> float:
        """Chord over path length for constant speed along the integrated heading.

        The heading is piecewise linear in time, so each piece integrates
        exp(i*psi) in closed form; the result is 1 on a straight line.
        """
        k1 = bisect.bisect_right(self.times, t1)
        k2 = bisect.bisect_left(self.times, t2)
        pts = [(t1, self.at(t1).yaw_int)]
        pts += [(s.t, s.yaw_int) for s in self.hist[k1:k2]]
        pts.append((t2, self.at(t2).yaw_int))
        acc = 0j
        for (ta, pa), (tb, pb) in zip(pts, pts[1:]):
            dp = pb - pa
            if abs(dp) < 1e-12:
                acc += (tb - ta) * cmath.exp(1j * 0.5 * (pa + pb))
            else:
                acc += (tb - ta) * (cmath.exp(1j * pb) - cmath.exp(1j * pa)) / (1j * dp)
        return abs(acc) / (t2 - t1)

    def overwrite(self, s: _State) -> None:
        """Replace the state at ``s.t`` and carry it forward to the newest instant."""
        now = self.hist[-1]
        dt = now.t - s.t
        if dt <= 0.0:
            self.hist[-1] = s
            return
        v_now = max(0.0, s.v + (now.u_int - s.u_int))
        d = ctrv_delta(0.5 * (s.v + v_now), (now.yaw_int - s.yaw_int) / dt, dt)
        ox, oy = rotate2d(s.yaw, d.dx, d.dy)
        self.hist[-1] = now._replace(x=s.x + ox, y=s.y + oy, yaw=wrap_angle(s.yaw + d.dyaw), v=v_now)
        k = bisect.bisect_left(self.times, s.t)
        if k < len(self.times) and self.times[k] == s.t:
            self.hist[k] = s
        else:
            self.hist.insert(k, s)
            self.times.insert(k, s.t)

    # processing ------------------------------------------------------------
    def imu_step(self, sample: ImuSample) -> None:
        prev = self.hist[-1]
        self.tracker = gyro_update(self.tracker, sample)
        hm = project_motion(self.tracker, sample)
        dt = sample.t - prev.t
        v_new = max(0.0, prev.v + hm.a_long * dt)
        v_avg = 0.5 * (prev.v + v_new)
        d = ctrv_delta(v_avg, hm.yaw_rate_ltp, dt)
        ox, oy = rotate2d(prev.yaw, d.dx, d.dy)
        self.push(
            _State(
                sample.t,
                prev.yaw_int + hm.yaw_rate_ltp * dt,
                prev.u_int + hm.a_long * dt,
                prev.s_int + v_avg * dt,
                prev.x + ox,
                prev.y + oy,
                wrap_angle(prev.yaw + d.dyaw),
                v_new,
            )
        )

    def cluster(self, c) -> None:
        run = self.run
        p = level(self.tracker, c.p)
        st = self.at(c.t)
        try:
            marker = identify(self.library, RoughPose(st.x, st.y, st.yaw), p)
        except (NoMarkerInRange, AmbiguousMatch) as exc:
            self.counts[type(exc).__name__] += 1
            log.debug("cluster at t=%.6f skipped: %s", c.t, exc)
            return
        obs = MarkerObservation.from_xy(c.t, marker.id, p[0], p[1])
        self.counts["observations"] += 1

        prev = self.last_by_id.get(marker.id)
        if prev is not None:
            pobs, pst = prev
            dt = obs.t - pobs.t
            du = st.u_int - pst.u_int
            if 0.0 < dt <= run.max_pair_dt and abs(du) <= run.dv_gate:
                try:
                    v_mean = estimate_velocity(pobs, obs, (st.yaw_int - pst.yaw_int) / dt)
                except NegativeDiscriminant as exc:
                    self.counts["NegativeDiscriminant"] += 1
                    log.debug("velocity fix at t=%.6f skipped: %s", obs.t, exc)
                else:
                    # the fix is the mean speed over the pair; the IMU moves it to the end
                    v_mean /= self.chord_ratio(pobs.t, obs.t)
                    v_end = v_mean + st.u_int - self.mean_u(pobs.t, obs.t)
                    st = st._replace(v=max(0.0, v_end))
                    self.overwrite(st)
                    self.out.append(
                        VehicleStateEstimate(obs.t, st.x, st.y, st.yaw, st.v, Quality.VELOCITY_ONLY)
                    )
                    self.counts["velocity_fixes"] += 1

        if self.last is not None and self.last[0].marker_id != marker.id:
            lobs, lst = self.last
            dt = obs.t - lobs.t
            du = st.u_int - lst.u_int
            if 0.0 <= dt <= run.max_pair_dt and abs(du) <= run.dv_gate:
                if dt > 0.0:
                    yaw_rate = (st.yaw_int - lst.yaw_int) / dt
                    v_pair = (st.s_int - lst.s_int) / dt
                else:
                    yaw_rate, v_pair = 0.0, st.v
                try:
                    _, est = estimate_pose(
                        lobs, obs, self.library[lobs.marker_id], marker, v_pair, yaw_rate
                    )
                except DegeneratePair as exc:
                    self.counts["DegeneratePair"] += 1
                    log.debug("pose fix at t=%.6f skipped: %s", obs.t, exc)
                else:
                    est = est._replace(v=st.v)
                    self.out.append(est)
                    st = st._replace(x=est.x, y=est.y, yaw=est.yaw)
                    self.overwrite(st)
                    now = self.hist[-1]
                    self.tracker = set_yaw(self.tracker, now.yaw)
                    self.counts["pose_fixes"] += 1

        self.last = (obs, st)
        self.last_by_id[marker.id] = (obs, st)


def run_pipeline(
    imu: Sequence[ImuSample],
    lidar: Sequence[LidarReturn],
    library: MarkerLibrary,
    run: RunConfig = RunConfig(),
) -> PipelineResult:
    """Estimate the trajectory; the IMU log must start with a standstill."""
    if not imu:
        raise InvalidConfig("imu", "IMU log is empty")
    t0 = imu[0].t
    n_init = 0
    while n_init < len(imu) and imu[n_init].t - t0 <= T_INIT + 1e-9:
        n_init += 1
    runner = _Runner(library, run)
    runner.tracker = init_standstill(imu[:n_init], run.yaw0)
    runner.push(_State(runner.tracker.t_last, 0.0, 0.0, 0.0, run.x0, run.y0, runner.tracker.yaw, run.v0))

    clusters = cluster_by_time(filter_reflectivity(lidar, run.pipeline), run.pipeline)
    if not clusters:
        log.warning("no marker clusters in the LiDAR log; trajectory is dead reckoning only")
    ci = 0
    while ci < len(clusters) and clusters[ci].t <= runner.tracker.t_last:
        runner.cluster(clusters[ci])
        ci += 1

    dr_period = 1.0 / run.dr_rate if run.dr_rate > 0 else math.inf
    t_start = runner.tracker.t_last
    k_dr = 1
    for sample in imu[n_init:]:
        runner.imu_step(sample)
        while ci < len(clusters) and clusters[ci].t <= sample.t:
            runner.cluster(clusters[ci])
            ci += 1
        if sample.t + 1e-9 >= t_start + k_dr * dr_period:
            s = runner.hist[-1]
            runner.out.append(VehicleStateEstimate(s.t, s.x, s.y, s.yaw, s.v, Quality.DEAD_RECKONED))
            k_dr += 1
    runner.counts["clusters"] = len(clusters)
    runner.counts["clusters_after_imu"] = len(clusters) - ci
    estimates = sorted(runner.out, key=lambda e: e.t)
    return PipelineResult(estimates, runner.counts)
