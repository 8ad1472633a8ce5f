"""Scenario simulator: ground-truth trajectories with synthetic IMU and LiDAR data.

The vehicle moves on the LTP plane. Within each IMU interval the yaw rate
and the longitudinal acceleration are constant, so the trajectory is
piecewise CTRV (or piecewise constant-acceleration on straights) and every
state is available in closed form. The sensor box may be mounted with a
fixed roll/pitch relative to the level vehicle frame.
"""

from __future__ import annotations

import cmath
import dataclasses
import math
import os
from typing import NamedTuple, Sequence

import numpy as np

from . import config as cfgmod
from .errors import InvalidConfig
from .geometry import Vec3
from .horizontation import ImuSample
from .marker_map import Marker
from .pointcloud import LidarReturn

G_SIM = 9.81
D_C_MAX = 0.5789
SEGMENT_KINDS = ("standstill", "straight", "accel", "arc", "slalom")


class Segment(NamedTuple):
    kind: str
    duration: float
    v: float = 0.0
    yaw_rate: float = 0.0
    amplitude: float = 0.0
    wavelength: float = 0.0


@dataclasses.dataclass(frozen=True)
class Noise:
    sigma_accel: float = 0.0
    sigma_gyro: float = 0.0
    sigma_range: float = 0.0
    sigma_azimuth: float = 0.0
    sigma_survey: float = 0.0


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    markers: tuple[Marker, ...]
    segments: tuple[Segment, ...]
    imu_rate: float = 100.0
    lidar_rate: float = 20.0
    noise: Noise = Noise()
    seed: int = 0
    gravity: float = G_SIM
    x0: float = 0.0
    y0: float = 0.0
    yaw0: float = 0.0
    lidar_range: float = 16.0
    returns_per_marker: int = 12
    marker_span: float = 0.4  # vertical extent of a marker, m
    slot: float = 1e-3  # time between consecutive markers within a sweep, s
    jitter: float = 2.2e-4  # time spread of one marker's returns, s
    clutter: int = 10  # low-reflectivity points per sweep
    mount_roll: float = 0.0
    mount_pitch: float = 0.0
    name: str = "scenario"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def positive(field, value):
            if not (value > 0 and math.isfinite(value)):
                raise InvalidConfig(field, f"must be positive, got {value}")

        positive("imu_rate", self.imu_rate)
        positive("lidar_rate", self.lidar_rate)
        positive("gravity", self.gravity)
        positive("lidar_range", self.lidar_range)
        positive("slot", self.slot)
        if self.returns_per_marker < 2:
            raise InvalidConfig("returns_per_marker", "need at least 2 returns per marker")
        if not 0 <= self.jitter < self.slot:
            raise InvalidConfig("jitter", "must be in [0, slot)")
        if self.clutter < 0:
            raise InvalidConfig("clutter", "must be non-negative")
        for name in ("sigma_accel", "sigma_gyro", "sigma_range", "sigma_azimuth", "sigma_survey"):
            if getattr(self.noise, name) < 0:
                raise InvalidConfig(name, "must be non-negative")
        if not self.segments:
            raise InvalidConfig("segment", "at least one segment is required")
        if self.segments[0].kind != "standstill":
            raise InvalidConfig("segment", "the first segment must be a standstill")
        speed = 0.0
        for i, seg in enumerate(self.segments, start=1):
            field = f"segment[{i}]"
            if seg.kind not in SEGMENT_KINDS:
                raise InvalidConfig(field, f"unknown kind {seg.kind!r}")
            positive(f"{field}.duration", seg.duration)
            if round(seg.duration * self.imu_rate) < 1:
                raise InvalidConfig(f"{field}.duration", "shorter than one IMU interval")
            if seg.kind == "standstill":
                if speed != 0.0:
                    raise InvalidConfig(field, "standstill needs speed 0; decelerate first")
                continue
            if seg.v < 0:
                raise InvalidConfig(f"{field}.v", "must be non-negative")
            if seg.kind == "accel":
                speed = seg.v
                continue
            if abs(seg.v - speed) > 1e-9:
                raise InvalidConfig(
                    f"{field}.v", f"speed {seg.v} differs from current {speed}; add an accel segment"
                )
            if seg.kind == "slalom":
                positive(f"{field}.amplitude", seg.amplitude)
                positive(f"{field}.wavelength", seg.wavelength)
        ids = [m.id for m in self.markers]
        if len(set(ids)) != len(ids):
            raise InvalidConfig("marker", "duplicate marker ids")
        if not self.markers:
            raise InvalidConfig("marker", "at least one marker is required")

    @property
    def duration(self) -> float:
        return sum(round(s.duration * self.imu_rate) for s in self.segments) / self.imu_rate


# --------------------------------------------------------------------------- config files

_FLOAT_KEYS = {
    "imu_rate", "lidar_rate", "gravity", "x0", "y0", "lidar_range",
    "marker_span", "slot", "jitter",
}  # fmt: skip
_INT_KEYS = {"seed", "returns_per_marker", "clutter"}
_DEG_KEYS = {"yaw0_deg": "yaw0", "mount_roll_deg": "mount_roll", "mount_pitch_deg": "mount_pitch"}
_NOISE_KEYS = {
    "sigma_accel": 1.0, "sigma_gyro": 1.0, "sigma_range": 1.0,
    "sigma_azimuth_deg": math.pi / 180.0, "sigma_survey": 1.0,
}  # fmt: skip


def grid_markers(x0, y0, nx, ny, dx, dy, z=0.5, first_id=1) -> list[Marker]:
    out = []
    k = first_id
    for j in range(ny):
        for i in range(nx):
            out.append(Marker(k, Vec3(x0 + i * dx, y0 + j * dy, z)))
            k += 1
    return out


def scenario_from_entries(entries: Sequence[cfgmod.Entry], name: str = "scenario") -> ScenarioConfig:
    kw: dict = {"name": name}
    noise: dict = {}
    markers: list[Marker] = []
    segments: list[Segment] = []
    for e in entries:
        if e.key in _FLOAT_KEYS:
            kw[e.key] = cfgmod.to_float(e)
        elif e.key in _INT_KEYS:
            kw[e.key] = cfgmod.to_int(e)
        elif e.key in _DEG_KEYS:
            kw[_DEG_KEYS[e.key]] = math.radians(cfgmod.to_float(e))
        elif e.key in _NOISE_KEYS:
            noise[e.key.replace("_deg", "")] = cfgmod.to_float(e) * _NOISE_KEYS[e.key]
        elif e.key == "name":
            kw["name"] = e.value
        elif e.key == "marker":
            parts = e.value.split()
            if len(parts) != 4:
                raise InvalidConfig("marker", f"line {e.line}: expected 'id x y z'")
            try:
                markers.append(Marker(int(parts[0]), Vec3(*(float(p) for p in parts[1:]))))
            except ValueError:
                raise InvalidConfig("marker", f"line {e.line}: bad number in {e.value!r}") from None
        elif e.key == "marker_grid":
            parts = e.value.split()
            if len(parts) not in (6, 7):
                raise InvalidConfig("marker_grid", f"line {e.line}: expected 'x0 y0 nx ny dx dy [z]'")
            try:
                x0, y0 = float(parts[0]), float(parts[1])
                nx, ny = int(parts[2]), int(parts[3])
                dx, dy = float(parts[4]), float(parts[5])
                z = float(parts[6]) if len(parts) == 7 else 0.5
            except ValueError:
                raise InvalidConfig("marker_grid", f"line {e.line}: bad number") from None
            if nx < 1 or ny < 1:
                raise InvalidConfig("marker_grid", f"line {e.line}: counts must be >= 1")
            if (nx > 1 and abs(dx) < D_C_MAX) or (ny > 1 and abs(dy) < D_C_MAX):
                raise InvalidConfig("marker_grid", f"line {e.line}: spacing below {D_C_MAX} m")
            first = max((m.id for m in markers), default=0) + 1
            markers.extend(grid_markers(x0, y0, nx, ny, dx, dy, z, first))
        elif e.key == "segment":
            tokens = e.value.split()
            if not tokens:
                raise InvalidConfig("segment", f"line {e.line}: empty segment")
            args = dict(cfgmod.keyword_args(e, tokens[1:]))
            if "duration" not in args:
                raise InvalidConfig("segment.duration", f"line {e.line}: missing")
            args["kind"] = tokens[0].lower()
            unknown = set(args) - set(Segment._fields)
            if unknown:
                raise InvalidConfig("segment", f"line {e.line}: unknown fields {sorted(unknown)}")
            segments.append(Segment(**args))
        else:
            raise InvalidConfig(e.key, f"line {e.line}: unknown key")
    return ScenarioConfig(markers=tuple(markers), segments=tuple(segments), noise=Noise(**noise), **kw)


def bundled_scenarios() -> dict[str, str]:
    root = os.path.join(os.path.dirname(__file__), "scenarios")
    return {
        f[:-4]: os.path.join(root, f) for f in sorted(os.listdir(root)) if f.endswith(".cfg")
    }


def load_scenario(path_or_name: str) -> ScenarioConfig:
    """Read a scenario file; a bare name selects a bundled scenario."""
    if not os.path.isfile(path_or_name):
        bundled = bundled_scenarios()
        if path_or_name in bundled:
            path_or_name = bundled[path_or_name]
        else:
            raise FileNotFoundError(
                f"no scenario file {path_or_name!r}; bundled: {', '.join(bundled)}"
            )
    name = os.path.splitext(os.path.basename(path_or_name))[0]
    return scenario_from_entries(cfgmod.parse_file(path_or_name), name=name)


# --------------------------------------------------------------------------- kinematics


@dataclasses.dataclass
class GroundTruth:
    """Truth sampled at the IMU instants (index 0 is the start state)."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    yaw: np.ndarray  # unwrapped, rad
    v: np.ndarray
    yaw_rate: np.ndarray  # of the interval ending at t
    ax: np.ndarray  # LTP acceleration, m/s^2
    ay: np.ndarray
    accel: np.ndarray  # longitudinal acceleration of the interval ending at t

    def pose_at(self, t: float) -> tuple[float, float, float]:
        """Exact (x, y, yaw) at any time inside the simulated span."""
        k = int(np.searchsorted(self.t, t, side="left"))
        k = min(max(k, 1), len(self.t) - 1)
        t0 = self.t[k - 1]
        return _advance(
            float(self.x[k - 1]), float(self.y[k - 1]), float(self.yaw[k - 1]),
            float(self.v[k - 1]), float(self.yaw_rate[k]), float(self.accel[k]), t - t0,
        )  # fmt: skip


def _advance(x, y, yaw, v, w, a, dt):
    """Closed-form motion with constant yaw rate ``w`` or constant acceleration ``a``."""
    if a != 0.0:
        s = v * dt + 0.5 * a * dt * dt
        return x + s * math.cos(yaw), y + s * math.sin(yaw), yaw
    if w == 0.0:
        s = v * dt
        return x + s * math.cos(yaw), y + s * math.sin(yaw), yaw
    z = complex(x, y) + v / (1j * w) * (cmath.exp(1j * (yaw + w * dt)) - cmath.exp(1j * yaw))
    return z.real, z.imag, yaw + w * dt


def _profile(cfg: ScenarioConfig):
    """Per-interval yaw rate and longitudinal acceleration, plus segment bookkeeping."""
    rate = cfg.imu_rate
    w_list: list[float] = []
    a_list: list[float] = []
    speed = 0.0
    for seg in cfg.segments:
        n = int(round(seg.duration * rate))
        if seg.kind == "accel":
            acc = (seg.v - speed) / (n / rate)
            w_list += [0.0] * n
            a_list += [acc] * n
            speed = seg.v
        elif seg.kind == "arc":
            w_list += [seg.yaw_rate] * n
            a_list += [0.0] * n
        elif seg.kind == "slalom":
            kappa = 2.0 * math.pi * seg.v / seg.wavelength
            psi_a = seg.amplitude * 2.0 * math.pi / seg.wavelength
            prev = 0.0
            for i in range(1, n + 1):
                cur = psi_a * math.sin(kappa * i / rate)
                w_list.append((cur - prev) * rate)
                a_list.append(0.0)
                prev = cur
        else:
            w_list += [0.0] * n
            a_list += [0.0] * n
    return w_list, a_list


def trajectory(cfg: ScenarioConfig) -> GroundTruth:
    rate = cfg.imu_rate
    w_list, a_list = _profile(cfg)
    n = len(w_list)
    t = np.arange(n + 1) / rate
    x = np.empty(n + 1)
    y = np.empty(n + 1)
    yaw = np.empty(n + 1)
    v = np.empty(n + 1)
    x[0], y[0], yaw[0], v[0] = cfg.x0, cfg.y0, cfg.yaw0, 0.0

    # closed form from each run of constant (w, a) start, so long arcs stay exact
    k = 0
    while k < n:
        w, a = w_list[k], a_list[k]
        j = k
        while j < n and w_list[j] == w and a_list[j] == a:
            j += 1
        x0, y0, psi0, v0 = x[k], y[k], yaw[k], v[k]
        for i in range(k + 1, j + 1):
            dt = (i - k) / rate
            x[i], y[i], yaw[i] = _advance(x0, y0, psi0, v0, w, a, dt)
            v[i] = v0 + a * dt
        k = j

    yaw_rate = np.array([0.0] + w_list)
    accel = np.array([0.0] + a_list)
    ax = accel * np.cos(yaw) - v * yaw_rate * np.sin(yaw)
    ay = accel * np.sin(yaw) + v * yaw_rate * np.cos(yaw)
    return GroundTruth(t, x, y, yaw, v, yaw_rate, ax, ay, accel)


def _mount_matrix(roll: float, pitch: float) -> np.ndarray:
    """Sensor-to-level rotation of the sensor box (roll about x, then pitch about y)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    return ry @ rx


def imu_samples(cfg: ScenarioConfig, truth: GroundTruth, rng: np.random.Generator) -> list[ImuSample]:
    mount_t = _mount_matrix(cfg.mount_roll, cfg.mount_pitch).T
    n = len(truth.t) - 1
    na = cfg.noise.sigma_accel * rng.standard_normal((n, 3)) if cfg.noise.sigma_accel else np.zeros((n, 3))
    ng = cfg.noise.sigma_gyro * rng.standard_normal((n, 3)) if cfg.noise.sigma_gyro else np.zeros((n, 3))
    out = []
    for k in range(1, n + 1):
        c, s = math.cos(truth.yaw[k]), math.sin(truth.yaw[k])
        ax, ay = truth.ax[k], truth.ay[k]
        level = np.array([c * ax + s * ay, -s * ax + c * ay, cfg.gravity])
        a_body = mount_t @ level + na[k - 1]
        w_body = mount_t @ np.array([0.0, 0.0, truth.yaw_rate[k]]) + ng[k - 1]
        out.append(ImuSample(float(truth.t[k]), Vec3(*map(float, a_body)), Vec3(*map(float, w_body))))
    return out


def lidar_returns(cfg: ScenarioConfig, truth: GroundTruth, rng: np.random.Generator) -> list[LidarReturn]:
    mount_t = _mount_matrix(cfg.mount_roll, cfg.mount_pitch).T
    k_ret = cfg.returns_per_marker
    period = 1.0 / cfg.lidar_rate
    t_end = float(truth.t[-1])
    mxy = np.array([[m.p_ltp.x, m.p_ltp.y, m.p_ltp.z] for m in cfg.markers])
    noise = cfg.noise
    out: list[LidarReturn] = []
    j = 1
    while True:
        t_s = round(j * period, 9)
        if t_s > t_end:
            break
        j += 1
        px, py, psi = truth.pose_at(t_s)
        c, s = math.cos(psi), math.sin(psi)
        dx = mxy[:, 0] - px
        dy = mxy[:, 1] - py
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        dist = np.hypot(lx, ly)
        visible = np.flatnonzero(dist <= cfg.lidar_range)
        az = np.mod(np.arctan2(ly[visible], lx[visible]), 2.0 * math.pi)
        order = visible[np.argsort(az, kind="stable")]
        if len(order) * cfg.slot > period:
            raise InvalidConfig("slot", f"{len(order)} visible markers do not fit in one sweep")
        sweep: list[LidarReturn] = []
        for i, idx in enumerate(order):
            for r in range(k_ret):
                frac = r / (k_ret - 1)
                t = t_s + i * cfg.slot + frac * cfg.jitter
                if t > t_end:
                    continue
                qx, qy, qpsi = truth.pose_at(t)
                c2, s2 = math.cos(qpsi), math.sin(qpsi)
                ex, ey = mxy[idx, 0] - qx, mxy[idx, 1] - qy
                hx = c2 * ex + s2 * ey
                hy = -s2 * ex + c2 * ey
                if noise.sigma_range or noise.sigma_azimuth:
                    rng_ = math.hypot(hx, hy) + noise.sigma_range * rng.standard_normal()
                    ang = math.atan2(hy, hx) + noise.sigma_azimuth * rng.standard_normal()
                    hx, hy = rng_ * math.cos(ang), rng_ * math.sin(ang)
                hz = mxy[idx, 2] + cfg.marker_span * (frac - 0.5)
                p = mount_t @ np.array([hx, hy, hz])
                sweep.append(LidarReturn(round(t, 9), Vec3(*map(float, p)), 255))
        for _ in range(cfg.clutter):
            t = t_s + rng.uniform(0.0, period)
            if t > t_end:
                continue
            rr = rng.uniform(1.0, cfg.lidar_range)
            ang = rng.uniform(0.0, 2.0 * math.pi)
            p = Vec3(rr * math.cos(ang), rr * math.sin(ang), float(rng.uniform(-1.0, 3.0)))
            sweep.append(LidarReturn(float(t), p, int(rng.integers(0, 200))))
        sweep.sort(key=lambda r: r.t)
        out.extend(sweep)
    out.sort(key=lambda r: r.t)
    return out


def surveyed_markers(cfg: ScenarioConfig, rng: np.random.Generator) -> list[Marker]:
    sigma = cfg.noise.sigma_survey
    if not sigma:
        return list(cfg.markers)
    out = []
    for m in cfg.markers:
        e = sigma * rng.standard_normal(3)
        out.append(Marker(m.id, Vec3(m.p_ltp.x + e[0], m.p_ltp.y + e[1], m.p_ltp.z + e[2])))
    return out


class Simulation(NamedTuple):
    truth: GroundTruth
    imu: list[ImuSample]
    lidar: list[LidarReturn]
    markers: list[Marker]  # as surveyed (noisy)


def simulate(cfg: ScenarioConfig) -> Simulation:
    """Deterministic for a given config (the seed included)."""
    cfg.validate()
    truth = trajectory(cfg)
    # independent streams so that e.g. changing the clutter count leaves IMU noise intact
    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    imu_rng, lidar_rng, survey_rng = (np.random.default_rng(s) for s in seeds)
    return Simulation(
        truth,
        imu_samples(cfg, truth, imu_rng),
        lidar_returns(cfg, truth, lidar_rng),
        surveyed_markers(cfg, survey_rng),
    )
