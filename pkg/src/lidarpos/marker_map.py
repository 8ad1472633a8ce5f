"""Surveyed marker library and cluster-to-marker identification."""

from __future__ import annotations

import csv
import math
import os
from typing import Iterable, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import AmbiguousMatch, DuplicateId, MarkersTooClose, NoMarkerInRange, ParseError
from .geometry import Vec3, rotate2d

D_C_MAX = 0.5789
TIE_MARGIN = 0.05
HEADER = ("id", "x", "y", "z")


class Marker(NamedTuple):
    id: int
    p_ltp: Vec3


class RoughPose(NamedTuple):
    x: float
    y: float
    psi: float


class MarkerLibrary:
    """Immutable set of markers with a horizontal nearest-neighbor index."""

    def __init__(self, markers: Iterable[Marker], d_c_max: float = D_C_MAX,
                 tie_margin: float = TIE_MARGIN):
        self.markers: tuple[Marker, ...] = tuple(markers)
        if not self.markers:
            raise ParseError("empty library")
        self.d_c_max = d_c_max
        self.match_radius = d_c_max / 2.0
        self.tie_margin = tie_margin
        self.by_id: dict[int, Marker] = {}
        for m in self.markers:
            if m.id in self.by_id:
                raise DuplicateId(f"marker id {m.id} appears more than once")
            self.by_id[m.id] = m
        xy = np.array([[m.p_ltp.x, m.p_ltp.y] for m in self.markers], dtype=float)
        self._tree = cKDTree(xy)
        for i, j in sorted(self._tree.query_pairs(d_c_max)):
            dist = float(np.hypot(*(xy[i] - xy[j])))
            if dist < d_c_max:
                a, b = self.markers[i].id, self.markers[j].id
                raise MarkersTooClose(
                    f"markers {a} and {b} are {dist:.4f} m apart, minimum is {d_c_max:.4f} m"
                )

    def __len__(self) -> int:
        return len(self.markers)

    def __getitem__(self, marker_id: int) -> Marker:
        return self.by_id[marker_id]

    def nearest(self, x: float, y: float, k: int = 2) -> list[tuple[float, Marker]]:
        k = min(k, len(self.markers))
        dist, idx = self._tree.query((x, y), k=k)
        dist = np.atleast_1d(dist)
        idx = np.atleast_1d(idx)
        return [(float(d), self.markers[int(i)]) for d, i in zip(dist, idx)]


def load_library(path: str | os.PathLike, d_c_max: float = D_C_MAX) -> MarkerLibrary:
    path = os.fspath(path)
    markers: list[Marker] = []
    seen: dict[int, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty library", path=path)
        if tuple(h.strip() for h in header) != HEADER:
            raise ParseError(f"expected header {','.join(HEADER)}", path=path, line=1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", path=path, line=line)
            try:
                mid = int(row[0])
                x, y, z = (float(v) for v in row[1:])
            except ValueError as exc:
                raise ParseError(str(exc), path=path, line=line) from None
            if not all(math.isfinite(v) for v in (x, y, z)):
                raise ParseError("non-finite coordinate", path=path, line=line)
            if mid in seen:
                raise DuplicateId(
                    f"marker id {mid} already defined on line {seen[mid]}", path=path, line=line
                )
            seen[mid] = line
            markers.append(Marker(mid, Vec3(x, y, z)))
    if not markers:
        raise ParseError("empty library", path=path)
    return MarkerLibrary(markers, d_c_max=d_c_max)


def write_library(path: str | os.PathLike, markers: Iterable[Marker]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for m in markers:
            w.writerow([m.id, f"{m.p_ltp.x:.6f}", f"{m.p_ltp.y:.6f}", f"{m.p_ltp.z:.6f}"])


def apparent_position(rough: RoughPose, x_m: float, y_m: float) -> tuple[float, float]:
    """LTP position of an LCP measurement seen from the rough pose."""
    dx, dy = rotate2d(rough.psi, x_m, y_m)
    return rough.x + dx, rough.y + dy


def identify(library: MarkerLibrary, rough: RoughPose, p_m) -> Marker:
    """Nearest library marker to the measurement placed at the rough pose.

    ``p_m`` is a :class:`~lidarpos.pointcloud.Cluster` or any (x, y[, z])
    sequence in LCP. Matching is horizontal only.
    """
    p = getattr(p_m, "p", p_m)
    sx, sy = apparent_position(rough, p[0], p[1])
    hits = library.nearest(sx, sy, k=2)
    d0, best = hits[0]
    if d0 > library.match_radius:
        raise NoMarkerInRange(
            f"nearest marker {best.id} is {d0:.3f} m from ({sx:.3f}, {sy:.3f}), "
            f"match radius {library.match_radius:.3f} m"
        )
    if len(hits) > 1 and hits[1][0] - d0 < library.tie_margin:
        raise AmbiguousMatch(
            f"markers {best.id} and {hits[1][1].id} are within {library.tie_margin} m "
            f"of each other from ({sx:.3f}, {sy:.3f})"
        )
    return best
