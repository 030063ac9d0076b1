"""Episode scoring (per-area RMSE, required time), comparison and verification.

All operations are pure functions over an EpisodeLog: recomputing from a
persisted log yields bit-identical results.  Cross-track distance is the
distance from the vehicle to the nearest point on the reference polyline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .dynamics import AREA_NONE, AcceptableRegion, IntegratorConfig, shrink_limit
from .episodes import COLUMNS, EpisodeLog, MODE_PROPOSED

AREA_LABELS = ("A", "B", "C")
ALL_AREAS = "all"

CONTAINMENT_TOL_M = 1e-3
RATE_BOUND_TOL = 1e-3
RADIUS_RATE_TOL = 1e-9

_CHUNK = 4096


def cross_track(log: EpisodeLog) -> np.ndarray:
    """Per-row distance from the vehicle to the reference path."""
    path = log.scenario().path
    pts = log.array("xa_x_m", "xa_y_m")
    out = np.empty(len(pts))
    for i in range(0, len(pts), _CHUNK):
        _, d = path.project_many(pts[i:i + _CHUNK])
        out[i:i + _CHUNK] = d
    return out


def _area_mask(log: EpisodeLog, area: str) -> np.ndarray:
    labels = log.column("area")
    if area == ALL_AREAS:
        return np.array([a != AREA_NONE for a in labels], dtype=bool)
    return np.array([a == area for a in labels], dtype=bool)


def compute_rmse(log: EpisodeLog, area: str) -> Optional[float]:
    """RMS cross-track error over rows labelled with the area; None if no rows."""
    mask = _area_mask(log, area)
    if not mask.any():
        return None
    d = cross_track(log)[mask]
    return float(np.sqrt(np.mean(d * d)))


def compute_required_time(log: EpisodeLog, area: str) -> Optional[float]:
    """Time spent between first and last row in the area.

    For "all" this is the start-to-completion time of the episode; None when
    the area was never entered.
    """
    if area == ALL_AREAS:
        if not log.rows:
            return None
        return float(log.footer["final_t_s"] - log.rows[0][0])
    mask = _area_mask(log, area)
    if not mask.any():
        return None
    t = np.asarray(log.column("t_s"))[mask]
    return float(t[-1] - t[0])


@dataclass(frozen=True)
class MetricsReport:
    rmse_m: Dict[str, Optional[float]]
    required_time_s: Dict[str, Optional[float]]
    collision_count: int
    completed: bool

    def to_dict(self) -> dict:
        return {"rmse_m": dict(self.rmse_m),
                "required_time_s": dict(self.required_time_s),
                "collision_count": self.collision_count,
                "completed": self.completed}


def compute_metrics(log: EpisodeLog) -> MetricsReport:
    areas = list(AREA_LABELS) + [ALL_AREAS]
    return MetricsReport(
        rmse_m={a: compute_rmse(log, a) for a in areas},
        required_time_s={a: compute_required_time(log, a) for a in areas},
        collision_count=int(log.footer["collision_count"]),
        completed=bool(log.footer["completed"]),
    )


def aggregate(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Arithmetic mean per cell over several runs (None if any run lacks it)."""
    if not reports:
        raise ValueError("nothing to aggregate")

    def mean(values):
        if any(v is None for v in values):
            return None
        return float(sum(values) / len(values))

    areas = reports[0].rmse_m.keys()
    return MetricsReport(
        rmse_m={a: mean([r.rmse_m[a] for r in reports]) for a in areas},
        required_time_s={a: mean([r.required_time_s[a] for r in reports])
                         for a in areas},
        collision_count=int(round(sum(r.collision_count for r in reports)
                                  / len(reports))),
        completed=all(r.completed for r in reports),
    )


def _cell(v: Optional[float]) -> str:
    return "---" if v is None else f"{v:.3f}"


def render_comparison(a: MetricsReport, b: MetricsReport,
                      label_a: str = "proposed",
                      label_b: str = "simple-hsc") -> str:
    """Side-by-side per-area table (RMSE and required time)."""
    rows = [("Area A", "A"), ("Area B", "B"), ("Area C", "C"),
            ("All Areas", ALL_AREAS)]
    w = max(len(label_a), len(label_b), 10)
    head1 = f"{'':<10}  {'RMSE [m]':<{2 * w + 2}}  Required time [s]"
    head2 = (f"{'':<10}  {label_a:<{w}}  {label_b:<{w}}  "
             f"{label_a:<{w}}  {label_b:<{w}}")
    lines = [head1, head2]
    for title, key in rows:
        lines.append(
            f"{title:<10}  {_cell(a.rmse_m[key]):<{w}}  {_cell(b.rmse_m[key]):<{w}}  "
            f"{_cell(a.required_time_s[key]):<{w}}  {_cell(b.required_time_s[key]):<{w}}")
    return "\n".join(lines)


@dataclass(frozen=True)
class Comparison:
    report_a: MetricsReport
    report_b: MetricsReport
    deltas_rmse_m: Dict[str, Optional[float]]
    deltas_time_s: Dict[str, Optional[float]]
    table: str

    def to_dict(self) -> dict:
        return {"a": self.report_a.to_dict(), "b": self.report_b.to_dict(),
                "delta_rmse_m": dict(self.deltas_rmse_m),
                "delta_required_time_s": dict(self.deltas_time_s)}


def compare(log_a: EpisodeLog, log_b: EpisodeLog,
            label_a: Optional[str] = None,
            label_b: Optional[str] = None) -> Comparison:
    """Score two episodes over the same scenario, side by side (a minus b)."""
    if log_a.header["scenario_hash"] != log_b.header["scenario_hash"]:
        raise ValueError("episodes were run on different scenarios")
    ra = compute_metrics(log_a)
    rb = compute_metrics(log_b)

    def delta(da, db):
        return {k: (None if da[k] is None or db[k] is None else da[k] - db[k])
                for k in da}

    table = render_comparison(ra, rb,
                              label_a or log_a.header["mode"],
                              label_b or log_b.header["mode"])
    return Comparison(ra, rb, delta(ra.rmse_m, rb.rmse_m),
                      delta(ra.required_time_s, rb.required_time_s), table)


# ---------------------------------------------------------------------------
# runtime-checkable guarantees


@dataclass(frozen=True)
class VerificationFailure:
    check: str
    step: int
    detail: str


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    failures: List[VerificationFailure]
    checked_steps: int
    flagged_steps: int
    started_inside: bool

    def summary(self) -> str:
        if self.ok:
            return (f"ok: {self.checked_steps} steps verified "
                    f"({self.flagged_steps} flagged steps excluded from rate checks)")
        lines = [f"FAILED: {len(self.failures)} violation(s)"]
        for f in self.failures[:20]:
            lines.append(f"  [{f.check}] step {f.step}: {f.detail}")
        if len(self.failures) > 20:
            lines.append(f"  ... {len(self.failures) - 20} more")
        return "\n".join(lines)


def verify(log: EpisodeLog, max_failures: int = 1000) -> VerificationReport:
    """Check the logged episode against the controller's guarantees.

    Per step: containment within the region radius (when the episode started
    inside), the discrete barrier-rate bound k*B + c, strict barrier decrease
    on outside-region rows, exact zero correction whenever the filter is
    disengaged, the contraction rate limit on the region radius, and the
    vehicle-input identity.  Saturated/singular steps are excluded from the
    rate checks and reported separately.
    """
    if log.header["mode"] != MODE_PROPOSED:
        raise ValueError("verification applies to region-filtered episodes only")
    failures: List[VerificationFailure] = []
    k_gain = float(log.header["cbf"]["k"])
    c_gain = float(log.header["cbf"]["c"])
    icfg = log.header["integrator"]
    cfg = IntegratorConfig(dt=float(icfg["dt"]), scheme=icfg["scheme"],
                           epsilon=float(icfg["epsilon"]),
                           v_max=float(icfg["v_max"]),
                           shrink_mode=icfg["shrink_mode"])
    dt = cfg.dt
    rows = log.rows
    started_inside = bool(log.footer.get("started_inside", True))
    idx = {name: i for i, name in enumerate(COLUMNS)}
    flagged = 0

    def add(check: str, step: int, detail: str) -> None:
        if len(failures) < max_failures:
            failures.append(VerificationFailure(check, step, detail))

    for k, row in enumerate(rows):
        xa = (row[idx["xa_x_m"]], row[idx["xa_y_m"]])
        xh = (row[idx["xh_x_m"]], row[idx["xh_y_m"]])
        radius = row[idx["radius_m"]]
        dist = math.hypot(xh[0] - xa[0], xh[1] - xa[1])
        if started_inside and dist > radius + CONTAINMENT_TOL_M:
            add("containment", k,
                f"distance {dist:.6f} m exceeds radius {radius:.6f} m")
        engaged = row[idx["engaged"]]
        ub = (row[idx["u_barrier_x_mps"]], row[idx["u_barrier_y_mps"]])
        if not engaged and (ub[0] != 0.0 or ub[1] != 0.0):
            add("zero-when-disengaged", k, f"u_barrier {ub} while disengaged")
        ua = (row[idx["u_vehicle_x_mps"]], row[idx["u_vehicle_y_mps"]])
        uc = (row[idx["u_auto_x_mps"]], row[idx["u_auto_y_mps"]])
        if ua != (uc[0] + ub[0], uc[1] + ub[1]):
            add("input-identity", k, "u_vehicle != u_auto + u_barrier")
        saturated = row[idx["saturated"]]
        singular = row[idx["singular"]]
        if saturated or singular:
            flagged += 1
        if k + 1 < len(rows):
            nxt = rows[k + 1]
            b_now = row[idx["barrier"]]
            b_next = nxt[idx["barrier"]]
            rate = (b_next - b_now) / dt
            if not (saturated or singular):
                if rate > k_gain * b_now + c_gain + RATE_BOUND_TOL:
                    add("rate-bound", k,
                        f"dB/dt {rate:.6f} exceeds {k_gain * b_now + c_gain:.6f}")
                if row[idx["slack_m2"]] < 0.0 and rate >= 0.0:
                    add("outside-decrease", k,
                        f"dB/dt {rate:.6f} not negative outside the region")
            goal_vel = ((nxt[idx["xh_x_m"]] - xh[0]) / dt,
                        (nxt[idx["xh_y_m"]] - xh[1]) / dt)
            limit = shrink_limit(AcceptableRegion(center=xh), goal_vel, xa, cfg)
            if row[idx["radius_rate_mps"]] < -limit - RADIUS_RATE_TOL:
                add("radius-rate-limit", k,
                    f"radius rate {row[idx['radius_rate_mps']]:.6f} below "
                    f"-{limit:.6f}")
    return VerificationReport(ok=not failures, failures=failures,
                              checked_steps=len(rows), flagged_steps=flagged,
                              started_inside=started_inside)
