"""Light-estimation error metrics and benchmark protocols.

All three metrics reduce over whichever samples they are handed; the sphere
protocols pass disk pixels only. Accumulation is float64 regardless of the
input dtype.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .geometry import BallSpec, CameraCrop, EnvironmentMap, Material, render_sphere
from .aggregation import ball_mask

__all__ = [
    "si_rmse",
    "angular_error",
    "normalized_rmse",
    "EvalReport",
    "evaluate_three_spheres",
    "render_sphere_array",
    "evaluate_sphere_array",
    "sample_random_camera",
]

_PARALLEL_SNAP = 1e-12  # cos this close to 1 counts as a zero angle
_NORM_FLOOR = 1e-8      # pixels with smaller RGB norm contribute zero angle
_SPAN_FLOOR = 1e-12     # percentile span below this normalizes to all-zero


def _paired(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    if p.shape != g.shape:
        raise DimensionMismatch(f"shape mismatch {p.shape} vs {g.shape}")
    return p, g


def si_rmse(pred: np.ndarray, gt: np.ndarray) -> float:
    """Scale-invariant RMSE: RMSE(s* pred, gt) with s* = <p,g>/<p,p>.

    s* is the least-squares optimal scale; an all-zero prediction gets s*=0.
    """
    p, g = _paired(pred, gt)
    denom = float(np.sum(p * p))
    scale = 0.0 if denom == 0.0 else float(np.sum(p * g)) / denom
    return float(np.sqrt(np.mean((scale * p - g) ** 2)))


def angular_error(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean per-pixel RGB angle in degrees over (..., 3) arrays.

    Pixels where either vector has norm < 1e-8 contribute zero but still
    count toward the mean.
    """
    p, g = _paired(pred, gt)
    if p.shape[-1] != 3:
        raise DimensionMismatch("angular_error expects trailing RGB axis")
    p = p.reshape(-1, 3)
    g = g.reshape(-1, 3)
    np_norm = np.linalg.norm(p, axis=1)
    g_norm = np.linalg.norm(g, axis=1)
    valid = (np_norm >= _NORM_FLOOR) & (g_norm >= _NORM_FLOOR)
    cos = np.zeros(p.shape[0])
    cos[valid] = np.sum(p[valid] * g[valid], axis=1) / (np_norm[valid] * g_norm[valid])
    ang = np.arccos(np.clip(cos, -1.0, 1.0))
    ang[cos >= 1.0 - _PARALLEL_SNAP] = 0.0
    ang[~valid] = 0.0
    return float(np.degrees(ang).mean())


def _normalize(x: np.ndarray) -> np.ndarray:
    lo = np.percentile(x, 0.1)
    hi = np.percentile(x, 99.9)
    span = hi - lo
    if span < _SPAN_FLOOR:
        return np.zeros_like(x)
    return np.clip((x - lo) / span, 0.0, 1.0)


def normalized_rmse(pred: np.ndarray, gt: np.ndarray) -> float:
    """RMSE after mapping each image's [P0.1, P99.9] range to [0, 1]."""
    p, g = _paired(pred, gt)
    return float(np.sqrt(np.mean((_normalize(p) - _normalize(g)) ** 2)))


# ---------------------------------------------------------------------------
# protocols


@dataclass(frozen=True)
class EvalReport:
    """Per-material metric table for one predicted/ground-truth map pair."""

    protocol: str
    entries: dict[str, dict[str, float]]

    def to_json(self) -> str:
        return json.dumps({"protocol": self.protocol, "metrics": self.entries}, indent=2)

    def to_table(self) -> str:
        names = ["si_rmse", "angular_error_deg", "normalized_rmse"]
        width = max(len(k) for k in self.entries)
        lines = [" " * width + "  " + "  ".join(f"{n:>18}" for n in names)]
        for material, vals in self.entries.items():
            cells = "  ".join(f"{vals[n]:>18.6f}" for n in names)
            lines.append(f"{material:<{width}}  {cells}")
        return "\n".join(lines)


THREE_SPHERE_SPEC = BallSpec(center=(64.0, 64.0), radius=64.0, image_size=(128, 128))
_THREE_SPHERE_MATERIALS = (
    ("diffuse", Material.DIFFUSE),
    ("matte", Material.MATTE),
    ("mirror", Material.MIRROR),
)


def _metric_row(pred: np.ndarray, gt: np.ndarray) -> dict[str, float]:
    return {
        "si_rmse": si_rmse(pred, gt),
        "angular_error_deg": angular_error(pred, gt),
        "normalized_rmse": normalized_rmse(pred, gt),
    }


def evaluate_three_spheres(
    pred: EnvironmentMap,
    gt: EnvironmentMap,
    spec: BallSpec = THREE_SPHERE_SPEC,
) -> EvalReport:
    """Render gray-diffuse / silver-matte / silver-mirror probes under both
    maps and compare them on disk pixels."""
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise DimensionMismatch("environment maps must share dimensions")
    inside = ball_mask(spec).data > 0.5
    entries = {}
    for name, material in _THREE_SPHERE_MATERIALS:
        rp = render_sphere(pred, material, spec).data[inside]
        rg = render_sphere(gt, material, spec).data[inside]
        entries[name] = _metric_row(rp, rg)
    return EvalReport(protocol="three-sphere", entries=entries)


def render_sphere_array(
    env: EnvironmentMap, rows: int, cols: int, sphere_radius: float
) -> tuple[np.ndarray, np.ndarray]:
    """(tiled render, tiled disk mask) for an R x C grid of diffuse probes.

    No ground plane or shadows; cells between disks stay zero.
    """
    size = int(round(2 * sphere_radius))
    spec = BallSpec(
        center=(size / 2.0, size / 2.0), radius=sphere_radius, image_size=(size, size)
    )
    tile = render_sphere(env, Material.DIFFUSE, spec).data
    inside = ball_mask(spec).data > 0.5
    grid = np.tile(tile, (rows, cols, 1))
    mask = np.tile(inside, (rows, cols))
    return grid, mask


def evaluate_sphere_array(
    pred: EnvironmentMap,
    gt: EnvironmentMap,
    rows: int = 3,
    cols: int = 5,
    sphere_radius: float = 32.0,
) -> EvalReport:
    """Tiled grid of diffuse-sphere renders under both maps, metrics over the
    disk pixels of every tile."""
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise DimensionMismatch("environment maps must share dimensions")
    if rows < 1 or cols < 1:
        raise DimensionMismatch("grid must be at least 1x1")
    pred_grid, mask = render_sphere_array(pred, rows, cols, sphere_radius)
    gt_grid, _ = render_sphere_array(gt, rows, cols, sphere_radius)
    entries = {"diffuse_array": _metric_row(pred_grid[mask], gt_grid[mask])}
    return EvalReport(protocol="array", entries=entries)


def sample_random_camera(
    seed: int,
    out_size: tuple[int, int] = (256, 192),
) -> CameraCrop:
    """Random benchmark camera: vfov U[30, 150], elevation U[-45, 45],
    azimuth U[0, 360); deterministic in seed."""
    rng = np.random.default_rng(seed)
    return CameraCrop(
        vfov_deg=float(rng.uniform(30.0, 150.0)),
        azimuth_deg=float(rng.uniform(0.0, 360.0)),
        elevation_deg=float(rng.uniform(-45.0, 45.0)),
        out_size=out_size,
    )
