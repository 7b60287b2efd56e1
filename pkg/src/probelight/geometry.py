"""Equirectangular environment maps, chrome-ball projections, and renderers.

Conventions, fixed across the package:
  * world frame: +y up, camera at the origin looking along -z,
  * equirectangular mapping: u = 0.5 + atan2(d_x, -d_z) / (2 pi),
    v = arccos(d_y) / pi, width = 2 * height, pixel centers at (i+0.5)/W,
  * the chrome ball is a unit sphere under orthographic projection viewed
    along +z: a disk pixel at normalized coords (a, b) has normal
    n = (a, b, sqrt(1 - a^2 - b^2)) with b increasing upward.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateSpec, DimensionMismatch, SpaceMismatch
from .images import ColorSpace, PixelMask, RasterImage

__all__ = [
    "EnvironmentMap",
    "BallSpec",
    "CameraCrop",
    "Material",
    "dir_to_uv",
    "uv_to_dir",
    "envmap_to_ball",
    "sample_ball_directions",
    "ball_to_envmap",
    "crop_perspective",
    "render_sphere",
    "irradiance",
    "phong_radiance",
]

VIEW_DIR = np.array([0.0, 0.0, 1.0])  # toward the camera in ball space


@dataclass(frozen=True)
class EnvironmentMap:
    """Equirectangular radiance map: 3-channel linear HDR, width = 2 * height."""

    image: RasterImage

    def __post_init__(self) -> None:
        img = self.image
        if img.space is not ColorSpace.LINEAR_HDR or img.channels != 3:
            raise SpaceMismatch("environment maps are 3-channel linear HDR")
        if img.width != 2 * img.height:
            raise DimensionMismatch(
                f"equirect maps need width = 2 * height, got {img.width}x{img.height}"
            )

    @property
    def height(self) -> int:
        return self.image.height

    @property
    def width(self) -> int:
        return self.image.width


@dataclass(frozen=True)
class BallSpec:
    """Placement of the chrome-ball disk on an image canvas.

    center is in continuous pixel coordinates (pixel (i, j) spans
    [i, i+1] x [j, j+1], its center sits at (i+0.5, j+0.5)).
    """

    center: tuple[float, float] = (512.0, 512.0)
    radius: float = 128.0
    image_size: tuple[int, int] = (1024, 1024)  # (width, height)

    def __post_init__(self) -> None:
        w, h = self.image_size
        cx, cy = self.center
        if self.radius < 2.0:
            raise DegenerateSpec(f"ball radius {self.radius} below 2 px")
        if cx - self.radius < 0 or cx + self.radius > w or cy - self.radius < 0 or cy + self.radius > h:
            raise DegenerateSpec("ball disk must fit inside the image bounds")

    def crop_box(self) -> tuple[int, int, int, int]:
        """Integer (x0, y0, x1, y1) box covering the disk."""
        cx, cy = self.center
        x0 = int(np.floor(cx - self.radius))
        y0 = int(np.floor(cy - self.radius))
        x1 = int(np.ceil(cx + self.radius))
        y1 = int(np.ceil(cy + self.radius))
        return x0, y0, x1, y1

    def crop_spec(self) -> "BallSpec":
        """Spec describing the same disk inside its crop_box image."""
        x0, y0, x1, y1 = self.crop_box()
        cx, cy = self.center
        return BallSpec(
            center=(cx - x0, cy - y0),
            radius=self.radius,
            image_size=(x1 - x0, y1 - y0),
        )


@dataclass(frozen=True)
class CameraCrop:
    """Perspective crop out of an environment map.

    vfov_deg is the vertical field of view; the horizontal one follows the
    aspect ratio via tan(hfov/2) = tan(vfov/2) * W / H. Positive azimuth pans
    toward increasing equirect u, positive elevation tilts up.
    """

    vfov_deg: float = 60.0
    azimuth_deg: float = 0.0
    elevation_deg: float = 0.0
    out_size: tuple[int, int] = (256, 192)  # (width, height)

    def __post_init__(self) -> None:
        if not (0.0 < self.vfov_deg < 180.0):
            raise DegenerateSpec(f"vfov {self.vfov_deg} out of (0, 180)")
        w, h = self.out_size
        if w < 1 or h < 1:
            raise DegenerateSpec("crop output must be at least 1x1")


class Material(Enum):
    MIRROR = "mirror"
    DIFFUSE = "diffuse"
    MATTE = "matte"


DIFFUSE_ALBEDO = 0.5
MATTE_ALBEDO = 0.9
MATTE_EXPONENT = 50.0


# ---------------------------------------------------------------------------
# direction <-> equirect coordinates


def dir_to_uv(dirs: np.ndarray) -> np.ndarray:
    """Unit directions (..., 3) to equirect (u, v) in [0, 1]."""
    d = np.asarray(dirs, dtype=np.float64)
    u = 0.5 + np.arctan2(d[..., 0], -d[..., 2]) / (2.0 * np.pi)
    v = np.arccos(np.clip(d[..., 1], -1.0, 1.0)) / np.pi
    return np.stack([u, v], axis=-1)


def uv_to_dir(uv: np.ndarray) -> np.ndarray:
    """Equirect (u, v) in [0, 1] to unit directions (..., 3)."""
    uv = np.asarray(uv, dtype=np.float64)
    phi = (uv[..., 0] - 0.5) * 2.0 * np.pi
    theta = uv[..., 1] * np.pi
    sin_t = np.sin(theta)
    return np.stack(
        [sin_t * np.sin(phi), np.cos(theta), -sin_t * np.cos(phi)], axis=-1
    )


def _bilinear(data: np.ndarray, x: np.ndarray, y: np.ndarray, wrap_x: bool) -> np.ndarray:
    """Sample (H, W, C) data at fractional pixel indices; clamp rows, wrap or
    clamp columns."""
    h, w = data.shape[:2]
    y = np.clip(y, 0.0, h - 1.0)
    y0 = np.floor(y).astype(np.int64)
    fy = y - y0
    y1 = np.minimum(y0 + 1, h - 1)
    if wrap_x:
        x = np.mod(x, w)
        x0 = np.floor(x).astype(np.int64)
        fx = x - x0
        x0 = np.mod(x0, w)
        x1 = np.mod(x0 + 1, w)
    else:
        x = np.clip(x, 0.0, w - 1.0)
        x0 = np.floor(x).astype(np.int64)
        fx = x - x0
        x1 = np.minimum(x0 + 1, w - 1)
    fx = fx[..., None]
    fy = fy[..., None]
    d = data.astype(np.float64)
    top = d[y0, x0] * (1.0 - fx) + d[y0, x1] * fx
    bot = d[y1, x0] * (1.0 - fx) + d[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def sample_envmap(env: EnvironmentMap, dirs: np.ndarray) -> np.ndarray:
    """Bilinear radiance lookup for unit directions (..., 3)."""
    uv = dir_to_uv(dirs)
    x = uv[..., 0] * env.width - 0.5
    y = uv[..., 1] * env.height - 0.5
    return _bilinear(env.image.data, x, y, wrap_x=True)


# ---------------------------------------------------------------------------
# chrome ball forward/inverse projection


def _disk_grid(spec: BallSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel normalized disk coords and the inside-disk mask."""
    w, h = spec.image_size
    cx, cy = spec.center
    xs = (np.arange(w, dtype=np.float64) + 0.5 - cx) / spec.radius
    ys = (cy - (np.arange(h, dtype=np.float64) + 0.5)) / spec.radius
    a = np.broadcast_to(xs[None, :], (h, w))
    b = np.broadcast_to(ys[:, None], (h, w))
    inside = a * a + b * b <= 1.0
    return a, b, inside


def _ball_normals(spec: BallSpec) -> tuple[np.ndarray, np.ndarray]:
    a, b, inside = _disk_grid(spec)
    nz = np.sqrt(np.clip(1.0 - a * a - b * b, 0.0, 1.0))
    normals = np.stack([a, b, nz], axis=-1)
    return normals, inside


def _reflect_view(normals: np.ndarray) -> np.ndarray:
    """Mirror reflection of the +z view direction: r = 2 (n.v) n - v."""
    nz = normals[..., 2:3]
    r = 2.0 * nz * normals
    r[..., 2] -= 1.0
    return r


def envmap_to_ball(env: EnvironmentMap, spec: BallSpec) -> tuple[RasterImage, PixelMask]:
    """Render a mirrored ball seen orthographically from +z.

    Pixels whose center lies outside the disk are zero; the returned mask is
    1 inside the disk.
    """
    normals, inside = _ball_normals(spec)
    w, h = spec.image_size
    out = np.zeros((h, w, 3), dtype=np.float64)
    refl = _reflect_view(normals[inside])
    out[inside] = sample_envmap(env, refl)
    mask = inside.astype(np.float32)
    return RasterImage(out.astype(np.float32), ColorSpace.LINEAR_HDR), PixelMask(mask)


def sample_ball_directions(ball: RasterImage, spec: BallSpec, dirs: np.ndarray) -> np.ndarray:
    """Color of a mirrored-ball image along world directions (..., 3).

    Inverts the reflection: the normal reflecting the view ray into d is
    normalize(d + v). Sample positions are kept one pixel inside the rim so
    bilinear taps never mix in outside-disk pixels; directions in the
    degenerate forward cone (d ~ -v) take their rim azimuth from (d_x, d_y).
    """
    if ball.data.shape[1::-1] != spec.image_size:
        raise DimensionMismatch("ball image does not match spec.image_size")
    d = np.asarray(dirs, dtype=np.float64)
    half = d + VIEW_DIR
    norm = np.linalg.norm(half, axis=-1, keepdims=True)
    degenerate = norm[..., 0] < 1e-9
    n = np.divide(half, norm, out=np.zeros_like(half), where=norm > 0)
    if np.any(degenerate):
        rim = d[degenerate][:, :2]
        rim_norm = np.linalg.norm(rim, axis=-1, keepdims=True)
        rim = np.divide(rim, rim_norm, out=np.zeros_like(rim), where=rim_norm > 0)
        rim[rim_norm[:, 0] == 0.0] = (1.0, 0.0)
        n[degenerate, 0] = rim[:, 0]
        n[degenerate, 1] = rim[:, 1]
        n[degenerate, 2] = 0.0

    rho = np.hypot(n[..., 0], n[..., 1])
    rho_max = (spec.radius - 1.0) / spec.radius
    shrink = np.where(rho > rho_max, rho_max / np.maximum(rho, 1e-300), 1.0)
    cx, cy = spec.center
    x = cx + n[..., 0] * shrink * spec.radius - 0.5
    y = cy - n[..., 1] * shrink * spec.radius - 0.5
    return _bilinear(ball.data, x, y, wrap_x=False)


def ball_to_envmap(ball: RasterImage, spec: BallSpec, out_height: int) -> EnvironmentMap:
    """Unwrap a mirrored-ball image into an equirect environment map."""
    if ball.space is not ColorSpace.LINEAR_HDR or ball.channels != 3:
        raise SpaceMismatch("unwrap expects a 3-channel linear HDR ball image")
    if out_height < 1:
        raise DegenerateSpec("output height must be positive")
    w = 2 * out_height
    us = (np.arange(w, dtype=np.float64) + 0.5) / w
    vs = (np.arange(out_height, dtype=np.float64) + 0.5) / out_height
    uv = np.stack(np.meshgrid(us, vs, indexing="xy"), axis=-1)
    dirs = uv_to_dir(uv)
    colors = sample_ball_directions(ball, spec, dirs)
    img = RasterImage(colors.astype(np.float32), ColorSpace.LINEAR_HDR)
    return EnvironmentMap(img)


# ---------------------------------------------------------------------------
# perspective crops


def crop_rays(cam: CameraCrop) -> np.ndarray:
    """World-space ray directions (H, W, 3) through each crop pixel center."""
    w, h = cam.out_size
    tan_v = np.tan(np.deg2rad(cam.vfov_deg) / 2.0)
    tan_h = tan_v * w / h
    xs = (2.0 * (np.arange(w, dtype=np.float64) + 0.5) / w - 1.0) * tan_h
    ys = (1.0 - 2.0 * (np.arange(h, dtype=np.float64) + 0.5) / h) * tan_v
    x = np.broadcast_to(xs[None, :], (h, w))
    y = np.broadcast_to(ys[:, None], (h, w))
    rays = np.stack([x, y, -np.ones_like(x)], axis=-1)

    el = np.deg2rad(cam.elevation_deg)
    az = np.deg2rad(cam.azimuth_deg)
    rot_x = np.array(
        [[1, 0, 0], [0, np.cos(el), -np.sin(el)], [0, np.sin(el), np.cos(el)]]
    )
    rot_y = np.array(
        [[np.cos(az), 0, -np.sin(az)], [0, 1, 0], [np.sin(az), 0, np.cos(az)]]
    )
    rays = rays @ rot_x.T @ rot_y.T
    return rays / np.linalg.norm(rays, axis=-1, keepdims=True)


def crop_perspective(env: EnvironmentMap, cam: CameraCrop) -> RasterImage:
    """Perspective view of the environment (linear HDR, same units)."""
    colors = sample_envmap(env, crop_rays(cam))
    return RasterImage(colors.astype(np.float32), ColorSpace.LINEAR_HDR)


# ---------------------------------------------------------------------------
# sphere renderers

_CHUNK = 256  # normals per quadrature block, bounds the cos matrix to ~150 MB


def _env_quadrature(env: EnvironmentMap) -> tuple[np.ndarray, np.ndarray]:
    """Per-texel light directions and radiance premultiplied by solid angle."""
    h, w = env.height, env.width
    us = (np.arange(w, dtype=np.float64) + 0.5) / w
    vs = (np.arange(h, dtype=np.float64) + 0.5) / h
    uv = np.stack(np.meshgrid(us, vs, indexing="xy"), axis=-1)
    omega = uv_to_dir(uv).reshape(-1, 3)
    theta = vs * np.pi
    d_omega = np.sin(theta)[:, None] * (np.pi / h) * (2.0 * np.pi / w)
    weighted = env.image.data.astype(np.float64) * d_omega[:, :, None]
    return omega, weighted.reshape(-1, 3)


def irradiance(normals: np.ndarray, env: EnvironmentMap, albedo: float = DIFFUSE_ALBEDO) -> np.ndarray:
    """Lambertian exit radiance albedo/pi * sum L(w) max(0, n.w) dOmega.

    normals: (K, 3) unit vectors; returns (K, 3).
    """
    omega, weighted = _env_quadrature(env)
    omega32 = omega.T.astype(np.float32)
    weighted32 = weighted.astype(np.float32)
    out = np.empty((normals.shape[0], 3), dtype=np.float64)
    for lo in range(0, normals.shape[0], _CHUNK):
        block = normals[lo : lo + _CHUNK].astype(np.float32)
        cos = block @ omega32
        np.maximum(cos, 0.0, out=cos)
        out[lo : lo + _CHUNK] = (cos @ weighted32).astype(np.float64)
    return out * (albedo / np.pi)


def phong_radiance(
    mirror_dirs: np.ndarray,
    env: EnvironmentMap,
    exponent: float = MATTE_EXPONENT,
    albedo: float = MATTE_ALBEDO,
) -> np.ndarray:
    """Normalized Phong lobe albedo*(e+1)/(2 pi) * sum L max(0, r.w)^e dOmega."""
    omega, weighted = _env_quadrature(env)
    omega32 = omega.T.astype(np.float32)
    weighted32 = weighted.astype(np.float32)
    out = np.empty((mirror_dirs.shape[0], 3), dtype=np.float64)
    for lo in range(0, mirror_dirs.shape[0], _CHUNK):
        block = mirror_dirs[lo : lo + _CHUNK].astype(np.float32)
        cos = block @ omega32
        np.maximum(cos, 0.0, out=cos)
        np.power(cos, np.float32(exponent), out=cos)
        out[lo : lo + _CHUNK] = (cos @ weighted32).astype(np.float64)
    return out * (albedo * (exponent + 1.0) / (2.0 * np.pi))


def render_sphere(env: EnvironmentMap, material: Material, spec: BallSpec) -> RasterImage:
    """Render a sphere probe of the given material; zeros outside the disk."""
    if material is Material.MIRROR:
        return envmap_to_ball(env, spec)[0]
    normals, inside = _ball_normals(spec)
    w, h = spec.image_size
    out = np.zeros((h, w, 3), dtype=np.float64)
    if material is Material.DIFFUSE:
        out[inside] = irradiance(normals[inside], env)
    elif material is Material.MATTE:
        out[inside] = phong_radiance(_reflect_view(normals[inside]), env)
    else:
        raise ValueError(f"unknown material {material}")
    return RasterImage(np.maximum(out, 0.0).astype(np.float32), ColorSpace.LINEAR_HDR)
