"""Synthetic cameras and the crop-row detection pipeline.

A camera sees a ground-plane trapezoid (near edge narrow, far edge wide)
mapped onto the image rectangle: bottom row = near ground, top row = far.
Plants inside the footprint are drawn as filled green disks over a
brown-noise ground. Detection crops the central 240 columns, masks green by
hue, grayscales, thresholds, extracts thinned gradient-magnitude edges, and
runs the probabilistic Hough transform; the scalar track error is the pixel
distance between the image center and the selected segment's center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import CameraConfig, HoughConfig
from .hough import LineSegment, hough_probabilistic
from .world import Pose2D

GROUND_RGB = (122, 94, 64)
PLANT_RGB = (46, 148, 58)


@dataclass(frozen=True)
class CameraModel:
    """A mounted camera: 'front' looks along the heading, 'rear' against it."""

    mount: str = "front"
    config: CameraConfig = CameraConfig()

    def __post_init__(self) -> None:
        if self.mount not in ("front", "rear"):
            raise ValueError(f"mount must be 'front' or 'rear', got {self.mount!r}")
        c = self.config
        if c.cropped_width > c.image_width or c.cropped_width % 2:
            raise ValueError("cropped_width must be even and fit in the image")

    @property
    def default_error(self) -> float:
        """Track error reported when no line is found: half the cropped width."""
        return self.config.cropped_width / 2.0


@dataclass(frozen=True)
class TrackError:
    """Pixel distance from image center to the detected row line."""

    value: float
    detected: bool

    def __post_init__(self) -> None:
        if not (0.0 <= self.value <= 120.0 + 1e-9):
            raise ValueError(f"track error {self.value} outside [0, 120]")
        if not self.detected and self.value != 120.0:
            raise ValueError("undetected track error must be exactly 120")


def _half_width(cam: CameraConfig, dist: float) -> float:
    f = (dist - cam.forward_offset) / cam.view_length
    return cam.near_half_width + f * (cam.far_half_width - cam.near_half_width)


def render_camera(
    pose: Pose2D,
    camera: CameraModel,
    plants: np.ndarray,
    foliage_radius: float,
    noise_seed: int = 0,
) -> np.ndarray:
    """Render the camera's ground footprint to an (H, W, 3) uint8 image.

    Deterministic for identical (pose, camera, plants, seed).
    """
    cfg = camera.config
    h, w = cfg.image_height, cfg.image_width
    rng = np.random.default_rng(noise_seed)
    if cfg.noise_level > 0:
        # GROUND_RGB +/- noise_level stays inside [0, 255] for sane levels
        noise = rng.integers(0, 2 * cfg.noise_level + 1, size=(h, w, 1), dtype=np.uint8)
        base = np.array([c - cfg.noise_level for c in GROUND_RGB], dtype=np.uint8)
        img = noise + base
    else:
        img = np.empty((h, w, 3), dtype=np.uint8)
        img[:] = GROUND_RGB

    sign = 1.0 if camera.mount == "front" else -1.0
    ax, ay = sign * math.cos(pose.heading), sign * math.sin(pose.heading)
    lx, ly = -ay, ax  # camera-left
    px = np.asarray(plants, dtype=float).reshape(-1, 2)
    if len(px):
        rel_x = px[:, 0] - pose.x
        rel_y = px[:, 1] - pose.y
        dist = rel_x * ax + rel_y * ay
        lat = rel_x * lx + rel_y * ly
        near = cfg.forward_offset - foliage_radius
        far = cfg.forward_offset + cfg.view_length + foliage_radius
        vis = np.nonzero((dist > near) & (dist < far))[0]
        v_scale = (h - 1) / cfg.view_length
        for i in vis:
            d = float(dist[i])
            hw = _half_width(cfg, d)
            if abs(lat[i]) > hw + foliage_radius:
                continue
            u = w / 2.0 - float(lat[i]) * (w / 2.0) / hw
            v = (h - 1) * (1.0 - (d - cfg.forward_offset) / cfg.view_length)
            r_u = foliage_radius * (w / 2.0) / hw
            r_v = foliage_radius * v_scale
            j0 = max(0, int(math.floor(u - r_u - 1)))
            j1 = min(w, int(math.ceil(u + r_u + 1)))
            i0 = max(0, int(math.floor(v - r_v - 1)))
            i1 = min(h, int(math.ceil(v + r_v + 1)))
            if j0 >= j1 or i0 >= i1:
                continue
            du = ((np.arange(j0, j1) + 0.5 - u) / r_u) ** 2
            dv = ((np.arange(i0, i1) + 0.5 - v) / r_v) ** 2
            mask = (dv[:, None] + du[None, :]) <= 1.0
            img[i0:i1, j0:j1][mask] = PLANT_RGB
    return img


def green_mask(img: np.ndarray, sat_floor: float = 0.25, val_floor: int = 40) -> np.ndarray:
    """Hue-window green mask (HSV hue in [70, 170] degrees) with a saturation
    floor, so uniform brightness shifts of the background do not leak in.

    Stated in integer arithmetic: in the green-max sector the hue window is
    exactly |b - r| * 6 <= 5 * (cmax - cmin), and hues outside that sector can
    never fall in [70, 170].
    """
    v = img.astype(np.int16)
    r, g, b = v[..., 0], v[..., 1], v[..., 2]
    cmax = np.maximum(np.maximum(r, g), b)
    cmin = np.minimum(np.minimum(r, g), b)
    delta = cmax - cmin
    sat_num = int(round(sat_floor * 256))
    return (
        (g >= r) & (g >= b) & (delta > 0)
        & (6 * np.abs(b - r) <= 5 * delta)
        & (delta * 256 >= sat_num * cmax)
        & (cmax >= val_floor)
    )


def edges_from_binary(binary: np.ndarray) -> np.ndarray:
    """Gradient-magnitude edges with plateau-keeping thinning.

    Central differences on the (replicate-padded) binary image; a pixel stays
    an edge when its magnitude is positive and not exceeded by either neighbor
    along the dominant gradient direction. Symmetric comparisons keep the
    operator exactly mirror-covariant.
    """
    p = np.pad(binary.astype(np.int16), 1, mode="edge")
    gx = p[1:-1, 2:] - p[1:-1, :-2]          # 2x the central difference
    gy = p[2:, 1:-1] - p[:-2, 1:-1]
    mag = gx * gx + gy * gy                   # squared magnitude, ints
    mp = np.pad(mag, 1, mode="constant")
    horiz = np.abs(gx) >= np.abs(gy)
    keep_h = (mp[1:-1, 1:-1] >= mp[1:-1, 2:]) & (mp[1:-1, 1:-1] >= mp[1:-1, :-2])
    keep_v = (mp[1:-1, 1:-1] >= mp[2:, 1:-1]) & (mp[1:-1, 1:-1] >= mp[:-2, 1:-1])
    keep = np.where(horiz, keep_h, keep_v)
    return (mag > 0) & keep


@dataclass
class PipelineStages:
    """Intermediate products of one detect_row call, for inspection dumps."""

    cropped: np.ndarray
    mask: np.ndarray
    gray: np.ndarray
    binary: np.ndarray
    edges: np.ndarray
    segments: list[LineSegment]


def run_pipeline(
    img: np.ndarray,
    camera: CameraModel,
    hough: HoughConfig | None = None,
    rng_seed: int = 0,
) -> tuple[LineSegment | None, TrackError, PipelineStages]:
    """Full detection pipeline, returning the selection plus every stage."""
    hcfg = hough or HoughConfig()
    cfg = camera.config
    if img.shape[0] < cfg.image_height or img.shape[1] < cfg.cropped_width:
        raise ValueError("image smaller than the configured crop")
    x_off = (img.shape[1] - cfg.cropped_width) // 2
    cropped = img[:, x_off:x_off + cfg.cropped_width]

    mask = green_mask(cropped)
    c16 = cropped.astype(np.uint16)
    gray = ((77 * c16[..., 0] + 150 * c16[..., 1] + 29 * c16[..., 2]) >> 8) * mask
    binary = gray > 40
    edges = edges_from_binary(binary)
    segments = hough_probabilistic(
        edges,
        rho_res=hcfg.rho_res,
        theta_res=math.radians(hcfg.theta_res_deg),
        vote_threshold=hcfg.vote_threshold,
        min_len=hcfg.min_len,
        max_gap=hcfg.max_gap,
        rng=np.random.default_rng(rng_seed),
    )

    center = camera.default_error  # = cropped_width / 2
    best: LineSegment | None = None
    best_key = None
    for seg in segments:
        key = (abs(center - seg.center_x), -seg.length)
        if best_key is None or key < best_key:
            best, best_key = seg, key
    stages = PipelineStages(cropped=cropped, mask=mask, gray=gray,
                            binary=binary, edges=edges, segments=segments)
    if best is None:
        return None, TrackError(value=center, detected=False), stages
    err = min(center, abs(center - best.center_x))
    return best, TrackError(value=err, detected=True), stages


def detect_row(
    img: np.ndarray,
    camera: CameraModel | None = None,
    hough: HoughConfig | None = None,
    rng_seed: int = 0,
) -> tuple[LineSegment | None, TrackError]:
    """Crop, mask, threshold, edge-detect, and Hough-select the crop-row line.

    Absence of a line is a valid result: (None, TrackError(120, False)).
    """
    cam = camera or CameraModel()
    seg, err, _ = run_pipeline(img, cam, hough, rng_seed)
    return seg, err


def save_stage_images(stages: PipelineStages, prefix: str) -> list[str]:
    """Write each pipeline stage as a PNG next to ``prefix`` (debug dumps)."""
    from PIL import Image, ImageDraw

    written = []

    def _save(name: str, arr: np.ndarray) -> None:
        path = f"{prefix}_{name}.png"
        if arr.dtype == bool:
            arr = (arr * 255).astype(np.uint8)
        elif arr.dtype != np.uint8:
            arr = np.clip(arr, 0, 255).astype(np.uint8)
        Image.fromarray(arr).save(path)
        written.append(path)

    _save("0crop", stages.cropped)
    _save("1mask", stages.mask)
    _save("2gray", stages.gray)
    _save("3binary", stages.binary)
    _save("4edges", stages.edges)
    overlay = Image.fromarray(stages.cropped.copy())
    draw = ImageDraw.Draw(overlay)
    for seg in stages.segments:
        draw.line([(seg.x0, seg.y0), (seg.x1, seg.y1)], fill=(255, 40, 40), width=2)
    path = f"{prefix}_5lines.png"
    overlay.save(path)
    written.append(path)
    return written
