"""Line-segment extraction from binary edge images.

Two routes are provided on purpose: the progressive probabilistic Hough
transform used by the detection pipeline, and an exhaustive standard-Hough
segment extractor kept as an independent cross-check (the probabilistic
result on clean input must be a subset of what the exhaustive route finds
at equal thresholds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class LineSegment:
    """Segment between two edge pixels, in (x, y) pixel indices."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def center_x(self) -> float:
        # pixel i spans [i, i+1); its center is i + 0.5
        return 0.5 * (self.x0 + self.x1) + 0.5

    @property
    def length(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def angle(self) -> float:
        """Line direction folded into [0, pi)."""
        a = math.atan2(self.y1 - self.y0, self.x1 - self.x0)
        if a < 0:
            a += math.pi
        if a >= math.pi:
            a -= math.pi
        return a


def _hough_axes(shape: tuple[int, int], rho_res: float, theta_res: float):
    h, w = shape
    diag = math.hypot(h, w)
    n_rho = 2 * int(math.ceil(diag / rho_res)) + 1
    rho0 = -math.ceil(diag / rho_res) * rho_res
    thetas = np.arange(int(round(math.pi / theta_res))) * theta_res - math.pi / 2
    return n_rho, rho0, thetas


@njit(cache=True, fastmath=True)
def _rnd(v):
    # round-half-up; cheaper than round() and adequate for pixel snapping
    return int(math.floor(v + 0.5))


@njit(cache=True, fastmath=True)
def _walk_dir(occ, x, y, dx, dy, nx, ny, sign, max_gap, hits):
    """March from (x, y) along (dx, dy)*sign, recording the gap-limited run's
    hit pixels into ``hits``. The rounded pixel and its two perpendicular
    neighbors count as hits (angle quantization and ragged natural edges stay
    connected), but only the actual hit pixel is recorded. Returns the
    number of hits."""
    h, w = occ.shape
    n = 0
    gap = 0
    k = 1
    last_x, last_y = x, y
    while True:
        fx = x + sign * k * dx
        fy = y + sign * k * dy
        px = _rnd(fx)
        py = _rnd(fy)
        if px < 0 or px >= w or py < 0 or py >= h:
            break
        if px == last_x and py == last_y:
            k += 1
            continue
        hit = False
        hx, hy = px, py
        if occ[py, px]:
            hit = True
        else:
            qx = _rnd(fx + nx)
            qy = _rnd(fy + ny)
            if 0 <= qx < w and 0 <= qy < h and occ[qy, qx]:
                hit, hx, hy = True, qx, qy
            else:
                qx = _rnd(fx - nx)
                qy = _rnd(fy - ny)
                if 0 <= qx < w and 0 <= qy < h and occ[qy, qx]:
                    hit, hx, hy = True, qx, qy
        if hit and (hx != last_x or hy != last_y):
            on_line = hx == px and hy == py
            hits[n, 0] = hx
            hits[n, 1] = hy
            hits[n, 2] = 1 if on_line else 0
            n += 1
            if n >= hits.shape[0]:
                break
            # neighbor hits bridge ragged edges but do not extend the
            # gap budget, so sparse noise cannot chain into long runs
            if on_line:
                gap = 0
            else:
                gap += 1
                if gap > max_gap:
                    break
            last_x, last_y = hx, hy
        elif not hit:
            gap += 1
            if gap > max_gap:
                break
        k += 1
    # trim trailing neighbor-tolerance hits: they keep ragged edges connected
    # mid-run but would skew the endpoint (and so the reported angle) when
    # noise extends the run past the true line
    while n > 0 and hits[n - 1, 2] == 0:
        n -= 1
    return n


@njit(cache=True, fastmath=True)
def _erase_pixel(occ, voted, acc, idx_img, r_idx, px, py):
    if not occ[py, px]:
        return
    occ[py, px] = 0
    if voted[py, px]:
        voted[py, px] = 0
        pi = idx_img[py, px]
        for t_i in range(r_idx.shape[1]):
            acc[r_idx[pi, t_i], t_i] -= 1


@njit(cache=True, fastmath=True)
def _ppht_kernel(xs, ys, order, occ, acc, voted, idx_img, r_idx, cos_t, sin_t,
                 rho0, inv_rho_res, vote_threshold, min_len, max_gap, out):
    """Progressive probabilistic Hough: vote in random order, extract on
    threshold crossings, remove supporting pixels from further voting."""
    n_theta = cos_t.shape[0]
    n_out = 0
    diag = int(math.hypot(occ.shape[0], occ.shape[1])) + 2
    fwd = np.zeros((diag, 3), dtype=np.int64)
    bwd = np.zeros((diag, 3), dtype=np.int64)
    for oi in range(order.shape[0]):
        i = order[oi]
        x = xs[i]
        y = ys[i]
        if not occ[y, x]:
            continue
        # cast this pixel's votes, remembering the best cell it touched;
        # the computed rows are kept so unvoting retracts exactly these cells
        best_votes = -1
        best_t = 0
        fx = float(x)
        fy = float(y)
        for t_i in range(n_theta):
            rho = fx * cos_t[t_i] + fy * sin_t[t_i]
            r_i = int(math.floor((rho - rho0) * inv_rho_res + 0.5))
            r_idx[i, t_i] = r_i
            acc[r_i, t_i] += 1
            if acc[r_i, t_i] > best_votes:
                best_votes = acc[r_i, t_i]
                best_t = t_i
        voted[y, x] = 1
        if best_votes < vote_threshold:
            continue
        # walk the candidate line through this pixel in both directions and
        # erase exactly the pixels supporting the run
        dx = -sin_t[best_t]
        dy = cos_t[best_t]
        nx = cos_t[best_t]
        ny = sin_t[best_t]
        nf = _walk_dir(occ, x, y, dx, dy, nx, ny, 1.0, max_gap, fwd)
        nb = _walk_dir(occ, x, y, dx, dy, nx, ny, -1.0, max_gap, bwd)
        ex0, ey0 = (fwd[nf - 1, 0], fwd[nf - 1, 1]) if nf > 0 else (x, y)
        ex1, ey1 = (bwd[nb - 1, 0], bwd[nb - 1, 1]) if nb > 0 else (x, y)
        _erase_pixel(occ, voted, acc, idx_img, r_idx, x, y)
        for j in range(nf):
            _erase_pixel(occ, voted, acc, idx_img, r_idx, fwd[j, 0], fwd[j, 1])
        for j in range(nb):
            _erase_pixel(occ, voted, acc, idx_img, r_idx, bwd[j, 0], bwd[j, 1])
        if math.hypot(ex0 - ex1, ey0 - ey1) >= min_len:
            out[n_out, 0] = ex1
            out[n_out, 1] = ey1
            out[n_out, 2] = ex0
            out[n_out, 3] = ey0
            n_out += 1
            if n_out >= out.shape[0]:
                break
    return n_out


def hough_probabilistic(
    edges: np.ndarray,
    rho_res: float = 1.0,
    theta_res: float = math.radians(1.0),
    vote_threshold: int = 20,
    min_len: int = 30,
    max_gap: int = 10,
    rng: np.random.Generator | None = None,
    max_segments: int = 64,
) -> list[LineSegment]:
    """Progressive probabilistic Hough transform over a binary edge image.

    Pixels vote in a randomized order; when an accumulator cell crosses
    ``vote_threshold`` the corresponding line is walked, runs with gaps of at
    most ``max_gap`` are gathered, segments of at least ``min_len`` pixels are
    emitted, and the supporting pixels are removed from further voting.
    """
    occ = np.ascontiguousarray((np.asarray(edges) != 0).astype(np.uint8))
    ys, xs = np.nonzero(occ)
    if len(xs) == 0:
        return []
    rng = rng or np.random.default_rng(0)
    order = rng.permutation(len(xs)).astype(np.int64)

    n_rho, rho0, thetas = _hough_axes(occ.shape, rho_res, theta_res)
    acc = np.zeros((n_rho, len(thetas)), dtype=np.int32)
    voted = np.zeros_like(occ)
    out = np.zeros((max_segments, 4), dtype=np.int64)
    # scratch for each pixel's voted accumulator rows (filled by the kernel,
    # read back when a removed pixel's votes are retracted)
    r_idx = np.zeros((len(xs), len(thetas)), dtype=np.int32)
    idx_img = np.full(occ.shape, -1, dtype=np.int32)
    idx_img[ys, xs] = np.arange(len(xs), dtype=np.int32)
    n = _ppht_kernel(
        xs.astype(np.int64), ys.astype(np.int64), order, occ, acc, voted,
        idx_img, r_idx, np.cos(thetas), np.sin(thetas), rho0, 1.0 / rho_res,
        vote_threshold, min_len, max_gap, out,
    )
    return [LineSegment(int(out[i, 0]), int(out[i, 1]), int(out[i, 2]), int(out[i, 3]))
            for i in range(n)]


def hough_standard_accumulator(
    edges: np.ndarray, rho_res: float = 1.0, theta_res: float = math.radians(1.0)
) -> tuple[np.ndarray, np.ndarray, float]:
    """Exhaustive (every pixel votes) accumulator; returns (acc, thetas, rho0)."""
    occ = np.asarray(edges) != 0
    ys, xs = np.nonzero(occ)
    n_rho, rho0, thetas = _hough_axes(occ.shape, rho_res, theta_res)
    acc = np.zeros((n_rho, len(thetas)), dtype=np.int32)
    if len(xs):
        for t_i in range(len(thetas)):
            rho = xs * math.cos(thetas[t_i]) + ys * math.sin(thetas[t_i])
            r_i = np.rint((rho - rho0) / rho_res).astype(np.int64)
            np.add.at(acc[:, t_i], r_i, 1)
    return acc, thetas, rho0


def hough_standard_segments(
    edges: np.ndarray,
    rho_res: float = 1.0,
    theta_res: float = math.radians(1.0),
    vote_threshold: int = 20,
    min_len: int = 30,
    max_gap: int = 0,
) -> list[LineSegment]:
    """Segment extraction from the exhaustive accumulator (oracle route).

    Every cell at or above threshold is walked across the full image with the
    same gap-limited run rule as the probabilistic route, without any pixel
    removal, so the returned set is a superset of what the probabilistic
    transform can emit on the same input.
    """
    occ = np.ascontiguousarray((np.asarray(edges) != 0).astype(np.uint8))
    acc, thetas, rho0 = hough_standard_accumulator(edges, rho_res, theta_res)
    h, w = occ.shape
    segments: list[LineSegment] = []
    hot = np.argwhere(acc >= vote_threshold)
    for r_i, t_i in hot:
        theta = thetas[t_i]
        rho = rho0 + r_i * rho_res
        c, s = math.cos(theta), math.sin(theta)
        dx, dy = -s, c
        # anchor: the line's closest point to the origin
        ax, ay = rho * c, rho * s
        # clip the parameter range to the image rectangle
        tmax = math.hypot(h, w)
        run: list[tuple[int, int]] = []
        gap = 0
        started = False
        for k in range(-int(tmax) - 1, int(tmax) + 2):
            fx = ax + k * dx
            fy = ay + k * dy
            px, py = int(round(fx)), int(round(fy))
            hit = None
            for ox, oy in ((0.0, 0.0), (c, s), (-c, -s)):
                qx, qy = int(round(fx + ox)), int(round(fy + oy))
                if 0 <= qx < w and 0 <= qy < h and occ[qy, qx]:
                    hit = (qx, qy)
                    break
            if hit is not None:
                run.append(hit)
                gap = 0
                started = True
            elif started:
                gap += 1
                if gap > max_gap:
                    if len(run) >= 2:
                        seg = LineSegment(run[0][0], run[0][1], run[-1][0], run[-1][1])
                        if seg.length >= min_len:
                            segments.append(seg)
                    run = []
                    started = False
                    gap = 0
        if len(run) >= 2:
            seg = LineSegment(run[0][0], run[0][1], run[-1][0], run[-1][1])
            if seg.length >= min_len:
                segments.append(seg)
    return segments


def segment_on_standard_line(
    seg: LineSegment,
    edges: np.ndarray,
    rho_res: float = 1.0,
    theta_res: float = math.radians(1.0),
    vote_threshold: int = 20,
    cell_slack: int = 1,
) -> bool:
    """True when the segment's (rho, theta) cell (within ``cell_slack`` cells)
    is above threshold in the exhaustive accumulator — the containment check
    used to validate the probabilistic route."""
    acc, thetas, rho0 = hough_standard_accumulator(edges, rho_res, theta_res)
    ang = seg.angle
    # line normal angle in [-pi/2, pi/2)
    theta = ang - math.pi / 2
    if theta < -math.pi / 2:
        theta += math.pi
    midx = 0.5 * (seg.x0 + seg.x1)
    midy = 0.5 * (seg.y0 + seg.y1)
    for t_off in range(-cell_slack, cell_slack + 1):
        t_i = int(round((theta + math.pi / 2) / theta_res)) + t_off
        t_i %= len(thetas)
        rho = midx * math.cos(thetas[t_i]) + midy * math.sin(thetas[t_i])
        r_i = int(round((rho - rho0) / rho_res))
        for r_off in range(-cell_slack, cell_slack + 1):
            r = r_i + r_off
            if 0 <= r < acc.shape[0] and acc[r, t_i] >= vote_threshold:
                return True
    return False
