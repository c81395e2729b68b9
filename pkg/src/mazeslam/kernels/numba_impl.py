"""JIT-compiled kernels (numba backend).

Grid traversal uses Amanatides-Woo style DDA; on an exact boundary-corner
tie the x step is taken first. The numpy backend reproduces the same
visiting order, so the two stay interchangeable.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def raycast_segments(ox, oy, angles, segs, max_range):
    """Min positive ray-segment intersection per angle; -1.0 = no hit."""
    n = angles.shape[0]
    m = segs.shape[0]
    out = np.empty(n)
    for k in range(n):
        dx = math.cos(angles[k])
        dy = math.sin(angles[k])
        best = np.inf
        for si in range(m):
            x1 = segs[si, 0]
            y1 = segs[si, 1]
            ex = segs[si, 2] - x1
            ey = segs[si, 3] - y1
            denom = dx * ey - dy * ex
            if denom == 0.0:
                continue
            rx = x1 - ox
            ry = y1 - oy
            t = (rx * ey - ry * ex) / denom
            s = (rx * dy - ry * dx) / denom
            if t > 0.0 and 0.0 <= s <= 1.0 and t < best:
                best = t
        out[k] = best if best <= max_range else -1.0
    return out


@njit(cache=True)
def min_dist_segments(px, py, segs):
    """Euclidean distance from a point to the nearest segment."""
    best = np.inf
    for si in range(segs.shape[0]):
        x1 = segs[si, 0]
        y1 = segs[si, 1]
        ex = segs[si, 2] - x1
        ey = segs[si, 3] - y1
        ll = ex * ex + ey * ey
        if ll > 0.0:
            t = ((px - x1) * ex + (py - y1) * ey) / ll
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
        else:
            t = 0.0
        qx = px - (x1 + t * ex)
        qy = py - (y1 + t * ey)
        d2 = qx * qx + qy * qy
        if d2 < best:
            best = d2
    return math.sqrt(best)


@njit(cache=True)
def trace_and_add(cells, gox, goy, res, sx, sy, exs, eys, hits, l_free, l_occ):
    """Accumulate one scan's log-odds evidence into ``cells`` in place.

    Per beam: cells strictly between the sensor cell and the beam end cell
    get l_free; for hit beams the end cell gets l_occ, for no-return beams
    the end cell gets l_free as well. No clamping here.
    """
    h, w = cells.shape
    i0 = int(math.floor((sx - gox) / res))
    j0 = int(math.floor((sy - goy) / res))
    if not (0 <= i0 < w and 0 <= j0 < h):
        return
    for b in range(exs.shape[0]):
        ex = exs[b]
        ey = eys[b]
        hit = hits[b]
        i1 = int(math.floor((ex - gox) / res))
        j1 = int(math.floor((ey - goy) / res))
        dx = ex - sx
        dy = ey - sy
        stepx = 0
        stepy = 0
        tmaxx = np.inf
        tmaxy = np.inf
        tdx = np.inf
        tdy = np.inf
        if dx > 0.0:
            stepx = 1
            tmaxx = ((gox + (i0 + 1) * res) - sx) / dx
            tdx = res / dx
        elif dx < 0.0:
            stepx = -1
            tmaxx = ((gox + i0 * res) - sx) / dx
            tdx = -res / dx
        if dy > 0.0:
            stepy = 1
            tmaxy = ((goy + (j0 + 1) * res) - sy) / dy
            tdy = res / dy
        elif dy < 0.0:
            stepy = -1
            tmaxy = ((goy + j0 * res) - sy) / dy
            tdy = -res / dy
        i = i0
        j = j0
        guard = abs(i1 - i0) + abs(j1 - j0) + 4
        first = True
        for _ in range(guard):
            if not (0 <= i < w and 0 <= j < h):
                break
            if i == i1 and j == j1:
                if hit:
                    cells[j, i] += l_occ
                elif not first:
                    cells[j, i] += l_free
                break
            if not first:
                cells[j, i] += l_free
            first = False
            if stepx == 0 and stepy == 0:
                break
            if tmaxx <= tmaxy:
                i += stepx
                tmaxx += tdx
            else:
                j += stepy
                tmaxy += tdy


@njit(cache=True)
def raycast_grid_cells(occ, gox, goy, res, ox, oy, angle, max_range):
    """Distance to the first occupied cell along the ray; -1.0 = no hit.

    Returns the distance at which the ray enters the occupied cell (0.0 if
    the origin cell itself is occupied).
    """
    h, w = occ.shape
    i = int(math.floor((ox - gox) / res))
    j = int(math.floor((oy - goy) / res))
    if not (0 <= i < w and 0 <= j < h):
        return -1.0
    if occ[j, i]:
        return 0.0
    ux = math.cos(angle)
    uy = math.sin(angle)
    stepx = 0
    stepy = 0
    tmaxx = np.inf
    tmaxy = np.inf
    tdx = np.inf
    tdy = np.inf
    if ux > 0.0:
        stepx = 1
        tmaxx = ((gox + (i + 1) * res) - ox) / ux
        tdx = res / ux
    elif ux < 0.0:
        stepx = -1
        tmaxx = ((gox + i * res) - ox) / ux
        tdx = -res / ux
    if uy > 0.0:
        stepy = 1
        tmaxy = ((goy + (j + 1) * res) - oy) / uy
        tdy = res / uy
    elif uy < 0.0:
        stepy = -1
        tmaxy = ((goy + j * res) - oy) / uy
        tdy = -res / uy
    while True:
        t = tmaxx if tmaxx <= tmaxy else tmaxy
        if t > max_range:
            return -1.0
        if tmaxx <= tmaxy:
            i += stepx
            tmaxx += tdx
        else:
            j += stepy
            tmaxy += tdy
        if not (0 <= i < w and 0 <= j < h):
            return -1.0
        if occ[j, i]:
            return t


@njit(cache=True)
def score_endpoints(field, gox, goy, res, px, py, ptheta, lx, ly, sigma):
    """Mean Gaussian endpoint score of a scan posed at (px, py, ptheta).

    ``lx, ly`` are beam endpoints in the robot frame (hit beams only);
    endpoints landing off-grid contribute 0.
    """
    n = lx.shape[0]
    if n == 0:
        return 0.0
    h, w = field.shape
    c = math.cos(ptheta)
    s = math.sin(ptheta)
    inv = 1.0 / (2.0 * sigma * sigma)
    total = 0.0
    for k in range(n):
        wx = px + c * lx[k] - s * ly[k]
        wy = py + s * lx[k] + c * ly[k]
        i = int(math.floor((wx - gox) / res))
        j = int(math.floor((wy - goy) / res))
        if 0 <= i < w and 0 <= j < h:
            d = field[j, i]
            total += math.exp(-(d * d) * inv)
    return total / n


@njit(cache=True)
def score_endpoints_known(field, known, gox, goy, res, px, py, ptheta, lx, ly, sigma):
    """Mean endpoint score over beams landing on known cells only.

    Beams whose endpoint cell is off-grid or never observed are excluded
    from numerator and denominator, so unmapped frontier space exerts no
    pull on the optimum. Returns 0 when no endpoint lands on known cells.
    """
    n = lx.shape[0]
    if n == 0:
        return 0.0
    h, w = field.shape
    c = math.cos(ptheta)
    s = math.sin(ptheta)
    inv = 1.0 / (2.0 * sigma * sigma)
    total = 0.0
    count = 0
    for k in range(n):
        wx = px + c * lx[k] - s * ly[k]
        wy = py + s * lx[k] + c * ly[k]
        i = int(math.floor((wx - gox) / res))
        j = int(math.floor((wy - goy) / res))
        if 0 <= i < w and 0 <= j < h and known[j, i]:
            d = field[j, i]
            total += math.exp(-(d * d) * inv)
            count += 1
    if count == 0:
        return 0.0
    return total / count


@njit(cache=True)
def score_endpoints_known_batch(field, known, gox, goy, res, poses, lx, ly, sigma):
    """score_endpoints_known evaluated for every pose row of (N, 3)."""
    n = poses.shape[0]
    m = lx.shape[0]
    h, w = field.shape
    inv = 1.0 / (2.0 * sigma * sigma)
    out = np.zeros(n)
    for p in range(n):
        px = poses[p, 0]
        py = poses[p, 1]
        c = math.cos(poses[p, 2])
        s = math.sin(poses[p, 2])
        total = 0.0
        count = 0
        for k in range(m):
            wx = px + c * lx[k] - s * ly[k]
            wy = py + s * lx[k] + c * ly[k]
            i = int(math.floor((wx - gox) / res))
            j = int(math.floor((wy - goy) / res))
            if 0 <= i < w and 0 <= j < h and known[j, i]:
                d = field[j, i]
                total += math.exp(-(d * d) * inv)
                count += 1
        if count > 0:
            out[p] = total / count
    return out


@njit(cache=True)
def _bilinear(field, gox, goy, res, wx, wy):
    """Bilinear interpolation over cell centers, clamped at the border."""
    h, w = field.shape
    u = (wx - gox) / res - 0.5
    v = (wy - goy) / res - 0.5
    i0 = int(math.floor(u))
    j0 = int(math.floor(v))
    fu = u - i0
    fv = v - j0
    if i0 < 0:
        i0, fu = 0, 0.0
    elif i0 >= w - 1:
        i0, fu = w - 2, 1.0
    if j0 < 0:
        j0, fv = 0, 0.0
    elif j0 >= h - 1:
        j0, fv = h - 2, 1.0
    d00 = field[j0, i0]
    d01 = field[j0, i0 + 1]
    d10 = field[j0 + 1, i0]
    d11 = field[j0 + 1, i0 + 1]
    return (
        d00 * (1 - fu) * (1 - fv)
        + d01 * fu * (1 - fv)
        + d10 * (1 - fu) * fv
        + d11 * fu * fv
    )


@njit(cache=True)
def score_endpoints_bilinear(field, gox, goy, res, poses, lx, ly, sigma):
    """Sub-cell smooth endpoint score per pose row of (N, 3).

    Same kernel as score_endpoints but the field is sampled bilinearly,
    giving the optimizer gradients below cell resolution. Off-grid
    endpoints contribute 0; the denominator is all beams.
    """
    n = poses.shape[0]
    m = lx.shape[0]
    h, w = field.shape
    inv = 1.0 / (2.0 * sigma * sigma)
    xmax = gox + w * res
    ymax = goy + h * res
    out = np.zeros(n)
    if m == 0:
        return out
    for p in range(n):
        px = poses[p, 0]
        py = poses[p, 1]
        c = math.cos(poses[p, 2])
        s = math.sin(poses[p, 2])
        total = 0.0
        for k in range(m):
            wx = px + c * lx[k] - s * ly[k]
            wy = py + s * lx[k] + c * ly[k]
            if gox <= wx < xmax and goy <= wy < ymax:
                d = _bilinear(field, gox, goy, res, wx, wy)
                total += math.exp(-(d * d) * inv)
        out[p] = total / m
    return out


@njit(cache=True)
def mcl_log_weights(field, gox, goy, res, poses, lx, ly, z_hit, z_rand, sigma):
    """Per-particle log measurement likelihood under the field model.

    Each beam contributes log(z_hit * exp(-d^2 / 2 sigma^2) + z_rand);
    off-grid endpoints fall back to the z_rand floor.
    """
    n = poses.shape[0]
    m = lx.shape[0]
    h, w = field.shape
    inv = 1.0 / (2.0 * sigma * sigma)
    out = np.zeros(n)
    for p in range(n):
        px = poses[p, 0]
        py = poses[p, 1]
        c = math.cos(poses[p, 2])
        s = math.sin(poses[p, 2])
        acc = 0.0
        for k in range(m):
            wx = px + c * lx[k] - s * ly[k]
            wy = py + s * lx[k] + c * ly[k]
            i = int(math.floor((wx - gox) / res))
            j = int(math.floor((wy - goy) / res))
            if 0 <= i < w and 0 <= j < h:
                d = field[j, i]
                acc += math.log(z_hit * math.exp(-(d * d) * inv) + z_rand)
            else:
                acc += math.log(z_rand)
        out[p] = acc
    return out
