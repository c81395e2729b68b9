"""Vectorized pure-numpy kernels (fallback backend).

Grid traversal enumerates cell-boundary crossings and orders them with a
stable sort (x crossings before y on ties), which reproduces the DDA
visiting order of the numba backend.
"""

import math

import numpy as np


def raycast_segments(ox, oy, angles, segs, max_range):
    angles = np.asarray(angles, dtype=float)
    n = angles.shape[0]
    if segs.shape[0] == 0:
        return np.full(n, -1.0)
    dx = np.cos(angles)[:, None]
    dy = np.sin(angles)[:, None]
    x1 = segs[None, :, 0]
    y1 = segs[None, :, 1]
    ex = segs[None, :, 2] - x1
    ey = segs[None, :, 3] - y1
    denom = dx * ey - dy * ex
    rx = x1 - ox
    ry = y1 - oy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rx * ey - ry * ex) / denom
        s = (rx * dy - ry * dx) / denom
    valid = (denom != 0.0) & (t > 0.0) & (s >= 0.0) & (s <= 1.0)
    t = np.where(valid, t, np.inf)
    best = t.min(axis=1)
    return np.where(best <= max_range, best, -1.0)


def min_dist_segments(px, py, segs):
    x1 = segs[:, 0]
    y1 = segs[:, 1]
    ex = segs[:, 2] - x1
    ey = segs[:, 3] - y1
    ll = ex * ex + ey * ey
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((px - x1) * ex + (py - y1) * ey) / ll
    t = np.where(ll > 0.0, np.clip(t, 0.0, 1.0), 0.0)
    qx = px - (x1 + t * ex)
    qy = py - (y1 + t * ey)
    return float(np.sqrt((qx * qx + qy * qy).min()))


def _beam_cells(gox, goy, res, sx, sy, ex, ey):
    """Cells visited from (sx, sy) to (ex, ey) in DDA order.

    Returns (ii, jj, ts): cell indices including the start cell, and the
    ray parameter in [0, 1] at which each cell after the first is entered.
    """
    i0 = int(math.floor((sx - gox) / res))
    j0 = int(math.floor((sy - goy) / res))
    i1 = int(math.floor((ex - gox) / res))
    j1 = int(math.floor((ey - goy) / res))
    dx = ex - sx
    dy = ey - sy
    if i1 > i0:
        kx = np.arange(i0 + 1, i1 + 1)
        sx_step = 1
    elif i1 < i0:
        kx = np.arange(i0, i1, -1)
        sx_step = -1
    else:
        kx = np.empty(0, dtype=int)
        sx_step = 0
    if j1 > j0:
        ky = np.arange(j0 + 1, j1 + 1)
        sy_step = 1
    elif j1 < j0:
        ky = np.arange(j0, j1, -1)
        sy_step = -1
    else:
        ky = np.empty(0, dtype=int)
        sy_step = 0
    tx = ((gox + kx * res) - sx) / dx if kx.size else np.empty(0)
    ty = ((goy + ky * res) - sy) / dy if ky.size else np.empty(0)
    ts = np.concatenate([tx, ty])
    codes = np.concatenate([np.zeros(kx.size, dtype=int), np.ones(ky.size, dtype=int)])
    order = np.lexsort((codes, ts))
    ts = ts[order]
    codes = codes[order]
    ii = i0 + np.cumsum(np.where(codes == 0, sx_step, 0))
    jj = j0 + np.cumsum(np.where(codes == 1, sy_step, 0))
    ii = np.concatenate([[i0], ii])
    jj = np.concatenate([[j0], jj])
    return ii, jj, ts


def trace_and_add(cells, gox, goy, res, sx, sy, exs, eys, hits, l_free, l_occ):
    h, w = cells.shape
    i0 = int(math.floor((sx - gox) / res))
    j0 = int(math.floor((sy - goy) / res))
    if not (0 <= i0 < w and 0 <= j0 < h):
        return
    for b in range(len(exs)):
        ii, jj, _ = _beam_cells(gox, goy, res, sx, sy, exs[b], eys[b])
        oob = (ii < 0) | (ii >= w) | (jj < 0) | (jj >= h)
        if oob.any():
            cut = int(np.argmax(oob))
            ii = ii[:cut]
            jj = jj[:cut]
            reached_end = False
        else:
            reached_end = True
        n = ii.size
        if n == 0:
            continue
        if hits[b] and reached_end:
            if n >= 2:
                cells[jj[1 : n - 1], ii[1 : n - 1]] += l_free
            cells[jj[n - 1], ii[n - 1]] += l_occ
        else:
            cells[jj[1:], ii[1:]] += l_free


def raycast_grid_cells(occ, gox, goy, res, ox, oy, angle, max_range):
    h, w = occ.shape
    i0 = int(math.floor((ox - gox) / res))
    j0 = int(math.floor((oy - goy) / res))
    if not (0 <= i0 < w and 0 <= j0 < h):
        return -1.0
    if occ[j0, i0]:
        return 0.0
    ex = ox + math.cos(angle) * max_range
    ey = oy + math.sin(angle) * max_range
    ii, jj, ts = _beam_cells(gox, goy, res, ox, oy, ex, ey)
    if ii.size <= 1:
        return -1.0
    ii = ii[1:]
    jj = jj[1:]
    inb = (ii >= 0) & (ii < w) & (jj >= 0) & (jj < h)
    if not inb.all():
        cut = int(np.argmax(~inb))
        ii = ii[:cut]
        jj = jj[:cut]
        ts = ts[:cut]
    if ii.size == 0:
        return -1.0
    occ_hits = occ[jj, ii].astype(bool)
    if not occ_hits.any():
        return -1.0
    k = int(np.argmax(occ_hits))
    return float(ts[k] * max_range)


def score_endpoints(field, gox, goy, res, px, py, ptheta, lx, ly, sigma):
    n = len(lx)
    if n == 0:
        return 0.0
    h, w = field.shape
    c = math.cos(ptheta)
    s = math.sin(ptheta)
    wx = px + c * lx - s * ly
    wy = py + s * lx + c * ly
    ii = np.floor((wx - gox) / res).astype(int)
    jj = np.floor((wy - goy) / res).astype(int)
    inb = (ii >= 0) & (ii < w) & (jj >= 0) & (jj < h)
    d = field[jj[inb], ii[inb]]
    total = float(np.exp(-(d * d) / (2.0 * sigma * sigma)).sum())
    return total / n


def score_endpoints_known(field, known, gox, goy, res, px, py, ptheta, lx, ly, sigma):
    n = len(lx)
    if n == 0:
        return 0.0
    h, w = field.shape
    c = math.cos(ptheta)
    s = math.sin(ptheta)
    wx = px + c * lx - s * ly
    wy = py + s * lx + c * ly
    ii = np.floor((wx - gox) / res).astype(int)
    jj = np.floor((wy - goy) / res).astype(int)
    inb = (ii >= 0) & (ii < w) & (jj >= 0) & (jj < h)
    sel = inb.copy()
    sel[inb] = known[jj[inb], ii[inb]].astype(bool)
    count = int(sel.sum())
    if count == 0:
        return 0.0
    d = field[jj[sel], ii[sel]]
    total = float(np.exp(-(d * d) / (2.0 * sigma * sigma)).sum())
    return total / count


def score_endpoints_known_batch(field, known, gox, goy, res, poses, lx, ly, sigma):
    h, w = field.shape
    px = poses[:, 0:1]
    py = poses[:, 1:2]
    c = np.cos(poses[:, 2:3])
    s = np.sin(poses[:, 2:3])
    wx = px + c * lx[None, :] - s * ly[None, :]
    wy = py + s * lx[None, :] + c * ly[None, :]
    ii = np.floor((wx - gox) / res).astype(int)
    jj = np.floor((wy - goy) / res).astype(int)
    inb = (ii >= 0) & (ii < w) & (jj >= 0) & (jj < h)
    iic = ii.clip(0, w - 1)
    jjc = jj.clip(0, h - 1)
    sel = inb & known[jjc, iic].astype(bool)
    d = field[jjc, iic]
    kern = np.where(sel, np.exp(-(d * d) / (2.0 * sigma * sigma)), 0.0)
    counts = sel.sum(axis=1)
    totals = kern.sum(axis=1)
    out = np.zeros(poses.shape[0])
    nz = counts > 0
    out[nz] = totals[nz] / counts[nz]
    return out


def score_endpoints_bilinear(field, gox, goy, res, poses, lx, ly, sigma):
    h, w = field.shape
    n = poses.shape[0]
    m = len(lx)
    if m == 0:
        return np.zeros(n)
    px = poses[:, 0:1]
    py = poses[:, 1:2]
    c = np.cos(poses[:, 2:3])
    s = np.sin(poses[:, 2:3])
    wx = px + c * lx[None, :] - s * ly[None, :]
    wy = py + s * lx[None, :] + c * ly[None, :]
    inb = (wx >= gox) & (wx < gox + w * res) & (wy >= goy) & (wy < goy + h * res)
    u = (wx - gox) / res - 0.5
    v = (wy - goy) / res - 0.5
    i0 = np.floor(u).astype(int)
    j0 = np.floor(v).astype(int)
    fu = u - i0
    fv = v - j0
    low_i = i0 < 0
    i0[low_i] = 0
    fu[low_i] = 0.0
    high_i = i0 >= w - 1
    i0[high_i] = w - 2
    fu[high_i] = 1.0
    low_j = j0 < 0
    j0[low_j] = 0
    fv[low_j] = 0.0
    high_j = j0 >= h - 1
    j0[high_j] = h - 2
    fv[high_j] = 1.0
    d = (
        field[j0, i0] * (1 - fu) * (1 - fv)
        + field[j0, i0 + 1] * fu * (1 - fv)
        + field[j0 + 1, i0] * (1 - fu) * fv
        + field[j0 + 1, i0 + 1] * fu * fv
    )
    kern = np.where(inb, np.exp(-(d * d) / (2.0 * sigma * sigma)), 0.0)
    return kern.sum(axis=1) / m


def mcl_log_weights(field, gox, goy, res, poses, lx, ly, z_hit, z_rand, sigma):
    h, w = field.shape
    px = poses[:, 0:1]
    py = poses[:, 1:2]
    c = np.cos(poses[:, 2:3])
    s = np.sin(poses[:, 2:3])
    wx = px + c * lx[None, :] - s * ly[None, :]
    wy = py + s * lx[None, :] + c * ly[None, :]
    ii = np.floor((wx - gox) / res).astype(int)
    jj = np.floor((wy - goy) / res).astype(int)
    inb = (ii >= 0) & (ii < w) & (jj >= 0) & (jj < h)
    d = field[jj.clip(0, h - 1), ii.clip(0, w - 1)]
    kernel = np.exp(-(d * d) / (2.0 * sigma * sigma))
    bracket = np.where(inb, z_hit * kernel + z_rand, z_rand)
    return np.log(bracket).sum(axis=1)
