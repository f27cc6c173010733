"""Hot per-cell kernels for the diffusion swarm, compiled with numba when
available (CQS_NUMBA=0 selects the numpy fallback).

Both backends consume the same pre-sorted arrays, the same precomputed
per-cell drift sums, and the same counter-based uniforms, so they produce
bit-identical velocity codes.

Velocity codes: 0 = at rest, 1 + 2*axis + (0 for +, 1 for -) = moving.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _hash_u01(key, idx, slot):
    x = (key ^ (idx * np.uint64(0x5851F42D4C957F2D)) ^ (slot * _SM_GAMMA)) + _SM_GAMMA
    z = x
    z = (z ^ (z >> np.uint64(30))) * _SM_M1
    z = (z ^ (z >> np.uint64(27))) * _SM_M2
    z = z ^ (z >> np.uint64(31))
    return z / 2.0**64


def _hash_u01_py(key, idx, slot):
    # plain-int arithmetic with explicit wrapping: bit-identical to the
    # compiled uint64 version
    mask = (1 << 64) - 1
    gamma, m1, m2 = 0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9, 0x94D049BB133111EB
    x = ((int(key) ^ (int(idx) * 0x5851F42D4C957F2D & mask)
          ^ (int(slot) * gamma & mask)) + gamma) & mask
    z = x
    z = ((z ^ (z >> 30)) * m1) & mask
    z = ((z ^ (z >> 27)) * m2) & mask
    z = z ^ (z >> 31)
    return z / 2.0**64


@njit(cache=True)
def exchange_and_kick_numba(codes, seg_starts, seg_cells, cell_dv, nu, refresh, dim, key):
    """Rewrite velocity codes segment by segment (cells of the sorted order).

    codes: int8 velocity codes in sorted order (modified copy returned)
    seg_starts: segment boundaries, length m+1
    seg_cells: cell id per segment (uint64), length m
    cell_dv: per-segment, per-axis expected velocity sum / c, shape (m, dim)
    nu: target moving fraction; refresh: balanced-pair refresh fraction
    """
    out = codes.copy()
    nseg = len(seg_cells)
    counts = np.zeros(2 * dim + 1, np.int64)
    for s in range(nseg):
        lo, hi = seg_starts[s], seg_starts[s + 1]
        cnt = hi - lo
        cell = seg_cells[s]
        for c in range(2 * dim + 1):
            counts[c] = 0
        for i in range(lo, hi):
            counts[out[i]] += 1
        # refresh: annihilate a fraction of the balanced pairs on each axis
        for a in range(dim):
            plus = counts[1 + 2 * a]
            minus = counts[2 + 2 * a]
            npair = min(plus, minus)
            kill = int(np.floor(npair * refresh + _hash_u01(key, cell, np.uint64(a))))
            if kill > npair:
                kill = npair
            counts[1 + 2 * a] -= kill
            counts[2 + 2 * a] -= kill
        movers = 0
        for a in range(dim):
            movers += counts[1 + 2 * a] + counts[2 + 2 * a]
        rest = cnt - movers
        # create balanced pairs toward the target moving fraction
        need = int(np.floor(0.5 * (nu * cnt - movers) + _hash_u01(key, cell, np.uint64(dim))))
        if need < 0:
            need = 0
        if need > rest // 2:
            need = rest // 2
        if dim == 1:
            counts[1] += need
            counts[2] += need
        else:
            half = need // 2
            extra = need - 2 * half
            if _hash_u01(key, cell, np.uint64(dim + 1)) < 0.5:
                nx, ny = half + extra, half
            else:
                nx, ny = half, half + extra
            counts[1] += nx
            counts[2] += nx
            counts[3] += ny
            counts[4] += ny
        rest -= 2 * need
        # kick: realize the cell's expected momentum change in +-c quanta
        for a in range(dim):
            dv = cell_dv[s, a]
            mag = -dv if dv < 0 else dv
            flips = int(np.floor(mag + _hash_u01(key, cell, np.uint64(2 * dim + 2 + a))))
            if flips <= 0:
                continue
            fwd = 1 + 2 * a if dv > 0 else 2 + 2 * a
            bwd = 2 + 2 * a if dv > 0 else 1 + 2 * a
            take = flips if flips < rest else rest
            counts[fwd] += take
            rest -= take
            left = flips - take
            stop = left if left < counts[bwd] else counts[bwd]
            counts[bwd] -= stop
            rest += stop
        # deal the multiset back out in key order
        pos = lo
        for c in range(1, 2 * dim + 1):
            for _ in range(counts[c]):
                out[pos] = c
                pos += 1
        while pos < hi:
            out[pos] = 0
            pos += 1
    return out


def exchange_and_kick_numpy(codes, seg_starts, seg_cells, cell_dv, nu, refresh, dim, key):
    """Reference backend: same per-segment arithmetic, python loop over
    segments only."""
    out = codes.copy()
    for s in range(len(seg_cells)):
        lo, hi = int(seg_starts[s]), int(seg_starts[s + 1])
        cnt = hi - lo
        cell = seg_cells[s]
        counts = np.bincount(out[lo:hi], minlength=2 * dim + 1).astype(np.int64)
        for a in range(dim):
            plus, minus = counts[1 + 2 * a], counts[2 + 2 * a]
            npair = min(plus, minus)
            kill = int(np.floor(npair * refresh + _hash_u01_py(key, cell, a)))
            kill = min(kill, npair)
            counts[1 + 2 * a] -= kill
            counts[2 + 2 * a] -= kill
        movers = int(counts[1:].sum())
        rest = cnt - movers
        need = int(np.floor(0.5 * (nu * cnt - movers) + _hash_u01_py(key, cell, dim)))
        need = max(0, min(need, rest // 2))
        if dim == 1:
            counts[1] += need
            counts[2] += need
        else:
            half, extra = need // 2, need % 2
            if _hash_u01_py(key, cell, dim + 1) < 0.5:
                nx, ny = half + extra, half
            else:
                nx, ny = half, half + extra
            counts[1] += nx
            counts[2] += nx
            counts[3] += ny
            counts[4] += ny
        rest -= 2 * need
        for a in range(dim):
            dv = float(cell_dv[s, a])
            mag = abs(dv)
            flips = int(np.floor(mag + _hash_u01_py(key, cell, 2 * dim + 2 + a)))
            if flips <= 0:
                continue
            fwd = 1 + 2 * a if dv > 0 else 2 + 2 * a
            bwd = 2 + 2 * a if dv > 0 else 1 + 2 * a
            take = min(flips, rest)
            counts[fwd] += take
            rest -= take
            stop = min(flips - take, counts[bwd])
            counts[bwd] -= stop
            rest += stop
        seq = np.repeat(np.arange(1, 2 * dim + 1), counts[1:])
        out[lo:lo + len(seq)] = seq
        out[lo + len(seq):hi] = 0
    return out


def exchange_and_kick(codes, seg_starts, seg_cells, cell_dv, nu, refresh, dim, key):
    if USE_NUMBA:
        return exchange_and_kick_numba(
            codes, seg_starts, seg_cells.astype(np.uint64), cell_dv,
            float(nu), float(refresh), dim, np.uint64(key),
        )
    return exchange_and_kick_numpy(
        codes, seg_starts, seg_cells.astype(np.uint64), cell_dv,
        float(nu), float(refresh), dim, np.uint64(key),
    )
