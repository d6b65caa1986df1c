"""Compiled inner loops.

Everything here works on plain float64 arrays; the public modules wrap the
results in dataclasses.  Coordinates are the original ``(x, t)`` ones
throughout, which keeps all comparisons exact (no rotated round-off).
"""
import heapq

import numpy as np
from numba import njit

SCP_OK = 0
SCP_TRUNCATED = 1
SCP_NO_SINK_EXIT = 2

STEP_UP = 0
STEP_DOWN = 1
STEP_MARK = 2


@njit(cache=True)
def chain_levels(xs):
    """Longest weakly increasing chain ending at each point.

    ``xs`` are abscissas listed in ``(t, x)`` order, so a chain is a
    nondecreasing subsequence of ``xs``.
    """
    n = xs.size
    tops = np.empty(n)
    levels = np.empty(n, np.int64)
    k = 0
    for i in range(n):
        v = xs[i]
        lo = 0
        hi = k
        while lo < hi:
            mid = (lo + hi) >> 1
            if tops[mid] <= v:
                lo = mid + 1
            else:
                hi = mid
        tops[lo] = v
        if lo == k:
            k += 1
        levels[i] = lo + 1
    return levels


@njit(cache=True)
def _bisect_right(a, lo, hi, v):
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def scp_run(bulk_x, bulk_t, sources, sinks, t_stop):
    """Hammersley sweep tracking the normal second-class particle.

    Returns ``(xs, ts, n, status, t_end)``: jump positions and times (entry 0
    is the origin), the number of entries used, a status code and the time
    up to which the trajectory is determined by in-window events.
    """
    nb = bulk_x.size
    nk = sinks.size
    pos = np.empty(sources.size + nb + 1)
    start = 0
    end = sources.size
    for i in range(end):
        pos[i] = sources[i]
    xs = np.empty(nb + nk + 1)
    ts = np.empty(nb + nk + 1)
    xs[0] = 0.0
    ts[0] = 0.0
    nj = 1
    active = False
    scp = 0.0
    status = SCP_OK
    t_end = t_stop
    i = 0
    j = 0
    while True:
        tb = bulk_t[i] if i < nb else np.inf
        tk = sinks[j] if j < nk else np.inf
        if tb < tk:
            if tb > t_stop:
                break
            x = bulk_x[i]
            i += 1
            k = _bisect_right(pos, start, end, x)
            if k == end:
                if active and x < scp:
                    # the incoming particle comes from beyond the window
                    status = SCP_TRUNCATED
                    t_end = tb
                    break
                pos[end] = x
                end += 1
            else:
                if active and x < scp and pos[k] > scp:
                    scp = pos[k]
                    xs[nj] = scp
                    ts[nj] = tb
                    nj += 1
                pos[k] = x
        else:
            if tk > t_stop:
                break
            j += 1
            if start < end:
                if not active:
                    active = True
                    scp = pos[start]
                    xs[nj] = scp
                    ts[nj] = tk
                    nj += 1
                elif pos[start] > scp:
                    scp = pos[start]
                    xs[nj] = scp
                    ts[nj] = tk
                    nj += 1
                start += 1
            else:
                status = SCP_TRUNCATED if active else SCP_NO_SINK_EXIT
                t_end = tk
                break
    if not active and status == SCP_OK:
        status = SCP_NO_SINK_EXIT
    return xs, ts, nj, status, t_end


@njit(cache=True)
def particle_positions(bulk_x, bulk_t, sources, sinks, t_stop):
    """Sorted particle positions after processing all events up to ``t_stop``."""
    nb = bulk_x.size
    nk = sinks.size
    pos = np.empty(sources.size + nb + 1)
    start = 0
    end = sources.size
    for i in range(end):
        pos[i] = sources[i]
    i = 0
    j = 0
    while True:
        tb = bulk_t[i] if i < nb else np.inf
        tk = sinks[j] if j < nk else np.inf
        if tb < tk:
            if tb > t_stop:
                break
            x = bulk_x[i]
            i += 1
            k = _bisect_right(pos, start, end, x)
            pos[k] = x
            if k == end:
                end += 1
        else:
            if tk > t_stop:
                break
            j += 1
            if start < end:
                start += 1
    return pos[start:end].copy()


# --------------------------------------------------------------------------
# Polynuclear growth
#
# Steps live on anti-diagonals u = x + t (u = sqrt(2) s).  An up-step born at
# the nucleation (a, b) keeps x = a, a down-step keeps t = b, a marker keeps
# w = x - t.  At sweep time u the position of each element along the
# anti-diagonal is therefore a, u - b and (u + w) / 2 respectively.
# --------------------------------------------------------------------------


@njit(cache=True)
def _nuc_left_of(kind, anchor, e, x, t, tie_left):
    k = kind[e]
    if k == STEP_UP:
        # on an up-step the nucleation lands on its upper (right) side
        return x < anchor[e]
    if k == STEP_DOWN:
        # on a down-step the upper side is the left one
        return t >= anchor[e]
    w = x - t
    if w == anchor[e]:
        return tie_left
    return w < anchor[e]


@njit(cache=True)
def _event_time(kind, anchor, left, right, now):
    kl = kind[left]
    kr = kind[right]
    if kl == STEP_DOWN and kr == STEP_UP:
        te = anchor[right] + anchor[left]
    elif kl == STEP_DOWN and kr == STEP_MARK:
        te = anchor[right] + 2.0 * anchor[left]
    elif kl == STEP_MARK and kr == STEP_UP:
        te = 2.0 * anchor[right] - anchor[left]
    else:
        return -1.0
    return te if te > now else now


_BLOCK = 64


# The surface is an unrolled list: ``border`` lists block ids left to right,
# each block holds up to _BLOCK element ids.  Elements never overtake each
# other, so a block's last element is a valid search key at any sweep time.


@njit(cache=True)
def _slot(blk, cnt, b, e):
    for i in range(cnt[b]):
        if blk[b, i] == e:
            return i
    return -1


@njit(cache=True)
def _border_index(border, nbo, b):
    for j in range(nbo):
        if border[j] == b:
            return j
    return -1


@njit(cache=True)
def _insert_before(blk, cnt, bof, border, state, q, e):
    """Insert element ``e`` before ``q`` (``q = -1``: at the right end)."""
    if state[0] == 0:
        b = state[1]
        state[1] += 1
        border[0] = b
        state[0] = 1
        cnt[b] = 0
        i = 0
    elif q < 0:
        b = border[state[0] - 1]
        i = cnt[b]
    else:
        b = bof[q]
        i = _slot(blk, cnt, b, q)
    if cnt[b] == _BLOCK:
        nb = state[1]
        state[1] += 1
        half = _BLOCK // 2
        for r in range(half, _BLOCK):
            blk[nb, r - half] = blk[b, r]
            bof[blk[b, r]] = nb
        cnt[nb] = _BLOCK - half
        cnt[b] = half
        j = _border_index(border, state[0], b)
        for r in range(state[0], j + 1, -1):
            border[r] = border[r - 1]
        border[j + 1] = nb
        state[0] += 1
        if i > half:
            b = nb
            i -= half
    for r in range(cnt[b], i, -1):
        blk[b, r] = blk[b, r - 1]
    blk[b, i] = e
    bof[e] = b
    cnt[b] += 1


@njit(cache=True)
def _remove(blk, cnt, bof, border, state, e):
    b = bof[e]
    i = _slot(blk, cnt, b, e)
    for r in range(i, cnt[b] - 1):
        blk[b, r] = blk[b, r + 1]
    cnt[b] -= 1
    if cnt[b] == 0:
        j = _border_index(border, state[0], b)
        for r in range(j, state[0] - 1):
            border[r] = border[r + 1]
        state[0] -= 1


@njit(cache=True)
def _replace(blk, cnt, bof, old, new):
    b = bof[old]
    blk[b, _slot(blk, cnt, b, old)] = new
    bof[new] = b


@njit(cache=True)
def _locate(kind, anchor, blk, cnt, border, nbo, x, t, tie_left):
    """First element the nucleation lies left of, or -1."""
    lo = 0
    hi = nbo
    while lo < hi:
        mid = (lo + hi) >> 1
        b = border[mid]
        if _nuc_left_of(kind, anchor, blk[b, cnt[b] - 1], x, t, tie_left):
            hi = mid
        else:
            lo = mid + 1
    if lo == nbo:
        return -1
    b = border[lo]
    i0 = 0
    i1 = cnt[b] - 1
    while i0 < i1:
        mid = (i0 + i1) >> 1
        if _nuc_left_of(kind, anchor, blk[b, mid], x, t, tie_left):
            i1 = mid
        else:
            i0 = mid + 1
    return blk[b, i0]


@njit(cache=True)
def png_run(nx, nt, u_stop, two_type, tie_left):
    """Event-driven PNG growth from nucleations sorted by ``nx + nt``.

    Returns step records ``(kind, anchor, birth, death, label)`` for every
    element ever created, the interface records ``(a, b, level, u)`` of
    opposite-type collisions, and the final surface as ``(ids, rtype)``.
    """
    n = nx.size
    cap = 3 * n + 4
    kind = np.empty(cap, np.int8)
    anchor = np.empty(cap)
    birth = np.empty(cap)
    death = np.full(cap, np.inf)
    label = np.zeros(cap, np.int8)
    rtype = np.zeros(cap, np.int8)
    nxt = np.full(cap, -1, np.int64)
    prv = np.full(cap, -1, np.int64)
    nbcap = cap // 16 + 4
    blk = np.empty((nbcap, _BLOCK), np.int64)
    cnt = np.zeros(nbcap, np.int64)
    bof = np.full(cap, -1, np.int64)
    border = np.empty(nbcap, np.int64)
    state = np.zeros(2, np.int64)  # blocks in use, blocks ever allocated
    tail = -1
    nid = 0
    left_type = 1

    heap = [(0.0, 0, 0, 0)]
    heap.pop()
    seq = 0

    ia = np.empty(n + 1)
    ib = np.empty(n + 1)
    ilev = np.empty(n + 1, np.int64)
    iu = np.empty(n + 1)
    ni = 0

    if two_type:
        # substrate boundary: type 1 for z < 0, type 2 for z > 0
        kind[0] = STEP_MARK
        anchor[0] = 0.0
        birth[0] = 0.0
        rtype[0] = 2
        _insert_before(blk, cnt, bof, border, state, -1, 0)
        tail = 0
        nid = 1

    k = 0
    while True:
        un = nx[k] + nt[k] if k < n else np.inf
        ue = heap[0][0] if len(heap) > 0 else np.inf
        if un > u_stop and ue > u_stop:
            break
        if ue <= un:
            te, _, le, ri = heapq.heappop(heap)
            if death[le] != np.inf or death[ri] != np.inf or nxt[le] != ri:
                continue
            kl = kind[le]
            kr = kind[ri]
            if kl == STEP_DOWN and kr == STEP_UP:
                p = prv[le]
                q = nxt[ri]
                tl = rtype[p] if p >= 0 else left_type
                tr = rtype[ri]
                death[le] = te
                death[ri] = te
                if two_type and tl != tr:
                    lev = 0
                    r = p
                    while r >= 0:
                        if kind[r] == STEP_UP:
                            lev += 1
                        elif kind[r] == STEP_DOWN:
                            lev -= 1
                        r = prv[r]
                    ia[ni] = anchor[ri]
                    ib[ni] = anchor[le]
                    ilev[ni] = lev
                    iu[ni] = te
                    ni += 1
                    mk = nid
                    nid += 1
                    kind[mk] = STEP_MARK
                    anchor[mk] = anchor[ri] - anchor[le]
                    birth[mk] = te
                    rtype[mk] = tr
                    _replace(blk, cnt, bof, le, mk)
                    _remove(blk, cnt, bof, border, state, ri)
                    if tail == ri:
                        tail = mk
                    prv[mk] = p
                    nxt[mk] = q
                    if p >= 0:
                        nxt[p] = mk
                    if q >= 0:
                        prv[q] = mk
                    if p >= 0:
                        tt = _event_time(kind, anchor, p, mk, te)
                        if tt >= 0:
                            heapq.heappush(heap, (tt, seq, p, mk))
                            seq += 1
                    if q >= 0:
                        tt = _event_time(kind, anchor, mk, q, te)
                        if tt >= 0:
                            heapq.heappush(heap, (tt, seq, mk, q))
                            seq += 1
                else:
                    _remove(blk, cnt, bof, border, state, le)
                    _remove(blk, cnt, bof, border, state, ri)
                    if tail == ri:
                        tail = p
                    if p >= 0:
                        nxt[p] = q
                    if q >= 0:
                        prv[q] = p
                    if p >= 0 and q >= 0:
                        tt = _event_time(kind, anchor, p, q, te)
                        if tt >= 0:
                            heapq.heappush(heap, (tt, seq, p, q))
                            seq += 1
            elif kl == STEP_DOWN and kr == STEP_MARK:
                # a down-step buries the marker it runs over
                q = nxt[ri]
                rtype[le] = rtype[ri]
                death[ri] = te
                _remove(blk, cnt, bof, border, state, ri)
                if tail == ri:
                    tail = le
                nxt[le] = q
                if q >= 0:
                    prv[q] = le
                    tt = _event_time(kind, anchor, le, q, te)
                    if tt >= 0:
                        heapq.heappush(heap, (tt, seq, le, q))
                        seq += 1
            else:
                p = prv[le]
                death[le] = te
                _remove(blk, cnt, bof, border, state, le)
                prv[ri] = p
                if p >= 0:
                    nxt[p] = ri
                    tt = _event_time(kind, anchor, p, ri, te)
                    if tt >= 0:
                        heapq.heappush(heap, (tt, seq, p, ri))
                        seq += 1
        else:
            x = nx[k]
            t = nt[k]
            k += 1
            q = _locate(kind, anchor, blk, cnt, border, state[0], x, t, tie_left)
            p = prv[q] if q >= 0 else tail
            gtype = rtype[p] if p >= 0 else left_type
            if not two_type:
                gtype = 0
            up = nid
            dn = nid + 1
            nid += 2
            kind[up] = STEP_UP
            anchor[up] = x
            birth[up] = un
            label[up] = gtype
            rtype[up] = gtype
            kind[dn] = STEP_DOWN
            anchor[dn] = t
            birth[dn] = un
            label[dn] = gtype
            rtype[dn] = gtype
            _insert_before(blk, cnt, bof, border, state, q, up)
            _insert_before(blk, cnt, bof, border, state, q, dn)
            if q < 0:
                tail = dn
            prv[up] = p
            nxt[up] = dn
            prv[dn] = up
            nxt[dn] = q
            if p >= 0:
                nxt[p] = up
                tt = _event_time(kind, anchor, p, up, un)
                if tt >= 0:
                    heapq.heappush(heap, (tt, seq, p, up))
                    seq += 1
            if q >= 0:
                prv[q] = dn
                tt = _event_time(kind, anchor, dn, q, un)
                if tt >= 0:
                    heapq.heappush(heap, (tt, seq, dn, q))
                    seq += 1

    m = 0
    for j in range(state[0]):
        m += cnt[border[j]]
    surface = np.empty(m, np.int64)
    r = 0
    for j in range(state[0]):
        b = border[j]
        for i in range(cnt[b]):
            surface[r] = blk[b, i]
            r += 1
    return (kind[:nid].copy(), anchor[:nid].copy(), birth[:nid].copy(), death[:nid].copy(),
            label[:nid].copy(), ia[:ni].copy(), ib[:ni].copy(), ilev[:ni].copy(),
            iu[:ni].copy(), surface, rtype[surface].copy())
