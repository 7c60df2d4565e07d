"""Numba kernels: neighbor enumeration, solver sweeps, streaming operators.

Everything here is deterministic and single-threaded; the Python-level modules
own all contracts and validation. Kernel profiles are passed as small integer
codes (see kernel.PROFILE_CODES).
"""

import numpy as np
from numba import njit

INF = np.inf

# binomial table up to degree 5 (taper polynomials have degree <= 5)
_BINOM = np.zeros((6, 6), dtype=np.float64)
for _k in range(6):
    _BINOM[_k, 0] = 1.0
    for _r in range(1, _k + 1):
        _BINOM[_k, _r] = _BINOM[_k - 1, _r - 1] + _BINOM[_k - 1, _r]


@njit(cache=True, inline="always")
def phi_scalar(code, s):
    if code == 2:
        return 1.0 if s < 2.0 else 0.0
    if s <= 1.0:
        return 1.0
    if s >= 2.0:
        return 0.0
    t = 2.0 - s
    if code == 0:
        return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    return t * t * (3.0 - 2.0 * t)


# ---------------------------------------------------------------------------
# pair enumeration over a cell grid (any d)


@njit(cache=True)
def count_pairs(pts, sort_idx, cell_nbr_start, cell_nbr_ids, cell_start,
                point_cell, r):
    """First pass: number of unordered pairs with torus distance < r."""
    n = pts.shape[0]
    d = pts.shape[1]
    r2 = r * r
    total = 0
    for si in range(n):
        i = sort_idx[si]
        c = point_cell[i]
        for kk in range(cell_nbr_start[c], cell_nbr_start[c + 1]):
            nc = cell_nbr_ids[kk]
            for sj in range(cell_start[nc], cell_start[nc + 1]):
                j = sort_idx[sj]
                if j <= i:
                    continue
                dist2 = 0.0
                for a in range(d):
                    delta = abs(pts[i, a] - pts[j, a])
                    if delta > 0.5:
                        delta = 1.0 - delta
                    dist2 += delta * delta
                if dist2 < r2:
                    total += 1
    return total


@njit(cache=True)
def fill_pairs(pts, sort_idx, cell_nbr_start, cell_nbr_ids, cell_start,
               point_cell, r, h, code, out_i, out_j, out_w):
    """Second pass: emit pairs (i<j) with weights Phi(dist/h); returns the
    number written and whether any zero-distance duplicate pair was seen."""
    n = pts.shape[0]
    d = pts.shape[1]
    r2 = r * r
    pos = 0
    dup = False
    for si in range(n):
        i = sort_idx[si]
        c = point_cell[i]
        for kk in range(cell_nbr_start[c], cell_nbr_start[c + 1]):
            nc = cell_nbr_ids[kk]
            for sj in range(cell_start[nc], cell_start[nc + 1]):
                j = sort_idx[sj]
                if j <= i:
                    continue
                dist2 = 0.0
                for a in range(d):
                    delta = abs(pts[i, a] - pts[j, a])
                    if delta > 0.5:
                        delta = 1.0 - delta
                    dist2 += delta * delta
                if dist2 < r2:
                    dist = np.sqrt(dist2)
                    if dist == 0.0:
                        dup = True
                    w = phi_scalar(code, dist / h)
                    if w > 0.0:
                        out_i[pos] = i
                        out_j[pos] = j
                        out_w[pos] = w
                        pos += 1
    return pos, dup


# ---------------------------------------------------------------------------
# node root finding (game-theoretic operator) on gathered neighbor data


@njit(cache=True)
def _game_F(t, nb_u, nb_w, su, sw, dn, lamp):
    a = 0.0
    b = 0.0
    for k in range(nb_u.shape[0]):
        v = nb_w[k] * (nb_u[k] - t)
        if v > a:
            a = v
        if v < b:
            b = v
    return (su - sw * t) / dn + lamp * (a + b)


@njit(cache=True)
def node_root_game(nb_u, nb_w, dn, lamp, phi0, bisection):
    """Unique root of the game-theoretic node equation.

    nb_u/nb_w are the neighbor values/weights (self excluded). The equation is
    (su - sw t)/dn + lamp*(max(0, max_k w_k(u_k-t)) + min(0, min_k w_k(u_k-t))).
    """
    m = nb_u.shape[0]
    su = 0.0
    lo = INF
    hi = -INF
    sw = dn - phi0
    for k in range(m):
        su += nb_w[k] * nb_u[k]
        if nb_u[k] < lo:
            lo = nb_u[k]
        if nb_u[k] > hi:
            hi = nb_u[k]
    if lamp == 0.0:
        return su / sw
    if lo == hi:
        return lo
    if bisection:
        a = lo
        b = hi
        for _ in range(100):
            mid = 0.5 * (a + b)
            if _game_F(mid, nb_u, nb_w, su, sw, dn, lamp) > 0.0:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    # active-piece (policy) iteration with a bisection safeguard bracket
    a = lo
    b = hi
    t = 0.5 * (a + b)
    prev_kp = -2
    prev_km = -2
    for _ in range(100):
        # locate extrema of w_k(u_k - t); candidate 0 has index -1
        best_p = 0.0
        kp = -1
        best_m = 0.0
        km = -1
        for k in range(m):
            v = nb_w[k] * (nb_u[k] - t)
            if v > best_p:
                best_p = v
                kp = k
            if v < best_m:
                best_m = v
                km = k
        wp = nb_w[kp] if kp >= 0 else 0.0
        up = nb_u[kp] if kp >= 0 else 0.0
        wm = nb_w[km] if km >= 0 else 0.0
        um = nb_u[km] if km >= 0 else 0.0
        denom = sw / dn + lamp * (wp + wm)
        tn = (su / dn + lamp * (wp * up + wm * um)) / denom
        if kp == prev_kp and km == prev_km:
            return tn
        prev_kp = kp
        prev_km = km
        # keep the iterate inside the shrinking sign bracket
        if tn <= a or tn >= b:
            tn = 0.5 * (a + b)
        if _game_F(tn, nb_u, nb_w, su, sw, dn, lamp) > 0.0:
            a = tn
        else:
            b = tn
        t = tn
    # safeguard fallback
    for _ in range(100):
        mid = 0.5 * (a + b)
        if _game_F(mid, nb_u, nb_w, su, sw, dn, lamp) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


@njit(cache=True)
def node_root_variational(nb_u, nb_w, pexp):
    """Root of the increasing G(t) = sum_k w_k |t-u_k|^{p-2} (t-u_k)."""
    m = nb_u.shape[0]
    lo = INF
    hi = -INF
    sw = 0.0
    su = 0.0
    for k in range(m):
        su += nb_w[k] * nb_u[k]
        sw += nb_w[k]
        if nb_u[k] < lo:
            lo = nb_u[k]
        if nb_u[k] > hi:
            hi = nb_u[k]
    if pexp == 2.0:
        return su / sw
    if lo == hi:
        return lo
    a = lo
    b = hi
    for _ in range(90):
        mid = 0.5 * (a + b)
        g = 0.0
        for k in range(m):
            diff = mid - nb_u[k]
            g += nb_w[k] * np.abs(diff) ** (pexp - 2.0) * diff
        if g < 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# sweeps on explicit CSR graphs


@njit(cache=True)
def sweep_csr_game(indptr, indices, weights, degrees, u, n_labels, lamp, phi0,
                   bisection, jacobi, u_out):
    """One sweep; gauss-seidel updates u in place, jacobi writes u_out."""
    n = u.shape[0]
    maxupd = 0.0
    for i in range(n):
        if i < n_labels:
            if jacobi:
                u_out[i] = u[i]
            continue
        a, b = indptr[i], indptr[i + 1]
        if b == a:
            if jacobi:
                u_out[i] = u[i]
            continue
        t = node_root_game(u[indices[a:b]], weights[a:b], degrees[i], lamp,
                           phi0, bisection)
        du = abs(t - u[i])
        if du > maxupd:
            maxupd = du
        if jacobi:
            u_out[i] = t
        else:
            u[i] = t
    return maxupd


@njit(cache=True)
def sweep_csr_variational(indptr, indices, weights, u, n_labels, pexp,
                          jacobi, u_out):
    n = u.shape[0]
    maxupd = 0.0
    for i in range(n):
        if i < n_labels:
            if jacobi:
                u_out[i] = u[i]
            continue
        a, b = indptr[i], indptr[i + 1]
        if b == a:
            if jacobi:
                u_out[i] = u[i]
            continue
        t = node_root_variational(u[indices[a:b]], weights[a:b], pexp)
        du = abs(t - u[i])
        if du > maxupd:
            maxupd = du
        if jacobi:
            u_out[i] = t
        else:
            u[i] = t
    return maxupd


@njit(cache=True)
def residual_csr_game(indptr, indices, weights, degrees, u, n_labels, lamp,
                      phi0):
    """max over unlabeled vertices of |game operator| at u."""
    n = u.shape[0]
    res = 0.0
    for i in range(n_labels, n):
        a, b = indptr[i], indptr[i + 1]
        if b == a:
            continue
        su = 0.0
        for k in range(a, b):
            su += weights[k] * u[indices[k]]
        sw = degrees[i] - phi0
        val = _game_F(u[i], u[indices[a:b]], weights[a:b], su, sw, degrees[i],
                      lamp)
        if abs(val) > res:
            res = abs(val)
    return res


# ---------------------------------------------------------------------------
# implicit sorted-window engine (d=1, large bandwidths)
#
# Vertices are kept in coordinate-sorted order with tripled (shifted by -1,0,1)
# coordinate arrays so every window is contiguous. The 2-Laplacian sums use
# block-local prefix sums of ((y-c_b)/h)^r u(y) (blocks of coordinate width h,
# c_b the block center) against the piecewise-polynomial kernel; keeping the
# monomial basis local and h-scaled avoids the catastrophic cancellation a
# global y^r prefix would produce. The infinity-term extrema use per-strip
# sliding maxima with exact rescans of the strips that can still beat the
# current best (branch and bound).


@njit(cache=True)
def sliding_extrema(vals, L, R, want_max, out):
    """out[i] = extremum of vals[L[i]:R[i]] with L, R nondecreasing."""
    n = L.shape[0]
    cap = vals.shape[0]
    dq = np.empty(cap, dtype=np.int64)
    head = 0
    tail = 0
    pos = 0
    for i in range(n):
        r = R[i]
        while pos < r:
            v = vals[pos]
            if want_max:
                while tail > head and vals[dq[tail - 1]] <= v:
                    tail -= 1
            else:
                while tail > head and vals[dq[tail - 1]] >= v:
                    tail -= 1
            dq[tail] = pos
            tail += 1
            pos += 1
        l = L[i]
        while tail > head and dq[head] < l:
            head += 1
        if tail > head and dq[head] < r:
            out[i] = vals[dq[head]]
        else:
            out[i] = -INF if want_max else INF
    return out


@njit(cache=True)
def block_reset_prefix(vals, blk_of_pos, nblk, out_prefix, out_blocktot):
    """out_prefix[pos] = sum of vals over [block_start(b(pos)), pos);
    out_blocktot[b] = total of vals over block b. One pass, resets at block
    boundaries so window segments difference at block-local magnitude."""
    m = vals.shape[0]
    for b in range(nblk):
        out_blocktot[b] = 0.0
    acc = 0.0
    cur = -1
    for pos in range(m):
        b = blk_of_pos[pos]
        if b != cur:
            if cur >= 0:
                out_blocktot[cur] = acc
            acc = 0.0
            cur = b
        out_prefix[pos] = acc
        acc += vals[pos]
    if cur >= 0:
        out_blocktot[cur] = acc
    return out_prefix


@njit(cache=True, inline="always")
def _seg_sum(prefix, blocktot, blk_of_pos, blk_end_pos, a, e):
    """sum of the prefixed payload over ext indices [a, e) within one block."""
    b = blk_of_pos[a]
    if e < blk_end_pos[b]:
        return prefix[e] - prefix[a]
    return blocktot[b] - prefix[a]


@njit(cache=True, inline="always")
def _taper_piece_sum(prefix6, blocktot6, blk_of_pos, blk_end_pos, blk_center,
                     lo, hi, x, h, coeffs, left_side):
    """sum over ext indices [lo,hi) of Phi(|y-x|/h) * payload(y).

    prefix6[r]/blocktot6[r] hold block-reset prefixes of z^r * payload with
    z = (y - c_b)/h. On the right side s = z + delta, on the left s = -(z +
    delta), delta = (c_b - x)/h, so Phi(s) expands with bounded coefficients.
    """
    if hi <= lo:
        return 0.0
    total = 0.0
    a = lo
    while a < hi:
        b = blk_of_pos[a]
        e = min(hi, blk_end_pos[b])
        delta = (blk_center[b] - x) / h
        # coef_r = sum_k coeffs_k (+-1)^k C(k,r) delta^{k-r}
        for r in range(6):
            cr = 0.0
            dpow = 1.0
            for k in range(r, 6):
                ck = coeffs[k]
                if left_side and (k % 2 == 1):
                    ck = -ck
                cr += ck * _BINOM[k, r] * dpow
                dpow *= delta
            if cr != 0.0:
                zr = _seg_sum(prefix6[r], blocktot6[r], blk_of_pos,
                              blk_end_pos, a, e)
                total += cr * zr
        a = e
    return total


@njit(cache=True)
def window_degrees(xs, prefix6, blocktot6, blk_of_pos, blk_end_pos,
                   blk_center, pl_lo, pl_hi, str_lo, str_hi, h, coeffs):
    """d_n at every sorted vertex: plateau count + polynomial taper sums
    (the self term Phi(0)=1 sits inside the plateau window)."""
    n = xs.shape[0]
    K2 = str_lo.shape[0]  # 2K strips: first K left side, next K right side
    K = K2 // 2
    out = np.empty(n)
    for i in range(n):
        x = xs[i]
        deg = float(pl_hi[i] - pl_lo[i])
        for s in range(K2):
            left = s < K
            deg += _taper_piece_sum(prefix6, blocktot6, blk_of_pos,
                                    blk_end_pos, blk_center, str_lo[s, i],
                                    str_hi[s, i], x, h, coeffs, left)
        out[i] = deg
    return out


@njit(cache=True, inline="always")
def _scan_strip_max(xs_ext, u_ext, lo, hi, x, h, t, coeffs, best, bw, bu):
    for idx in range(lo, hi):
        s = abs(xs_ext[idx] - x) / h
        if s >= 2.0:
            continue
        w = coeffs[0] + s * (coeffs[1] + s * (coeffs[2] + s * (
            coeffs[3] + s * (coeffs[4] + s * coeffs[5]))))
        if w <= 0.0:
            continue
        v = w * (u_ext[idx] - t)
        if v > best:
            best = v
            bw = w
            bu = u_ext[idx]
    return best, bw, bu


@njit(cache=True, inline="always")
def _scan_strip_min(xs_ext, u_ext, lo, hi, x, h, t, coeffs, best, bw, bu):
    for idx in range(lo, hi):
        s = abs(xs_ext[idx] - x) / h
        if s >= 2.0:
            continue
        w = coeffs[0] + s * (coeffs[1] + s * (coeffs[2] + s * (
            coeffs[3] + s * (coeffs[4] + s * coeffs[5]))))
        if w <= 0.0:
            continue
        v = w * (u_ext[idx] - t)
        if v < best:
            best = v
            bw = w
            bu = u_ext[idx]
    return best, bw, bu


@njit(cache=True)
def _window_extrema_terms(i, t, x, h, coeffs, xs_ext, u_ext,
                          plmaxL, plminL, plmaxR, plminR,
                          str_lo, str_hi, smax, smin, phi_hi, phi_lo):
    """max / min of {w(y)(u(y)-t)} over the window (self excluded, with the
    0 candidate always present); also returns the active (w,u) pairs."""
    K2 = str_lo.shape[0]
    # --- max side
    best_p = 0.0
    wp = 0.0
    up = 0.0
    if plmaxL[i] > -INF:
        v = plmaxL[i] - t
        if v > best_p:
            best_p = v
            wp = 1.0
            up = plmaxL[i]
    if plmaxR[i] > -INF:
        v = plmaxR[i] - t
        if v > best_p:
            best_p = v
            wp = 1.0
            up = plmaxR[i]
    for s in range(K2):
        M = smax[s, i]
        if M == -INF:
            continue
        diff = M - t
        ub = phi_hi[s] * diff if diff > 0.0 else phi_lo[s] * diff
        if ub > best_p:
            best_p, wp, up = _scan_strip_max(xs_ext, u_ext, str_lo[s, i],
                                             str_hi[s, i], x, h, t, coeffs,
                                             best_p, wp, up)
    # --- min side
    best_m = 0.0
    wm = 0.0
    um = 0.0
    if plminL[i] < INF:
        v = plminL[i] - t
        if v < best_m:
            best_m = v
            wm = 1.0
            um = plminL[i]
    if plminR[i] < INF:
        v = plminR[i] - t
        if v < best_m:
            best_m = v
            wm = 1.0
            um = plminR[i]
    for s in range(K2):
        mn = smin[s, i]
        if mn == INF:
            continue
        diff = mn - t
        lb = phi_hi[s] * diff if diff < 0.0 else phi_lo[s] * diff
        if lb < best_m:
            best_m, wm, um = _scan_strip_min(xs_ext, u_ext, str_lo[s, i],
                                             str_hi[s, i], x, h, t, coeffs,
                                             best_m, wm, um)
    return best_p, wp, up, best_m, wm, um


@njit(cache=True)
def window_sweep_game(xs, xs_ext, u_old_sorted, u_ext, mom_prefix,
                      degrees_sorted, label_sorted, pl_lo, pl_hi,
                      str_lo, str_hi, smax, smin, phi_hi, phi_lo,
                      plmaxL, plminL, plmaxR, plminR,
                      h, coeffs, lamp, phi0, u_new_sorted, residual_only):
    """Jacobi sweep (or residual evaluation) for the implicit d=1 graph.

    mom_prefix[r] = prefix sums of xs_ext^r * u_old_ext. Returns the max
    update (sweep mode) or the max |operator| over unlabeled (residual mode).
    """
    n = xs.shape[0]
    out = 0.0
    for i in range(n):
        if label_sorted[i]:
            u_new_sorted[i] = u_old_sorted[i]
            continue
        x = xs[i]
        dn = degrees_sorted[i]
        sw = dn - phi0
        if sw <= 0.0:
            u_new_sorted[i] = u_old_sorted[i]
            continue
        # 2-Laplacian neighbor sum (all y within the window, self removed)
        su = mom_prefix[0, pl_hi[i]] - mom_prefix[0, pl_lo[i]] - phi0 * u_old_sorted[i]
        K2 = str_lo.shape[0]
        K = K2 // 2
        for s in range(K2):
            su += _taper_piece_sum(mom_prefix, str_lo[s, i], str_hi[s, i],
                                   x, h, coeffs, s < K)
        if residual_only:
            t = u_old_sorted[i]
            bp, wp, up, bm, wm, um = _window_extrema_terms(
                i, t, x, h, coeffs, xs_ext, u_ext, plmaxL, plminL, plmaxR,
                plminR, str_lo, str_hi, smax, smin, phi_hi, phi_lo)
            val = (su - sw * t) / dn + lamp * (bp + bm)
            if abs(val) > out:
                out = abs(val)
            continue

        # bracket from window extrema
        lo = INF
        hi = -INF
        if plminL[i] < INF:
            lo = min(lo, plminL[i])
            hi = max(hi, plmaxL[i])
        if plminR[i] < INF:
            lo = min(lo, plminR[i])
            hi = max(hi, plmaxR[i])
        for s in range(K2):
            if smin[s, i] < INF:
                lo = min(lo, smin[s, i])
                hi = max(hi, smax[s, i])
        if lo == INF:
            u_new_sorted[i] = u_old_sorted[i]
            continue
        if lo == hi or lamp == 0.0:
            t = su / sw if lamp == 0.0 else lo
            u_new_sorted[i] = t
            du = abs(t - u_old_sorted[i])
            if du > out:
                out = du
            continue

        a = lo
        b = hi
        t = min(max(u_old_sorted[i], lo), hi)
        prev_wp = -1.0
        prev_up = INF
        prev_wm = -1.0
        prev_um = INF
        tn = t
        done = False
        for _ in range(200):
            bp, wp, up, bm, wm, um = _window_extrema_terms(
                i, t, x, h, coeffs, xs_ext, u_ext, plmaxL, plminL, plmaxR,
                plminR, str_lo, str_hi, smax, smin, phi_hi, phi_lo)
            denom = sw / dn + lamp * (wp + wm)
            tn = (su / dn + lamp * (wp * up + wm * um)) / denom
            if wp == prev_wp and up == prev_up and wm == prev_wm and um == prev_um:
                done = True
                break
            prev_wp, prev_up, prev_wm, prev_um = wp, up, wm, um
            if tn <= a or tn >= b:
                tn = 0.5 * (a + b)
            bp2, _, _, bm2, _, _ = _window_extrema_terms(
                i, tn, x, h, coeffs, xs_ext, u_ext, plmaxL, plminL, plmaxR,
                plminR, str_lo, str_hi, smax, smin, phi_hi, phi_lo)
            f = (su - sw * tn) / dn + lamp * (bp2 + bm2)
            if f > 0.0:
                a = tn
            else:
                b = tn
            t = tn
        if not done:
            for _ in range(100):
                mid = 0.5 * (a + b)
                bp2, _, _, bm2, _, _ = _window_extrema_terms(
                    i, mid, x, h, coeffs, xs_ext, u_ext, plmaxL, plminL,
                    plmaxR, plminR, str_lo, str_hi, smax, smin, phi_hi,
                    phi_lo)
                f = (su - sw * mid) / dn + lamp * (bp2 + bm2)
                if f > 0.0:
                    a = mid
                else:
                    b = mid
            tn = 0.5 * (a + b)
        u_new_sorted[i] = tn
        du = abs(tn - u_old_sorted[i])
        if du > out:
            out = du
    return out


# ---------------------------------------------------------------------------
# streaming pointwise operators over a cell grid (no stored adjacency)


@njit(cache=True)
def stream_l2(pts, fvals, sort_idx, cell_nbr_start, cell_nbr_ids, cell_start,
              point_cell, h, code, eval_ids, out):
    """out[k] = sum_y Phi(dist/h) (f(y) - f(x_k)) over all vertices y."""
    d = pts.shape[1]
    r = 2.0 * h
    r2 = r * r
    for kk in range(eval_ids.shape[0]):
        i = eval_ids[kk]
        c = point_cell[i]
        acc = 0.0
        for q in range(cell_nbr_start[c], cell_nbr_start[c + 1]):
            nc = cell_nbr_ids[q]
            for sj in range(cell_start[nc], cell_start[nc + 1]):
                j = sort_idx[sj]
                if j == i:
                    continue
                dist2 = 0.0
                for a in range(d):
                    delta = abs(pts[i, a] - pts[j, a])
                    if delta > 0.5:
                        delta = 1.0 - delta
                    dist2 += delta * delta
                if dist2 < r2:
                    w = phi_scalar(code, np.sqrt(dist2) / h)
                    acc += w * (fvals[j] - fvals[i])
        out[kk] = acc
    return out


@njit(cache=True)
def stream_linf(pts, fvals, sort_idx, cell_nbr_start, cell_nbr_ids,
                cell_start, point_cell, h, code, eval_ids, out):
    """out[k] = max_y w(f(y)-f(x)) + min_y w(f(y)-f(x)), 0 candidate included."""
    d = pts.shape[1]
    r = 2.0 * h
    r2 = r * r
    for kk in range(eval_ids.shape[0]):
        i = eval_ids[kk]
        c = point_cell[i]
        mx = 0.0
        mn = 0.0
        for q in range(cell_nbr_start[c], cell_nbr_start[c + 1]):
            nc = cell_nbr_ids[q]
            for sj in range(cell_start[nc], cell_start[nc + 1]):
                j = sort_idx[sj]
                if j == i:
                    continue
                dist2 = 0.0
                for a in range(d):
                    delta = abs(pts[i, a] - pts[j, a])
                    if delta > 0.5:
                        delta = 1.0 - delta
                    dist2 += delta * delta
                if dist2 < r2:
                    v = phi_scalar(code, np.sqrt(dist2) / h) * (fvals[j] - fvals[i])
                    if v > mx:
                        mx = v
                    if v < mn:
                        mn = v
        out[kk] = mx + mn
    return out


@njit(cache=True)
def stream_degrees(pts, sort_idx, cell_nbr_start, cell_nbr_ids, cell_start,
                   point_cell, h, code, phi0, out):
    """d_n at every vertex (self term included), without storing edges."""
    n = pts.shape[0]
    d = pts.shape[1]
    r = 2.0 * h
    r2 = r * r
    for i in range(n):
        c = point_cell[i]
        acc = phi0
        for q in range(cell_nbr_start[c], cell_nbr_start[c + 1]):
            nc = cell_nbr_ids[q]
            for sj in range(cell_start[nc], cell_start[nc + 1]):
                j = sort_idx[sj]
                if j == i:
                    continue
                dist2 = 0.0
                for a in range(d):
                    delta = abs(pts[i, a] - pts[j, a])
                    if delta > 0.5:
                        delta = 1.0 - delta
                    dist2 += delta * delta
                if dist2 < r2:
                    acc += phi_scalar(code, np.sqrt(dist2) / h)
        out[i] = acc
    return out
