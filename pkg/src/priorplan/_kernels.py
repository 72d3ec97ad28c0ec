"""Compiled collision kernels.

Same geometry as the numpy path in ``collision``; this version exists because
planning calls it hundreds of thousands of times. ``data`` is the tuple built
by ``pack_scene``.
"""

import numpy as np
from numba import njit

_EPS = 1e-9


def pack_scene(scene) -> tuple:
    robot = scene.robot
    n = robot.n
    jK = np.array([j._k for j in robot.joints]).reshape(n, 3, 3)
    jK2 = np.array([j._k2 for j in robot.joints]).reshape(n, 3, 3)
    joff = np.array([j.offset for j in robot.joints]).reshape(n, 3)
    starts = np.array([s.start for s in robot.chain_slices] + [n], dtype=np.int64)
    base_pos = np.array([c.base_position for c in robot.chains])
    base_rot = np.array([c.base_rotation for c in robot.chains])
    tcp_off = np.array([c.tcp_offset for c in robot.chains])
    f_chain = robot.chain_of_joint[robot.finger_owner].astype(np.int64) if len(robot.finger_owner) else np.zeros(0, np.int64)
    att = scene.attachment
    if att is None:
        att_chain = -1
        att_c, att_R, att_h = np.zeros(3), np.eye(3), np.ones(3)
    else:
        att_chain = int(att.chain)
        att_c, att_R, att_h = att.center, att.rotation, att.half_extents
    if scene.static_boxes:
        sc, sR, sh = scene._sc, scene._sR, scene._sh
    else:
        sc, sR, sh = np.zeros((0, 3)), np.zeros((0, 3, 3)), np.zeros((0, 3))
    grid = scene.grid
    bitmap = grid._bitmap.astype(np.uint8)
    return (
        jK, jK2, joff, robot._box_local.reshape(n, 3).copy(), robot._half.reshape(n, 3).copy(),
        starts, base_pos, base_rot, tcp_off,
        f_chain, robot._finger_local.copy(), robot._finger_half.copy(),
        att_chain, att_c.copy(), att_R.copy(), att_h.copy(),
        float(scene.d_safe),
        np.ascontiguousarray(sc), np.ascontiguousarray(sR), np.ascontiguousarray(sh),
        grid.origin.copy(), float(grid.resolution), grid._lo.astype(np.int64), bitmap,
        scene._pair_a.astype(np.int64), scene._pair_b.astype(np.int64),
        joint_reach(scene),
    )


def joint_reach(scene) -> np.ndarray:
    """Per joint, an upper bound on the distance from its origin to any grown body point it moves.

    A straight joint-space move by dq then displaces every body point by at
    most ``sum(|dq_k| * reach_k)``.
    """
    robot = scene.robot
    grow = scene.d_safe
    reach = np.zeros(robot.n)
    for ci, sl in enumerate(robot.chain_slices):
        idx = list(range(sl.start, sl.stop))
        far = []  # farthest extent of each body measured from the origin of its owning joint
        for k in idx:
            j = robot.joints[k]
            far.append((k, np.linalg.norm(j.box_center) + np.linalg.norm(j.box_half_extents + grow)))
        last = idx[-1]
        tip = np.linalg.norm(robot.joints[last].offset)
        for f, owner in enumerate(robot.finger_owner):
            if owner == last:
                far.append((last, tip + np.linalg.norm(robot._finger_local[f])
                            + np.linalg.norm(robot._finger_half[f] + grow)))
        att = scene.attachment
        if att is not None and att.chain == ci:
            far.append((last, tip + np.linalg.norm(robot.chains[ci].tcp_offset) + np.linalg.norm(att.center)
                        + np.linalg.norm(att.half_extents + grow)))
        for k in idx:
            best = 0.0
            for owner, d in far:
                if owner < k:
                    continue
                chain_len = sum(np.linalg.norm(robot.joints[l].offset) for l in range(k, owner))
                best = max(best, chain_len + d)
            reach[k] = best
    return reach


@njit(cache=True)
def _sat(c1, R1, h1, c2, R2, h2):
    """True when the two boxes overlap or touch."""
    d0 = c2[0] - c1[0]
    d1 = c2[1] - c1[1]
    d2 = c2[2] - c1[2]
    R = np.empty((3, 3))
    A = np.empty((3, 3))
    t = np.empty(3)
    for i in range(3):
        t[i] = R1[0, i] * d0 + R1[1, i] * d1 + R1[2, i] * d2
        for j in range(3):
            R[i, j] = R1[0, i] * R2[0, j] + R1[1, i] * R2[1, j] + R1[2, i] * R2[2, j]
            A[i, j] = abs(R[i, j]) + _EPS
    for i in range(3):
        if abs(t[i]) > h1[i] + h2[0] * A[i, 0] + h2[1] * A[i, 1] + h2[2] * A[i, 2]:
            return False
    for j in range(3):
        tb = t[0] * R[0, j] + t[1] * R[1, j] + t[2] * R[2, j]
        if abs(tb) > h1[0] * A[0, j] + h1[1] * A[1, j] + h1[2] * A[2, j] + h2[j]:
            return False
    for i in range(3):
        i1 = (i + 1) % 3
        i2 = (i + 2) % 3
        for j in range(3):
            j1 = (j + 1) % 3
            j2 = (j + 2) % 3
            ra = h1[i1] * A[i2, j] + h1[i2] * A[i1, j]
            rb = h2[j1] * A[i, j2] + h2[j2] * A[i, j1]
            if abs(t[i2] * R[i1, j] - t[i1] * R[i2, j]) > ra + rb:
                return False
    return True


@njit(cache=True)
def _matmul3(A, B, out):
    for i in range(3):
        for j in range(3):
            out[i, j] = A[i, 0] * B[0, j] + A[i, 1] * B[1, j] + A[i, 2] * B[2, j]


@njit(cache=True)
def _bodies(q, data, extra):
    (jK, jK2, joff, jbox, jhalf, starts, base_pos, base_rot, tcp_off,
     f_chain, f_local, f_half, att_chain, att_c, att_R, att_h,
     d_safe, sc, sR, sh, g_origin, g_res, g_lo, bitmap, pa, pb, reach) = data
    grow = d_safe + extra
    n = jK.shape[0]
    n_chains = base_pos.shape[0]
    nf = f_chain.shape[0]
    nb = n + nf + (1 if att_chain >= 0 else 0)
    C = np.empty((nb, 3))
    Rs = np.empty((nb, 3, 3))
    H = np.empty((nb, 3))
    ends = np.empty((n_chains, 3))
    end_R = np.empty((n_chains, 3, 3))
    Rj = np.empty((3, 3))
    Rn = np.empty((3, 3))
    for ci in range(n_chains):
        R = base_rot[ci].copy()
        p = base_pos[ci].copy()
        for k in range(starts[ci], starts[ci + 1]):
            s = np.sin(q[k])
            c1 = 1.0 - np.cos(q[k])
            for a in range(3):
                for b in range(3):
                    Rj[a, b] = s * jK[k, a, b] + c1 * jK2[k, a, b]
                Rj[a, a] += 1.0
            _matmul3(R, Rj, Rn)
            R[:, :] = Rn
            Rs[k] = R
            for a in range(3):
                C[k, a] = p[a] + R[a, 0] * jbox[k, 0] + R[a, 1] * jbox[k, 1] + R[a, 2] * jbox[k, 2]
                H[k, a] = jhalf[k, a] + grow
            for a in range(3):
                p[a] += R[a, 0] * joff[k, 0] + R[a, 1] * joff[k, 1] + R[a, 2] * joff[k, 2]
        ends[ci] = p
        end_R[ci] = R
    for f in range(nf):
        ci = f_chain[f]
        b = n + f
        Rs[b] = end_R[ci]
        for a in range(3):
            C[b, a] = ends[ci, a] + end_R[ci, a, 0] * f_local[f, 0] + end_R[ci, a, 1] * f_local[f, 1] + end_R[ci, a, 2] * f_local[f, 2]
            H[b, a] = f_half[f, a] + grow
    if att_chain >= 0:
        b = n + nf
        R = end_R[att_chain]
        tcp = np.empty(3)
        for a in range(3):
            tcp[a] = ends[att_chain, a] + R[a, 0] * tcp_off[att_chain, 0] + R[a, 1] * tcp_off[att_chain, 1] + R[a, 2] * tcp_off[att_chain, 2]
        for a in range(3):
            C[b, a] = tcp[a] + R[a, 0] * att_c[0] + R[a, 1] * att_c[1] + R[a, 2] * att_c[2]
            H[b, a] = att_h[a] + grow
        _matmul3(R, att_R, Rn)
        Rs[b] = Rn
    return C, Rs, H


@njit(cache=True)
def config_free(q, data):
    return config_free_grown(q, 0.0, data)


@njit(cache=True)
def config_free_grown(q, extra, data):
    """Free check with every body grown by ``d_safe + extra``."""
    (jK, jK2, joff, jbox, jhalf, starts, base_pos, base_rot, tcp_off,
     f_chain, f_local, f_half, att_chain, att_c, att_R, att_h,
     d_safe, sc, sR, sh, g_origin, g_res, g_lo, bitmap, pa, pb, reach) = data
    C, Rs, H = _bodies(q, data, extra)
    nb = C.shape[0]
    rad = np.empty(nb)
    for b in range(nb):
        rad[b] = np.sqrt(H[b, 0] ** 2 + H[b, 1] ** 2 + H[b, 2] ** 2)

    for s in range(sc.shape[0]):
        rs = np.sqrt(sh[s, 0] ** 2 + sh[s, 1] ** 2 + sh[s, 2] ** 2)
        for b in range(nb):
            dx = C[b, 0] - sc[s, 0]
            dy = C[b, 1] - sc[s, 1]
            dz = C[b, 2] - sc[s, 2]
            r = rad[b] + rs
            if dx * dx + dy * dy + dz * dz <= r * r:
                if _sat(C[b], Rs[b], H[b], sc[s], sR[s], sh[s]):
                    return False

    if bitmap.size > 0:
        eye = np.eye(3)
        vh = np.full(3, 0.5 * g_res)
        vc = np.empty(3)
        lo = np.empty(3, np.int64)
        hi = np.empty(3, np.int64)
        for b in range(nb):
            empty = False
            for a in range(3):
                ext = abs(Rs[b, a, 0]) * H[b, 0] + abs(Rs[b, a, 1]) * H[b, 1] + abs(Rs[b, a, 2]) * H[b, 2]
                lo[a] = max(np.int64(np.floor((C[b, a] - ext - g_origin[a]) / g_res)) - g_lo[a], 0)
                hi[a] = min(np.int64(np.floor((C[b, a] + ext - g_origin[a]) / g_res)) - g_lo[a] + 1, bitmap.shape[a])
                if hi[a] <= lo[a]:
                    empty = True
            if empty:
                continue
            for i in range(lo[0], hi[0]):
                for j in range(lo[1], hi[1]):
                    for k in range(lo[2], hi[2]):
                        if bitmap[i, j, k]:
                            vc[0] = g_origin[0] + (i + g_lo[0] + 0.5) * g_res
                            vc[1] = g_origin[1] + (j + g_lo[1] + 0.5) * g_res
                            vc[2] = g_origin[2] + (k + g_lo[2] + 0.5) * g_res
                            if _sat(C[b], Rs[b], H[b], vc, eye, vh):
                                return False

    for p in range(pa.shape[0]):
        a = pa[p]
        b = pb[p]
        dx = C[a, 0] - C[b, 0]
        dy = C[a, 1] - C[b, 1]
        dz = C[a, 2] - C[b, 2]
        r = rad[a] + rad[b]
        if dx * dx + dy * dy + dz * dz <= r * r:
            if _sat(C[a], Rs[a], H[a], C[b], Rs[b], H[b]):
                return False
    return True


@njit(cache=True)
def segment_free(q_a, q_b, m, include_start, data):
    """Check ``q_a`` (optionally), ``q_b`` and the m-1 interior points of the segment."""
    if include_start and not config_free(q_a, data):
        return False
    if not config_free(q_b, data):
        return False
    q = np.empty_like(q_a)
    for i in range(1, m):
        wa = (m - i) / m
        wb = i / m
        for k in range(q.shape[0]):
            q[k] = wa * q_a[k] + wb * q_b[k]
        if not config_free(q, data):
            return False
    return True


@njit(cache=True)
def configs_free(Q, data):
    out = np.empty(Q.shape[0], dtype=np.bool_)
    for i in range(Q.shape[0]):
        out[i] = config_free(Q[i], data)
    return out


@njit(cache=True)
def motion_free(q_a, q_b, include_start, margin, data):
    """Conservative check of the whole straight segment, not just samples on it.

    An interval is accepted when its midpoint is free with bodies grown by the
    largest displacement any body point can make within the interval; otherwise
    it is split. Once that displacement is at most ``margin`` a failed midpoint
    rejects the segment. Acceptance implies every configuration on the
    segment is free, so sampled checks at any resolution agree.
    """
    reach = data[26]
    if include_start and not config_free_grown(q_a, 0.0, data):
        return False
    if not config_free_grown(q_b, 0.0, data):
        return False
    sweep = 0.0
    for k in range(q_a.shape[0]):
        sweep += abs(q_b[k] - q_a[k]) * reach[k]
    if sweep == 0.0:
        return True
    q = np.empty_like(q_a)
    stack = np.empty((64, 2))
    stack[0, 0] = 0.0
    stack[0, 1] = 1.0
    top = 1
    while top > 0:
        top -= 1
        t0 = stack[top, 0]
        t1 = stack[top, 1]
        tm = 0.5 * (t0 + t1)
        for k in range(q.shape[0]):
            q[k] = (1.0 - tm) * q_a[k] + tm * q_b[k]
        bound = 0.5 * (t1 - t0) * sweep * (1.0 + 1e-9) + 1e-12
        if config_free_grown(q, bound, data):
            continue
        if bound <= margin or top + 2 > stack.shape[0]:
            return False
        stack[top, 0] = tm
        stack[top, 1] = t1
        stack[top + 1, 0] = t0
        stack[top + 1, 1] = tm
        top += 2
    return True


@njit(cache=True)
def extend_points(q_near, q_sample, step, margin, data):
    """Walk from q_near toward q_sample in increments of ``step`` (L2).

    Returns the validated increments in order; the last one equals q_sample
    exactly when the target was reached. Stops at the first blocked increment.
    """
    n = q_near.shape[0]
    diff = q_sample - q_near
    length = np.sqrt(np.sum(diff * diff))
    if length == 0.0:
        return np.empty((0, n))
    total = int(np.ceil(length / step))
    out = np.empty((total, n))
    prev = q_near.copy()
    prev_l1 = np.sum(np.abs(diff))
    count = 0
    for i in range(1, total + 1):
        if i == total:
            q = q_sample.copy()
        else:
            q = q_near + (i * step / length) * diff
        l1 = np.sum(np.abs(q_sample - q))
        if l1 >= prev_l1:
            break
        if not motion_free(prev, q, False, margin, data):
            break
        out[count] = q
        count += 1
        prev = q
        prev_l1 = l1
    return out[:count]
