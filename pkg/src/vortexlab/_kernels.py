"""Compiled inner loops.

Every velocity kernel has the signature ``vel(pos, gam, m_trunc, out) -> int``
(``velocity`` adds a leading integer geometry code) and returns a status code instead of raising, so the stepping loops can stop
cleanly and report where a trajectory ended.  Pair loops run ``i < j`` in a
fixed order, which keeps results bit-reproducible.
"""

import math

import numpy as np
from numba import njit

OK = 0
COLLISION = 1
DIVERGED = 2
ZERO_VECTOR = 3
NON_TIMELIKE = 4

EPS_COLL = 1e-8
TWO_PI = 2.0 * math.pi
INV_2PI = 1.0 / TWO_PI
INV_PI = 1.0 / math.pi

_jit = njit(cache=True, nogil=True)


@_jit
def wrap(d):
    return d - TWO_PI * np.round(d / TWO_PI)


@_jit
def torus_h(x, y, m_trunc):
    """Periodic kernel h(x, y) with the image sum truncated to |m| <= m_trunc."""
    s = -x * x / TWO_PI
    sy = math.sin(0.5 * y)
    sy2 = 2.0 * sy * sy
    for m in range(-m_trunc, m_trunc + 1):
        xm = x - TWO_PI * m
        sh = math.sinh(0.5 * xm)
        # cosh(u) - cos(y) written without cancellation near the origin
        den = 2.0 * sh * sh + sy2
        s += math.log(den) - math.log(math.cosh(TWO_PI * m))
    return s


@_jit
def torus_grad_h(x, y, m_trunc):
    gx = -x * INV_PI
    gy = 0.0
    siny = math.sin(y)
    sy = math.sin(0.5 * y)
    sy2 = 2.0 * sy * sy
    for m in range(-m_trunc, m_trunc + 1):
        xm = x - TWO_PI * m
        sh = math.sinh(0.5 * xm)
        den = 2.0 * sh * sh + sy2
        gx += math.sinh(xm) / den
        gy += siny / den
    return gx, gy


@_jit
def vel_sphere(pos, gam, m_trunc, out):
    n = pos.shape[0]
    out[:, :] = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i, 0] * pos[j, 0] + pos[i, 1] * pos[j, 1] + pos[i, 2] * pos[j, 2]
            sep = 1.0 - d
            if sep < EPS_COLL:
                return COLLISION
            f = INV_2PI / sep
            cx = (pos[i, 1] * pos[j, 2] - pos[i, 2] * pos[j, 1]) * f
            cy = (pos[i, 2] * pos[j, 0] - pos[i, 0] * pos[j, 2]) * f
            cz = (pos[i, 0] * pos[j, 1] - pos[i, 1] * pos[j, 0]) * f
            out[i, 0] += gam[j] * cx
            out[i, 1] += gam[j] * cy
            out[i, 2] += gam[j] * cz
            out[j, 0] -= gam[i] * cx
            out[j, 1] -= gam[i] * cy
            out[j, 2] -= gam[i] * cz
    return OK


@_jit
def vel_plane(pos, gam, m_trunc, out):
    n = pos.shape[0]
    out[:, :] = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            d2 = dx * dx + dy * dy
            if d2 < EPS_COLL * EPS_COLL:
                return COLLISION
            fx = -INV_2PI * dy / d2
            fy = INV_2PI * dx / d2
            out[i, 0] += gam[j] * fx
            out[i, 1] += gam[j] * fy
            out[j, 0] -= gam[i] * fx
            out[j, 1] -= gam[i] * fy
    return OK


@_jit
def vel_hyperbolic(pos, gam, m_trunc, out):
    n = pos.shape[0]
    out[:, :] = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            a = -pos[i, 0] * pos[j, 0] - pos[i, 1] * pos[j, 1] + pos[i, 2] * pos[j, 2]
            sep = a - 1.0
            if sep < EPS_COLL:
                return COLLISION
            f = -INV_PI / (sep * (a + 1.0))
            # L (r_i x r_j) with L = diag(-1, -1, 1)
            cx = -(pos[i, 1] * pos[j, 2] - pos[i, 2] * pos[j, 1]) * f
            cy = -(pos[i, 2] * pos[j, 0] - pos[i, 0] * pos[j, 2]) * f
            cz = (pos[i, 0] * pos[j, 1] - pos[i, 1] * pos[j, 0]) * f
            out[i, 0] += gam[j] * cx
            out[i, 1] += gam[j] * cy
            out[i, 2] += gam[j] * cz
            out[j, 0] -= gam[i] * cx
            out[j, 1] -= gam[i] * cy
            out[j, 2] -= gam[i] * cz
    return OK


@_jit
def vel_torus(pos, gam, m_trunc, out):
    n = pos.shape[0]
    out[:, :] = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = wrap(pos[i, 0] - pos[j, 0])
            dy = wrap(pos[i, 1] - pos[j, 1])
            if dx * dx + dy * dy < EPS_COLL * EPS_COLL:
                return COLLISION
            gx, gy = torus_grad_h(dx, dy, m_trunc)
            fx = -INV_2PI * gy
            fy = INV_2PI * gx
            out[i, 0] += gam[j] * fx
            out[i, 1] += gam[j] * fy
            out[j, 0] -= gam[i] * fx
            out[j, 1] -= gam[i] * fy
    return OK


@_jit
def ham_sphere(pos, gam, m_trunc):
    n = pos.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i, 0] * pos[j, 0] + pos[i, 1] * pos[j, 1] + pos[i, 2] * pos[j, 2]
            s += gam[i] * gam[j] * math.log(1.0 - d)
    return -2.0 * s / (4.0 * math.pi)


@_jit
def ham_plane(pos, gam, m_trunc):
    n = pos.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            s += gam[i] * gam[j] * math.log(dx * dx + dy * dy)
    return -2.0 * s / (4.0 * math.pi)


@_jit
def ham_hyperbolic(pos, gam, m_trunc):
    n = pos.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            a = -pos[i, 0] * pos[j, 0] - pos[i, 1] * pos[j, 1] + pos[i, 2] * pos[j, 2]
            s += gam[i] * gam[j] * math.log((a + 1.0) / (a - 1.0))
    return -2.0 * s / (4.0 * math.pi)


@_jit
def ham_torus(pos, gam, m_trunc):
    n = pos.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = wrap(pos[i, 0] - pos[j, 0])
            dy = wrap(pos[i, 1] - pos[j, 1])
            s += gam[i] * gam[j] * torus_h(dx, dy, m_trunc)
    return -2.0 * s / (4.0 * math.pi)


SPHERE = 0
PLANE = 1
HYPERBOLIC = 2
TORUS = 3


@_jit
def velocity(geom, pos, gam, m_trunc, out):
    """Dispatch on the integer geometry code."""
    if geom == SPHERE:
        return vel_sphere(pos, gam, m_trunc, out)
    if geom == PLANE:
        return vel_plane(pos, gam, m_trunc, out)
    if geom == HYPERBOLIC:
        return vel_hyperbolic(pos, gam, m_trunc, out)
    return vel_torus(pos, gam, m_trunc, out)


# ---------------------------------------------------------------------------
# implicit midpoint family
#
# normalize: 0 flat (plain average), 1 sphere, 2 hyperboloid.
# ---------------------------------------------------------------------------


@_jit
def _midpoint(a, b, normalize, mid):
    n, d = a.shape
    for i in range(n):
        if normalize == 0:
            for k in range(d):
                mid[i, k] = 0.5 * (a[i, k] + b[i, k])
        elif normalize == 1:
            s0 = a[i, 0] + b[i, 0]
            s1 = a[i, 1] + b[i, 1]
            s2 = a[i, 2] + b[i, 2]
            nrm = math.sqrt(s0 * s0 + s1 * s1 + s2 * s2)
            if nrm < 1e-8:
                return ZERO_VECTOR
            mid[i, 0] = s0 / nrm
            mid[i, 1] = s1 / nrm
            mid[i, 2] = s2 / nrm
        else:
            s0 = a[i, 0] + b[i, 0]
            s1 = a[i, 1] + b[i, 1]
            s2 = a[i, 2] + b[i, 2]
            q = s2 * s2 - s0 * s0 - s1 * s1
            if q <= 0.0 or s2 <= 0.0:
                return NON_TIMELIKE
            nrm = math.sqrt(q)
            mid[i, 0] = s0 / nrm
            mid[i, 1] = s1 / nrm
            mid[i, 2] = s2 / nrm
    return OK


@_jit
def midpoint_step(geom, a, gam, dt, m_trunc, normalize, tol, max_iter, b, mid, v):
    """Solve ``b = a + dt * vel(midpoint(a, b))`` by Picard iteration.

    Convergence is declared when the max-norm update is at most
    ``tol * max(1, max|b|)``; far out on the hyperboloid the coordinates are
    large and an absolute test would stall on rounding.

    Writes the solution into ``b`` and returns ``(status, iterations)``.  On
    the flat geometries the last update is ``a + dt * vel(mid)``, so linear
    invariants such as the weighted position sum are exact up to rounding.  On
    the sphere and hyperboloid the accepted iterate is renormalized onto the
    manifold.
    """
    n, d = a.shape
    st = velocity(geom, a, gam, m_trunc, v)
    if st != OK:
        return st, 0
    for i in range(n):
        for k in range(d):
            b[i, k] = a[i, k] + dt * v[i, k]
    for it in range(1, max_iter + 1):
        st = _midpoint(a, b, normalize, mid)
        if st != OK:
            return st, it
        st = velocity(geom, mid, gam, m_trunc, v)
        if st != OK:
            return st, it
        err = 0.0
        scale = 1.0
        for i in range(n):
            for k in range(d):
                nb = a[i, k] + dt * v[i, k]
                e = abs(nb - b[i, k])
                if e > err:
                    err = e
                if abs(nb) > scale:
                    scale = abs(nb)
                b[i, k] = nb
        if err <= tol * scale:
            if normalize != 0:
                _project_rows(b, normalize)
            return OK, it
    return DIVERGED, max_iter


@_jit
def _project_rows(b, normalize):
    # the exact fixed point lies on the manifold; pulling the accepted iterate
    # back onto it moves b by far less than the solver tolerance and removes
    # the one-sided stopping error that would otherwise accumulate
    for i in range(b.shape[0]):
        if normalize == 1:
            nrm = math.sqrt(b[i, 0] * b[i, 0] + b[i, 1] * b[i, 1] + b[i, 2] * b[i, 2])
        else:
            nrm = math.sqrt(b[i, 2] * b[i, 2] - b[i, 0] * b[i, 0] - b[i, 1] * b[i, 1])
        for k in range(3):
            b[i, k] = b[i, k] / nrm


@_jit
def advance(geom, y0, gam, dt, n_steps, stride, m_trunc, normalize, tol, max_iter, out):
    """Take ``n_steps`` steps from ``y0``, storing every ``stride``-th state in ``out``.

    ``out[0]`` receives ``y0``.  Returns ``(status, steps_taken)``; on failure
    the last stored sample is the last good state that fell on the stride grid.
    """
    a = y0.copy()
    b = np.empty_like(a)
    mid = np.empty_like(a)
    v = np.empty_like(a)
    out[0] = a
    rec = 1
    for step in range(1, n_steps + 1):
        st, _ = midpoint_step(geom, a, gam, dt, m_trunc, normalize, tol, max_iter, b, mid, v)
        if st != OK:
            return st, step - 1
        a[:, :] = b
        if step % stride == 0:
            out[rec] = a
            rec += 1
    return OK, n_steps


@_jit
def advance_final(geom, y0, gam, dt, n_steps, m_trunc, normalize, tol, max_iter):
    """Like :func:`advance` but only returns the final state."""
    a = y0.copy()
    b = np.empty_like(a)
    mid = np.empty_like(a)
    v = np.empty_like(a)
    for step in range(1, n_steps + 1):
        st, _ = midpoint_step(geom, a, gam, dt, m_trunc, normalize, tol, max_iter, b, mid, v)
        if st != OK:
            return st, step - 1, a
        a[:, :] = b
    return OK, n_steps, a
