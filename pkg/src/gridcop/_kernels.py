"""Compiled inner loops for random rectangle exchanges.

Masses are flat float64 arrays in enumeration order. ``strides`` are element
strides of the C-ordered cell array and ``elig`` lists the dimensions with
at least two intervals. The numba global RNG is used inside the kernels and
is reseeded from the caller's numpy Generator before every call, which keeps
chains reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def seed(s):
    np.random.seed(s)


@njit(cache=True)
def _pair(m):
    a = np.random.randint(0, m)
    b = np.random.randint(0, m - 1)
    if b >= a:
        b += 1
    if a < b:
        return a, b
    return b, a


@njit(cache=True)
def draw_site(shape, strides, elig, cells):
    """Fill ``cells`` with the flat indices (a1b1, a1b2, a2b1, a2b2)."""
    ne = elig.shape[0]
    p = np.random.randint(0, ne)
    q = np.random.randint(0, ne - 1)
    if q >= p:
        q += 1
    di = elig[min(p, q)]
    dj = elig[max(p, q)]
    base = 0
    for k in range(shape.shape[0]):
        if k != di and k != dj:
            base += np.random.randint(0, shape[k]) * strides[k]
    a1, a2 = _pair(shape[di])
    b1, b2 = _pair(shape[dj])
    cells[0] = base + a1 * strides[di] + b1 * strides[dj]
    cells[1] = base + a1 * strides[di] + b2 * strides[dj]
    cells[2] = base + a2 * strides[di] + b1 * strides[dj]
    cells[3] = base + a2 * strides[di] + b2 * strides[dj]


@njit(cache=True)
def draw_epsilon(mass, cells):
    lo = max(-mass[cells[1]], -mass[cells[2]])
    hi = min(mass[cells[0]], mass[cells[3]])
    eps = lo + (hi - lo) * np.random.random()
    return min(max(eps, lo), hi), lo, hi


@njit(cache=True)
def apply_flat(mass, cells, eps):
    mass[cells[0]] -= eps
    mass[cells[1]] += eps
    mass[cells[2]] += eps
    mass[cells[3]] -= eps


@njit(cache=True)
def random_walk(mass, shape, strides, elig, n_steps):
    """Apply ``n_steps`` unconditional random exchanges in place."""
    cells = np.empty(4, dtype=np.int64)
    for _ in range(n_steps):
        draw_site(shape, strides, elig, cells)
        eps, lo, hi = draw_epsilon(mass, cells)
        apply_flat(mass, cells, eps)


_SIGNS = np.array([-1.0, 1.0, 1.0, -1.0])


@njit(cache=True)
def quad_delta(cells, eps, indptr, indices, data, qv):
    """Change of v'Qv when v moves by eps * (-1, +1, +1, -1) on ``cells``."""
    lin = 0.0
    quad = 0.0
    for a in range(4):
        da = _SIGNS[a] * eps
        lin += da * qv[cells[a]]
        for p in range(indptr[cells[a]], indptr[cells[a] + 1]):
            col = indices[p]
            for b in range(4):
                if cells[b] == col:
                    quad += da * data[p] * _SIGNS[b] * eps
    return 2.0 * lin + quad


@njit(cache=True)
def update_qv(cells, eps, indptr, indices, data, qv):
    for a in range(4):
        da = _SIGNS[a] * eps
        for p in range(indptr[cells[a]], indptr[cells[a] + 1]):
            qv[indices[p]] += data[p] * da


@njit(cache=True)
def loglik_delta(mass, counts, cells, eps):
    out = 0.0
    for a in range(4):
        c = cells[a]
        n = counts[c]
        if n > 0:
            new = mass[c] + _SIGNS[a] * eps
            if new <= 0.0:
                return -np.inf
            out += n * (np.log(new) - np.log(mass[c]))
    return out


@njit(cache=True)
def exchange_sweep(mass, counts, shape, strides, elig, indptr, indices, data, qv,
                   half_alpha, n_props):
    """Metropolis updates of the copula by random rectangle exchanges.

    Returns (accepted, proposed, change in log-likelihood, change in the
    prior quadratic form).
    """
    cells = np.empty(4, dtype=np.int64)
    n_acc = 0
    d_ll = 0.0
    d_quad = 0.0
    for _ in range(n_props):
        draw_site(shape, strides, elig, cells)
        eps, lo, hi = draw_epsilon(mass, cells)
        if hi <= lo or eps == 0.0:
            n_acc += 1
            continue
        dl = loglik_delta(mass, counts, cells, eps)
        if dl == -np.inf:
            continue
        dq = 0.0
        if half_alpha != 0.0:
            dq = quad_delta(cells, eps, indptr, indices, data, qv)
        logr = dl - half_alpha * dq
        if logr >= 0.0 or np.log(np.random.random()) < logr:
            apply_flat(mass, cells, eps)
            if half_alpha != 0.0:
                update_qv(cells, eps, indptr, indices, data, qv)
            n_acc += 1
            d_ll += dl
            d_quad += dq
    return n_acc, n_props, d_ll, d_quad
