"""Adaptive composite Gauss-Legendre quadrature for vectorized integrands."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericalError


@lru_cache(maxsize=16)
def _gl_rule(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel_sums(f, a, b, order):
    """GL estimate on each panel ``[a_i, b_i]``; returns shape (n_panels, ...)."""
    x, w = _gl_rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
    vals = np.asarray(f(nodes), dtype=float)
    vals = vals.reshape((a.size, order) + vals.shape[1:])
    wts = (half[:, None] * w[None, :]).reshape((a.size, order) + (1,) * (vals.ndim - 2))
    return np.sum(vals * wts, axis=1)


def integrate(f, breakpoints, rtol=1e-6, atol=0.0, order=16, max_panels=4000):
    """Integrate ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    ``f`` maps a 1-D array of nodes of length ``m`` to an array of shape
    ``(m,)`` or ``(m, k)``; the result has shape ``()`` or ``(k,)``.
    Every panel is compared with the sum over its two halves; panels whose
    error estimate exceeds their length-share of the global tolerance are
    bisected, until the summed error estimate meets the tolerance. All nodes of one refinement sweep go through ``f`` in a single
    call.

    Raises NumericalError when ``max_panels`` is exceeded.
    """
    edges = np.asarray(breakpoints, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("breakpoints must be strictly increasing, length >= 2")
    length = edges[-1] - edges[0]
    pa, pb = edges[:-1].copy(), edges[1:].copy()

    done = None
    done_err = None
    n_panels = pa.size
    sweeps = 0
    while pa.size:
        sweeps += 1
        mid = 0.5 * (pa + pb)
        coarse = _panel_sums(f, pa, pb, order)
        # left halves then right halves in one evaluation
        halves = _panel_sums(f, np.concatenate([pa, mid]), np.concatenate([mid, pb]), order)
        fine = halves[: pa.size] + halves[pa.size:]
        err = np.abs(fine - coarse)

        partial = fine.sum(axis=0) + (0.0 if done is None else done)
        tol = np.maximum(atol, rtol * np.abs(partial))
        share = ((pb - pa) / length).reshape((-1,) + (1,) * (err.ndim - 1))
        bad = err > tol * share
        if bad.ndim > 1:
            bad = bad.reshape(bad.shape[0], -1).any(axis=1)
        # global stop: integrable endpoint singularities never satisfy the
        # per-panel share, but their summed error still converges
        total_err = err.sum(axis=0) + (0.0 if done_err is None else done_err)
        if np.all(total_err <= tol):
            bad[:] = False

        ok = ~bad
        acc = fine[ok].sum(axis=0)
        acc_err = err[ok].sum(axis=0)
        done = acc if done is None else done + acc
        done_err = acc_err if done_err is None else done_err + acc_err

        if not bad.any():
            break
        pa, pb, mid = pa[bad], pb[bad], mid[bad]
        n_panels += pa.size
        if n_panels > max_panels:
            raise NumericalError(
                "adaptive quadrature exceeded panel cap",
                {"max_panels": max_panels, "sweeps": sweeps,
                 "unresolved_panels": pa.size,
                 "worst_interval": (float(pa[0]), float(pb[0]))},
            )
        pa, pb = np.concatenate([pa, mid]), np.concatenate([mid, pb])
        order_idx = np.argsort(pa)
        pa, pb = pa[order_idx], pb[order_idx]
    return done
