"""Small dense-tensor helpers shared by all modules.

Everything operates on numpy arrays whose entries are floats or Jets;
np.einsum dispatches per element, so one code path serves both.
"""

from itertools import permutations

import numpy as np

from .jetnum import Jet, jval, values, partial_array


def delta(d, like=None):
    return np.eye(d)


def perm_sign(p):
    s = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


def antisym(t, axes):
    """Antisymmetrise over the given axes (with 1/k! normalisation)."""
    axes = list(axes)
    out = None
    for p in permutations(range(len(axes))):
        perm = list(range(t.ndim))
        for src, dst in zip(axes, [axes[i] for i in p]):
            perm[dst] = src
        term = np.transpose(t, perm) * perm_sign(p)
        out = term if out is None else out + term
    fact = 1.0
    for k in range(2, len(axes) + 1):
        fact *= k
    return out / fact


def sym(t, axes):
    """Symmetrise over the given axes (with 1/k! normalisation)."""
    axes = list(axes)
    out = None
    for p in permutations(range(len(axes))):
        perm = list(range(t.ndim))
        for src, dst in zip(axes, [axes[i] for i in p]):
            perm[dst] = src
        term = np.transpose(t, perm)
        out = term if out is None else out + term
    fact = 1.0
    for k in range(2, len(axes) + 1):
        fact *= k
    return out / fact


def levi_civita_symbol(d):
    eps = np.zeros((d,) * d)
    for p in permutations(range(d)):
        eps[p] = perm_sign(p)
    return eps


def max_abs(t):
    t = np.asarray(t)
    if t.dtype == object:
        t = values(t)
    if t.size == 0:
        return 0.0
    return float(np.max(np.abs(t)))


def partials(arr, dim):
    """Stack of elementwise partials: out[i, ...] = d(arr)/dx_i."""
    cols = [partial_array(arr, i) for i in range(dim)]
    out = np.empty((dim,) + np.shape(arr), dtype=object)
    for i in range(dim):
        out[i] = cols[i]
    return out


def cov_deriv(gamma, t, idx, weight=0.0, dim=None):
    """Covariant derivative of a tensor of jets; new index comes first.

    ``gamma``: Christoffel jets with layout gamma[c, a, b] = Gamma^c_ab,
    one order deeper than the requested output is not needed; the caller
    passes gamma at the output order and ``t`` one order deeper.
    ``idx``: string over {'u','l'} matching t's axes.
    ``weight``: projective weight; adds (w/(n+2)) Gamma^b_{ba} T.
    """
    d = dim or gamma.shape[0]
    out = partials(t, d)
    letters = "bcdefghijklm"
    for pos, kind in enumerate(idx):
        t_ax = letters[: len(idx)]
        res_ax = "a" + t_ax
        src = t_ax[:pos] + "z" + t_ax[pos + 1:]
        if kind == "u":
            out = out + np.einsum(f"{t_ax[pos]}az,{src}->{res_ax}", gamma, t)
        else:
            out = out - np.einsum(f"za{t_ax[pos]},{src}->{res_ax}", gamma, t)
    if weight:
        gtr = np.einsum("bba->a", gamma)
        coeff = weight / (d + 1.0)
        out = out + coeff * np.multiply.outer(gtr, t)
    return out
