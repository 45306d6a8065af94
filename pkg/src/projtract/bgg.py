"""First BGG splitting operators, their operators, and normality residuals.

Everything is evaluated pointwise from jets: the engine verifies
candidate solutions, it never solves the overdetermined systems.
"""

import numpy as np

from .affine import InvariantField, lie_derivative_connection
from .jets import Field
from .jetnum import jval, values, truncate_array
from .tensor import cov_deriv, max_abs, sym


class SplitTwoForm(Field):
    """L applied to a weight-2 1-form: the pair (k_b, grad_[a k_b])."""

    def __init__(self, conn, k2):
        d = conn.dim
        super().__init__(None, (d + 1, d + 1), 0.0, f"L2({k2.name})")
        self.conn = conn
        self.k2 = k2
        self.dim = d

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            d = self.dim
            gamma = self.conn.eval(x, order)
            k = self.k2.eval(x, order + 1)
            dk = cov_deriv(gamma, k, "l", weight=2.0, dim=d)
            mu = 0.5 * (dk - np.transpose(dk))
            k = truncate_array(k, order)
            out = np.empty((d + 1, d + 1), dtype=object)
            out[0, 0] = 0.0 * k[0]
            for b in range(d):
                out[0, 1 + b] = k[b]
                out[1 + b, 0] = -k[b]
                for c in range(d):
                    out[1 + b, 1 + c] = mu[b, c]
            self._cache[key] = hit = out
        return hit


def split_two_form(conn, k2, x, order=0):
    return SplitTwoForm(conn, k2).eval(x, order)


def two_form_projection(comp):
    """Projecting part k_b of a tractor 2-form component matrix."""
    return comp[0, 1:]


def bgg_killing(conn, k2, x):
    """Killing-type operator grad_(a k_b) on a weight-2 1-form."""
    gamma = conn.eval(x, 0)
    k = k2.eval(x, 1)
    dk = cov_deriv(gamma, k, "l", weight=2.0, dim=conn.dim)
    return values(sym(dk, (0, 1)))


def killing_normality_residual(conn, k2, x):
    """W_ab{}^d{}_c k_d; zero iff the Killing solution is normal."""
    w = values(InvariantField(conn, "W").eval(x, 0))
    kv = values(k2.eval(x, 0))
    return np.einsum("abdc,d->abc", w, kv)


class SplitAdjoint(Field):
    """L applied to a vector field: the adjoint tractor endomorphism."""

    def __init__(self, conn, xi):
        d = conn.dim
        super().__init__(None, (d + 1, d + 1), 0.0, f"LA({xi.name})")
        self.conn = conn
        self.xi = xi
        self.dim = d
        self.schouten = InvariantField(conn, "P")

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            d = self.dim
            n2 = d + 1.0
            gamma1 = self.conn.eval(x, order + 1)
            gamma = self.conn.eval(x, order)
            p = self.schouten.eval(x, order)
            xi = self.xi.eval(x, order + 2)
            dxi = cov_deriv(gamma1, xi, "u", dim=d)       # [b, a] = grad_b xi^a
            div = np.einsum("bb->", dxi)
            ddiv = cov_deriv(gamma, div, "", dim=d)       # [b] = grad_b div
            xi0 = truncate_array(xi, order)
            dxi0 = truncate_array(dxi, order)
            div0 = np.einsum("bb->", dxi0)
            out = np.empty((d + 1, d + 1), dtype=object)
            out[0, 0] = (-1.0 / n2) * div0
            for a in range(d):
                out[1 + a, 0] = xi0[a]
                nu_a = (-1.0 / n2) * ddiv[a]
                for c in range(d):
                    nu_a = nu_a - p[a, c] * xi0[c]
                out[0, 1 + a] = nu_a
                for b in range(d):
                    out[1 + a, 1 + b] = dxi0[b, a] - \
                        ((1.0 / n2) * div0 if a == b else 0.0)
            self._cache[key] = hit = out
        return hit


def split_adjoint(conn, xi, x, order=0):
    return SplitAdjoint(conn, xi).eval(x, order)


def adjoint_projection(comp):
    """Projecting part xi^a of an adjoint tractor component matrix."""
    return comp[1:, 0]


def _tracefree_s2tm(t, d):
    """Trace-free part of T_ab{}^c symmetric in (a, b)."""
    trc = np.einsum("add->a", t)
    eye = np.eye(d)
    return t - (np.einsum("b,ca->abc", trc, eye)
                + np.einsum("a,cb->abc", trc, eye)) / (d + 1.0)


def bgg_adjoint(conn, xi, x):
    """The first BGG operator on vector fields; trace-free by construction."""
    d = conn.dim
    gamma1 = conn.eval(x, 1)
    gamma = conn.eval(x, 0)
    p = values(InvariantField(conn, "P").eval(x, 0))
    xij = xi.eval(x, 2)
    dxi = cov_deriv(gamma1, xij, "u", dim=d)
    ddxi = values(cov_deriv(gamma, dxi, "lu", dim=d))  # [a,b,c] = grad_a grad_b xi^c
    xiv = values(xi.eval(x, 0))
    s = values(sym(ddxi, (0, 1))) + np.einsum("ab,c->abc",
                                              values(sym(p, (0, 1))), xiv)
    return _tracefree_s2tm(s, d)


def adjoint_normality_residual(conn, xi, x):
    """(W contraction, Cotton contraction) of a vector field."""
    w = values(InvariantField(conn, "W").eval(x, 0))
    c = values(InvariantField(conn, "C").eval(x, 0))
    xiv = values(xi.eval(x, 0))
    return (np.einsum("abcd,d->abc", w, xiv),
            np.einsum("abd,d->ab", c, xiv))


def symmetry_residual(conn, xi, x):
    """Projective-symmetry operator: trace-free part of
    grad_(a grad_b) xi^c + P_(ab) xi^c + W_d(a{}^c{}_b) xi^d."""
    d = conn.dim
    w = values(InvariantField(conn, "W").eval(x, 0))
    xiv = values(xi.eval(x, 0))
    wterm = np.einsum("dacb,d->abc", w, xiv)
    core = bgg_adjoint(conn, xi, x)
    return core + _tracefree_s2tm(values(sym(wterm, (0, 1))), d)


def symmetry_vs_lie_derivative(conn, xi, x):
    """D^sym equals the trace-free part of the Lie derivative of the
    connection; returns the difference."""
    d = conn.dim
    lie = lie_derivative_connection(conn, xi, x)
    return symmetry_residual(conn, xi, x) - _tracefree_s2tm(lie, d)
