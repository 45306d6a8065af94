"""Affine connections on a chart and their projective invariants.

Curvature convention: R_{ab}{}^c{}_d xi^d = (nabla_a nabla_b - nabla_b
nabla_a) xi^c, with Ric_{bd} = R_{cb}{}^c{}_d.  On a chart of dimension
d = n+1 the Schouten tensor is P_ab = ((n+1) Ric_ab + Ric_ba)/(n(n+2)),
the Weyl tensor is the subtraction remainder of the curvature
decomposition R = W + 2 delta^c_[a P_b]d + beta_ab delta^c_d with
beta = -2 P_[ab], and the Cotton tensor is C_abc = grad_a P_bc -
grad_b P_ac.  These conventions are fixed here once; every other module
imports them.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooSmall, SingularMetric
from .jets import Field, InverseMetricField
from .jetnum import jval, values, jet_inv, jet_det
from .tensor import antisym, cov_deriv, partials, sym


class ConnectionField(Field):
    """Christoffel symbols Gamma[c, a, b] = Gamma^c_{ab}, symmetric in (a,b)."""

    def __init__(self, fn, dim, name="connection"):
        super().__init__(fn, (dim, dim, dim), 0.0, name)
        self.dim = dim


class FlatConnection(ConnectionField):
    def __init__(self, dim):
        super().__init__(lambda xs: np.zeros((dim, dim, dim)), dim, "flat")


class LeviCivitaField(ConnectionField):
    """Levi-Civita connection of a metric field."""

    def __init__(self, metric):
        self.metric = metric
        dim = metric.shape[0]
        super().__init__(None, dim, f"levi_civita({metric.name})")

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        g = self.metric.eval(x, order + 1)
        det = jval(jet_det(g))
        if abs(det) < 1e-12:
            raise SingularMetric("metric degenerate at sample point")
        from .jetnum import truncate_array
        ginv = jet_inv(truncate_array(g, order))
        d = self.dim
        dg = partials(g, d)  # dg[a, b, c] = d_a g_bc, order `order`
        # Gamma^c_ab = (1/2) g^{cd} (d_a g_bd + d_b g_ad - d_d g_ab)
        braces = (dg + np.transpose(dg, (1, 0, 2))
                  - np.transpose(dg, (1, 2, 0)))
        gamma = 0.5 * np.einsum("cd,abd->cab", ginv, braces)
        self._cache[key] = gamma
        return gamma


class ProjectiveChangeField(ConnectionField):
    """Connection projectively changed by a 1-form field Upsilon."""

    def __init__(self, base, upsilon):
        self.base = base
        self.upsilon = upsilon
        super().__init__(None, base.dim, f"pc({base.name})")

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        gamma = self.base.eval(x, order)
        ups = self.upsilon.eval(x, order)
        d = self.dim
        eye = np.eye(d)
        gamma = (gamma + np.einsum("ca,b->cab", eye, ups)
                 + np.einsum("cb,a->cab", eye, ups))
        self._cache[key] = gamma
        return gamma


def projective_change(conn, upsilon):
    """The connection with Gamma^c_ab + delta^c_a Ups_b + delta^c_b Ups_a."""
    return ProjectiveChangeField(conn, upsilon)


class ModifiedConnection(ConnectionField):
    """Base connection plus a symmetric difference tensor Delta^c_{ab}."""

    def __init__(self, base, delta):
        self.base = base
        self.delta = delta
        super().__init__(None, base.dim, f"mod({base.name})")

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            hit = self.base.eval(x, order) + self.delta.eval(x, order)
            self._cache[key] = hit
        return hit


def levi_civita(metric):
    return LeviCivitaField(metric)


@dataclass
class AffineInvariants:
    """Pointwise curvature package; entries are float or jet arrays.

    Index layout: R[a,b,c,d] = R_{ab}{}^c{}_d, W likewise, Ric[b,d],
    P[a,b], C[a,b,c] = C_{abc}, beta[a,b].
    """
    R: np.ndarray
    Ric: np.ndarray
    P: np.ndarray = None
    W: np.ndarray = None
    C: np.ndarray = None
    beta: np.ndarray = None


def curvature_jets(conn, x, order):
    """Curvature and Ricci as jets of the requested order."""
    gamma = conn.eval(x, order + 1)
    d = conn.dim
    dg = partials(gamma, d)  # dg[i, c, a, b]
    from .jetnum import truncate_array
    gam = truncate_array(gamma, order)
    r = (np.transpose(dg, (0, 2, 1, 3)) - np.transpose(dg, (2, 0, 1, 3))
         + np.einsum("cae,ebd->abcd", gam, gam)
         - np.einsum("cbe,ead->abcd", gam, gam))
    ric = np.einsum("cbcd->bd", r)
    return AffineInvariants(R=r, Ric=ric)


def invariants_jets(conn, x, order, cotton=True):
    """Full projective invariant package as jets of the requested order.

    Cotton consumes one more derivative of the Schouten tensor, hence
    connection jets to order+2; pass ``cotton=False`` when only the
    algebraic invariants are needed to avoid the extra depth.
    """
    d = conn.dim
    n = d - 1
    if d < 2:
        raise DimensionTooSmall("projective invariants need dim >= 2")
    inv = curvature_jets(conn, x, order + (1 if cotton else 0))
    p = ((n + 1.0) * inv.Ric + np.transpose(inv.Ric)) / (n * (n + 2.0))
    beta = -2.0 * antisym(p, (0, 1))
    eye = np.eye(d)
    two_dp = (np.einsum("ca,bd->abcd", eye, p)
              - np.einsum("cb,ad->abcd", eye, p))
    w = inv.R - two_dp - np.einsum("ab,cd->abcd", beta, eye)
    c = None
    if cotton:
        gamma = conn.eval(x, order)
        dp = cov_deriv(gamma, p, "ll", dim=d)  # dp[a, b, c] = grad_a P_bc
        c = dp - np.transpose(dp, (1, 0, 2))
    from .jetnum import truncate_array
    return AffineInvariants(R=truncate_array(inv.R, order),
                            Ric=truncate_array(inv.Ric, order),
                            P=truncate_array(p, order),
                            W=truncate_array(w, order),
                            C=c, beta=truncate_array(beta, order))


def curvature(conn, x):
    """Float curvature/Ricci at a point."""
    inv = curvature_jets(conn, x, 0)
    return AffineInvariants(R=values(inv.R), Ric=values(inv.Ric))


def projective_invariants(conn, x):
    """Float R, Ric, P, W, C, beta at a point."""
    inv = invariants_jets(conn, x, 0)
    return AffineInvariants(R=values(inv.R), Ric=values(inv.Ric),
                            P=values(inv.P), W=values(inv.W),
                            C=values(inv.C), beta=values(inv.beta))


class InvariantField(Field):
    """One projective invariant of a connection, as a jet-evaluable field."""

    _shapes = {"R": 4, "Ric": 2, "P": 2, "W": 4, "C": 3, "beta": 2}

    def __init__(self, conn, which):
        d = conn.dim
        super().__init__(None, (d,) * self._shapes[which], 0.0,
                         f"{which}({conn.name})")
        self.conn = conn
        self.which = which

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            if self.which in ("R", "Ric"):
                hit = getattr(curvature_jets(self.conn, x, order), self.which)
            else:
                inv = invariants_jets(self.conn, x, order,
                                      cotton=(self.which == "C"))
                hit = getattr(inv, self.which)
            self._cache[key] = hit
        return hit


def gamma_trace(gamma):
    """Gamma^b_{ba}; the density-connection coefficient source."""
    return np.einsum("bba->a", gamma)


def density_derivative(conn, sigma, x):
    """Coordinate-trivialisation derivative of a weighted density.

    grad_a sigma = d_a sigma + (w/(n+2)) Gamma^b_{ba} sigma; the
    coefficient is pinned by the projective transformation law
    grad-hat sigma = grad sigma + w Upsilon sigma, which the tests verify
    rather than assume.
    """
    s = sigma.eval(x, 1)
    gamma = conn.eval(x, 0)
    d = conn.dim
    ds = values(partials(np.asarray(s).reshape(()), d))
    gtr = values(gamma_trace(gamma))
    return ds + (sigma.weight / (d + 1.0)) * gtr * jval(s[()])


def lie_derivative_connection(conn, xi, x):
    """(L_xi nabla)_ab^c = grad_(a grad_b) xi^c + R_{d(a}{}^c{}_{b)} xi^d."""
    d = conn.dim
    gamma1 = conn.eval(x, 1)
    xi2 = xi.eval(x, 2)
    dxi = cov_deriv(gamma1, xi2, "u", dim=d)          # order 1
    ddxi = cov_deriv(conn.eval(x, 0), dxi, "lu", dim=d)
    r = values(curvature_jets(conn, x, 0).R)
    rxi = np.einsum("dacb,d->abc", r, values(xi.eval(x, 0)))
    out = values(ddxi) + rxi
    return values(sym(out, (0, 1)))


def weyl_trace_residuals(w):
    """Both trace contractions of a Weyl-type tensor."""
    t1 = np.einsum("abad->bd", w)
    t2 = np.einsum("abdd->ab", w)
    return t1, t2
