"""The rank-(d+1) projective tractor bundle in the splitting of a chart
connection.

Component storage on a chart of dimension d = n+1: slot 0 is the
density slot (the canonical-tractor direction for vectors, its dual for
covectors), slots 1..d are the tangent slots.  A standard tractor is
(rho; nu^b) with both slots of weight -1, a cotractor is (sigma; mu_b)
of weight +1, a tractor 2-form is the antisymmetric matrix with top row
k_b and tangent block mu_bc (weight 2 slots), and an adjoint tractor is
the full endomorphism matrix [[alpha, nu_b], [xi^a, phi^a_b]] with
alpha = -tr phi.

All covariant derivatives here couple the weighted slots through the
density connection of the chart connection, so parallelism statements
hold in coordinates, not just abstractly.
"""

import random

import numpy as np

from .affine import InvariantField, gamma_trace
from .errors import KindMismatch, OutOfDomain
from .jets import Field
from .jetnum import jval, values, truncate_array
from .tensor import cov_deriv, max_abs, partials

STANDARD = "standard"
COTRACTOR = "cotractor"
TWOFORM = "twoform"
ADJOINT = "adjoint"
METRIC = "metric"


class TractorSplitting:
    """Tractor component calculus in the splitting of a chosen connection."""

    def __init__(self, conn, box=None):
        self.conn = conn
        self.dim = conn.dim
        self.box = box
        self.schouten = InvariantField(conn, "P")
        self._cmat_cache = {}

    # -- connection data ----------------------------------------------

    def conn_matrices(self, x, order=0):
        """C[a, A, B]: zeroth-order part of the standard tractor derivative.

        grad^T_a t = d_a t + C_a t for standard components t = (rho; nu).
        """
        key = (tuple(float(c) for c in x), order)
        hit = self._cmat_cache.get(key)
        if hit is not None:
            return hit
        d = self.dim
        gamma = self.conn.eval(x, order)
        p = self.schouten.eval(x, order)
        gtr = gamma_trace(gamma)
        c = np.empty((d, d + 1, d + 1), dtype=object)
        zero = 0.0 * gamma[0, 0, 0]
        dens = gtr * (-1.0 / (d + 1.0))
        for a in range(d):
            c[a, 0, 0] = dens[a]
            for b in range(d):
                c[a, 0, 1 + b] = -p[a, b]
                c[a, 1 + b, 0] = (1.0 if a == b else 0.0) + zero
                for e in range(d):
                    c[a, 1 + b, 1 + e] = gamma[b, a, e] + \
                        (dens[a] if b == e else zero)
        if len(self._cmat_cache) > 2048:
            self._cmat_cache.clear()
        self._cmat_cache[key] = c
        return c

    # -- derivatives of tractor fields ---------------------------------

    def derivative(self, field, x, kind, order=0):
        """grad^T of a tractor field; result index layout [a, components].

        Uses the displayed per-slot formulas for each kind; the general
        conjugation route ``derivative_general`` is kept as an
        independent construction that the tests compare against.
        """
        d = self.dim
        gamma = self.conn.eval(x, order)
        p = self.schouten.eval(x, order)
        t = field.eval(x, order + 1)
        if kind == STANDARD:
            if t.shape != (d + 1,):
                raise KindMismatch("standard tractor must be a (d+1)-vector")
            rho, nu = t[0:1].reshape(()), t[1:]
            drho = cov_deriv(gamma, rho, "", weight=-1.0, dim=d)
            dnu = cov_deriv(gamma, nu, "u", weight=-1.0, dim=d)
            out = np.empty((d, d + 1), dtype=object)
            out[:, 0] = drho - np.einsum("ab,b->a", p, t[1:])
            for a in range(d):
                for b in range(d):
                    out[a, 1 + b] = dnu[a, b] + (rho[()] if a == b else 0.0)
            return out
        if kind == COTRACTOR:
            if t.shape != (d + 1,):
                raise KindMismatch("cotractor must hold d+1 components")
            sig, mu = t[0:1].reshape(()), t[1:]
            dsig = cov_deriv(gamma, sig, "", weight=1.0, dim=d)
            dmu = cov_deriv(gamma, mu, "l", weight=1.0, dim=d)
            out = np.empty((d, d + 1), dtype=object)
            out[:, 0] = dsig - mu
            for a in range(d):
                for b in range(d):
                    out[a, 1 + b] = dmu[a, b] + p[a, b] * sig[()]
            return out
        if kind == TWOFORM:
            k, mu = t[0, 1:], t[1:, 1:]
            dk = cov_deriv(gamma, k, "l", weight=2.0, dim=d)
            dmu = cov_deriv(gamma, mu, "ll", weight=2.0, dim=d)
            mu = truncate_array(mu, order)
            out = np.empty((d, d + 1, d + 1), dtype=object)
            zero = 0.0 * dk[0, 0]
            for a in range(d):
                out[a, 0, 0] = zero
                for b in range(d):
                    v = dk[a, b] - mu[a, b]
                    out[a, 0, 1 + b] = v
                    out[a, 1 + b, 0] = -v
                    for c2 in range(d):
                        out[a, 1 + b, 1 + c2] = (dmu[a, b, c2]
                                                 + p[a, b] * k[c2]
                                                 - p[a, c2] * k[b])
            return out
        if kind == ADJOINT:
            phi = t[1:, 1:]
            xi = t[1:, 0]
            nu = t[0, 1:]
            dphi = cov_deriv(gamma, phi, "ul", dim=d)
            dxi = cov_deriv(gamma, xi, "u", dim=d)
            dnu = cov_deriv(gamma, nu, "l", dim=d)
            trphi = phi[0, 0]
            for e in range(1, d):
                trphi = trphi + phi[e, e]
            dtr = np.einsum("abb->a", dphi)
            out = np.empty((d, d + 1, d + 1), dtype=object)
            for a in range(d):
                pe_xi = sum(p[a, e] * xi[e] for e in range(d))
                out[a, 0, 0] = -dtr[a] - pe_xi - nu[a]
                for b in range(d):
                    out[a, 1 + b, 0] = (dxi[a, b] - phi[b, a]
                                        - (trphi if a == b else 0.0))
                    pphi = sum(p[a, e] * phi[e, b] for e in range(d))
                    out[a, 0, 1 + b] = dnu[a, b] - pphi - trphi * p[b, a]
                    for c2 in range(d):
                        out[a, 1 + b, 1 + c2] = (dphi[a, b, c2]
                                                 + p[a, c2] * xi[b]
                                                 + (nu[c2] if a == b else 0.0))
            return out
        if kind == METRIC:
            return self.derivative_general(field, x, kind, order)
        raise KindMismatch(f"unknown tractor kind {kind!r}")

    def derivative_general(self, field, x, kind, order=0):
        """Derivative via the connection matrices, any tensor kind."""
        t = truncate_array(field.eval(x, order + 1), order + 1)
        c = self.conn_matrices(x, order)
        dt = partials(t, self.dim)
        if kind == STANDARD:
            return dt + np.einsum("aAB,B->aA", c, t)
        if kind == COTRACTOR:
            return dt - np.einsum("aBA,B->aA", c, t)
        if kind in (TWOFORM, METRIC):
            return (dt - np.einsum("aCA,CB->aAB", c, t)
                    - np.einsum("aCB,AC->aAB", c, t))
        if kind == ADJOINT:
            return (dt + np.einsum("aAC,CB->aAB", c, t)
                    - np.einsum("aCB,AC->aAB", c, t))
        raise KindMismatch(f"unknown tractor kind {kind!r}")

    # -- curvature ------------------------------------------------------

    def curvature(self, x):
        """Tractor curvature as a float array K[a, b, C, D]."""
        d = self.dim
        w = values(InvariantField(self.conn, "W").eval(x, 0))
        cot = values(InvariantField(self.conn, "C").eval(x, 0))
        out = np.zeros((d, d, d + 1, d + 1))
        out[:, :, 1:, 1:] = np.transpose(w, (0, 1, 2, 3))
        out[:, :, 0, 1:] = -cot
        return out

    def curvature_fd_commutator(self, field, x, kind, step=1e-4):
        """[grad_a, grad_b] of a tractor field by central differences.

        The affine Christoffel action on the direction index is symmetric
        in (a, b) and drops out of the commutator, so only the tractor
        slot action survives alongside the finite differences of the
        first derivative.  Independent of ``curvature``.
        """
        d = self.dim

        def gradv(y):
            return values(self.derivative(field, tuple(y), kind))

        g0 = gradv(x)
        cm = values(self.conn_matrices(x, 0))
        fd = np.zeros((d,) + g0.shape)
        for i in range(d):
            xp, xm = list(x), list(x)
            xp[i] += step
            xm[i] -= step
            fd[i] = (gradv(xp) - gradv(xm)) / (2 * step)
        out = np.zeros((d, d) + field.shape)
        for a in range(d):
            for b in range(d):
                out[a, b] = (fd[a][b] - fd[b][a]
                             + self._act(cm[a], g0[b], kind)
                             - self._act(cm[b], g0[a], kind))
        return out

    @staticmethod
    def _act(cmat, comp, kind):
        if kind == STANDARD:
            return cmat @ comp
        if kind == COTRACTOR:
            return -cmat.T @ comp
        if kind in (TWOFORM, METRIC):
            return -cmat.T @ comp - comp @ cmat
        if kind == ADJOINT:
            return cmat @ comp - comp @ cmat
        raise KindMismatch(kind)

    def curvature_action(self, x, comp, kind):
        """R_ab acting on components per kind; float arrays."""
        k = self.curvature(x)
        d = self.dim
        out = np.zeros((d, d) + comp.shape)
        for a in range(d):
            for b in range(d):
                out[a, b] = self._act(k[a, b], comp, kind)
        return out

    # -- transport ------------------------------------------------------

    def _amat(self, x):
        key = tuple(float(c) for c in x)
        hit = self._cmat_cache.get(("A", key))
        if hit is None:
            hit = values(self.conn_matrices(x, 0))
            self._cmat_cache[("A", key)] = hit
        return hit

    def transport_frame(self, path, steps):
        """Frame propagator along a parameterised path by classic RK4.

        ``path`` is a (position, velocity) pair of callables on [0, 1];
        the transport equation G' = -(velocity . C)(pos) G is linear, so
        the propagator is kind-independent and tensors transport by
        conjugation.
        """
        pos, vel = path
        d = self.dim
        g = np.eye(d + 1)
        h = 1.0 / steps

        def rhs(s, m):
            x = pos(s)
            if self.box is not None and not self.box.contains(x, slack=1e-9):
                raise OutOfDomain(f"transport path leaves chart box at {x}")
            a = np.einsum("a,aAB->AB", np.asarray(vel(s), dtype=float),
                          self._amat(tuple(x)))
            return -a @ m

        for i in range(steps):
            s = i * h
            k1 = rhs(s, g)
            k2 = rhs(s + h / 2, g + h / 2 * k1)
            k3 = rhs(s + h / 2, g + h / 2 * k2)
            k4 = rhs(s + h, g + h * k3)
            g = g + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return g

    def transport(self, comp, kind, path, steps):
        g = self.transport_frame(path, steps)
        comp = np.asarray(comp, dtype=float)
        if kind == STANDARD:
            return g @ comp
        ginv = np.linalg.inv(g)
        if kind == COTRACTOR:
            return ginv.T @ comp
        if kind in (TWOFORM, METRIC):
            return ginv.T @ comp @ ginv
        if kind == ADJOINT:
            return g @ comp @ ginv
        raise KindMismatch(kind)

    def holonomy_sample(self, loops, seed, base=None, size=0.25):
        """Frame holonomy around seeded coordinate rectangles."""
        rng = random.Random(10007 * (seed + 1))
        d = self.dim
        if base is None:
            base = tuple((lo + hi) / 2.0
                         for lo, hi in zip(self.box.lo, self.box.hi))
        mats = []
        for _ in range(max(1, loops)):
            i = rng.randrange(d)
            j = rng.randrange(d - 1)
            if j >= i:
                j += 1
            si = size * (0.5 + rng.random())
            sj = size * (0.5 + rng.random())
            mats.append(self._rect_holonomy(base, i, j, si, sj))
        return mats

    def _rect_holonomy(self, base, i, j, si, sj, steps_per_edge=96):
        corners = [np.asarray(base, dtype=float)]
        for di, dj in ((si, 0.0), (si, sj), (0.0, sj), (0.0, 0.0)):
            c = np.asarray(base, dtype=float)
            c[i] += di
            c[j] += dj
            corners.append(c)
        g = np.eye(self.dim + 1)
        for a, b in zip(corners[:-1], corners[1:]):
            g = self.transport_frame(segment(a, b), steps_per_edge) @ g
        return g


def segment(x0, x1):
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    return (lambda s: x0 + s * (x1 - x0), lambda s: x1 - x0)


def wiggle_path(x0, x1, amp=0.05):
    """Smooth non-geodesic path between chart points."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    d = len(x0)
    bump = np.array([amp * np.sin(2.1 * (k + 1)) for k in range(d)])

    def pos(s):
        return x0 + s * (x1 - x0) + np.sin(np.pi * s) * bump

    def vel(s):
        return (x1 - x0) + np.pi * np.cos(np.pi * s) * bump

    return (pos, vel)


# -- splitting transformations under projective change ------------------

def transform_standard(comp, ups):
    """Components of a standard tractor in the Upsilon-changed splitting."""
    out = comp.copy()
    out[0] = comp[0] - sum(ups[b] * comp[1 + b] for b in range(len(ups)))
    return out


def transform_cotractor(comp, ups):
    out = comp.copy()
    for b in range(len(ups)):
        out[1 + b] = comp[1 + b] + ups[b] * comp[0]
    return out


def _lmat(ups):
    d = len(ups)
    m = np.eye(d + 1)
    m[1:, 0] = ups
    return m


def transform_cotensor2(comp, ups):
    l = _lmat(ups)
    return l @ comp @ l.T


def transform_adjoint(comp, ups):
    l = np.linalg.inv(_lmat(ups)).T  # standard-component transformation
    return l @ comp @ np.linalg.inv(l)


# -- tractor volume form ------------------------------------------------

def volume_parallel_residual(splitting, x):
    """Residual of the parallel tractor volume form at a point.

    For the top antisymmetric tractor form the covariant derivative is
    -tr(C_a) times the form, which is the single independent component
    of the general formula; small dimensions are cross-checked against
    the full contraction in the tests.
    """
    c = values(splitting.conn_matrices(x, 0))
    return np.array([np.trace(c[a]) for a in range(splitting.dim)])


def prolongation_derivative(splitting, k_field, mu_field, x, order=0):
    """Prolongation connection on (k, mu) pairs of weight 2.

    First slot grad_a k_b - mu_ab; second grad_a mu_bc + 2 P_a[b k_c]
    - W_bc{}^d{}_a k_d.
    """
    conn = splitting.conn
    d = splitting.dim
    gamma = conn.eval(x, order)
    p = splitting.schouten.eval(x, order)
    w = InvariantField(conn, "W").eval(x, order)
    k = k_field.eval(x, order + 1)
    mu = mu_field.eval(x, order + 1)
    dk = cov_deriv(gamma, k, "l", weight=2.0, dim=d)
    dmu = cov_deriv(gamma, mu, "ll", weight=2.0, dim=d)
    kcut = truncate_array(k, order)
    mucut = truncate_array(mu, order)
    first = dk - mucut
    second = (dmu + np.einsum("ab,c->abc", p, kcut)
              - np.einsum("ac,b->abc", p, kcut)
              - np.einsum("bcda,d->abc", w, kcut))
    return first, second


def canonical_tractor_components(dim):
    x = np.zeros(dim + 1)
    x[0] = 1.0
    return x
