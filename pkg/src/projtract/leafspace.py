"""Descent along the distinguished vector field to the local leaf space.

Leaf charts are coordinate slices {last coordinate = const} of charts
adapted so that the distinguished field is the last coordinate vector.
A leaf field evaluates base fields on full chart jets at the slice and
restricts the jet variables to the leaf coordinates afterwards, so leaf
curvature is computed by the same machinery as chart curvature.

Two lift conventions coexist: the metric lift (orthogonal complement of
k, used for the Kahler descent) and the Schouten lift (kernel of
P(k, .), the projectively natural splitting used for connection
descent).  For the Einstein inputs they agree to the verified residuals.
"""

from dataclasses import dataclass

import numpy as np

from .affine import InvariantField, LeviCivitaField, curvature_jets
from .errors import (DegenerateNu, DimensionTooSmall, NonTransverseSlice,
                     NotAdapted)
from .jets import Field
from .jetnum import jval, values, truncate_array
from .tensor import cov_deriv, max_abs, partials, sym


def k_adapted_residual(conn, k, x):
    """Divergence of k in the given connection."""
    gamma = conn.eval(x, 0)
    kj = k.eval(x, 1)
    dk = cov_deriv(gamma, kj, "u", dim=conn.dim)
    return abs(jval(np.einsum("aa->", values(dk))))


def nu_covector(conn, k, x, order=0):
    """nu_b = -P_bc k^c, the splitting form of the adapted scale."""
    p = InvariantField(conn, "P").eval(x, order)
    kj = truncate_array(k.eval(x, order), order)
    return -np.einsum("bc,c->b", p, kj)


@dataclass
class LeafSplit:
    nu: np.ndarray
    frame: np.ndarray          # d x (d-1), columns span H
    j_h: np.ndarray            # complex structure on H in that frame
    projector: np.ndarray
    system_residuals: dict


def leaf_split(conn, k, x, adapted_tol=1e-8):
    """Splitting TM = <k> + H with H = ker nu, and J_H = grad k on H."""
    d = conn.dim
    div = k_adapted_residual(conn, k, x)
    if div > adapted_tol:
        raise NotAdapted(f"divergence {div:.2e} at {x}")
    nu = values(nu_covector(conn, k, x))
    kv = values(k.eval(x, 0))
    nuk = float(nu @ kv)
    if abs(nuk) < 1e-8:
        raise DegenerateNu(f"nu(k) = {nuk:.2e} at {x}")
    p = values(InvariantField(conn, "P").eval(x, 0))
    gamma = conn.eval(x, 0)
    dk = values(cov_deriv(gamma, k.eval(x, 1), "u", dim=d))  # [b, a]
    gradk = dk.T                                             # [a, b] = grad_b k^a
    # frame: lifts of the coordinate directions complementary to k
    # fall back to an SVD frame of ker(nu) for genericity
    _, _, vt = np.linalg.svd(nu.reshape(1, d) / nuk)
    frame = vt[1:].T
    # J_H in the frame: solve [frame | k] coeffs = gradk frame
    rhs = gradk @ frame
    mat = np.column_stack([frame, kv])
    coef = np.linalg.solve(mat, rhs)
    j_h = coef[:-1, :]
    k_component = max_abs(coef[-1, :])
    res = {
        "geodesic": max_abs(gradk @ kv),
        "jsq": max_abs(gradk @ gradk - np.multiply.outer(kv, p @ kv)
                       + np.eye(d)),
        "schouten_unit": abs(kv @ p @ kv - 1.0),
        "nu_gradk": max_abs((p @ kv) @ gradk),
        "jh_squared": max_abs(j_h @ j_h + np.eye(d - 1)),
        "k_component_of_jh": k_component,
    }
    projector = np.eye(d) - np.multiply.outer(kv, nu) / nuk
    return LeafSplit(nu, frame, j_h, projector, res)


class LeafField(Field):
    """Base class: evaluate on the slice and restrict jet variables."""

    def __init__(self, chart, shape, name):
        super().__init__(None, shape, 0.0, name)
        self.chart = chart

    def eval(self, u, order):
        key = (tuple(float(c) for c in u), order)
        hit = self._cache.get(key)
        if hit is None:
            x = self.chart.base_point(u)
            full = self._eval_base(x, order)
            idx = list(range(self.chart.dim - 1))
            flat = [v.restrict(idx) if hasattr(v, "restrict") else v
                    for v in np.ravel(full)]
            hit = np.empty(len(flat), dtype=object)
            hit[:] = flat
            hit = hit.reshape(np.shape(full))
            self._cache[key] = hit
        return hit


class LeafChart:
    """Slice {last coordinate = value} transverse to the last-coordinate
    distinguished field."""

    def __init__(self, conn, metric, k, dim, slice_value=0.0,
                 lift_mode="metric"):
        self.conn = conn
        self.metric = metric
        self.k = k
        self.dim = dim
        self.value = float(slice_value)
        self.lift_mode = lift_mode
        self.leaf_dim = dim - 1
        self.metric_field = LeafMetric(self)
        self.j_field = LeafComplexStructure(self)
        self.omega_field = LeafKahlerForm(self)
        self.leaf_connection = LeviCivitaField(self.metric_field)

    def base_point(self, u):
        return tuple(u) + (self.value,)

    def check_transverse(self, x):
        kv = values(self.k.eval(x, 0))
        if abs(kv[-1]) < 1e-8:
            raise NonTransverseSlice(f"k tangent to slice at {x}")
        if max_abs(kv[:-1]) > 1e-10:
            raise NonTransverseSlice(
                "chart is not adapted: k must be the last coordinate field")

    def lifts(self, x, order):
        """Columns lift_i = e_i + c_i k with the chosen annihilator."""
        d = self.dim
        kj = truncate_array(self.k.eval(x, order), order)
        if self.lift_mode == "metric":
            g = self.metric.eval(x, order)
            ann = np.einsum("bc,c->b", g, kj)
        else:
            ann = nu_covector(self.conn, self.k, x, order)
        annk = np.einsum("b,b->", ann, kj)
        if abs(jval(annk)) < 1e-8:
            raise DegenerateNu("annihilator degenerate on k")
        lifts = np.empty((d, d - 1), dtype=object)
        inv = 1.0 / annk
        for i in range(d - 1):
            ci = -ann[i] * inv
            for b in range(d):
                base = 1.0 if b == i else 0.0
                lifts[b, i] = base + ci * kj[b]
        return lifts


class LeafMetric(LeafField):
    def __init__(self, chart):
        ld = chart.leaf_dim
        super().__init__(chart, (ld, ld), "leaf_metric")

    def _eval_base(self, x, order):
        self.chart.check_transverse(x)
        lifts = self.chart.lifts(x, order)
        g = self.chart.metric.eval(x, order)
        return np.einsum("ab,ai,bj->ij", g, lifts, lifts)


class LeafComplexStructure(LeafField):
    """Pushdown of grad k restricted to the lift of the leaf tangent."""

    def __init__(self, chart):
        ld = chart.leaf_dim
        super().__init__(chart, (ld, ld), "leaf_j")

    def _eval_base(self, x, order):
        chart = self.chart
        d = chart.dim
        lifts = chart.lifts(x, order)
        gamma = chart.conn.eval(x, order)
        kj = chart.k.eval(x, order + 1)
        dk = cov_deriv(gamma, kj, "u", dim=d)     # [b, a] = grad_b k^a
        jh = np.einsum("ba,bj->aj", dk, lifts)    # J(lift_j), tangent vector
        return jh[:-1, :]                         # pushdown drops the fibre


class LeafKahlerForm(LeafField):
    def __init__(self, chart):
        ld = chart.leaf_dim
        super().__init__(chart, (ld, ld), "leaf_omega")

    def _eval_base(self, x, order):
        g = self.chart.metric_field._eval_base(x, order)
        j = self.chart.j_field._eval_base(x, order)
        return np.einsum("ie,ej->ij", g, j)


@dataclass
class LeafKahlerData:
    metric: np.ndarray
    j: np.ndarray
    omega: np.ndarray
    ricci: np.ndarray
    rho: np.ndarray
    residuals: dict


def induced_kahler(chart, u, einstein_constant=None):
    """Leaf metric, complex structure, and their compatibility residuals."""
    ld = chart.leaf_dim
    if einstein_constant is None:
        einstein_constant = ld + 2       # 2m + 2 for leaf dimension 2m
    g = values(chart.metric_field.eval(u, 0))
    j = values(chart.j_field.eval(u, 0))
    om1 = chart.omega_field.eval(u, 1)
    omega = values(truncate_array(om1, 0))
    dom = values(partials(om1, ld))
    dexterior = dom + np.einsum("abc->bca", dom) + np.einsum("abc->cab", dom)
    j1 = chart.j_field.eval(u, 1)
    dj = values(partials(j1, ld))                 # [i, a, b] = d_i J^a_b
    nij = (np.einsum("db,dac->abc", j, dj).transpose(1, 0, 2) * 0.0)
    # Nijenhuis: N^a_bc = J^d_b d_d J^a_c - J^d_c d_d J^a_b
    #            - J^a_d (d_b J^d_c - d_c J^d_b)
    nij = (np.einsum("db,dac->abc", j, dj) - np.einsum("dc,dab->abc", j, dj)
           - np.einsum("ad,bdc->abc", j, dj)
           + np.einsum("ad,cdb->abc", j, dj))
    ric = values(curvature_jets(chart.leaf_connection, u, 0).Ric)
    rho = cproj_rho(ric, j, ld // 2) if ld >= 4 or _j_invariant(ric, j) \
        else None
    residuals = {
        "j_squared": max_abs(j @ j + np.eye(ld)),
        "hermitian": max_abs(j.T @ g @ j - g),
        "omega_antisym": max_abs(omega + omega.T),
        "closed": max_abs(dexterior),
        "nijenhuis": max_abs(nij),
        "einstein": max_abs(ric - einstein_constant * g),
    }
    return LeafKahlerData(g, j, omega, ric, rho, residuals)


def _j_invariant(t, j, tol=1e-7):
    return max_abs(j.T @ t @ j - t) <= tol * (1 + max_abs(t))


def cproj_rho(ric, j, m):
    """Solve Ric = 2m Rho + 2 Rho(J., J.) by parts.

    The J-invariant part scales by 1/(2m+2), the anti-invariant part by
    1/(2m-2); the latter is rejected for m = 1 where the divisor
    vanishes.
    """
    ric = 0.5 * (ric + ric.T)
    inv_part = 0.5 * (ric + j.T @ ric @ j)
    anti_part = 0.5 * (ric - j.T @ ric @ j)
    if m == 1:
        if max_abs(anti_part) > 1e-10 * (1 + max_abs(ric)):
            raise DimensionTooSmall(
                "anti-invariant branch undefined for m = 1")
        return inv_part / (2.0 * m + 2.0)
    return inv_part / (2.0 * m + 2.0) + anti_part / (2.0 * m - 2.0)


def cproj_rho_roundtrip(rho, j, m):
    """2m Rho + 2 Rho(J., J.), for verifying the linear relation."""
    return 2.0 * m * rho + 2.0 * j.T @ rho @ j


# -- the circle-bundle connection equations ------------------------------


@dataclass
class FeffermanResiduals:
    vertical_geodesic: float     # grad_k k
    vertical_mix: float          # grad_k xi - J xi
    horizontal_k: float          # grad_eta k - J eta
    horizontal: float            # grad_eta xi - lift - Rho(eta, J xi) k
    schouten_kk: float
    schouten_kh: float
    schouten_hh: float


class LiftField(Field):
    """The i-th leaf coordinate lift as a chart vector field."""

    def __init__(self, chart, i):
        super().__init__(None, (chart.dim,), 0.0, f"lift_{i}")
        self.chart = chart
        self.i = i

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            hit = self.chart.lifts(x, order)[:, self.i]
            self._cache[key] = hit
        return hit


def fefferman_connection_residual(chart, u):
    """Residuals of the four defining equations and Schouten identities.

    The leaf connection entering the comparison is computed
    intrinsically from the descended metric, so the horizontal equation
    genuinely cross-checks descent against reconstruction.
    """
    conn = chart.conn
    d = chart.dim
    ld = chart.leaf_dim
    x = chart.base_point(u)
    gamma = conn.eval(x, 0)
    kj = chart.k.eval(x, 1)
    kv = values(chart.k.eval(x, 0))
    dk = values(cov_deriv(gamma, kj, "u", dim=d))     # [b, a]
    gradk = dk.T
    vert_geo = max_abs(gradk @ kv)

    lifts1 = chart.lifts(x, 1)
    lifts = values(chart.lifts(x, 0))
    jlift = gradk @ lifts                              # J eta as chart vectors

    # grad_k lift_i and grad_lift_i lift_j need lift jets
    dlifts = values(partials(lifts1, d))               # [c, b, i]
    grad_k_lift = np.einsum("c,cbi->bi", kv, dlifts) \
        + np.einsum("bce,c,ei->bi", values(gamma), kv, lifts)
    vert_mix = max_abs(grad_k_lift - jlift)

    grad_lift_k = gradk @ lifts
    horiz_k = max_abs(np.einsum("ba,bi->ai", dk, lifts) - jlift)

    # intrinsic leaf connection and rho
    gamma_leaf = values(chart.leaf_connection.eval(u, 0))
    ric = values(curvature_jets(chart.leaf_connection, u, 0).Ric)
    jmat = values(chart.j_field.eval(u, 0))
    rho = cproj_rho(ric, jmat, max(1, ld // 2))
    horiz = 0.0
    for i_dir in range(ld):
        dl = (np.einsum("c,cbj->bj", lifts[:, i_dir], dlifts)
              + np.einsum("bce,c,ej->bj", values(gamma), lifts[:, i_dir],
                          lifts))
        for j_dir in range(ld):
            target = dl[:, j_dir]
            recon = sum(gamma_leaf[l, i_dir, j_dir] * lifts[:, l]
                        for l in range(ld))
            recon = recon + rho[i_dir] @ jmat[:, j_dir] * kv
            horiz = max(horiz, max_abs(target - recon))

    p = values(InvariantField(conn, "P").eval(x, 0))
    s_kk = abs(kv @ p @ kv - 1.0)
    s_kh = max_abs(kv @ p @ lifts)
    s_hh = max_abs(lifts.T @ p @ lifts - rho)
    return FeffermanResiduals(vert_geo, vert_mix, horiz_k, horiz,
                              s_kk, s_kh, s_hh)


def descend_connection(chart, u):
    """Christoffel symbols of the descended connection at a slice point."""
    conn = chart.conn
    d = chart.dim
    ld = chart.leaf_dim
    x = chart.base_point(u)
    gamma = values(conn.eval(x, 0))
    lifts1 = chart.lifts(x, 1)
    lifts = values(chart.lifts(x, 0))
    dlifts = values(partials(lifts1, d))
    out = np.zeros((ld, ld, ld))
    kv = values(chart.k.eval(x, 0))
    mat = np.column_stack([lifts[:-1, :], np.zeros(ld)])  # unused guard
    for i_dir in range(ld):
        dl = (np.einsum("c,cbj->bj", lifts[:, i_dir], dlifts)
              + np.einsum("bce,c,ej->bj", gamma, lifts[:, i_dir], lifts))
        # push down: drop the fibre component (coordinates are adapted)
        for j_dir in range(ld):
            out[:, i_dir, j_dir] = dl[:-1, j_dir]
    return out


def cproj_change_residual(chart_a, chart_b, ups_leaf_fn, u):
    """Compare descended connections against the c-projective change law.

    chart_b wraps the projectively changed chart connection; ups_leaf_fn
    gives the leaf 1-form of the change at a leaf point.
    """
    ld = chart_a.leaf_dim
    g0 = descend_connection(chart_a, u)
    g1 = descend_connection(chart_b, u)
    ups = np.asarray(ups_leaf_fn(u), dtype=float)
    jmat = values(chart_a.j_field.eval(u, 0))
    jups = ups @ jmat
    eye = np.eye(ld)
    expect = (np.einsum("ca,b->cab", eye, ups)
              + np.einsum("cb,a->cab", eye, ups)
              - np.einsum("ca,b->cab", jmat, jups)
              - np.einsum("cb,a->cab", jmat, jups))
    return max_abs(g1 - g0 - expect)


def k_invariance_residual(chart, u):
    """Flow invariance: fibre-direction derivatives of nu and J_H."""
    x = chart.base_point(u)
    d = chart.dim
    nu1 = nu_covector(chart.conn, chart.k, x, 1)
    dnu = values(partials(nu1, d))[-1]
    lifts1 = chart.lifts(x, 1)
    gamma = chart.conn.eval(x, 0)
    kj = chart.k.eval(x, 1)
    dk = cov_deriv(gamma, kj, "u", dim=d)
    jh = np.einsum("ba,bj->aj", dk, lifts1)
    djh = values(partials(jh, d))[-1]
    return max(max_abs(dnu), max_abs(djh))
