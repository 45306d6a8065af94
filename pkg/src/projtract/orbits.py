"""Curved-orbit decomposition driven by a parallel tractor metric.

The projecting part tau = h(X, X) stratifies the chart by strict sign;
on the open strata the scale connection of tau recovers an Einstein
metric from the Schouten tensor, and on the zero locus the halved
Hessian of tau induces the boundary conformal structure.  All checks
are residual-style: they certify the stratification data rather than
construct global objects.
"""

from dataclasses import dataclass

import numpy as np

from .affine import (InvariantField, curvature_jets, density_derivative,
                     projective_change)
from .errors import DegenerateBoundary, TauVanishes
from .hermitian import signature_of
from .jets import Field
from .jetnum import jval, values, truncate_array
from .tensor import cov_deriv, max_abs, sym
from .tractor import transform_cotensor2


class TauField(Field):
    """Projecting part h(X, X); a weight-2 density field."""

    def __init__(self, hfield):
        super().__init__(None, (), 2.0, f"tau({hfield.name})")
        self.h = hfield

    def eval(self, x, order):
        out = np.empty((), dtype=object)
        out[()] = self.h.eval(x, order)[0, 0]
        return out


def tau_value(hfield, x):
    return jval(TauField(hfield).eval(x, 0)[()])


def tau_gradient(splitting, hfield, x, order=0):
    """Weight-2 covariant gradient of tau in the base splitting."""
    tau = TauField(hfield).eval(x, order + 1)
    gamma = splitting.conn.eval(x, order)
    return cov_deriv(gamma, tau, "", weight=2.0, dim=splitting.dim)


def tau_gradient_vs_contraction(splitting, hfield, x):
    """Parallel-h identity: h_AB X^B = (tau; grad tau / 2).

    Returns the residual between the tangent slots of h X and half the
    covariant gradient; a certificate that h is parallel and the
    gradient formula is coherent.
    """
    h = values(hfield.eval(x, 0))
    hx = h[:, 0]
    grad = values(tau_gradient(splitting, hfield, x))
    res = np.abs(hx[1:] - 0.5 * grad)
    res = np.append(res, abs(hx[0] - tau_value(hfield, x)))
    return float(np.max(res))


@dataclass
class OrbitLabel:
    label: str          # "plus" | "zero" | "minus"
    tau: float
    grad: np.ndarray


def classify_points(splitting, hfield, points, zero_band=None):
    """Strict-sign labels with a numeric zero band."""
    taus = [tau_value(hfield, x) for x in points]
    scale = max(1.0, max(abs(t) for t in taus))
    band = zero_band if zero_band is not None else 1e-10 * scale
    out = []
    for x, t in zip(points, taus):
        grad = values(tau_gradient(splitting, hfield, x))
        lab = "zero" if abs(t) <= band else ("plus" if t > 0 else "minus")
        out.append(OrbitLabel(lab, t, grad))
    return out


class TauUpsilon(Field):
    """The 1-form -grad tau / (2 tau) whose change annihilates tau."""

    def __init__(self, splitting, hfield):
        super().__init__(None, (splitting.dim,), 0.0, "tau_upsilon")
        self.splitting = splitting
        self.tau = TauField(hfield)

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            tau = self.tau.eval(x, order + 1)
            gamma = self.splitting.conn.eval(x, order)
            grad = cov_deriv(gamma, tau, "", weight=2.0,
                             dim=self.splitting.dim)
            tcut = truncate_array(tau, order)[()]
            hit = grad * (-0.5) * (1.0 / tcut)
            self._cache[key] = hit
        return hit


@dataclass
class OpenMetricRecovery:
    metric: np.ndarray             # g-hat = Schouten of the tau scale
    signature: tuple
    tau: float
    scale_residual: float          # grad-hat tau
    metricity_residual: float      # grad-hat g-hat
    einstein_residual: float       # Ric(hat) - 2m g-hat
    reconstruction_residual: float  # h vs tau YY + tau P ZZ in hat splitting


def recover_open_metric(splitting, hfield, x, tau_floor=1e-8):
    """Einstein metric on an open orbit from the scale of tau."""
    t0 = tau_value(hfield, x)
    if abs(t0) < tau_floor:
        raise TauVanishes(f"tau = {t0:.2e} at {x}")
    d = splitting.dim
    ups = TauUpsilon(splitting, hfield)
    hat = projective_change(splitting.conn, ups)
    tau_field = TauField(hfield)
    scale_res = max_abs(density_derivative(hat, tau_field, x))
    p_field = InvariantField(hat, "P")
    p1 = p_field.eval(x, 1)
    ghat = values(p_field.eval(x, 0))
    metricity = max_abs(cov_deriv(hat.eval(x, 0), p1, "ll", dim=d))
    ric = values(curvature_jets(hat, x, 0).Ric)
    einstein = max_abs(ric - (d - 1) * ghat)
    hcomp = values(hfield.eval(x, 0))
    hhat = transform_cotensor2(hcomp, values(ups.eval(x, 0)))
    expect = np.zeros((d + 1, d + 1))
    expect[0, 0] = t0
    expect[1:, 1:] = t0 * ghat
    recon = max_abs(hhat - expect)
    return OpenMetricRecovery(ghat, signature_of(ghat), t0, scale_res,
                              metricity, einstein, recon)


@dataclass
class BoundaryConformalSample:
    point: tuple
    frame: np.ndarray              # columns span ker(d tau)
    restricted_hessian: np.ndarray
    signature: tuple
    grad_norm: float


def half_hessian(splitting, hfield, x):
    """(1/2) grad grad tau in the base scale; a weight-2 bilinear form."""
    d = splitting.dim
    tau = TauField(hfield).eval(x, 2)
    gamma1 = splitting.conn.eval(x, 1)
    gamma = splitting.conn.eval(x, 0)
    grad = cov_deriv(gamma1, tau, "", weight=2.0, dim=d)
    hess = cov_deriv(gamma, grad, "l", weight=2.0, dim=d)
    return 0.5 * values(hess)


def boundary_conformal(splitting, hfield, x, degeneracy_floor=1e-6):
    """Tangent frame and restricted Hessian signature on the zero locus."""
    grad = values(tau_gradient(splitting, hfield, x))
    gn = float(np.linalg.norm(grad))
    if gn < 1e-6:
        raise DegenerateBoundary(f"grad tau vanishes at {x}")
    d = splitting.dim
    # orthonormal basis of ker(grad) from the SVD of the gradient row
    _, _, vt = np.linalg.svd(grad.reshape(1, d))
    frame = vt[1:].T                    # d x (d-1)
    hess = half_hessian(splitting, hfield, x)
    restr = frame.T @ hess @ frame
    det = np.linalg.det(restr)
    scale = max(1.0, np.max(np.abs(restr))) ** (d - 1)
    if abs(det) < degeneracy_floor * scale:
        raise DegenerateBoundary(f"restricted Hessian near-singular at {x}")
    return BoundaryConformalSample(tuple(x), frame, restr,
                                   signature_of(restr), gn)


def bisect_boundary(hfield, x_inside, direction, box, tol=1e-12,
                    max_reach=None):
    """Zero of tau along a coordinate ray, bisected to tolerance."""
    x0 = np.asarray(x_inside, dtype=float)
    t0 = tau_value(hfield, tuple(x0))
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    reach = max_reach or 10.0
    lo, hi = 0.0, None
    step = 0.05
    s = step
    while s <= reach:
        x = x0 + s * direction
        if not box.contains(x):
            break
        t = tau_value(hfield, tuple(x))
        if t == 0.0 or (t > 0) != (t0 > 0):
            hi = s
            break
        lo = s
        s += step
    if hi is None:
        raise TauVanishes("no sign change of tau along the ray inside box")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        t = tau_value(hfield, tuple(x0 + mid * direction))
        if t == 0.0:
            lo = hi = mid
            break
        if (t > 0) == (t0 > 0):
            lo = mid
        else:
            hi = mid
    return tuple(x0 + 0.5 * (lo + hi) * direction)


@dataclass
class CompactificationReport:
    corrected_tail_cauchy: float
    corrected_bound: float
    control_first: float
    control_last: float
    control_diverges: bool
    passed: bool


class RhoOverRho(Field):
    """d rho/(2 rho) for rho = tau; the order-2 compactification term."""

    def __init__(self, splitting, hfield):
        super().__init__(None, (splitting.dim,), 0.0, "drho_over_2rho")
        self.splitting = splitting
        self.tau = TauField(hfield)

    def eval(self, x, order):
        tau = self.tau.eval(x, order + 1)
        gamma = self.splitting.conn.eval(x, order)
        grad = cov_deriv(gamma, tau, "", weight=2.0, dim=self.splitting.dim)
        tcut = truncate_array(tau, order)[()]
        return grad * 0.5 * (1.0 / tcut)


def compactification_residual(splitting, hfield, path_points, tol=1e-6):
    """Order-2 projective compactness along a path approaching the zero set.

    The connection of the open-orbit Einstein metric is modified by
    d rho/(2 rho); its Christoffels must converge (Cauchy) toward the
    boundary while the uncorrected Einstein connection diverges.
    """
    ups = TauUpsilon(splitting, hfield)
    plus_conn = projective_change(splitting.conn, ups)
    corr = RhoOverRho(splitting, hfield)
    hat_conn = projective_change(plus_conn, corr)
    hat_vals = [values(hat_conn.eval(tuple(x), 0)) for x in path_points]
    ctrl_vals = [max_abs(plus_conn.eval(tuple(x), 0)) for x in path_points]
    tail = [max_abs(b - a) for a, b in zip(hat_vals[:-1], hat_vals[1:])]
    n_tail = max(2, len(tail) // 3)
    cauchy = max(tail[-n_tail:]) if tail else 0.0
    bound = max(max_abs(v) for v in hat_vals)
    diverges = ctrl_vals[-1] > 10.0 * max(1.0, ctrl_vals[0])
    return CompactificationReport(cauchy, bound, ctrl_vals[0], ctrl_vals[-1],
                                  diverges, cauchy <= tol and diverges)


@dataclass
class NullBoundaryReport:
    tangency: float
    nullity: float
    conformal_killing: float


def null_ck_boundary(splitting, hfield, kfield, x):
    """Tangency, nullity, and conformal-Killing residuals of k on M0."""
    d = splitting.dim
    grad = values(tau_gradient(splitting, hfield, x))
    kv = values(kfield.eval(x, 0))
    tangency = abs(float(grad @ kv))
    hess = half_hessian(splitting, hfield, x)
    nullity = abs(float(kv @ hess @ kv))
    # Lie derivative of the boundary metric along k, restricted to the
    # tangent frame; the trace part is projected out against the
    # restricted Hessian, so weight factors are immaterial
    gfield = HessianField(splitting, hfield)
    g1 = gfield.eval(x, 1)
    k1 = kfield.eval(x, 1)
    from .tensor import partials
    dg = values(partials(g1, d))          # dg[c, a, b] = d_c G_ab
    dk = values(partials(k1, d))          # dk[a, c] = d_a k^c
    gv = values(gfield.eval(x, 0))
    lie = (np.einsum("c,cab->ab", kv, dg)
           + np.einsum("ac,cb->ab", dk, gv)
           + np.einsum("bc,ac->ab", dk, gv))
    samp = boundary_conformal(splitting, hfield, x)
    f = samp.frame
    lr = f.T @ lie @ f
    gr = samp.restricted_hessian
    lam = np.trace(np.linalg.solve(gr, lr)) / (d - 1)
    resid = max_abs(lr - lam * gr)
    return NullBoundaryReport(tangency, nullity, resid)


class HessianField(Field):
    """(1/2) grad grad tau as a jet-evaluable field."""

    def __init__(self, splitting, hfield):
        d = splitting.dim
        super().__init__(None, (d, d), 2.0, "half_hessian")
        self.splitting = splitting
        self.tau = TauField(hfield)

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            d = self.splitting.dim
            tau = self.tau.eval(x, order + 2)
            gamma1 = self.splitting.conn.eval(x, order + 1)
            gamma = self.splitting.conn.eval(x, order)
            grad = cov_deriv(gamma1, tau, "", weight=2.0, dim=d)
            hess = cov_deriv(gamma, grad, "l", weight=2.0, dim=d)
            hit = 0.5 * hess
            self._cache[key] = hit
        return hit


def separation_along_segment(hfield, x_plus, x_minus, samples=256):
    """Scan tau on the segment; a plus-to-minus path must cross the band."""
    x0 = np.asarray(x_plus, dtype=float)
    x1 = np.asarray(x_minus, dtype=float)
    taus = [tau_value(hfield, tuple(x0 + s * (x1 - x0)))
            for s in np.linspace(0.0, 1.0, samples)]
    if not (taus[0] > 0 and taus[-1] < 0):
        return False
    sign_changes = sum(1 for a, b in zip(taus[:-1], taus[1:]) if a * b <= 0)
    return sign_changes >= 1
