"""Sasaki verification and the parallel tractor Hermitian package.

Weighted slots are always stored in the coordinate trivialisation of the
density bundles, so the tractor metric assembled from a unit Killing
field carries the metric scale tau = (det g)^(-1/(d+1)) in its density
slot; with that bookkeeping the assembled (h, Omega, J) really are
parallel in coordinates.
"""

from dataclasses import dataclass

import numpy as np

from .affine import InvariantField, curvature_jets, invariants_jets
from .bgg import SplitTwoForm
from .errors import DegenerateInput, NotSasakiEinstein
from .jets import Field
from .jetnum import jval, values, truncate_array, jet_inv
from .tensor import cov_deriv, max_abs, sym
from . import tractor as tr


@dataclass
class SasakiReport:
    killing: float
    unit_length: float
    second_derivative: float           # grad grad k + g k - delta k_flat
    curvature_eigen: float             # R_bc{}^a{}_d k^d - 2 delta^a_[b k_c]
    weyl_contraction: float            # W k
    schouten_unit: float               # P(k,k) - 1
    passed: bool


def verify_sasaki(metric, conn, k, x, tol=1e-8):
    """Residuals of the unit-Killing characterisation at one point."""
    d = conn.dim
    g1 = metric.eval(x, 1)
    gv = values(metric.eval(x, 0))
    kv = values(k.eval(x, 0))
    norm2 = kv @ gv @ kv
    if norm2 <= 0:
        raise DegenerateInput("k is not spacelike at sample point")
    gamma = conn.eval(x, 0)
    gamma1 = conn.eval(x, 1)
    k2 = k.eval(x, 2)
    kd = np.einsum("ab,b->a", truncate_array(g1, 1),
                   truncate_array(k2, 1))  # lowered k, order 1
    dkd = values(cov_deriv(gamma, kd, "l", dim=d))
    killing = max_abs(sym(dkd, (0, 1)))
    unit = abs(norm2 - 1.0)

    dk = cov_deriv(gamma1, k2, "u", dim=d)      # order 1
    ddk = values(cov_deriv(gamma, dk, "lu", dim=d))  # [a,b,c]: grad_a grad_b k^c
    kflat = gv @ kv
    expect = (-np.einsum("ab,c->abc", gv, kv)
              + np.einsum("ca,b->abc", np.eye(d), kflat))
    second = max_abs(ddk - expect)

    r = values(curvature_jets(conn, x, 0).R)
    rk = np.einsum("bcad,d->bca", r, kv)
    # 2 delta^a_[b k_c] = delta^a_b k_c - delta^a_c k_b
    expect_eig = (np.einsum("ab,c->bca", np.eye(d), kflat)
                  - np.einsum("ac,b->bca", np.eye(d), kflat))
    eig = max_abs(rk - expect_eig)

    inv = invariants_jets(conn, x, 0)
    w = values(inv.W)
    wk = max_abs(np.einsum("abcd,d->abc", w, kv))
    p = values(inv.P)
    pk = abs(kv @ p @ kv - 1.0)
    rep = SasakiReport(killing, unit, second, eig, wk, pk,
                       max(killing, unit, second, eig, wk, pk) <= tol)
    return rep


def einstein_residual(metric, conn, x):
    """max |Ric - 2m g| at a point, with 2m = dim - 1."""
    d = conn.dim
    ric = values(curvature_jets(conn, x, 0).Ric)
    g = values(metric.eval(x, 0))
    return max_abs(ric - (d - 1) * g)


# -- tractor field assembly --------------------------------------------


class SasakiTractorMetric(Field):
    """h with density slot tau and tangent block tau * g."""

    def __init__(self, metric, scale):
        d = metric.shape[0]
        super().__init__(None, (d + 1, d + 1), 0.0, "tractor_h")
        self.metric = metric
        self.scale = scale
        self.dim = d

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            g = self.metric.eval(x, order)
            tau = self.scale.eval(x, order)[()]
            d = self.dim
            out = np.empty((d + 1, d + 1), dtype=object)
            zero = 0.0 * g[0, 0]
            out[0, 0] = tau + zero
            for i in range(d):
                out[0, 1 + i] = zero
                out[1 + i, 0] = zero
                for j in range(d):
                    out[1 + i, 1 + j] = tau * g[i, j]
            self._cache[key] = hit = out
        return hit


class WeightedKillingForm(Field):
    """Weight-2 1-form tau * g(k, .) of a unit Killing field."""

    def __init__(self, metric, scale, k):
        d = metric.shape[0]
        super().__init__(None, (d,), 2.0, "k_form")
        self.metric = metric
        self.scale = scale
        self.k = k

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            g = self.metric.eval(x, order)
            tau = self.scale.eval(x, order)[()]
            kv = self.k.eval(x, order)
            hit = tau * np.einsum("ab,b->a", g, kv)
            self._cache[key] = hit
        return hit


class RaisedEndomorphism(Field):
    """J^A_B = h^{AC} F_{CB} for a tractor metric h and 2-form F."""

    def __init__(self, hfield, ffield):
        super().__init__(None, hfield.shape, 0.0, "tractor_j")
        self.h = hfield
        self.f = ffield

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            h = self.h.eval(x, order)
            f = self.f.eval(x, order)
            hit = np.einsum("AC,CB->AB", jet_inv(h), f)
            self._cache[key] = hit
        return hit


@dataclass
class HermitianTractorData:
    h: Field
    omega: Field
    j: Field
    eps_c: np.ndarray       # complex volume form at the base point
    base_point: tuple


def assemble_hermitian(metric, conn, k, scale, box, check_at=None,
                       tol=1e-6):
    """Parallel tractor Hermitian structure of a Sasaki-Einstein input.

    h carries the scale in its density slot, Omega is the split of the
    weighted Killing form, and J raises an index of Omega with h; the
    compatibility Omega = h J therefore holds by construction.
    """
    pts = box.sample(8, 23) if check_at is None else check_at
    d = conn.dim
    for x in pts[:3]:
        rep = verify_sasaki(metric, conn, k, x, tol=tol)
        if not rep.passed:
            raise NotSasakiEinstein(f"Sasaki residuals too large at {x}")
        if einstein_residual(metric, conn, x) > 50 * tol:
            raise NotSasakiEinstein(f"Einstein residual too large at {x}")
    h = SasakiTractorMetric(metric, scale)
    k2 = WeightedKillingForm(metric, scale, k)
    omega = SplitTwoForm(conn, k2)
    j = RaisedEndomorphism(h, omega)
    base = tuple((lo + hi) / 2.0 for lo, hi in zip(box.lo, box.hi))
    eps_c = complex_volume_form(values(j.eval(base, 0)))
    return HermitianTractorData(h, omega, j, eps_c, base)


def complex_volume_form(jmat):
    """A complex top form for (T, J), phase pinned at the base point.

    Columns of an eigenbasis of J span the +i eigenspace; the form is
    the wedge of the dual basis, normalised against the real volume and
    rotated so its leading component on the standard frame is real
    positive.  Existence is the content of the holonomy statement; the
    phase choice here is only for reproducibility.
    """
    import math as _math
    n2 = jmat.shape[0]
    m1 = n2 // 2
    evals, evecs = np.linalg.eig(jmat)
    cols = [evecs[:, i] for i in range(n2) if evals[i].imag > 0.5]
    if len(cols) != m1:
        raise DegenerateInput("endomorphism is not a complex structure")
    basis = np.stack(cols, axis=1)          # +i eigenspace
    full = np.hstack([basis, np.conj(basis)])
    dual = np.linalg.inv(full)[:m1]         # annihilates the -i eigenspace
    from itertools import permutations
    from .tensor import perm_sign
    eps = np.zeros((n2,) * m1, dtype=complex)
    for p in permutations(range(m1)):
        s = perm_sign(p)
        arr = dual[p[0]]
        for r in p[1:]:
            arr = np.multiply.outer(arr, dual[r])
        eps = eps + s * arr
    eps /= _math.factorial(m1)
    # normalise: |eps ^ conj(eps)| matches the real tractor volume scale
    pair = _top_pairing(eps, m1, n2)
    if abs(pair) < 1e-14:
        raise DegenerateInput("degenerate complex volume candidate")
    eps = eps / abs(pair) ** 0.5
    flat = eps.reshape(-1)
    lead = flat[np.argmax(np.abs(flat))]
    eps = eps * (abs(lead) / lead)
    return eps


def _top_pairing(eps, m1, n2):
    """Coefficient of eps wedge conj(eps) on the standard top form."""
    from itertools import permutations
    from .tensor import perm_sign
    total = 0.0
    for p in permutations(range(n2)):
        s = perm_sign(p)
        total += s * eps[p[:m1]] * np.conj(eps)[p[m1:]]
    return total


def hermitian_compatibility_residuals(data, x):
    """Pointwise algebraic residuals of the assembled package."""
    h = values(data.h.eval(x, 0))
    o = values(data.omega.eval(x, 0))
    j = values(data.j.eval(x, 0))
    n2 = h.shape[0]
    res = {
        "j_squared": max_abs(j @ j + np.eye(n2)),
        "omega_eq_hj": max_abs(np.einsum("ca,cb->ab", h, j) - o),
        "hermitian_metric": max_abs(j.T @ h @ j - h),
        "omega_antisym": max_abs(o + o.T),
        "h_sym": max_abs(h - h.T),
    }
    return res


def signature_of(mat, tol_scale=1e-8):
    evals = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    thr = tol_scale * max(1.0, np.max(np.abs(evals)))
    pos = int(np.sum(evals > thr))
    neg = int(np.sum(evals < -thr))
    return pos, neg


def verify_parallel_hermitian(data, splitting, points):
    """Derivative and compatibility residuals over sample points."""
    out = {"dh": 0.0, "domega": 0.0, "dj": 0.0, "compat": 0.0}
    for x in points:
        out["dh"] = max(out["dh"],
                        max_abs(splitting.derivative(data.h, x, tr.METRIC)))
        out["domega"] = max(out["domega"],
                            max_abs(splitting.derivative(data.omega, x,
                                                         tr.TWOFORM)))
        out["dj"] = max(out["dj"],
                        max_abs(splitting.derivative(data.j, x, tr.ADJOINT)))
        res = hermitian_compatibility_residuals(data, x)
        out["compat"] = max(out["compat"], res["hermitian_metric"])
    return out
