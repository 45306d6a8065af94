"""Contact structures, compatibility, contact torsion, and the extension
tensor of the distinguished-connection characterisation.

Hyperplane-distribution tensors are realised as full tangent tensors
annihilated by insertions of the contact form or the Reeb field; the
projector delta - t (x) theta implements the identification and the
annihilation is tested, not assumed.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .affine import InvariantField, density_derivative
from .errors import IncompatibleConnection, NotContact
from .jets import Field
from .jetnum import jval, values, truncate_array, jet_inv
from .tensor import antisym, cov_deriv, max_abs, partials, perm_sign, sym


class ContactBundle:
    """Jointly cached contact fields derived from (k, tau).

    theta = k / tau, omega = d theta, the Reeb field from the kernel of
    omega normalised against theta, the projector onto H = ker theta
    along the Reeb direction, and the inverse bivector of omega on H.
    """

    def __init__(self, k2, scale, dim):
        self.k2 = k2
        self.scale = scale
        self.dim = dim
        self.m = (dim - 1) // 2
        self._cache = {}
        self._perms = list(permutations(range(dim)))

    def at(self, x, order=0):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._build(x, order)
            if len(self._cache) > 1024:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def _build(self, x, order):
        d = self.dim
        tau = self.scale.eval(x, order + 1)[()]
        k = self.k2.eval(x, order + 1)
        theta = k * (1.0 / tau)
        dth = partials(theta, d)            # [a, b] = d_a theta_b
        omega = dth - np.transpose(dth)
        theta = truncate_array(theta, order)
        tau = tau.truncated(order) if hasattr(tau, "truncated") else tau
        # Reeb direction: the kernel of omega via the top contraction
        that = self._kernel_vector(omega)
        vol = 0.0
        for i in range(d):
            vol = vol + theta[i] * that[i]
        if abs(jval(vol)) < 1e-10:
            raise NotContact("theta wedge (d theta)^m vanishes at sample")
        t = that * (1.0 / vol)
        eye = np.eye(d)
        proj = eye - np.multiply.outer(t, theta)      # proj[a, b]
        mmat = omega + np.multiply.outer(theta, theta)
        oinv = -np.einsum("ab,bc,dc->ad", proj, jet_inv(mmat), proj)
        omega_h = np.einsum("ab,ac,bd->cd", omega, proj, proj)
        data = {
            "tau": tau, "k": k if order > 0 else truncate_array(k, order),
            "theta": theta, "omega": omega, "t": t, "proj": proj,
            "omega_inv": oinv, "omega_h": omega_h,
            "L": tau * omega, "L_inv": oinv * (1.0 / tau),
            "r": t * (1.0 / tau), "vol": vol,
        }
        return data

    def _kernel_vector(self, omega):
        """epsilon^{a b1..b2m} omega_{b1 b2} ... omega_{b2m-1 b2m}."""
        d = self.dim
        m = self.m
        out = np.empty(d, dtype=object)
        zero = 0.0 * omega[0, 0]
        for a in range(d):
            out[a] = zero
        for p in self._perms:
            s = perm_sign(p)
            a = p[0]
            term = s
            for j in range(m):
                term = term * omega[p[1 + 2 * j], p[2 + 2 * j]]
            out[a] = out[a] + term
        return out


@dataclass
class ContactData:
    theta: np.ndarray
    omega: np.ndarray
    t: np.ndarray
    omega_inv: np.ndarray
    proj: np.ndarray
    tau: float
    k: np.ndarray
    L: np.ndarray
    L_inv: np.ndarray
    r: np.ndarray
    volume: float


def contact_data(k2, scale, x, dim=None):
    """Float-level contact package at a point; raises NotContact."""
    dim = dim or k2.shape[0]
    bundle = ContactBundle(k2, scale, dim)
    raw = bundle.at(x, 0)
    return ContactData(values(raw["theta"]), values(raw["omega"]),
                       values(raw["t"]), values(raw["omega_inv"]),
                       values(raw["proj"]), jval(raw["tau"]),
                       values(raw["k"]), values(raw["L"]),
                       values(raw["L_inv"]), values(raw["r"]),
                       jval(raw["vol"]))


def omega_inverse_residual(data):
    """Defining identity of the bivector: W omega = -id + t (x) theta."""
    d = len(data.t)
    lhs = data.omega_inv @ data.omega
    rhs = -np.eye(d) + np.multiply.outer(data.t, data.theta)
    res = max_abs(lhs - rhs)
    res = max(res, max_abs(data.omega_inv @ data.theta))
    res = max(res, max_abs(data.omega_inv + data.omega_inv.T))
    return res


def compatibility_eta(conn, k2, x):
    """Least-squares eta with grad_(a k_b) = k_(a eta_b); (residual, eta)."""
    d = conn.dim
    gamma = conn.eval(x, 0)
    k = k2.eval(x, 1)
    s = values(sym(cov_deriv(gamma, k, "l", weight=2.0, dim=d), (0, 1)))
    kv = values(k2.eval(x, 0))
    rows = []
    rhs = []
    for a in range(d):
        for b in range(a, d):
            row = np.zeros(d)
            row[b] += 0.5 * kv[a]
            row[a] += 0.5 * kv[b]
            rows.append(row)
            rhs.append(s[a, b])
    eta, *_ = np.linalg.lstsq(np.asarray(rows), np.asarray(rhs), rcond=None)
    fit = np.multiply.outer(kv, eta)
    resid = max_abs(s - 0.5 * (fit + fit.T))
    return resid, eta


@dataclass
class ContactTorsion:
    nu: np.ndarray          # grad_c omega_ab, projected to H, layout [a,b,c]
    lam: np.ndarray
    nu0: np.ndarray         # trace-free part
    T: np.ndarray           # T_{ab}{}^c
    T_low: np.ndarray       # T_{abc} = T_{ab}{}^e L_ec


def torsion_core(conn, bundle, x, order=0):
    """Jet-level torsion package; see contact_torsion for the float view."""
    d = bundle.dim
    m = bundle.m
    raw = bundle.at(x, order + 1)
    raw0 = bundle.at(x, order)
    gamma = conn.eval(x, order)
    nu_full = cov_deriv(gamma, raw["omega"], "ll", dim=d)
    # layout: nu_full[c, a, b] = grad_c omega_ab; reorder so the
    # derivative index comes last as in the defining display
    nu = np.einsum("cab->abc", nu_full)
    pr = raw0["proj"]
    nuH = np.einsum("abc,ax,by,cz->xyz", nu, pr, pr, pr)
    oinv = raw0["omega_inv"]
    oh = raw0["omega_h"]
    lam = np.einsum("ca,abc->b", oinv, nuH)
    # 2 lam_[b omega_a]c + 2 lam_c omega_ab
    corr = (np.einsum("b,ac->abc", lam, oh)
            - np.einsum("a,bc->abc", lam, oh)
            + 2.0 * np.einsum("c,ab->abc", lam, oh))
    nu0 = nuH + corr / (2.0 * m + 1.0)
    t_mixed = -2.0 * np.einsum("ce,abe->abc", oinv, nu0)
    t_low = np.einsum("abe,ec->abc", t_mixed, raw0["L"])
    t_up = np.einsum("ad,be,dec->abc", raw0["L_inv"], raw0["L_inv"],
                     t_mixed)
    return {"nuH": nuH, "lam": lam, "nu0": nu0, "T": t_mixed,
            "T_low": t_low, "T_up": t_up}


def contact_torsion(conn, bundle, x, compat_tol=1e-7):
    """Contact torsion of the projective class at a point.

    Requires an H-compatible connection; the eta-compatibility residual
    is checked first and IncompatibleConnection raised otherwise.
    """
    resid, _ = compatibility_eta(conn, bundle.k2, x)
    kscale = max_abs(values(bundle.k2.eval(x, 0)))
    if resid > compat_tol * max(1.0, kscale):
        raise IncompatibleConnection(
            f"symmetrised derivative of k is not k-split at {x}: {resid:.2e}")
    core = torsion_core(conn, bundle, x, 0)
    return ContactTorsion(values(core["nuH"]), values(core["lam"]),
                          values(core["nu0"]), values(core["T"]),
                          values(core["T_low"]))


class TorsionField(Field):
    """T^{abc} of a compatible connection as a jet-evaluable field."""

    def __init__(self, conn, bundle):
        d = bundle.dim
        super().__init__(None, (d, d, d), -4.0, "computed_torsion")
        self.conn = conn
        self.bundle = bundle

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            hit = torsion_core(self.conn, self.bundle, x, order)["T_up"]
            self._cache[key] = hit
        return hit


def torsion_symmetry_residuals(tor, data):
    """The antisymmetry, algebraic-Bianchi and trace identities."""
    t = tor.T_low
    res = {
        "antisym": max_abs(t - antisym(t, (0, 1))),
        "total_antisym": max_abs(antisym(t, (0, 1, 2))),
        "trace": max_abs(np.einsum("ab,abc->c", data.L_inv, t)),
        "reeb_insertion": max(
            max_abs(np.einsum("abc,a->bc", tor.T, data.t)),
            max_abs(np.einsum("abc,c->ab", tor.T, data.theta))),
    }
    return res


# -- the extension tensor ------------------------------------------------


class RaisedTorsionField(Field):
    """T^{abc} = L^{ad} L^{be} T_de{}^c as a weight(-4) field."""

    def __init__(self, bundle, t_mixed_field):
        d = bundle.dim
        super().__init__(None, (d, d, d), -4.0, "raised_torsion")
        self.bundle = bundle
        self.t_mixed = t_mixed_field

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            raw = self.bundle.at(x, order)
            tm = self.t_mixed.eval(x, order)
            hit = np.einsum("ad,be,dec->abc", raw["L_inv"], raw["L_inv"], tm)
            self._cache[key] = hit
        return hit


def extension_tensor(conn, bundle, t_upper_field, x):
    """E_abc of the distinguished-connection normalisation.

    ``t_upper_field`` supplies T^{abc} (weight -4) with jets to order 2;
    U, V and the auxiliary vector are its divergences in the given
    connection, and the L-dressing uses the scale of the bundle.
    """
    d = bundle.dim
    m = bundle.m
    gamma1 = conn.eval(x, 1)
    gamma = conn.eval(x, 0)
    p = values(InvariantField(conn, "P").eval(x, 0))
    tj = t_upper_field.eval(x, 2)
    dt = cov_deriv(gamma1, tj, "uuu", weight=-4.0, dim=d)   # [i,a,b,c]
    tv = values(t_upper_field.eval(x, 0))
    du = values(dt)
    # U^{ab} = grad_c T^{c(ab)},  V^{ab} = grad_c T^{abc}
    u = 0.5 * (np.einsum("ccab->ab", du) + np.einsum("ccba->ab", du))
    v = np.einsum("cabc->ab", du)
    ddt = values(cov_deriv(gamma, dt, "luuu", dim=d, weight=-4.0))
    # grad_b grad_c T^{bac}: outer index first in each derivative
    wvec = (np.einsum("bcbac->a", ddt)
            + (2.0 * m + 1.0) * np.einsum("bc,bac->a", p, tv))
    raw = bundle.at(x, 0)
    lmat = values(raw["L"])
    kv = values(raw["k"])
    term1 = np.einsum("efg,ea,fb,gc->abc", tv, lmat, lmat, lmat)
    vll = np.einsum("ef,ea,fb->ab", v, lmat, lmat)
    term2 = np.einsum("ab,c->abc", vll, kv) * (-2.0 / (2 * m + 1.0))
    vlc = np.einsum("ef,fc->ec", v, lmat)
    pair3 = 0.5 * (np.einsum("ec,eb,a->abc", vlc, lmat, kv)
                   - np.einsum("ec,ea,b->abc", vlc, lmat, kv))
    term3 = pair3 * (2.0 / (2 * m + 1.0))
    ulc = np.einsum("ef,fc->ec", u, lmat)
    pair4 = 0.5 * (np.einsum("ec,eb,a->abc", ulc, lmat, kv)
                   - np.einsum("ec,ea,b->abc", ulc, lmat, kv))
    term4 = pair4 * (-4.0 / (2 * m - 1.0))
    pair5 = 0.5 * (np.einsum("e,eb,a->ab", wvec, lmat, kv)
                   - np.einsum("e,ea,b->ab", wvec, lmat, kv))
    term5 = np.einsum("ab,c->abc", pair5, kv) \
        * (8.0 / ((2 * m - 1.0) * (2 * m + 1.0)))
    e = term1 + term2 + term3 + term4 + term5
    return e


def extension_symmetry_residuals(e, data, t_low_expected=None):
    res = {
        "antisym": max_abs(e - antisym(e, (0, 1))),
        "total_antisym": max_abs(antisym(e, (0, 1, 2))),
        "trace": max_abs(np.einsum("ab,abc->c", data.L_inv, e)),
    }
    if t_low_expected is not None:
        pr = data.proj
        e_h = np.einsum("abc,ax,by,cz->xyz", e, pr, pr, pr)
        res["h_restriction"] = max_abs(e_h - t_low_expected)
    return res


@dataclass
class DistinguishedResiduals:
    scale_parallel: float        # (a) grad tau
    killing: float               # (b) grad_(a k_b)
    weyl_vs_extension: float     # (c) W k + E/4


def distinguished_connection_residual(conn, bundle, x, e_tensor=None):
    """Residuals of the three defining conditions for a given connection."""
    a_res = max_abs(density_derivative(conn, bundle.scale, x))
    gamma = conn.eval(x, 0)
    k = bundle.k2.eval(x, 1)
    b_res = max_abs(sym(cov_deriv(gamma, k, "l", weight=2.0,
                                  dim=conn.dim), (0, 1)))
    w = values(InvariantField(conn, "W").eval(x, 0))
    kv = values(bundle.k2.eval(x, 0))
    wk = np.einsum("abdc,d->abc", w, kv)
    e = 0.0 * wk if e_tensor is None else e_tensor
    c_res = max_abs(wk + 0.25 * e)
    return DistinguishedResiduals(a_res, b_res, c_res)


def lemma_ab_connection_residuals(conn, bundle, x):
    """Trace identities for connections satisfying (a) and (b).

    omega^{bc} grad_a omega_bc = 0 and L^{ab} W_ab{}^d{}_c k_d = 0.
    """
    d = bundle.dim
    raw = bundle.at(x, 1)
    gamma = conn.eval(x, 0)
    domega = values(cov_deriv(gamma, raw["omega"], "ll", dim=d))
    oinv = values(bundle.at(x, 0)["omega_inv"])
    first = max_abs(np.einsum("bc,abc->a", oinv, domega))
    w = values(InvariantField(conn, "W").eval(x, 0))
    kv = values(bundle.at(x, 0)["k"])
    linv = values(bundle.at(x, 0)["L_inv"])
    second = max_abs(np.einsum("ab,abdc,d->c", linv, w, kv))
    return first, second


def symplectic_reduction_check(splitting, omega_field, scale, points,
                               fd_probe=2):
    """Residual suite for a parallel tractor symplectic form."""
    from . import tractor as tr
    out = {"parallel": 0.0, "nondegenerate": np.inf, "contact_volume": np.inf,
           "killing": 0.0, "normality": 0.0, "torsion": 0.0}
    conn = splitting.conn
    d = splitting.dim

    class ProjectingPart(Field):
        def __init__(self):
            super().__init__(None, (d,), 2.0, "omega_projecting_part")

        def eval(self, x, order):
            return omega_field.eval(x, order)[0, 1:]

    k2 = ProjectingPart()
    bundle = ContactBundle(k2, scale, d)
    from .bgg import killing_normality_residual
    for x in points:
        out["parallel"] = max(out["parallel"], max_abs(
            splitting.derivative(omega_field, x, tr.TWOFORM)))
        comp = values(omega_field.eval(x, 0))
        out["nondegenerate"] = min(out["nondegenerate"],
                                   abs(np.linalg.det(comp)))
        try:
            raw = contact_data(k2, scale, x, d)
            out["contact_volume"] = min(out["contact_volume"],
                                        abs(raw.volume))
        except NotContact:
            out["contact_volume"] = 0.0
        out["killing"] = max(out["killing"],
                             max_abs(bgg_killing_residual(conn, k2, x)))
        out["normality"] = max(out["normality"], max_abs(
            killing_normality_residual(conn, k2, x)))
    if out["contact_volume"] > 1e-10:
        for x in points[:fd_probe]:
            tor = contact_torsion(conn, bundle, x)
            out["torsion"] = max(out["torsion"], max_abs(tor.T))
    return out


def bgg_killing_residual(conn, k2, x):
    from .bgg import bgg_killing
    return bgg_killing(conn, k2, x)


# -- synthetic torsion fields --------------------------------------------


class SyntheticTorsionField(Field):
    """Analytic T^{abc} with the contact-torsion symmetries.

    Built by projecting a constant seed tensor onto the symmetry type:
    H-valued slots, antisymmetry in the first pair, vanishing total
    antisymmetrisation, and L-trace freedom.  The projection uses only
    contact data, so the components are smooth in the chart.
    """

    def __init__(self, bundle, seed=5):
        d = bundle.dim
        super().__init__(None, (d, d, d), -4.0, "synthetic_torsion")
        self.bundle = bundle
        rng = np.random.RandomState(seed)
        self.seed_tensor = rng.uniform(-1.0, 1.0, size=(d, d, d))

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            raw = self.bundle.at(x, order)
            d = self.bundle.dim
            m = self.bundle.m
            pr = raw["proj"]
            s = np.einsum("ax,by,cz,xyz->abc", pr, pr, pr,
                          self.seed_tensor)
            s = antisym(s, (0, 1))
            s = s - antisym(s, (0, 1, 2))
            lmat = raw["L"]
            linv = raw["L_inv"]
            vvec = np.einsum("ab,abc->c", lmat, s)
            c1 = np.einsum("ab,c->abc", linv, vvec)
            c2 = 0.5 * (np.einsum("ca,b->abc", linv, vvec)
                        - np.einsum("cb,a->abc", linv, vvec))
            # trace(C1) = 2m v, trace(C2) = -v, and C1 - C2 is free of a
            # totally antisymmetric part, so this removes the L-trace
            hit = s - (c1 - c2) * (1.0 / (2.0 * m + 1.0))
            self._cache[key] = hit
        return hit
