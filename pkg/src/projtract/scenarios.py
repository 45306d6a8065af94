"""Built-in example geometries.

Every scenario is chart-local: an axis-aligned coordinate box plus the
field providers the checks need (metric or connection, distinguished
vector field, tractor data, CR potential).  Providers are plain numeric
closures, so jet evaluation differentiates them exactly.
"""

from dataclasses import dataclass, field as dfield

import numpy as np

from .affine import FlatConnection, LeviCivitaField
from .errors import UnknownScenario
from .jets import ChartBox, Field, scalar_field
from .jetnum import jsqrt, jsin, jcos, jval, jet_det


@dataclass
class Scenario:
    id: str
    dim: int
    box: ChartBox
    fields: dict
    tags: tuple
    params: dict = dfield(default_factory=dict)

    def describe(self):
        return {"id": self.id, "dim": self.dim,
                "box": [list(self.box.lo), list(self.box.hi)],
                "tags": list(self.tags)}


# -- basic charts ------------------------------------------------------

def _constant_metric_field(mat):
    mat = np.asarray(mat, dtype=float)

    def fn(xs):
        pad = 0.0 * xs[0]
        return np.array([[mat[i, j] + pad for j in range(mat.shape[1])]
                         for i in range(mat.shape[0])], dtype=object)

    return Field(fn, mat.shape, 0.0, "const_metric")


def flat_scenario(n):
    box = ChartBox((-1.0,) * n, (1.0,) * n)
    metric = _constant_metric_field(np.eye(n))
    conn = FlatConnection(n)
    fields = {"metric": metric, "connection": conn,
              "scale": scalar_field(lambda xs: 1.0 + 0.0 * xs[0],
                                    weight=2.0, name="unit_scale")}
    return Scenario(f"flat({n})", n, box, fields, ("flat", "affine", "metric"))


def perturbed_scenario(n=3, eps=0.15):
    """Analytic non-Einstein perturbation of the flat metric."""

    def fn(xs):
        x = xs
        bumps = [jsin(x[i % n] + 0.3 * (i + 1)) for i in range(n)]
        g = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                g[i, j] = (1.0 if i == j else 0.0) + 0.0 * x[0]
        for i in range(n):
            g[i, i] = g[i, i] + eps * bumps[i] * bumps[(i + 1) % n]
        for i in range(n):
            for j in range(i + 1, n):
                g[i, j] = g[i, j] + 0.5 * eps * bumps[i] * bumps[j] * 0.3
                g[j, i] = g[i, j]
        return g

    box = ChartBox((-0.9,) * n, (0.9,) * n)
    metric = Field(fn, (n, n), 0.0, "perturbed_metric")
    conn = LeviCivitaField(metric)
    fields = {"metric": metric, "connection": conn,
              "scale": _lc_scale(metric, n)}
    return Scenario(f"perturbed_metric({n})", n, box, fields,
                    ("affine", "metric", "generic"))


class MetricScale(Field):
    """Weight-2 scale annihilated by the Levi-Civita connection."""

    def __init__(self, metric, dim):
        super().__init__(None, (), 2.0, "metric_scale")
        self.metric = metric
        self.dim = dim

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            g = self.metric.eval(x, order)
            det = jet_det(np.asarray(g, dtype=object))
            val = det ** (-1.0 / (self.dim + 1.0))
            hit = np.empty((), dtype=object)
            hit[()] = val
            self._cache[key] = hit
        return hit


def _lc_scale(metric, dim):
    return MetricScale(metric, dim)


# -- round spheres in Hopf-adapted coordinates -------------------------

def _hopf_embedding(m):
    """Chart (u_1..u_2m, psi) -> unit sphere in R^(2m+2).

    The last coordinate flows along the circle action z -> e^{it} z, so
    its coordinate vector field is the unit Killing field of the round
    metric.
    """

    def fn(xs):
        u, psi = xs[:-1], xs[-1]
        s2 = 1.0
        for c in u:
            s2 = s2 + c * c
        s = 1.0 / jsqrt(s2)
        cp, sp = jcos(psi), jsin(psi)
        comps = []
        re_w = [1.0 + 0.0 * psi] + [u[2 * j] for j in range(m)]
        im_w = [0.0 * psi] + [u[2 * j + 1] for j in range(m)]
        for rw, iw in zip(re_w, im_w):
            comps.append(s * (rw * cp - iw * sp))
            comps.append(s * (rw * sp + iw * cp))
        return np.array(comps, dtype=object)

    return Field(fn, (2 * m + 2,), 0.0, f"hopf_embed_{m}")


class PullbackMetric(Field):
    """First fundamental form of an embedding field."""

    def __init__(self, embed, dim):
        super().__init__(None, (dim, dim), 0.0, f"pullback({embed.name})")
        self.embed = embed
        self.dim = dim

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            from .tensor import partials
            f = self.embed.eval(x, order + 1)
            df = partials(f, self.dim)  # df[i, K]
            hit = np.einsum("iK,jK->ij", df, df)
            self._cache[key] = hit
        return hit


def round_sphere_scenario(d):
    if d % 2 == 0 or d < 3:
        raise UnknownScenario("round_sphere needs odd dimension >= 3")
    m = (d - 1) // 2
    embed = _hopf_embedding(m)
    metric = PullbackMetric(embed, d)
    conn = LeviCivitaField(metric)
    reeb = Field(lambda xs: np.array([0.0 * xs[0]] * (d - 1)
                                     + [1.0 + 0.0 * xs[0]], dtype=object),
                 (d,), 0.0, "reeb")
    box = ChartBox((-0.8,) * d, (0.8,) * d)
    fields = {"metric": metric, "connection": conn, "k": reeb,
              "scale": _lc_scale(metric, d), "embedding": embed}
    return Scenario(f"round_sphere({d})", d, box, fields,
                    ("metric", "affine", "sasaki", "contactable", "leaf"),
                    params={"m": m, "einstein_const": d - 1})


# -- projectively flat models with constant tractor data ---------------

def _model_basis(x):
    """Components->ambient matrix B with first column (1, x)."""
    d = len(x)
    b = np.empty((d + 1, d + 1), dtype=object)
    for i in range(d + 1):
        for j in range(d + 1):
            b[i, j] = 0.0 * x[0]
    b[0, 0] = 1.0 + 0.0 * x[0]
    for i in range(d):
        b[i + 1, 0] = x[i]
        b[i + 1, i + 1] = 1.0 + 0.0 * x[0]
    return b


def hermitian_model_scenario(p, q, box_half=1.6):
    """Flat projective chart with constant ambient Hermitian data.

    (p, q) is the complex signature; the tractor metric has real
    signature (2p, 2q) on R^{2(p+q)} and the chart has dimension
    2(p+q) - 1.
    """
    mc = p + q
    nn = 2 * mc          # ambient real dimension
    d = nn - 1           # chart dimension
    hs = np.zeros((nn, nn))
    jamb = np.zeros((nn, nn))
    for k in range(mc):
        sgn = 1.0 if k < p else -1.0
        hs[2 * k, 2 * k] = sgn
        hs[2 * k + 1, 2 * k + 1] = sgn
        jamb[2 * k, 2 * k + 1] = -1.0
        jamb[2 * k + 1, 2 * k] = 1.0
    omega_amb = hs @ jamb

    def h_fn(xs):
        b = _model_basis(xs)
        return np.einsum("ia,ij,jb->ab", b, hs, b)

    def omega_fn(xs):
        b = _model_basis(xs)
        return np.einsum("ia,ij,jb->ab", b, omega_amb, b)

    def j_fn(xs):
        b = _model_basis(xs)
        from .jetnum import jet_inv
        binv = jet_inv(b)
        return np.einsum("ai,ij,jb->ab", binv, jamb, b)

    def k_fn(xs):
        v = [1.0 + 0.0 * xs[0]] + list(xs)
        jv = [sum(jamb[i, jj] * v[jj] for jj in range(nn) if jamb[i, jj])
              for i in range(nn)]
        return np.array([jv[i + 1] - jv[0] * xs[i] for i in range(d)],
                        dtype=object)

    fields = {
        "connection": FlatConnection(d),
        "tractor_metric": Field(h_fn, (d + 1, d + 1), 0.0, "model_h"),
        "tractor_omega": Field(omega_fn, (d + 1, d + 1), 0.0, "model_omega"),
        "tractor_j": Field(j_fn, (d + 1, d + 1), 0.0, "model_j"),
        "k": Field(k_fn, (d,), 0.0, "model_k"),
        "scale": scalar_field(lambda xs: 1.0 + 0.0 * xs[0], weight=2.0,
                              name="flat_scale"),
    }
    box = ChartBox((-box_half,) * d, (box_half,) * d)
    return Scenario(f"flat_model_hermitian({p},{q})", d, box, fields,
                    ("flat", "hermitian_model", "orbits"),
                    params={"p": p, "q": q, "m": mc - 1,
                            "real_signature": (2 * p, 2 * q),
                            "ambient_h": hs, "ambient_j": jamb})


# -- contact charts -----------------------------------------------------

def _heisenberg_metric(m, lam=0.25):
    """theta^2 + lam * sum(dx^2 + dy^2) for theta = dz - sum y_i dx_i."""
    d = 2 * m + 1

    def fn(xs):
        pad = 0.0 * xs[0]
        th = [pad] * d
        for i in range(m):
            th[2 * i] = -xs[2 * i + 1]
        th[d - 1] = 1.0 + pad
        g = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                g[i, j] = th[i] * th[j] + (lam if (i == j and i < d - 1)
                                           else 0.0) + pad
        return g

    return Field(fn, (d, d), 0.0, f"heisenberg_metric_{m}")


def _heisenberg_theta(m):
    d = 2 * m + 1

    def fn(xs):
        pad = 0.0 * xs[0]
        th = [pad] * d
        for i in range(m):
            th[2 * i] = -xs[2 * i + 1]
        th[d - 1] = 1.0 + pad
        return np.array(th, dtype=object)

    return Field(fn, (d,), 2.0, f"heisenberg_contact_form_{m}")


def contact_scenario(m, id_=None, torsionful=False, amp=0.35):
    """Standard contact chart carrying a unit-Killing compatible metric.

    With ``torsionful`` the Levi-Civita connection is modified by an
    H-compatible symmetric difference tensor S (x) u (u tangent to H)
    plus the projective correction restoring scale-parallelism, which
    leaves conditions (a) and (b) intact but moves the connection out of
    the contact projective class, producing genuinely nonzero torsion
    in dimension 5 and above.
    """
    from .affine import ModifiedConnection, projective_change
    d = 2 * m + 1
    metric = _heisenberg_metric(m)
    conn = LeviCivitaField(metric)
    k2 = _heisenberg_theta(m)
    reeb = Field(lambda xs: np.array([0.0 * xs[0]] * (d - 1)
                                     + [1.0 + 0.0 * xs[0]], dtype=object),
                 (d,), 0.0, "dz_reeb")
    fields = {"metric": metric, "connection": conn, "k2": k2, "k": reeb,
              "scale": scalar_field(lambda xs: 1.0 + 0.0 * xs[0],
                                    weight=2.0, name="unit_scale")}
    tags = ["contact", "metric"]
    if torsionful:
        def s_fn(xs):
            s = np.empty((d, d), dtype=object)
            pad = 0.0 * xs[0]
            for i in range(d):
                for j in range(d):
                    s[i, j] = pad
            s[0, 0] = amp * jsin(xs[2]) if d > 3 else amp * jsin(xs[0])
            s[2 % d, 2 % d] = amp * jcos(xs[0])
            v = amp * 0.5 * xs[0] * xs[(3 % d)]
            s[0, 2 % d] = v
            s[2 % d, 0] = v
            return s

        s_field = Field(s_fn, (d, d), 0.0, "difference_s")

        def delta_fn(xs):
            s = s_fn(xs)
            out = np.empty((d, d, d), dtype=object)
            pad = 0.0 * xs[0]
            for c in range(d):
                for a in range(d):
                    for b in range(d):
                        out[c, a, b] = s[a, b] if c == 1 else pad
            return out

        delta = Field(delta_fn, (d, d, d), 0.0, "delta_su")
        ups = Field(lambda xs: np.array(
            [s_fn(xs)[1, b] * (-1.0 / (d + 1.0)) for b in range(d)],
            dtype=object), (d,), 0.0, "trace_fix")
        fields["connection_torsionful"] = projective_change(
            ModifiedConnection(conn, delta), ups)
        tags.append("torsion")
    box = ChartBox((-0.9,) * d, (0.9,) * d)
    name = id_ or (f"standard_contact_r{d}")
    return Scenario(name, d, box, fields, tuple(tags), params={"m": m})


# -- ambient Monge-Ampere charts ----------------------------------------

def sphere_potential(m, eps=0.0):
    """u = (1 - |z|^2) (1 + eps |z_1|^4) as a function of 2m real coords."""

    def fn(xs):
        r2 = 0.0 * xs[0]
        for c in xs:
            r2 = r2 + c * c
        u = 1.0 - r2
        if eps:
            w2 = xs[0] * xs[0] + xs[1] * xs[1]
            u = u * (1.0 + eps * w2 * w2)
        return u

    return scalar_field(fn, weight=0.0, name=f"cr_potential_m{m}_eps{eps}")


def ambient_scenario(m, eps=0.0):
    """Chart on C* x C^m near the unit sphere |z'| = 1, z_0 near 1."""
    d = 2 * m + 2
    lo = (0.7, -0.25) + (0.25,) * (2 * m)
    hi = (1.3, 0.25) + (0.62,) * (2 * m)
    name = (f"sphere_ambient({m})" if eps == 0.0
            else f"sphere_ambient_perturbed({m})")
    fields = {"potential": sphere_potential(m, eps)}
    return Scenario(name, d, ChartBox(lo, hi), fields, ("ambient",),
                    params={"m": m, "eps": eps})


# -- registry -----------------------------------------------------------

def build_registry():
    reg = {}
    for s in [
        flat_scenario(3),
        flat_scenario(4),
        flat_scenario(5),
        perturbed_scenario(3),
        round_sphere_scenario(3),
        round_sphere_scenario(5),
        hermitian_model_scenario(1, 1),
        hermitian_model_scenario(2, 1),
        hermitian_model_scenario(1, 2),
        hermitian_model_scenario(2, 2),
        hermitian_model_scenario(3, 0),
        contact_scenario(1, "standard_contact_r3"),
        contact_scenario(2, "standard_contact_r5"),
        contact_scenario(1, "torsionful_contact_r3", torsionful=True),
        contact_scenario(2, "torsionful_contact_r5", torsionful=True),
        ambient_scenario(2),
        ambient_scenario(3),
        ambient_scenario(2, eps=0.05),
    ]:
        reg[s.id] = s
    return reg


_REGISTRY = None


def registry():
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = build_registry()
    return _REGISTRY


def get_scenario(id_):
    reg = registry()
    if id_ not in reg:
        raise UnknownScenario(f"unknown scenario {id_!r}")
    return reg[id_]


def list_registry():
    return [registry()[k].describe() for k in sorted(registry())]


def scenario_from_config(text):
    """Build a scenario from key=value lines naming a provider family."""
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UnknownScenario(f"bad config line {line!r}")
        k, v = line.split("=", 1)
        kv[k.strip()] = v.strip()
    fam = kv.get("family")
    if fam == "flat":
        return flat_scenario(int(kv.get("dim", 3)))
    if fam == "perturbed_metric":
        return perturbed_scenario(int(kv.get("dim", 3)),
                                  float(kv.get("eps", 0.15)))
    if fam == "round_sphere":
        return round_sphere_scenario(int(kv.get("dim", 5)))
    if fam == "flat_model_hermitian":
        return hermitian_model_scenario(int(kv["p"]), int(kv["q"]))
    if fam == "standard_contact":
        return contact_scenario(int(kv.get("m", 1)))
    if fam == "sphere_ambient":
        return ambient_scenario(int(kv.get("m", 2)),
                                float(kv.get("eps", 0.0)))
    raise UnknownScenario(f"unknown provider family {fam!r}")
