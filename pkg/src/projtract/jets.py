"""Chart-level fields, jet evaluation, and the finite-difference oracle.

A field is a deterministic closure from coordinate scalars to an array of
components.  Evaluating it on seeded coordinate jets produces the full jet
of every component in one pass; ``fd_derivative`` provides the independent
first-derivative oracle used only for cross-validation.
"""

from dataclasses import dataclass, field as dfield

import numpy as np

from . import jetnum
from .errors import OrderUnsupported, OutOfDomain, SingularMetric
from .jetnum import Jet, jet_inv, jet_det, jval, values, derivs

JET_ORDER_CAP = 3


@dataclass(frozen=True)
class Point:
    chart_id: str
    coords: tuple

    @staticmethod
    def of(chart_id, coords):
        return Point(chart_id, tuple(float(c) for c in coords))


@dataclass(frozen=True)
class ChartBox:
    """Axis-aligned chart domain."""
    lo: tuple
    hi: tuple

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, coords, slack=0.0):
        return all(l - slack <= c <= h + slack
                   for l, c, h in zip(self.lo, coords, self.hi))

    def sample(self, n, seed, margin=0.05):
        """Deterministic low-discrepancy interior points (Halton)."""
        d = self.dim
        primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29][:d]
        start = 1009 * (seed + 1) + 13
        pts = []
        for i in range(n):
            idx = start + i
            row = []
            for p, lo, hi in zip(primes, self.lo, self.hi):
                h = _halton(idx, p)
                row.append(lo + (margin + (1 - 2 * margin) * h) * (hi - lo))
            pts.append(tuple(row))
        return pts


def _halton(i, base):
    f, r = 1.0, 0.0
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


class Field:
    """Array-valued function of chart coordinates, evaluable on jets.

    ``fn`` receives a list of coordinate scalars (floats or Jets) and must
    return an object/float array of fixed shape built from them by plain
    arithmetic.  ``weight`` is the projective weight metadata carried by
    the components in the coordinate trivialisation of the density bundle.
    """

    def __init__(self, fn, shape, weight=0.0, name=None):
        self.fn = fn
        self.shape = tuple(shape)
        self.weight = weight
        self.name = name or getattr(fn, "__name__", "field")
        self._cache = {}

    def __call__(self, xs):
        return np.asarray(self.fn(xs))

    def eval(self, x, order):
        """Components as an object array of jets of exactly ``order``."""
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        xs = jetnum.seed(x, order)
        out = np.asarray(self.fn(xs))
        if out.dtype != object:
            out = jetnum.jet_array(out, len(x), order)
        if len(self._cache) > 4096:
            self._cache.clear()
        self._cache[key] = out
        return out

    def value(self, x):
        return values(self.eval(x, 0))


def scalar_field(fn, weight=0.0, name=None):
    return Field(lambda xs: np.asarray(fn(xs)).reshape(()), (), weight, name)


class JetTensor:
    """Extracted jet of a tensor field at a point: float blocks per order."""

    def __init__(self, jets, order):
        self.order = order
        self.value = values(jets)
        self.d1 = derivs(jets, 1) if order >= 1 else None
        self.d2 = derivs(jets, 2) if order >= 2 else None
        self.d3 = derivs(jets, 3) if order >= 3 else None


def eval_jet(f, point, order, box=None):
    """Jet of a field at a point: value and partials up to ``order``.

    The derivative blocks carry the differentiation indices first, i.e.
    ``d2[i, j, ...] = d^2 components / dx_i dx_j``.
    """
    if order > JET_ORDER_CAP:
        raise OrderUnsupported(f"jet order {order} exceeds cap {JET_ORDER_CAP}")
    coords = point.coords if isinstance(point, Point) else tuple(point)
    if box is not None and not box.contains(coords):
        raise OutOfDomain(f"{coords} outside chart box")
    return JetTensor(f.eval(coords, order), order)


def fd_derivative(f, point, step=1e-5, box=None):
    """Central-difference first derivative; the independent oracle.

    Never used in production paths, only to cross-check jet evaluation.
    """
    coords = np.asarray(point.coords if isinstance(point, Point) else point,
                        dtype=float)
    d = len(coords)
    if box is not None:
        for i in range(d):
            for s in (step, -step):
                y = coords.copy()
                y[i] += s
                if not box.contains(y):
                    raise OutOfDomain("stencil leaves chart box")
    base = f.value(coords)
    out = np.zeros((d,) + base.shape, dtype=base.dtype)
    for i in range(d):
        xp, xm = coords.copy(), coords.copy()
        xp[i] += step
        xm[i] -= step
        out[i] = (f.value(xp) - f.value(xm)) / (2 * step)
    return out


# -- metric utilities -------------------------------------------------

def inverse_metric_jets(g_jets, det_floor=1e-12):
    """Inverse of a metric given as an object array of jets.

    Differentiating the inverse identity is implicit in jet arithmetic.
    """
    det = jval(jet_det(g_jets))
    scale = max(abs(jval(v)) for v in np.ravel(g_jets)) or 1.0
    n = g_jets.shape[0]
    if abs(det) < det_floor * scale ** n:
        raise SingularMetric(f"|det g| = {abs(det):.3e} below threshold")
    return jet_inv(g_jets)


class InverseMetricField(Field):
    def __init__(self, metric):
        super().__init__(None, metric.shape, 0.0, f"inv({metric.name})")
        self.metric = metric

    def eval(self, x, order):
        key = (tuple(float(c) for c in x), order)
        hit = self._cache.get(key)
        if hit is None:
            hit = inverse_metric_jets(self.metric.eval(x, order))
            self._cache[key] = hit
        return hit


@dataclass
class MetricJet:
    """Metric components with derivatives to order 3 at a point."""
    g: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray
    d3g: np.ndarray = None

    @staticmethod
    def at(metric_field, x, order=3):
        jt = JetTensor(metric_field.eval(tuple(x), order), order)
        return MetricJet(jt.value, jt.d1, jt.d2, jt.d3)


def metric_inverse_with_derivs(metric_field, x, order=2):
    """g^{ab} and its derivatives to ``order`` as a JetTensor."""
    inv = InverseMetricField(metric_field)
    return JetTensor(inv.eval(tuple(x), order), order)
