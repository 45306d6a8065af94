import math

import numpy as np
import pytest

from projtract import jetnum
from projtract.errors import OrderUnsupported, OutOfDomain, SingularMetric
from projtract.jets import (ChartBox, Field, InverseMetricField, Point,
                            eval_jet, fd_derivative, scalar_field)
from projtract.jetnum import Jet, jet_det, jet_inv, jet_solve, jval


def test_constant_field_gradient_zero():
    f = scalar_field(lambda xs: 2.75, name="const")
    jt = eval_jet(f, Point.of("c", (0.3, -0.2)), 1)
    assert jt.value == 2.75
    assert np.all(jt.d1 == 0.0)


def test_polynomial_mixed_partial():
    f = scalar_field(lambda xs: xs[0] * xs[1])
    jt = eval_jet(f, Point.of("c", (0.7, 1.3)), 2)
    assert jt.d2[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert jt.d2[0, 0] == pytest.approx(0.0, abs=1e-15)


def test_analytic_third_order():
    f = scalar_field(lambda xs: (xs[0] * xs[1]).sin() * (1 + xs[0] ** 2).sqrt()
                     if isinstance(xs[0], Jet)
                     else math.sin(xs[0] * xs[1]) * math.sqrt(1 + xs[0] ** 2))
    x = (0.4, -0.8)
    jt = eval_jet(f, Point.of("c", x), 3)
    # FD oracle on the second derivative of the first derivative blocks
    h = 1e-5
    fp = Field(lambda xs: np.asarray((xs[0] * xs[1]).sin()
                                     * (1 + xs[0] ** 2).sqrt()).reshape(())
               if isinstance(xs[0], Jet) else
               np.asarray(math.sin(xs[0] * xs[1])
                          * math.sqrt(1 + xs[0] ** 2)).reshape(()), ())
    g0 = eval_jet(fp, Point.of("c", (x[0] - h, x[1])), 2).d2
    g1 = eval_jet(fp, Point.of("c", (x[0] + h, x[1])), 2).d2
    fd3 = (g1 - g0) / (2 * h)
    assert np.allclose(jt.d3[0], fd3, atol=1e-5)


def test_jet_symmetry_exact():
    f = scalar_field(lambda xs: (xs[0] ** 3) * (xs[1] ** 2) * xs[2]
                     + (xs[0] * xs[2]).exp() if isinstance(xs[0], Jet)
                     else 0.0)
    jt = eval_jet(f, Point.of("c", (0.2, 0.5, -0.3)), 3)
    assert np.allclose(jt.d2, jt.d2.T, atol=0.0)
    for perm in [(1, 0, 2), (2, 1, 0), (0, 2, 1)]:
        assert np.allclose(jt.d3, np.transpose(jt.d3, perm), atol=0.0)


def test_order_cap_enforced():
    f = scalar_field(lambda xs: xs[0])
    with pytest.raises(OrderUnsupported):
        eval_jet(f, Point.of("c", (0.0,)), 4)


def test_out_of_domain():
    box = ChartBox((0.0, 0.0), (1.0, 1.0))
    f = scalar_field(lambda xs: xs[0])
    with pytest.raises(OutOfDomain):
        eval_jet(f, Point.of("c", (2.0, 0.5)), 1, box=box)


def test_fd_linear_exact():
    a = np.array([1.5, -2.0, 0.25])
    f = scalar_field(lambda xs: a[0] * xs[0] + a[1] * xs[1] + a[2] * xs[2])
    g = fd_derivative(f, Point.of("c", (0.1, 0.2, 0.3)), step=1e-5)
    assert np.allclose(g, a, atol=1e-10)


def test_fd_sin_matches_cos():
    f = scalar_field(lambda xs: xs[0].sin() if isinstance(xs[0], Jet)
                     else math.sin(xs[0]))
    g = fd_derivative(f, Point.of("c", (0.37,)), step=1e-5)
    assert abs(g[0] - math.cos(0.37)) < 1e-9


def test_fd_vs_jet_on_metric_like_field():
    def comps(xs):
        r2 = xs[0] ** 2 + xs[1] ** 2
        c = 4.0 / (1 + r2) ** 2
        return np.array([[c, 0 * c], [0 * c, c]])

    f = Field(comps, (2, 2))
    x = Point.of("c", (0.3, -0.6))
    jt = eval_jet(f, x, 1)
    fd = fd_derivative(f, x, step=1e-5)
    scale = 1.0 + np.max(np.abs(jt.value))
    assert np.max(np.abs(jt.d1 - fd)) <= 10 * (1e-5) ** 2 * scale


def test_division_and_log():
    f = scalar_field(lambda xs: (1 + xs[0] ** 2).log() / xs[1]
                     if isinstance(xs[0], Jet) else 0.0)
    jt = eval_jet(f, Point.of("c", (0.5, 2.0)), 2)
    x, y = 0.5, 2.0
    assert jt.value == pytest.approx(math.log(1 + x * x) / y, rel=1e-14)
    assert jt.d1[0] == pytest.approx(2 * x / (1 + x * x) / y, rel=1e-12)
    assert jt.d1[1] == pytest.approx(-math.log(1 + x * x) / y ** 2, rel=1e-12)
    assert jt.d2[0, 1] == pytest.approx(-2 * x / (1 + x * x) / y ** 2,
                                        rel=1e-12)


def test_order4_supported_internally():
    xs = jetnum.seed((0.3,), 4)
    y = xs[0].exp()
    assert y.deriv(4)[0, 0, 0, 0] == pytest.approx(math.exp(0.3), rel=1e-12)


def test_jet_solve_and_det():
    xs = jetnum.seed((0.2, 0.4), 2)
    a = np.empty((2, 2), dtype=object)
    a[0, 0] = 1.0 + xs[0] ** 2
    a[0, 1] = xs[0] * xs[1]
    a[1, 0] = xs[0] * xs[1]
    a[1, 1] = 2.0 + xs[1]
    inv = jet_inv(a)
    prod = np.einsum("ij,jk->ik", a, inv)
    assert abs(jval(prod[0, 1])) < 1e-14
    assert abs(jval(prod[0, 0]) - 1) < 1e-14
    # derivative of det via jets vs hand formula d/dx0 of det
    det = jet_det(a)
    x0, x1 = 0.2, 0.4
    hand = 2 * x0 * (2 + x1) - 2 * x0 * x1 ** 2
    assert jval(det.partial(0)) == pytest.approx(hand, rel=1e-12)


def test_inverse_metric_identity_and_singular():
    f = Field(lambda xs: np.array([[2.0 + 0 * xs[0], 0 * xs[0]],
                                   [0 * xs[0], -1.0 + 0 * xs[0]]]), (2, 2))
    inv = InverseMetricField(f)
    v = inv.eval((0.0, 0.0), 0)
    assert jval(v[0, 0]) == pytest.approx(0.5)
    assert jval(v[1, 1]) == pytest.approx(-1.0)
    sing = Field(lambda xs: np.array([[xs[0] - xs[0], 0 * xs[0]],
                                      [0 * xs[0], 1.0 + 0 * xs[0]]]), (2, 2))
    with pytest.raises(SingularMetric):
        InverseMetricField(sing).eval((0.0, 0.0), 0)


def test_halton_deterministic_and_interior():
    box = ChartBox((-1.0, 0.0), (1.0, 2.0))
    a = box.sample(32, seed=7)
    b = box.sample(32, seed=7)
    assert a == b
    for p in a:
        assert -0.91 <= p[0] <= 0.91
        assert 0.09 <= p[1] <= 1.91
    assert box.sample(8, seed=1) != box.sample(8, seed=2)
