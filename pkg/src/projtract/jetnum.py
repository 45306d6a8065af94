"""Forward-mode jet arithmetic.

A ``Jet`` is a truncated Taylor expansion of a scalar quantity in ``dim``
chart variables: the value together with the symmetric tensors of partial
derivatives up to ``order``.  Arithmetic follows the Leibniz rule level by
level, which is the (symmetrised) nested dual-number construction: seeding
the chart coordinates and running a plain numeric closure yields all
partials of the closure at once, exactly to machine precision.

Orders up to 4 are supported; order 4 exists only for the complex
Monge-Ampere machinery, whose Ricci tensor genuinely consumes fourth
mixed derivatives of the potential.
"""

import math

import numpy as np

MAX_ORDER = 4


def _sym3_21(a2, b1):
    # symmetrisation of a2[i,j]*b1[k] over (i,j,k); a2 symmetric
    t = np.multiply.outer(a2, b1)
    return t + t.transpose(0, 2, 1) + t.transpose(2, 0, 1)


def _sym4_31(a3, b1):
    # distribute b1 over each slot; valid because a3 is symmetric
    t = np.multiply.outer(a3, b1)
    return (t + t.transpose(0, 1, 3, 2) + t.transpose(0, 3, 1, 2)
            + t.transpose(3, 0, 1, 2))


def _sym4_22(a2, b2):
    # the six (2,2) index pairings; a2 and b2 are symmetric
    t = np.multiply.outer(a2, b2)
    return (t + t.transpose(0, 2, 1, 3) + t.transpose(0, 2, 3, 1)
            + t.transpose(2, 0, 1, 3) + t.transpose(2, 0, 3, 1)
            + t.transpose(2, 3, 0, 1))


class Jet:
    """Scalar with partial derivatives to ``order`` in ``dim`` variables."""

    __slots__ = ("order", "dim", "c")

    def __init__(self, order, dim, coeffs):
        self.order = order
        self.dim = dim
        self.c = coeffs  # [value, d1, d2, ...]; value is a python scalar

    # -- construction -------------------------------------------------

    @staticmethod
    def variable(value, index, dim, order):
        """The coordinate function x_index, expanded at ``value``."""
        c = [value]
        if order >= 1:
            d1 = np.zeros(dim)
            d1[index] = 1.0
            c.append(d1)
        for k in range(2, order + 1):
            c.append(np.zeros((dim,) * k))
        return Jet(order, dim, c)

    @staticmethod
    def constant(value, dim, order):
        c = [value] + [np.zeros((dim,) * k) for k in range(1, order + 1)]
        return Jet(order, dim, c)

    def truncated(self, order):
        if order >= self.order:
            return self
        return Jet(order, self.dim, self.c[: order + 1])

    # -- accessors ----------------------------------------------------

    @property
    def value(self):
        return self.c[0]

    def deriv(self, k):
        """Partial-derivative tensor of order k (zeros array if k > order)."""
        if k <= self.order:
            return self.c[k] if k > 0 else self.c[0]
        return np.zeros((self.dim,) * k)

    def partial(self, i):
        """d/dx_i as a Jet of one order less."""
        if self.order < 1:
            raise ValueError("jet order exhausted; request a deeper jet")
        c = [self.c[1][i]] + [self.c[k][i] for k in range(2, self.order + 1)]
        return Jet(self.order - 1, self.dim, c)

    def restrict(self, indices):
        """Sub-jet in a subset of the variables (axis-aligned slices)."""
        idx = np.asarray(indices)
        c = [self.c[0]]
        for k in range(1, self.order + 1):
            a = self.c[k]
            for ax in range(k):
                a = np.take(a, idx, axis=ax)
            c.append(a)
        return Jet(self.order, len(indices), c)

    def __float__(self):
        return float(self.c[0])

    def __repr__(self):
        return f"Jet({self.c[0]!r}, order={self.order})"

    # -- ring operations ----------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                k = min(self.order, other.order)
                return self.truncated(k), other.truncated(k)
            return self, other
        if isinstance(other, (int, float, complex, np.integer, np.floating,
                              np.complexfloating)):
            return self, Jet.constant(other, self.dim, self.order)
        return self, None

    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        a, b = self._coerce(other)
        if b is None:
            return NotImplemented
        return Jet(a.order, a.dim, [x + y for x, y in zip(a.c, b.c)])

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.order, self.dim, [-x for x in self.c])

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        a, b = self._coerce(other)
        if b is None:
            return NotImplemented
        return Jet(a.order, a.dim, [x - y for x, y in zip(a.c, b.c)])

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        a, b = self._coerce(other)
        if b is None:
            return NotImplemented
        n, ca, cb = a.order, a.c, b.c
        out = [ca[0] * cb[0]]
        if n >= 1:
            out.append(ca[0] * cb[1] + cb[0] * ca[1])
        if n >= 2:
            out.append(ca[0] * cb[2] + cb[0] * ca[2]
                       + np.multiply.outer(ca[1], cb[1])
                       + np.multiply.outer(cb[1], ca[1]))
        if n >= 3:
            out.append(ca[0] * cb[3] + cb[0] * ca[3]
                       + _sym3_21(ca[2], cb[1]) + _sym3_21(cb[2], ca[1]))
        if n >= 4:
            out.append(ca[0] * cb[4] + cb[0] * ca[4]
                       + _sym4_31(ca[3], cb[1]) + _sym4_31(cb[3], ca[1])
                       + _sym4_22(ca[2], cb[2]))
        return Jet(n, a.dim, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        a, b = self._coerce(other)
        if b is None:
            return NotImplemented
        return a * b._reciprocal()

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int) or (isinstance(p, float) and p.is_integer()):
            p = int(p)
            if p == 0:
                return Jet.constant(1.0, self.dim, self.order)
            if p < 0:
                return (self ** (-p))._reciprocal()
            out = self
            for _ in range(p - 1):
                out = out * self
            return out
        v = self.c[0]
        ders = [v ** p]
        fac = p
        for k in range(1, self.order + 1):
            ders.append(fac * v ** (p - k))
            fac *= (p - k)
        return self._compose(ders)

    # -- analytic functions -------------------------------------------

    def _compose(self, ders):
        """Apply a smooth function given its derivatives at self.value."""
        h = Jet(self.order, self.dim,
                [0.0 * self.c[0]] + list(self.c[1:]))  # nilpotent part
        out = Jet.constant(ders[0], self.dim, self.order)
        hp = None
        fact = 1.0
        for k in range(1, self.order + 1):
            hp = h if hp is None else hp * h
            fact *= k
            out = out + hp * (ders[k] / fact)
        return out

    def _reciprocal(self):
        # derivatives of 1/x: (-1)^k k! / x^(k+1)
        v = self.c[0]
        ders = [(-1) ** k * math.factorial(k) / v ** (k + 1)
                for k in range(self.order + 1)]
        return self._compose(ders)

    def sqrt(self):
        v = self.c[0]
        ders = [math.sqrt(v)]
        coef = 0.5
        p = v ** -0.5
        for k in range(1, self.order + 1):
            ders.append(coef * p)
            p /= v
            coef *= (0.5 - k)
        return self._compose(ders)

    def exp(self):
        e = math.exp(self.c[0])
        return self._compose([e] * (self.order + 1))

    def log(self):
        v = self.c[0]
        ders = [math.log(v)]
        for k in range(1, self.order + 1):
            ders.append((-1) ** (k - 1) * math.factorial(k - 1) / v ** k)
        return self._compose(ders)

    def sin(self):
        s, c = math.sin(self.c[0]), math.cos(self.c[0])
        cycle = [s, c, -s, -c]
        return self._compose([cycle[k % 4] for k in range(self.order + 1)])

    def cos(self):
        s, c = math.sin(self.c[0]), math.cos(self.c[0])
        cycle = [c, -s, -c, s]
        return self._compose([cycle[k % 4] for k in range(self.order + 1)])

    def arctan(self):
        # derivatives of arctan at v: 1/(1+v^2), -2v/(1+v^2)^2, ...
        v = self.c[0]
        w = 1.0 + v * v
        ders = [math.atan(v), 1.0 / w, -2.0 * v / w ** 2,
                (6.0 * v * v - 2.0) / w ** 3,
                (24.0 * v - 24.0 * v ** 3) / w ** 4]
        return self._compose(ders[: self.order + 1])

    def conj(self):
        return Jet(self.order, self.dim, [np.conj(x) for x in self.c])

    @property
    def real(self):
        return Jet(self.order, self.dim, [np.real(x) for x in self.c])

    @property
    def imag(self):
        return Jet(self.order, self.dim, [np.imag(x) for x in self.c])

    # -- comparisons (on values; used for pivoting and branching) -----

    def __lt__(self, other):
        return self.c[0] < _val(other)

    def __le__(self, other):
        return self.c[0] <= _val(other)

    def __gt__(self, other):
        return self.c[0] > _val(other)

    def __ge__(self, other):
        return self.c[0] >= _val(other)

    def __abs__(self):
        return -self if self.c[0] < 0 else self


def _val(x):
    return x.c[0] if isinstance(x, Jet) else x


def jval(x):
    """Numeric value of a float or Jet."""
    return x.c[0] if isinstance(x, Jet) else x


def jsqrt(x):
    return x.sqrt() if isinstance(x, Jet) else math.sqrt(x)


def jexp(x):
    return x.exp() if isinstance(x, Jet) else math.exp(x)


def jlog(x):
    return x.log() if isinstance(x, Jet) else math.log(x)


def jsin(x):
    return x.sin() if isinstance(x, Jet) else math.sin(x)


def jcos(x):
    return x.cos() if isinstance(x, Jet) else math.cos(x)


def jarctan(x):
    return x.arctan() if isinstance(x, Jet) else math.atan(x)


def jconj(x):
    return x.conj() if isinstance(x, Jet) else np.conj(x)


def seed(x, order):
    """Coordinate jets for a chart point x (the canonical seeding)."""
    x = np.asarray(x, dtype=float)
    d = len(x)
    return [Jet.variable(float(x[i]), i, d, order) for i in range(d)]


def jet_array(values, dim, order):
    """Constant object array of jets from a float array."""
    flat = [Jet.constant(float(v), dim, order) for v in np.ravel(values)]
    out = np.empty(len(flat), dtype=object)
    out[:] = flat
    return out.reshape(np.shape(values))


def values(arr):
    """Float (or complex) array of the values of an object array of jets."""
    out = np.array([jval(x) for x in np.ravel(arr)])
    return out.reshape(np.shape(arr))


def derivs(arr, k):
    """Order-k derivative tensor block of an object array of jets.

    Returns an array of shape (dim,)*k + arr.shape with the derivative
    indices first, matching the layout used throughout the tensor code.
    """
    sample = next(x for x in np.ravel(arr) if isinstance(x, Jet))
    d = sample.dim
    blocks = [x.deriv(k) if isinstance(x, Jet) else np.zeros((d,) * k)
              for x in np.ravel(arr)]
    stacked = np.stack(blocks)  # (ncomp,) + (d,)*k
    stacked = stacked.reshape(np.shape(arr) + (d,) * k)
    return np.moveaxis(stacked, range(-k, 0), range(k)) if k else stacked


def partial_array(arr, i):
    """Elementwise .partial(i) over an object array of jets."""
    flat = [x.partial(i) if isinstance(x, Jet) else 0.0 for x in np.ravel(arr)]
    out = np.empty(len(flat), dtype=object)
    out[:] = flat
    return out.reshape(np.shape(arr))


def truncate_array(arr, order):
    flat = [x.truncated(order) if isinstance(x, Jet) else x
            for x in np.ravel(arr)]
    out = np.empty(len(flat), dtype=object)
    out[:] = flat
    return out.reshape(np.shape(arr))


def grad_array(arr):
    """First-derivative block D[i, ...] = d(arr...)/dx_i as floats."""
    return derivs(arr, 1)


def jet_solve(a, b):
    """Solve a x = b by Gaussian elimination, entries floats or jets.

    Pivoting compares absolute values of the leading coefficients, so the
    branch structure is deterministic for fixed inputs.
    """
    a = np.array(a, dtype=object)
    b = np.array(b, dtype=object)
    n = a.shape[0]
    vec = b.ndim == 1
    if vec:
        b = b.reshape(n, 1)
    m = np.concatenate([a, b], axis=1)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(jval(m[r, col])))
        if abs(jval(m[piv, col])) == 0.0:
            raise ZeroDivisionError("singular matrix in jet_solve")
        if piv != col:
            m[[col, piv]] = m[[piv, col]]
        inv = 1.0 / m[col, col]
        m[col, col:] = m[col, col:] * inv
        for r in range(n):
            if r != col:
                f = m[r, col]
                if isinstance(f, Jet) or f != 0.0:
                    m[r, col:] = m[r, col:] - f * m[col, col:]
    x = m[:, n:]
    return x[:, 0] if vec else x


def jet_inv(a):
    n = a.shape[0]
    eye = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            eye[i, j] = 1.0 if i == j else 0.0
    return jet_solve(a, eye)


def jet_det(a):
    """Determinant by LU elimination; entries floats or jets."""
    a = np.array(a, dtype=object)
    n = a.shape[0]
    det = 1.0
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(jval(a[r, col])))
        if abs(jval(a[piv, col])) == 0.0:
            return 0.0 * a[0, 0]
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            det = -det
        det = det * a[col, col]
        inv = 1.0 / a[col, col]
        for r in range(col + 1, n):
            f = a[r, col]
            if isinstance(f, Jet) or f != 0.0:
                a[r, col:] = a[r, col:] - (f * inv) * a[col, col:]
    return det
