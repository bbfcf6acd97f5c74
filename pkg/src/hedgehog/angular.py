"""Angular eigenbases in x = cos(theta).

Every mode is represented exactly as (1 - x)^alpha (1 + x)^beta p(x) with
half-integer exponents and a Legendre series p.  In that form d/dtheta,
cot(theta) and csc(theta) act in closed form, so the derivation and
inversion relations hold to rounding error and quadrature is exact.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as L
from scipy.special import eval_jacobi

from .errors import DegenerateMode, IndexOutOfRange, LengthMismatch, SingularEigenvalue

_ONE_MINUS_X = np.array([1.0, -1.0])
_ONE_PLUS_X = np.array([1.0, 1.0])


def _legmul_pow(c, base, n):
    for _ in range(n):
        c = L.legmul(c, base)
    return c


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return c if c.size else np.zeros(1)


@dataclass(frozen=True, eq=False)
class AngularFunction:
    """(1 - x)^alpha (1 + x)^beta * sum_n c[n] P_n(x)."""

    alpha: float
    beta: float
    c: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (1.0 - x) ** self.alpha * (1.0 + x) ** self.beta * L.legval(x, self.c)

    def _with(self, alpha, beta, c):
        return AngularFunction(alpha, beta, _trim(c))

    def __mul__(self, s):
        return self._with(self.alpha, self.beta, self.c * s)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __add__(self, other):
        a = min(self.alpha, other.alpha)
        b = min(self.beta, other.beta)
        c1 = self._lift(a, b)
        c2 = other._lift(a, b)
        n = max(c1.size, c2.size)
        c = np.zeros(n)
        c[: c1.size] += c1
        c[: c2.size] += c2
        return self._with(a, b, c)

    def __sub__(self, other):
        return self + (-other)

    def _lift(self, a, b):
        da, db = self.alpha - a, self.beta - b
        if abs(da - round(da)) > 1e-12 or abs(db - round(db)) > 1e-12:
            raise ValueError("exponents differ by a non-integer")
        c = _legmul_pow(self.c, _ONE_MINUS_X, int(round(da)))
        return _legmul_pow(c, _ONE_PLUS_X, int(round(db)))

    def times_poly(self, q):
        """Multiply by the power-series polynomial q (coefficients low to high)."""
        return self._with(self.alpha, self.beta, L.legmul(self.c, L.poly2leg(q)))

    def shift(self, da, db):
        return self._with(self.alpha + da, self.beta + db, self.c)

    def dtheta(self):
        # d/dtheta = -sin(theta) d/dx
        a, b, p = self.alpha, self.beta, self.c
        term = (a * L.legmul(p, _ONE_PLUS_X) - b * L.legmul(p, _ONE_MINUS_X)
                - L.legmul(L.legder(p), [2.0 / 3.0, 0.0, -2.0 / 3.0]))
        return self._with(a - 0.5, b - 0.5, term)

    def csc(self):
        return self.shift(-0.5, -0.5)

    def cot(self):
        return self.times_poly([0.0, 1.0]).shift(-0.5, -0.5)

    def sin(self):
        return self.shift(0.5, 0.5)

    def laplacian(self):
        """(1/sin) d/dtheta (sin d/dtheta f)."""
        return self.dtheta().sin().dtheta().csc()

    def reduce(self, tol=1e-12):
        """Absorb roots of p at x = +-1 into the exponents."""
        c = self.c
        a, b = self.alpha, self.beta
        scale = np.abs(c).sum()
        if scale == 0.0:
            return self
        for sign in (1.0, -1.0):
            while c.size > 1:
                val = L.legval(sign, c)
                if abs(val) > tol * scale:
                    break
                q, _ = L.legdiv(c, _ONE_MINUS_X if sign > 0 else _ONE_PLUS_X)
                c = q
                if sign > 0:
                    a += 1.0
                else:
                    b += 1.0
        return self._with(a, b, c)

    def is_zero(self, tol=1e-12, ref=1.0):
        return np.abs(self.c).max() <= tol * ref

    def endpoint_values(self):
        """Values at theta = 0 and theta = pi (inf where the function blows up)."""
        f = self.reduce()
        out = []
        for x, e_here, e_other in ((1.0, f.alpha, f.beta), (-1.0, f.beta, f.alpha)):
            p = L.legval(x, f.c)
            if abs(p) < 1e-14 or e_here > 0:
                out.append(0.0)
            elif e_here < 0:
                out.append(math.copysign(math.inf, p))
            else:
                out.append(2.0 ** e_other * p)
        return tuple(out)


def from_jacobi(n, a, b, alpha, beta):
    """(1 - x)^alpha (1 + x)^beta P_n^{(a, b)}(x) in Legendre form."""
    x, w = L.leggauss(n + 1)
    vals = eval_jacobi(n, a, b, x)
    c = np.array([(2 * j + 1) / 2.0 * np.sum(w * vals * L.legval(x, np.eye(n + 1)[j]))
                  for j in range(n + 1)])
    return AngularFunction(alpha, beta, c)


@dataclass(frozen=True, eq=False)
class AngularGrid:
    q: int = 256

    def __post_init__(self):
        x, w = L.leggauss(self.q)
        object.__setattr__(self, "x", x[::-1].copy())
        object.__setattr__(self, "w", w[::-1].copy())
        object.__setattr__(self, "theta", np.arccos(self.x))

    def __eq__(self, other):
        return isinstance(other, AngularGrid) and other.q == self.q

    def __hash__(self):
        return hash(("AngularGrid", self.q))


def inner(grid, f, g):
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.shape[-1] != grid.q:
        raise LengthMismatch(f"lengths {f.shape} and {g.shape} on a {grid.q}-point grid")
    return float(np.sum(grid.w * f * g, axis=-1))


def exact_inner(f, g):
    """Weighted inner product of two AngularFunctions by exact Gauss quadrature."""
    n = f.c.size + g.c.size + int(abs(f.alpha) + abs(f.beta) + abs(g.alpha) + abs(g.beta)) + 4
    x, w = L.leggauss(n)
    return float(np.sum(w * f(x) * g(x)))


@dataclass(frozen=True, eq=False)
class AngularMode:
    k: int
    m: int
    i: int
    lam: float
    func: AngularFunction
    grid: AngularGrid

    @functools.cached_property
    def values(self):
        return self.func(self.grid.x)

    @functools.cached_property
    def dvalues(self):
        return self.func.dtheta()(self.grid.x)

    def norm2(self):
        return exact_inner(self.func, self.func)


def eigenvalue(k, i):
    return float((i + 1) * (i + 2)) if k == 2 else float(i * (i + 1))


def _check_k(k):
    if k not in (0, 1, 2):
        raise IndexOutOfRange(f"k must be 0, 1 or 2, got {k}")


def u2_function(k, i):
    """Normalized u2_{k,i} as an AngularFunction, positive near theta = 0.

    These are weighted Jacobi polynomials: the endpoint factors are the
    Fuchsian exponents of T2_k at x = 1 and x = -1.
    """
    _check_k(k)
    if int(i) != i or i < 1:
        raise IndexOutOfRange(f"u2 modes start at i = 1, got {i}")
    a, b = k + 1, abs(k - 1)
    f = from_jacobi(i - 1, a, b, a / 2.0, b / 2.0)
    return f * (1.0 / math.sqrt(exact_inner(f, f)))


def u2_mode(k, i, grid):
    return AngularMode(k, 2, i, eigenvalue(k, i), u2_function(k, i), grid)


def _derive(f, k, m):
    g = f.cot() + k * f.csc()
    return (f.dtheta() + g) if m == 0 else (g - f.dtheta())


def derive_mode(u2, m):
    if u2.m != 2:
        raise ValueError("derive_mode expects an m = 2 mode")
    if m not in (0, 4):
        raise IndexOutOfRange(f"m must be 0 or 4, got {m}")
    f = _derive(u2.func, u2.k, m).reduce()
    if f.is_zero(1e-10, np.abs(u2.func.c).max()):
        raise DegenerateMode(f"u{m}_({u2.k},{u2.i}) vanishes identically")
    return AngularMode(u2.k, m, u2.i, u2.lam, f, u2.grid)


@functools.lru_cache(maxsize=None)
def mode(k, m, i, grid):
    """Cached u^(m)_{k,i}; (k, m, i) = (0, 0, 0) is the constant mode 1."""
    if (k, m, i) == (0, 0, 0):
        return AngularMode(0, 0, 0, 0.0, AngularFunction(0.0, 0.0, np.ones(1)), grid)
    u2 = u2_mode(k, i, grid)
    return u2 if m == 2 else derive_mode(u2, m)


def first_index(k, m):
    """Smallest i in the basis {u^(m)_{k,i}}."""
    if m == 0 and k == 0:
        return 0
    if m == 4 and k in (0, 1):
        return 2
    return 1


def potential_poly(k, m):
    """Power-series numerator q with T = -Laplacian + c + q(x)/(1 - x^2)."""
    if m == 0:
        return 0.0, [k * k]
    if m == 2:
        return 1.0, [k * k, 2.0 * k, 1.0]
    return 4.0, [k * k, 4.0 * k, 4.0]


def apply_T_function(k, m, f):
    const, q = potential_poly(k, m)
    return -f.laplacian() + const * f + f.times_poly(q).shift(-1.0, -1.0)


def apply_T(k, m, md):
    """Weighted L2 norm of (T_k^(m) - lambda) applied to the mode."""
    res = apply_T_function(k, m, md.func) - md.lam * md.func
    return math.sqrt(max(exact_inner(res, res), 0.0))


def rayleigh(k, m, md):
    return exact_inner(apply_T_function(k, m, md.func), md.func) / md.norm2()


def invert_mode(k, m, md, lam):
    """Recover u2 from u0 (m = 0) or u4 (m = 4) with eigenvalue lam."""
    f = md.func
    if m == 0:
        if abs(lam) < 1e-14:
            raise SingularEigenvalue("lambda = 0 has no u2 partner")
        g = (k * f.csc() - f.dtheta()) * (1.0 / lam)
    elif m == 4:
        if abs(lam - 2.0) < 1e-14:
            raise SingularEigenvalue("lambda = 2 has no u2 partner")
        g = (f.dtheta() + 2.0 * f.cot() + k * f.csc()) * (1.0 / (lam - 2.0))
    else:
        raise IndexOutOfRange(f"m must be 0 or 4, got {m}")
    return AngularMode(k, 2, md.i, lam, g.reduce(), md.grid)


def export_mode_csv(md, fh):
    fh.write("theta,value,dvalue\n")
    for row in zip(md.grid.theta, md.values, md.dvalues):
        fh.write(",".join(repr(float(v)) for v in row) + "\n")
