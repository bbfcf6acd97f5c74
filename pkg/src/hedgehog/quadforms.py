"""Quadratic forms of the second variation and their discretizations.

Radial integrals use Gauss points on the elements of the profile's t-grid,
so every form sees the same points, weights and profile values.  The fully
reduced forms Phi_{0,i} are assembled as P1 finite-element pencils (A, B);
the two-dimensional forms are evaluated on separable fields
g(r) * A(theta) whose angular factors are exact AngularFunctions.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.linalg import null_space
from scipy.linalg.lapack import dpbtrf, dpbtrs

from .angular import AngularFunction, AngularGrid, exact_inner
from .errors import EigenFailure, FactorizationBreakdown, NonPositivePsi, SingularWeight


# ---------------------------------------------------------------- radial quadrature

@dataclass(frozen=True, eq=False)
class RadialQuad:
    """Gauss points on ``n`` elements of t in [0, 1].

    The first half of the elements covers t in [0, 1/2] as (s^grade) / 2
    with s uniform; the rest are equal.  grade = 1.5 resolves the weak
    r^2 log r layer at the origin that otherwise costs Phi_{0,2} an order.
    """

    prof: object
    n: int
    order: int
    grade: float = 1.5

    def __post_init__(self):
        g = self.prof.grid
        x, wq = np.polynomial.legendre.leggauss(self.order)
        edges = np.linspace(0.0, 1.0, self.n + 1)
        m = self.n // 2
        edges[: m + 1] = 0.5 * np.linspace(0.0, 1.0, m + 1) ** self.grade
        h = np.diff(edges)[:, None]
        t = edges[:-1, None] + 0.5 * h * (x[None, :] + 1.0)
        r = g.r_of_t(t)
        jac = g.dr_dt(t)
        u, du, d2u = self.prof.eval(r)
        s = 0.5 * (x + 1.0)
        one = np.ones_like(h)
        vals = dict(h=h, t=t, r=r, w=0.5 * h * wq[None, :] * jac, dt_dr=1.0 / jac,
                    u=u, du=du, d2u=d2u, shape=np.stack([1.0 - s, s]),
                    dshape=np.stack([-one, one]) / h, t_nodes=edges, r_nodes=g.r_of_t(edges))
        vals["f"], vals["fh"], vals["ft"] = self.prof.bulk(r)
        for k, v in vals.items():
            object.__setattr__(self, k, v)

    @property
    def params(self):
        return self.prof.params

    def flat(self, name):
        return getattr(self, name).ravel()

    def interp(self, nodal):
        """P1 interpolant of nodal values: (value, d/dr) at the Gauss points."""
        nodal = np.asarray(nodal, dtype=float)
        a, b = nodal[:-1, None], nodal[1:, None]
        val = a * self.shape[0] + b * self.shape[1]
        d = (a * self.dshape[0] + b * self.dshape[1]) * self.dt_dr
        return val, d


@dataclass(frozen=True, eq=False)
class IntervalQuad:
    """Gauss points on given element edges in r; a drop-in for RadialQuad
    wherever only point values and dr weights are needed."""

    prof: object
    edges: np.ndarray
    order: int = 4

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        x, wq = np.polynomial.legendre.leggauss(self.order)
        mid, half = 0.5 * (e[1:] + e[:-1]), 0.5 * np.diff(e)
        r = mid[:, None] + half[:, None] * x[None, :]
        u, du, d2u = self.prof.eval(r)
        f, fh, ft = self.prof.bulk(r)
        vals = dict(r=r, w=half[:, None] * wq[None, :], u=u, du=du, d2u=d2u,
                    f=f, fh=fh, ft=ft)
        for k, v in vals.items():
            object.__setattr__(self, k, v)

    @property
    def n(self):
        return self.r.shape[0]

    def flat(self, name):
        return getattr(self, name).ravel()


@functools.lru_cache(maxsize=16)
def radial_quad(prof, n=None, order=3, grade=1.5):
    """Shared quadrature for ``prof``; by default one element per grid cell."""
    return RadialQuad(prof, int(n or prof.grid.n), order, float(grade))


# ---------------------------------------------------------------- Phi_{0,i}

def phi0i_coefficients(lam):
    """(gradient, potential, zeroth-order) coefficients of Phi_{0,i}.

    The potential matrix multiplies w_a w_b / r^2 and the zeroth-order
    entries name which of f_hat, f, f_tilde multiplies each component.
    lam = None selects Phi_{0,0}.
    """
    if lam is None:
        return [2.0 / 3.0], np.array([[4.0]]), [("fh", 2.0 / 3.0)]
    grad = [lam / 3.0, 1.0, lam - 2.0]
    pot = np.array([[lam * (lam + 6.0) / 3.0, -2.0 * lam, 0.0],
                    [-2.0 * lam, lam + 4.0, 2.0 * (lam - 2.0)],
                    [0.0, 2.0 * (lam - 2.0), (lam - 2.0) ** 2]])
    zer = [("fh", lam / 3.0), ("f", 1.0), ("ft", lam - 2.0)]
    if abs(lam - 2.0) < 1e-14:
        # the w4 coefficients all vanish; drop the null component
        return grad[:2], pot[:2, :2], zer[:2]
    return grad, pot, zer


def phi0i_lambda(i):
    return None if i == 0 else float(i * (i + 1))


def eval_phi0i(i, quad, comps, lam=None):
    """Phi_{0,i} by quadrature; comps = [(w, dw/dr), ...] at the Gauss points."""
    lam = phi0i_lambda(i) if lam is None else lam
    grad, pot, zer = phi0i_coefficients(lam)
    r, w = quad.r, quad.w
    fin = np.isfinite(r)
    r2 = np.where(fin, r, 0.0) ** 2
    total = np.zeros_like(r)
    for a, (g, (name, c)) in enumerate(zip(grad, zer)):
        val, d = comps[a]
        total += (g * d ** 2 + c * getattr(quad, name) * val ** 2) * r2
    for a in range(len(grad)):
        for b in range(len(grad)):
            if pot[a, b]:
                total += pot[a, b] * comps[a][0] * comps[b][0]
    return float(np.sum(np.where(fin, total * w, 0.0)))


@dataclass(eq=False)
class QuadraticFormPencil:
    A: sps.csr_matrix
    B: sps.csr_matrix
    ncomp: int
    index: int
    lam: float
    mass: str
    quad: RadialQuad
    origin: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def n_origin(self):
        return 0 if self.origin is None else self.origin.shape[1]

    @property
    def n_nodes(self):
        return self.quad.n + 1

    @property
    def bandwidth(self):
        return 2 * self.ncomp - 1

    def pack(self, nodal):
        """Interleave nodal component arrays into a DOF vector."""
        x = np.stack([np.asarray(c, dtype=float) for c in nodal[: self.ncomp]], axis=1)
        head = x[0] @ self.origin if self.n_origin else np.zeros(0)
        return np.concatenate([head, x[1:-1].ravel()])

    def unpack(self, x):
        """DOF vector -> list of nodal arrays."""
        x = np.asarray(x)
        k0 = self.n_origin
        full = np.zeros((self.n_nodes, self.ncomp))
        if k0:
            full[0] = self.origin @ x[:k0]
        full[1:-1] = x[k0:].reshape(-1, self.ncomp)
        return [full[:, a] for a in range(self.ncomp)]

    def energy(self, x):
        return float(x @ (self.A @ x))

    def mass_of(self, x):
        return float(x @ (self.B @ x))

    def direct_value(self, x):
        """The functional on the P1 interpolant, evaluated without the matrix."""
        comps = [self.quad.interp(c) for c in self.unpack(x)]
        return eval_phi0i(self.index, self.quad, comps, lam=self.lam)

    def banded(self, sigma=0.0):
        m = (self.A - sigma * self.B).tocsr() if sigma else self.A
        kd = self.bandwidth
        ab = np.zeros((kd + 1, m.shape[0]))
        for d in range(kd + 1):
            ab[kd - d, d:] = m.diagonal(d)
        return ab

    def dump(self, fh):
        for name, m in (("A", self.A), ("B", self.B)):
            c = m.tocoo()
            fh.write(f"% {name} {m.shape[0]} {m.shape[1]} {c.nnz}\n")
            for i, j, v in zip(c.row, c.col, c.data):
                fh.write(f"{i + 1} {j + 1} {v!r}\n")


def assemble_phi0i(i, prof, mass="natural", quad=None, lam=None):
    """P1 pencil of Phi_{0,i}; ``lam`` overrides i(i+1) (e.g. for k = 2 shifts).

    mass = "natural" weights (w0, w2, w4) by (r^2, 1, r^2); "plain" uses r^2
    for all components.
    """
    if mass not in ("natural", "plain"):
        raise ValueError(f"unknown mass {mass!r}")
    quad = quad or radial_quad(prof)
    lam = phi0i_lambda(i) if lam is None else lam
    grad, pot, zer = phi0i_coefficients(lam)
    nc = len(grad)
    ne = quad.n
    r, w = quad.r, quad.w
    fin = np.isfinite(r)
    w = np.where(fin, w, 0.0)
    rf = np.where(fin, r, 0.0)
    r2 = rf ** 2
    P, dP = quad.shape, quad.dshape
    tr = quad.dt_dr
    rows, cols, va, vb = [], [], [], []
    base = np.arange(ne)
    for a in range(nc):
        for b in range(nc):
            for p in range(2):
                for q in range(2):
                    PP = P[p] * P[q]
                    val = np.zeros(ne)
                    if a == b:
                        val += np.sum(w * grad[a] * dP[p] * dP[q] * tr ** 2 * r2, axis=1)
                        val += np.sum(w * zer[a][1] * getattr(quad, zer[a][0]) * PP * r2, axis=1)
                    if pot[a, b]:
                        val += np.sum(w * pot[a, b] * PP, axis=1)
                    mv = np.zeros(ne)
                    if a == b:
                        wm = np.ones_like(r2) if (mass == "natural" and nc > 1 and a == 1) else r2
                        mv = np.sum(w * PP * wm, axis=1)
                    rows.append((base + p) * nc + a)
                    cols.append((base + q) * nc + b)
                    va.append(val)
                    vb.append(mv)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    n = (ne + 1) * nc
    A = sps.coo_matrix((np.concatenate(va), (rows, cols)), shape=(n, n)).tocsr()
    B = sps.coo_matrix((np.concatenate(vb), (rows, cols)), shape=(n, n)).tocsr()
    # The origin value may only lie in the kernel of the 1/r^2 block; for
    # i = 2 that kernel is one dimensional and the minimiser is nonzero there.
    origin = null_space(pot)
    k0 = origin.shape[1]
    interior = n - 2 * nc
    R = sps.bmat([[sps.csr_matrix(origin), None],
                  [None, sps.identity(interior)],
                  [sps.csr_matrix((nc, k0)), sps.csr_matrix((nc, interior))]]).tocsr()
    A = (R.T @ A @ R).tocsr()
    B = (R.T @ B @ R).tocsr()
    A = ((A + A.T) * 0.5).tocsr()
    B = ((B + B.T) * 0.5).tocsr()
    return QuadraticFormPencil(A, B, nc, i, lam, mass, quad, origin=origin,
                               meta={"form": "phi0i", "i": i, "params": prof.params})


# ---------------------------------------------------------------- eigenvalues

@dataclass
class EigenResult:
    mu_min: float
    vector: np.ndarray
    residual: float
    iterations: int
    bracket: tuple

    def to_dict(self):
        return {"mu_min": self.mu_min, "residual": self.residual}


def _factor(ab):
    c, info = dpbtrf(ab, lower=0)
    return c, info


def _bnorm(pencil, x):
    return math.sqrt(max(pencil.mass_of(x), 0.0))


def min_eigen(pencil, rtol=1e-7, max_iter=200, retries=5):
    """Smallest eigenvalue of A x = mu B x.

    A - sigma B is positive definite exactly when sigma < mu_min, so a banded
    Cholesky (success = zero negative pivots) drives a bisection; the bracket
    is then polished by inverse iteration from its lower end.
    """
    A, B = pencil.A, pencil.B
    da, db = A.diagonal(), B.diagonal()
    hi = float(np.min(da / db))
    step = max(1.0, abs(hi))
    lo = hi - step
    it = 0
    while _factor(pencil.banded(lo))[1] != 0:
        step *= 2.0
        lo = hi - step
        it += 1
        if it > 200:
            raise EigenFailure("no lower bound for the spectrum")
    while hi - lo > rtol * max(1.0, abs(lo)) and it < max_iter:
        mid = 0.5 * (lo + hi)
        if _factor(pencil.banded(mid))[1] == 0:
            lo = mid
        else:
            hi = mid
        it += 1
    sigma = lo - 1e-3 * (hi - lo)
    for attempt in range(retries):
        c, info = _factor(pencil.banded(sigma))
        if info == 0:
            break
        sigma -= (hi - lo) * 2.0 ** attempt
    else:
        raise FactorizationBreakdown(f"A - sigma B not factorizable near sigma = {sigma:.6g}")
    rng = np.random.default_rng(0)
    x = rng.standard_normal(A.shape[0])
    x /= _bnorm(pencil, x)
    mu = pencil.energy(x)
    prev = np.inf
    for k in range(200):
        y, info = dpbtrs(c, B @ x, lower=0)
        if info != 0:
            raise FactorizationBreakdown("triangular solve failed")
        x = y / _bnorm(pencil, y)
        mu = pencil.energy(x)
        it += 1
        ax, bx = A @ x, B @ x
        res = float(np.linalg.norm(ax - mu * bx) / np.linalg.norm(bx))
        scale = float(np.linalg.norm(ax) / np.linalg.norm(bx))
        # converged, or stalled on rounding once the residual stops shrinking
        if res <= 1e-12 * max(scale, 1.0) or (k >= 5 and res > 0.9 * prev):
            break
        prev = res
    return EigenResult(float(mu), x, res, it, (lo, hi))


# ---------------------------------------------------------------- separable fields

class RadialFn:
    """A radial factor g(r); calling it returns (g, g')."""

    def __init__(self, fn, name=""):
        self._fn = fn
        self.name = name
        self._cache = {}

    def __call__(self, r):
        return self._fn(np.asarray(r, dtype=float))

    def at(self, quad):
        key = id(quad)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not quad:
            r = quad.flat("r")
            fin = np.isfinite(r)
            g, dg = self(np.where(fin, r, 1.0))
            hit = (quad, np.where(fin, g, 0.0), np.where(fin, dg, 0.0))
            self._cache = {key: hit}
        return hit[1], hit[2]


def profile_radial(prof, kind):
    """u, u' or u/r of the profile as a RadialFn."""

    def fn(r):
        u, du, d2u = prof.eval(r)
        if kind == "u":
            return u, du
        if kind == "du":
            return du, d2u
        if kind == "u_over_r":
            return u / r, (du - u / r) / r
        raise ValueError(kind)

    return RadialFn(fn, kind)


def bump_radial(a, b, coeffs=(1.0,)):
    """poly(r) * exp(-1/((r-a)(b-r))) on (a, b), zero outside."""
    coeffs = np.asarray(coeffs, dtype=float)
    dco = np.polynomial.polynomial.polyder(coeffs) if coeffs.size > 1 else np.zeros(1)

    def fn(r):
        inside = (r > a) & (r < b)
        rr = np.where(inside, r, 0.5 * (a + b))
        q = (rr - a) * (b - rr)
        e = np.exp(-1.0 / q)
        de = e * (b + a - 2.0 * rr) / q ** 2
        p = np.polynomial.polynomial.polyval(rr, coeffs)
        dp = np.polynomial.polynomial.polyval(rr, dco)
        return np.where(inside, p * e, 0.0), np.where(inside, dp * e + p * de, 0.0)

    return RadialFn(fn, f"bump({a},{b})")


def product_radial(f, g):
    def fn(r):
        a, da = f(r)
        b, db = g(r)
        return a * b, da * b + a * db

    return RadialFn(fn, f"{f.name}*{g.name}")


class Field2D:
    """Sum of g(r) * A(theta) terms; terms sharing a RadialFn are merged."""

    def __init__(self, terms=None):
        self.terms = {}
        for g, a in (terms or []):
            self._add(g, a)

    def _add(self, g, a):
        cur = self.terms.get(g)
        self.terms[g] = a if cur is None else cur + a

    @classmethod
    def separable(cls, g, a):
        return cls([(g, a)])

    @classmethod
    def zero(cls):
        return cls()

    def copy(self):
        return Field2D(list(self.terms.items()))

    def __add__(self, other):
        out = self.copy()
        for g, a in other.terms.items():
            out._add(g, a)
        return out

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, s):
        return Field2D([(g, a * s) for g, a in self.terms.items()])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def amap(self, fn):
        return Field2D([(g, fn(a)) for g, a in self.terms.items()])

    def dth(self):
        return self.amap(AngularFunction.dtheta)

    def sin(self):
        return self.amap(AngularFunction.sin)

    def cos(self):
        return self.amap(lambda a: a.times_poly([0.0, 1.0]))

    def csc(self):
        return self.amap(AngularFunction.csc)

    def cot(self):
        return self.amap(AngularFunction.cot)

    def reflect(self):
        """theta -> pi - theta."""
        def refl(a):
            sign = (-1.0) ** np.arange(a.c.size)
            return AngularFunction(a.beta, a.alpha, a.c * sign)
        return self.amap(refl)

    def is_zero(self):
        return all(a.is_zero(0.0) for a in self.terms.values())

    def check_square_integrable(self, what="field"):
        """Raise SingularWeight if some term is not in L2(sin theta d theta)."""
        for g, a in self.terms.items():
            red = a.reduce()
            if red.is_zero(1e-13, max(np.abs(a.c).max(), 1e-300)):
                continue
            if red.alpha < 0 or red.beta < 0:
                raise SingularWeight(f"{what}: angular factor of {g.name or 'term'} "
                                     f"blows up at the axis (exponents {red.alpha}, {red.beta})")

    def angular_degree(self):
        return max((a.c.size for a in self.terms.values()), default=1)

    def eval(self, quad, agrid):
        """(value, d/dr, d/dtheta) on (radial Gauss points) x (angular nodes)."""
        nr = quad.r.size
        V = np.zeros((nr, agrid.q))
        DR = np.zeros_like(V)
        DT = np.zeros_like(V)
        x = agrid.x
        for g, a in self.terms.items():
            gv, dg = g.at(quad)
            av = a(x)
            ad = a.dtheta()(x)
            V += np.outer(gv, av)
            DR += np.outer(dg, av)
            DT += np.outer(gv, ad)
        return V, DR, DT

    def values(self, quad, agrid):
        V = np.zeros((quad.r.size, agrid.q))
        for g, a in self.terms.items():
            V += np.outer(g.at(quad)[0], a(agrid.x))
        return V

    def at_points(self, r, theta):
        """Pointwise (value, d/dr, d/dtheta) at arbitrary (r, theta)."""
        x = np.cos(theta)
        V = np.zeros(np.broadcast(r, theta).shape)
        DR, DT = np.zeros_like(V), np.zeros_like(V)
        for g, a in self.terms.items():
            gv, dg = g(r)
            av, ad = a(x), a.dtheta()(x)
            V += gv * av
            DR += dg * av
            DT += gv * ad
        return V, DR, DT


class _Integrator:
    """Weighted sums over (radial Gauss points) x (angular nodes)."""

    def __init__(self, quad, agrid):
        r = quad.flat("r")
        self.fin = np.isfinite(r)
        self.rf = np.where(self.fin, r, 1.0)
        self.wr = np.where(self.fin, quad.flat("w"), 0.0)
        self.quad = quad
        self.agrid = agrid

    def radial(self, name):
        return np.where(self.fin, self.quad.flat(name), 0.0)

    def __call__(self, integrand, rweight):
        """sum over points of integrand * rweight(r) * dr * dx."""
        return float(np.einsum("i,ij,j->", self.wr * rweight, integrand, self.agrid.w))


def _sq(field, quad, agrid, what):
    field.check_square_integrable(what)
    return field.values(quad, agrid)


# ---------------------------------------------------------------- Phi_k and Q

def eval_phik(k, v0, v2, v4, quad, agrid):
    """Phi_k(v0, v2, v4) by quadrature of its (r, theta) integrand."""
    I = _Integrator(quad, agrid)
    r2 = I.rf ** 2
    one = np.ones_like(r2)
    V0, R0, T0 = v0.eval(quad, agrid)
    V2, R2, T2 = v2.eval(quad, agrid)
    V4, R4, T4 = v4.eval(quad, agrid)
    S0 = _sq(k * v0.csc(), quad, agrid, "csc v0") if k else 0.0
    S2 = _sq(v2.cot() + k * v2.csc(), quad, agrid, "(cot + k csc) v2")
    S4 = _sq(2.0 * v4.cot() + k * v4.csc(), quad, agrid, "(2cot + k csc) v4")
    C0 = T2 + S2
    C4 = -T2 + S2
    total = I(R0 ** 2 / 3.0 + R2 ** 2 + R4 ** 2, r2)
    total += I(T0 ** 2 / 3.0 + T2 ** 2 + T4 ** 2, one)
    total += I(2.0 * V0 ** 2 + np.square(S0) / 3.0 + 5.0 * V2 ** 2 + S2 ** 2
               + 2.0 * V4 ** 2 + S4 ** 2, one)
    total += I(4.0 * (-V0 * C0 + C4 * V4), one)
    total += I(V0 ** 2, I.radial("fh") * r2 / 3.0)
    total += I(V2 ** 2, I.radial("f") * r2)
    total += I(V4 ** 2, I.radial("ft") * r2)
    return math.pi * total


_ZERO_NAMES = ("fh", "f", "f", "ft", "ft")
_WEIGHT = (1.0 / 3.0, 1.0, 1.0, 1.0, 1.0)


def _mode_parts(k, mu, nu):
    """Integrand pieces of one phi-mode: (radial-derivative fields,
    theta-bracket fields, csc-bracket fields), each with its weight."""
    z = Field2D.zero()
    mu = [m if m is not None else z for m in mu]
    nu = [n if n is not None else z for n in nu]
    theta = []
    for a in (mu, nu):
        theta += [(1.0 / 3.0, a[0].dth() - 3.0 * a[2]),
                  (1.0, a[1].dth() - a[3]),
                  (1.0, a[2].dth() + a[0] - a[4]),
                  (1.0, a[3].dth() + a[1]),
                  (1.0, a[4].dth() + a[2])]
    phi = []
    for s, a, b in ((1.0, mu, nu), (-1.0, nu, mu)):
        # d/dphi of cos(k phi) is -k sin; the sign flips between the halves
        phi += [(1.0 / 3.0, s * k * b[0] + 3.0 * a[1].sin()),
                (1.0, s * k * b[1] - a[0].sin() - a[2].cos() - a[4].sin()),
                (1.0, s * k * b[2] + a[1].cos() + a[3].sin()),
                (1.0, s * k * b[3] - a[2].sin() - 2.0 * a[4].cos()),
                (1.0, s * k * b[4] + a[1].sin() + 2.0 * a[3].cos())]
    return mu, nu, theta, phi


def q_mode(k, mu, nu, quad, agrid, bulk=True):
    """The phi-integrated second variation of one mode with pi prefactor.

    mu, nu are five-element lists of Field2D (None for zero).  For k >= 1 this
    is Q(V_k); for k = 0, Q(V_0) is twice this value (with nu = 0).
    bulk=False drops the zeroth-order terms, leaving half the Dirichlet energy.
    """
    mu, nu, theta, phi = _mode_parts(k, mu, nu)
    I = _Integrator(quad, agrid)
    r2 = I.rf ** 2
    one = np.ones_like(r2)
    total = 0.0
    for fields in (mu, nu):
        for j, fld in enumerate(fields):
            if not fld.terms:
                continue
            V, DR, _ = fld.eval(quad, agrid)
            total += _WEIGHT[j] * I(DR ** 2, r2)
            if bulk:
                total += _WEIGHT[j] * I(V ** 2, I.radial(_ZERO_NAMES[j]) * r2)
    for wgt, fld in theta:
        if fld.terms:
            total += wgt * I(fld.values(quad, agrid) ** 2, one)
    for wgt, fld in phi:
        if fld.terms:
            total += wgt * I(_sq(fld.csc(), quad, agrid, "phi bracket") ** 2, one)
    return math.pi * total


def eval_Q(field, quad, agrid):
    """Q(V) = sum over phi-modes of Q(V_k)."""
    total = 0.0
    for k, (mu, nu) in sorted(field.modes.items()):
        if k == 0:
            total += 2.0 * q_mode(0, mu, [None] * 5, quad, agrid)
        else:
            total += q_mode(k, mu, nu, quad, agrid)
    return total


def eval_Qi_axisym(i, w, quad, agrid):
    """The single-component axisymmetric forms Q_0 ... Q_4."""
    I = _Integrator(quad, agrid)
    r2 = I.rf ** 2
    one = np.ones_like(r2)
    V, DR, DT = w.eval(quad, agrid)
    total = I(DR ** 2, r2) + I(DT ** 2, one)
    if i == 0:
        total += I(6.0 * V ** 2, one) + I(V ** 2, I.radial("fh") * r2)
    elif i in (1, 2):
        C = _sq(w.csc(), quad, agrid, "csc w")
        total += I(4.0 * V ** 2 + C ** 2, one) + I(V ** 2, I.radial("f") * r2)
    elif i in (3, 4):
        C = _sq(w.csc(), quad, agrid, "csc w")
        total += I(-2.0 * V ** 2 + 4.0 * C ** 2, one) + I(V ** 2, I.radial("ft") * r2)
    else:
        raise ValueError(f"no axisymmetric form Q_{i}")
    return 2.0 * math.pi * total


def q3_reduced(quad, g):
    """(32 pi / 15) int [g'^2 + (4/r^2 + f_tilde) g^2] r^2 dr: Q_3 of g(r) sin^2(theta)."""
    r = quad.flat("r")
    fin = np.isfinite(r)
    rf = np.where(fin, r, 1.0)
    gv, dg = g.at(quad)
    integrand = (dg ** 2 + (4.0 / rf ** 2 + quad.flat("ft")) * gv ** 2) * rf ** 2
    return 32.0 * math.pi / 15.0 * float(np.sum(np.where(fin, quad.flat("w") * integrand, 0.0)))


# ---------------------------------------------------------------- Hardy machinery

def _simpson(y, x):
    from scipy.integrate import simpson
    return float(simpson(y, x=x))


def hardy_decompose_check(coeff_A, potential_V, psi, f, grid):
    """Both sides of int[A f'^2 + V f^2] = int psi^2 A g'^2 + int g^2 (L psi) psi.

    L psi = -(A psi')' + V psi and g = f / psi.  All functions are callables on
    the 1D node array ``grid``; derivatives are second-order differences.
    """
    x = np.asarray(grid, dtype=float)
    A, V, P, F = (np.asarray(fn(x), dtype=float) for fn in (coeff_A, potential_V, psi, f))
    if np.any(P[1:-1] <= 0):
        raise NonPositivePsi("psi must be positive on interior nodes")
    dF = np.gradient(F, x, edge_order=2)
    lhs = _simpson(A * dF ** 2 + V * F ** 2, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(P > 0, F / P, 0.0)
    dG = np.gradient(G, x, edge_order=2)
    dP = np.gradient(P, x, edge_order=2)
    Lpsi = -np.gradient(A * dP, x, edge_order=2) + V * P
    rhs = _simpson(P ** 2 * A * dG ** 2, x) + _simpson(G ** 2 * Lpsi * P, x)
    return lhs, rhs, lhs - rhs


def pwh_check(k, v, agrid=None):
    """Both sides of the weighted Hardy inequality on (0, pi).

    lhs = int [v'^2 + k^2 csc^2 v^2] sin, rhs = (k^2 + k) int v^2 sin.  ``v`` is
    an AngularFunction or a pair of callables (v(theta), v'(theta)).
    """
    agrid = agrid or AngularGrid(256)
    th = agrid.theta
    if isinstance(v, AngularFunction):
        val, dval = v(agrid.x), v.dtheta()(agrid.x)
    else:
        val, dval = v[0](th), v[1](th)
    s2 = np.sin(th) ** 2
    lhs = float(np.sum(agrid.w * (dval ** 2 + k * k * val ** 2 / s2)))
    rhs = float((k * k + k) * np.sum(agrid.w * val ** 2))
    return lhs, rhs


def angular_l2(a, b=None):
    return exact_inner(a, a if b is None else b)
