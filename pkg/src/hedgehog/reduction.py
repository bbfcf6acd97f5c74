"""phi-Fourier split, the (xi -> v) change of variables and theta-projection.

A perturbation V = sum_j w_j E_j is stored by its phi-modes:
w_j = sum_k mu_k^(j) cos(k phi) + nu_k^(j) sin(k phi), each coefficient a
separable Field2D.  Every identity is checked by evaluating both sides with
the quadratures in ``quadforms``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .angular import AngularFunction, AngularGrid, eigenvalue, exact_inner, first_index, mode
from .quadforms import (_WEIGHT as _W, _ZERO_NAMES, Field2D, _Integrator, bump_radial,
                        eval_phi0i, eval_phik, profile_radial, q_mode, radial_quad)


def field_quad(prof, n=2000, order=4):
    """Radial quadrature for the two-dimensional forms."""
    return radial_quad(prof, min(n, prof.grid.n), order)


@dataclass
class FrameField:
    """modes[k] = (mu, nu), two lists of five Field2D (None for zero)."""

    modes: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, (mu, nu) in self.modes.items():
            if k == 0 and any(n is not None and n.terms for n in nu):
                raise ValueError("nu must vanish for k = 0")

    @property
    def kmax(self):
        return max(self.modes, default=0)

    def mode(self, k):
        z = [None] * 5
        return self.modes.get(k, (z, z))

    def components(self, r, theta, phi):
        """w_j and their (r, theta, phi) derivatives at points."""
        shape = np.broadcast(r, theta, phi).shape
        W = np.zeros((5,) + shape)
        DR, DT, DP = np.zeros_like(W), np.zeros_like(W), np.zeros_like(W)
        for k, (mu, nu) in self.modes.items():
            c, s = np.cos(k * phi), np.sin(k * phi)
            for j in range(5):
                for fld, trig, dtrig in ((mu[j], c, -k * s), (nu[j], s, k * c)):
                    if fld is None or not fld.terms:
                        continue
                    v, dr, dt = fld.at_points(r, theta)
                    W[j] += v * trig
                    DR[j] += dr * trig
                    DT[j] += dt * trig
                    DP[j] += v * dtrig
        return W, DR, DT, DP


@dataclass
class ModeBlock:
    k: int
    fields: list
    rep: str = "xi"

    def __post_init__(self):
        if self.rep not in ("xi", "v"):
            raise ValueError(f"unknown representation {self.rep!r}")
        self.fields = [f if f is not None else Field2D.zero() for f in self.fields]


def change_vars(block):
    """xi <-> v: v0 = xi0/2, v1,2 = (xi1 +- xi2)/2, v3,4 = (xi3 +- xi4)/2."""
    a = block.fields
    if block.rep == "xi":
        out = [0.5 * a[0], 0.5 * (a[1] + a[2]), 0.5 * (a[1] - a[2]),
               0.5 * (a[3] + a[4]), 0.5 * (a[3] - a[4])]
        return ModeBlock(block.k, out, "v")
    out = [2.0 * a[0], a[1] + a[2], a[1] - a[2], a[3] + a[4], a[3] - a[4]]
    return ModeBlock(block.k, out, "xi")


def q_of_xi(block, quad, agrid):
    """Q_k(xi): xi0, xi2, xi4 ride on cos(k phi), xi1, xi3 on sin(k phi)."""
    xi = block.fields if block.rep == "xi" else change_vars(block).fields
    mu = [xi[0], None, xi[2], None, xi[4]]
    nu = [None, xi[1], None, xi[3], None]
    return q_mode(block.k, mu, nu, quad, agrid)


def _blocks_of_mode(k, mu, nu):
    z = Field2D.zero()
    mu = [m if m is not None else z for m in mu]
    nu = [n if n is not None else z for n in nu]
    a = ModeBlock(k, [mu[0], nu[1], mu[2], nu[3], mu[4]])
    b = ModeBlock(k, [-nu[0], mu[1], -nu[2], mu[3], -nu[4]])
    return a, b


def q_full(field, quad, agrid, nphi=None):
    """Q(V) from the full integrand on a (r, theta, phi) product grid.

    Trapezoid in phi is exact for the band-limited integrand, so this is an
    independent route to the same number as the mode sum.
    """
    nphi = nphi or 2 * field.kmax + 2
    I = _Integrator(quad, agrid)
    r2 = I.rf ** 2
    one = np.ones_like(r2)
    evals = {}
    for k, (mu, nu) in field.modes.items():
        for j in range(5):
            for tag, fld in (("mu", mu[j]), ("nu", nu[j])):
                if fld is not None and fld.terms:
                    evals[(k, tag, j)] = fld.eval(quad, agrid)
    s = np.sin(agrid.theta)
    c = np.cos(agrid.theta)
    zero = [I.radial(n) for n in _ZERO_NAMES]
    total = 0.0
    shape = (quad.r.size, agrid.q)
    for phi in 2.0 * math.pi * np.arange(nphi) / nphi:
        W = np.zeros((5,) + shape)
        DR, DT, DP = np.zeros_like(W), np.zeros_like(W), np.zeros_like(W)
        for (k, tag, j), (V, R, T) in evals.items():
            if tag == "mu":
                trig, dtrig = math.cos(k * phi), -k * math.sin(k * phi)
            else:
                trig, dtrig = math.sin(k * phi), k * math.cos(k * phi)
            W[j] += V * trig
            DR[j] += R * trig
            DT[j] += T * trig
            DP[j] += V * dtrig
        w0, w1, w2, w3, w4 = W
        acc = 0.0
        for j in range(5):
            acc += _W[j] * I(DR[j] ** 2, r2) + _W[j] * I(W[j] ** 2, zero[j] * r2)
        th = ((DT[0] - 3 * w2) ** 2 / 3.0 + (DT[1] - w3) ** 2 + (DT[2] + w0 - w4) ** 2
              + (DT[3] + w1) ** 2 + (DT[4] + w2) ** 2)
        ph = ((DP[0] + 3 * s * w1) ** 2 / 3.0 + (DP[1] - s * w0 - c * w2 - s * w4) ** 2
              + (DP[2] + c * w1 + s * w3) ** 2 + (DP[3] - s * w2 - 2 * c * w4) ** 2
              + (DP[4] + s * w1 + 2 * c * w3) ** 2) / s ** 2
        acc += I(th + ph, one)
        total += acc * 2.0 * math.pi / nphi
    return total


@dataclass
class SplitResult:
    blocks: dict
    q_total: float
    q_modes: dict
    gap: float


def q_of_mode(k, mu, nu, quad, agrid):
    """Q(V_k) as the sum of the two xi-blocks (twice that for k = 0)."""
    a, b = _blocks_of_mode(k, mu, nu)
    val = q_of_xi(a, quad, agrid) + q_of_xi(b, quad, agrid)
    return 2.0 * val if k == 0 else val


def fourier_split(field, quad, agrid):
    blocks = {}
    q_modes = {}
    for k, (mu, nu) in sorted(field.modes.items()):
        blocks[k] = _blocks_of_mode(k, mu, nu)
        q_modes[k] = q_of_mode(k, mu, nu, quad, agrid)
    total = q_full(field, quad, agrid)
    gap = abs(total - sum(q_modes.values()))
    return SplitResult(blocks, total, q_modes, gap)


def mode_domination_check(k, mu, nu, quad, agrid):
    """(Q(V_k), Q(V~_{k-1}), margin) with V~ carrying the same coefficients."""
    if k < 3:
        raise ValueError("the comparison is stated for k >= 3")
    qk = q_mode(k, mu, nu, quad, agrid)
    qt = q_mode(k - 1, mu, nu, quad, agrid)
    return qk, qt, qk - qt


def qk_split_check(block, quad, agrid):
    """(Q_k, 2 Phi_k(v0~, v1~, v3~) + 2 Phi_k(v0, v2, v4), gap)."""
    vb = block if block.rep == "v" else change_vars(block)
    v = vb.fields
    qk = q_of_xi(vb, quad, agrid)
    t0, t1, t3 = v[0].reflect(), v[1].reflect(), -v[3].reflect()
    split = (2.0 * eval_phik(block.k, t0, t1, t3, quad, agrid)
             + 2.0 * eval_phik(block.k, v[0], v[2], v[4], quad, agrid))
    return qk, split, qk - split


@dataclass
class ProjectionResult:
    k: int
    i_max: int
    coeffs: dict
    phik: float
    partial_sum: float
    gap: float
    tail: float


def _project(fld, md, quad):
    """Radial coefficient of fld on the angular mode: (values, d/dr) at Gauss points."""
    norm = exact_inner(md.func, md.func)
    nr = quad.r.size
    val, der = np.zeros(nr), np.zeros(nr)
    for g, a in fld.terms.items():
        c = exact_inner(a, md.func) / norm
        if c:
            gv, dg = g.at(quad)
            val += c * gv
            der += c * dg
    return val, der


def theta_project(k, v0, v2, v4, i_max, quad, agrid):
    """Project (v0, v2, v4) on the angular bases and compare Phi_k with the mode sum."""
    nr = quad.r.size
    zero = np.zeros(nr)
    coeffs = {}
    for m, fld in ((0, v0), (2, v2), (4, v4)):
        for i in range(first_index(k, m), i_max + 1):
            md = mode(k, m, i, agrid)
            coeffs[(m, i)] = _project(fld, md, quad)
    shape = quad.r.shape
    terms = []
    for i in range(0 if k == 0 else 1, i_max + 1):
        if i == 0:
            w0 = coeffs[(0, 0)]
            comps = [(w0[0].reshape(shape), w0[1].reshape(shape))]
            terms.append(eval_phi0i(0, quad, comps))
            continue
        comps = []
        for m in (0, 2, 4):
            a, b = coeffs.get((m, i), (zero, zero))
            comps.append((a.reshape(shape), b.reshape(shape)))
        terms.append(eval_phi0i(i, quad, comps, lam=eigenvalue(k, i)))
    phik = eval_phik(k, v0, v2, v4, quad, agrid)
    partial = math.pi * sum(terms)
    return ProjectionResult(k, i_max, coeffs, phik, partial, phik - partial,
                            math.pi * abs(terms[-1]) if terms else 0.0)


def translation_field(alpha, prof):
    """Frame coefficients of alpha . grad H.

    w0 = u' (alpha . n), w1 = (u/r)(alpha . p), w2 = (u/r)(alpha . m) with
    p = (sin phi, -cos phi, 0); e_z lives in k = 0 and e_x, e_y in k = 1.
    """
    ax, ay, az = (float(a) for a in alpha)
    du = profile_radial(prof, "du")
    uor = profile_radial(prof, "u_over_r")
    one = AngularFunction(0.0, 0.0, np.ones(1))
    cos = AngularFunction(0.0, 0.0, np.array([0.0, 1.0]))
    sin = AngularFunction(0.5, 0.5, np.ones(1))
    z = [None] * 5
    modes = {}
    if az:
        mu = [Field2D.separable(du, cos * az), None,
              Field2D.separable(uor, sin * -az), None, None]
        modes[0] = (mu, z)
    if ax or ay:
        mu = [Field2D.separable(du, sin * ax), Field2D.separable(uor, one * -ay),
              Field2D.separable(uor, cos * ax), None, None]
        nu = [Field2D.separable(du, sin * ay), Field2D.separable(uor, one * ax),
              Field2D.separable(uor, cos * ay), None, None]
        modes[1] = (mu, nu)
    return FrameField(modes)


def frame_matrices(theta, phi):
    """E_0 ... E_4 at a point as 3x3 arrays."""
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
    n = np.array([st * cp, st * sp, ct])
    m = np.array([ct * cp, ct * sp, -st])
    p = np.array([sp, -cp, 0.0])
    E0 = np.outer(n, n) - np.eye(3) / 3.0
    E1 = np.outer(n, p) + np.outer(p, n)
    E2 = np.outer(n, m) + np.outer(m, n)
    E3 = np.outer(m, p) + np.outer(p, m)
    E4 = np.outer(m, m) - np.outer(p, p)
    return [E0, E1, E2, E3, E4]


def dirichlet_energy(field, quad, agrid):
    """int |grad V|^2, the H1 seminorm used to normalize kernel checks."""
    total = 0.0
    for k, (mu, nu) in field.modes.items():
        val = q_mode(k, mu, nu if k else [None] * 5, quad, agrid, bulk=False)
        total += 2.0 * val if k == 0 else val
    return 2.0 * total


def _random_radial(rng):
    a = rng.uniform(0.1, 2.0)
    return bump_radial(a, a + rng.uniform(1.0, 6.0), rng.standard_normal(3))


def _span(rng, k, m, i_max, agrid):
    out = Field2D.zero()
    for i in range(first_index(k, m), i_max + 1):
        out = out + Field2D.separable(_random_radial(rng), mode(k, m, i, agrid).func)
    return out


def _smooth(rng, k):
    e = 0.5 * k + 1.0
    return Field2D.separable(_random_radial(rng), AngularFunction(e, e, rng.standard_normal(4)))


def random_v_block(rng, k, i_max=6, agrid=None):
    """A v-block whose triples are band-limited: (v0, v2, v4) and the reflected
    (v0~, v1~, v3~) lie in the angular spans up to i_max for k <= 2."""
    if k > 2:
        return ModeBlock(k, [_smooth(rng, k) for _ in range(5)], "v")
    agrid = agrid or AngularGrid(64)
    v0 = _span(rng, k, 0, i_max, agrid)
    v1 = _span(rng, k, 2, i_max, agrid).reflect()
    v2 = _span(rng, k, 2, i_max, agrid)
    v3 = -_span(rng, k, 4, i_max, agrid).reflect()
    v4 = _span(rng, k, 4, i_max, agrid)
    return ModeBlock(k, [v0, v1, v2, v3, v4], "v")


def random_field(rng, k_max=4, i_max=6, agrid=None):
    """A seeded band-limited FrameField with its generating v-blocks.

    For k >= 1 the two blocks are (mu0, nu1, mu2, nu3, mu4) and
    (-nu0, mu1, -nu2, mu3, -nu4); for k = 0 a single block is stored in mu.
    """
    modes, blocks = {}, {}
    for k in range(k_max + 1):
        if k == 0:
            blocks[0] = [random_v_block(rng, 0, i_max, agrid)]
            modes[0] = (change_vars(blocks[0][0]).fields, [None] * 5)
            continue
        blocks[k] = [random_v_block(rng, k, i_max, agrid) for _ in range(2)]
        a, b = (change_vars(v).fields for v in blocks[k])
        modes[k] = ([a[0], b[1], a[2], b[3], a[4]], [-b[0], a[1], -b[2], a[3], -b[4]])
    return FrameField(modes), blocks
