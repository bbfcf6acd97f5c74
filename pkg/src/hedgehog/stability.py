"""Stability scans, the critical a2, the Q_3 witness and the coercivity bounds."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from .angular import AngularFunction, AngularGrid
from .errors import NoSignChange
from .model import Params, s_plus
from .profile import default_grid, solve_profile
from .quadforms import (Field2D, IntervalQuad, RadialFn, assemble_phi0i, bump_radial,
                        eval_phi0i, eval_Qi_axisym, min_eigen, phi0i_lambda,
                        product_radial, profile_radial, q3_reduced, radial_quad)
from .reduction import (dirichlet_energy, field_quad, frame_matrices,
                        q_full, translation_field)

TOL = 1e-7


# ---------------------------------------------------------------- spectrum

@dataclass
class ModeRow:
    i: int
    lam: float
    mu_min: float
    residual: float


@dataclass
class StabilityReport:
    params: Params
    rows: list
    verdict: str
    unstable_index: int = None
    kernel_gap: float = math.nan
    kernel_cosine: float = math.nan
    mass: str = "natural"

    @property
    def min_mu(self):
        """Smallest mu_min away from the translation kernel (i = 1)."""
        return min(r.mu_min for r in self.rows if r.i != 1)

    @property
    def unstable(self):
        return self.verdict.startswith("unstable")

    def csv_rows(self):
        return [(self.params.a2, r.i, r.lam, r.mu_min, r.residual) for r in self.rows]

    def summary(self):
        return {"a2": self.params.a2, "b2": self.params.b2, "c2": self.params.c2,
                "verdict": self.verdict, "kernel_gap": self.kernel_gap,
                "kernel_cosine": self.kernel_cosine, "mass": self.mass}


def kernel_cosine(pencil, vector, prof):
    """B-cosine between a Phi_{0,1} vector and the nodal kernel (u', 2u/r)."""
    r = pencil.quad.r_nodes
    fin = np.isfinite(r) & (r > 0)
    u, du, _ = prof.eval(np.where(fin, r, 1.0))
    two_u_r = np.where(fin, 2.0 * u / np.where(fin, r, 1.0), 0.0)
    k = pencil.pack([np.where(fin, du, 0.0), two_u_r])
    num = abs(vector @ (pencil.B @ k))
    return num / math.sqrt(pencil.mass_of(vector) * pencil.mass_of(k))


def mode_spectrum(p, prof=None, i_max=8, tol=TOL, mass="natural"):
    if i_max < 4:
        raise ValueError("i_max must be at least 4")
    prof = prof if prof is not None else solve_profile(p)
    rows = []
    cosine = math.nan
    for i in range(i_max + 1):
        pen = assemble_phi0i(i, prof, mass)
        res = min_eigen(pen)
        lam = phi0i_lambda(i)
        rows.append(ModeRow(i, 0.0 if lam is None else lam, res.mu_min, res.residual))
        if i == 1:
            cosine = kernel_cosine(pen, res.vector, prof)
    negative = [r for r in rows if r.i != 1 and r.mu_min < -tol]
    kernel = rows[1]
    if negative:
        worst = min(negative, key=lambda r: r.mu_min)
        verdict, idx = f"unstable({worst.i})", worst.i
    elif abs(kernel.mu_min) <= 1e-6 and cosine > 1.0 - 1e-6:
        verdict, idx = "stable-with-kernel", None
    else:
        verdict, idx = "indeterminate", None
    return StabilityReport(p, rows, verdict, idx, kernel.mu_min, cosine, mass)


def richardson_ratio(values):
    """(x_N - x_2N) / (x_2N - x_4N) for a sequence on grids N, 2N, 4N."""
    a, b, c = values
    return (a - b) / (b - c)


# ---------------------------------------------------------------- critical a2

@dataclass
class CriticalResult:
    a2: float
    bracket: tuple
    lower: StabilityReport
    upper: StabilityReport
    evaluations: int


def critical_a2(b2, c2, bracket=(0.05, 50.0), n=8000, i_max=8, rtol=1e-3, tol=TOL):
    """Bisect in log a2 on the stable/unstable verdict of the discretized spectrum."""

    def classify(a2):
        p = Params(a2, b2, c2)
        return mode_spectrum(p, solve_profile(p, default_grid(p, n)), i_max, tol)

    lo, hi = (float(x) for x in bracket)
    rep_lo, rep_hi = classify(lo), classify(hi)
    if rep_lo.unstable == rep_hi.unstable:
        raise NoSignChange(f"verdicts agree at a2 = {lo} and {hi}", (rep_lo, rep_hi))
    evals = 2
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        rep = classify(mid)
        evals += 1
        if rep.unstable == rep_lo.unstable:
            lo, rep_lo = mid, rep
        else:
            hi, rep_hi = mid, rep
    return CriticalResult(0.5 * (lo + hi), (lo, hi), rep_lo, rep_hi, evals)


# ---------------------------------------------------------------- Q_3 witness

def cutoff_psi(r, R, n):
    """1/R - 1/r on (R, m), 1/r - 1/(nR) on (m, nR), zero elsewhere; m = 2nR/(n+1)."""
    r = np.asarray(r, dtype=float)
    m = 2.0 * n * R / (n + 1.0)
    with np.errstate(divide="ignore"):
        out = np.where(r < m, 1.0 / R - 1.0 / r, 1.0 / r - 1.0 / (n * R))
    return np.where((r > R) & (r < n * R), out, 0.0)


def mollified_psi(R, n, width, per_width=16):
    """The cut-off profile smoothed by a standard bump of radius ``width``."""
    h = width / per_width
    a, b = R - 2.0 * width, n * R + 2.0 * width
    r = np.arange(a, b + h, h)
    s = np.arange(-per_width, per_width + 1) * h
    with np.errstate(divide="ignore", over="ignore"):
        ker = np.where(np.abs(s) < width, np.exp(-1.0 / (1.0 - (s / width) ** 2)), 0.0)
    ker /= ker.sum()
    vals = fftconvolve(cutoff_psi(r, R, n), ker, mode="same")
    vals[np.abs(vals) < 1e-300] = 0.0
    spl = CubicSpline(r, vals, bc_type="clamped")
    dspl = spl.derivative()

    def fn(x):
        inside = (x > a) & (x < b)
        xx = np.where(inside, x, a)
        return np.where(inside, spl(xx), 0.0), np.where(inside, dspl(xx), 0.0)

    return RadialFn(fn, f"psi({R:g},{n:g})")


def witness_quad(prof, R, n, width, elements=4000, order=4):
    """Graded elements over the support, refined around the three kinks."""
    lo, hi = R - 2.0 * width, n * R + 2.0 * width
    m = 2.0 * n * R / (n + 1.0)
    parts = [np.geomspace(lo, hi, elements + 1)]
    for c in (R, m, n * R):
        parts.append(np.linspace(c - 1.5 * width, c + 1.5 * width, 49))
    edges = np.unique(np.concatenate(parts))
    return IntervalQuad(prof, edges[(edges >= lo) & (edges <= hi)], order)


@dataclass
class WitnessResult:
    R: float
    n: float
    width: float
    q3: float
    q3_axisym: float
    params: Params
    candidates: list = field(default_factory=list)

    @property
    def gap(self):
        return abs(self.q3 - self.q3_axisym)

    def profile(self, r):
        """The mollified angular-free factor at radii r."""
        return mollified_psi(self.R, self.n, self.width)(np.asarray(r, dtype=float))[0]

    def to_dict(self):
        return {"R": self.R, "n": self.n, "width": self.width, "Q3": self.q3,
                "Q3_axisym": self.q3_axisym, "a2": self.params.a2,
                "b2": self.params.b2, "c2": self.params.c2}


DEFAULT_R = tuple(float(x) for x in np.geomspace(0.05, 40.0, 10))
DEFAULT_N = (4.0, 10.0, 30.0, 100.0, 300.0, 700.0, 1000.0)


def witness_value(prof, R, n, width=None):
    """Q_3(u psi sin^2) through the reduced integral, with its quadrature."""
    width = R / 20.0 if width is None else width
    quad = witness_quad(prof, R, n, width)
    g = product_radial(profile_radial(prof, "u"), mollified_psi(R, n, width))
    return q3_reduced(quad, g), g, quad


def instability_witness(p, prof=None, R_list=DEFAULT_R, n_list=DEFAULT_N, widths=None):
    """Minimize Q_3 over the cut-off family; the best value is cross-checked
    against the axisymmetric form evaluated on the same quadrature."""
    prof = prof if prof is not None else solve_profile(p)
    cands = []
    for R in R_list:
        for n in n_list:
            for wd in (widths or (R / 20.0,)):
                val = witness_value(prof, R, n, wd)[0]
                cands.append((val, float(R), float(n), float(wd)))
    best = min(cands)
    val, g, quad = witness_value(prof, best[1], best[2], best[3])
    sin2 = AngularFunction(1.0, 1.0, np.ones(1))
    check = eval_Qi_axisym(3, Field2D.separable(g, sin2), quad, AngularGrid(8))
    return WitnessResult(best[1], best[2], best[3], val, check, p,
                         [dict(Q3=c[0], R=c[1], n=c[2], width=c[3]) for c in cands])


# ---------------------------------------------------------------- Phi_{0,2} lower bounds

def coercivity_polynomial(delta0, points=10 ** 6):
    """min over (0, 2] of P(w) = g(w) w^2 (alpha_1(w) - delta0)."""
    w = np.linspace(0.0, 2.0, points + 1)[1:]
    d = delta0
    A = 8.0 * w ** 2 - (44.0 / 9.0 + d) * w + 24.0                      # w (alpha_1 - d)
    G = 6.0 * w ** 2 * (2.0 - w) * (2.0 * w + 3.0) - (43.0 + d) * w + 119.99  # w (gamma_1 - d)
    Bm = 4.0 * w + 2.0 - d
    P = (Bm * A - 144.0 * w) * G - 64.0 * w * A
    k = int(np.argmin(P))
    return float(P[k]), float(w[k])


@dataclass
class BoundCheck:
    name: str
    worst: float = math.inf
    worst_sample: int = -1
    violations: list = field(default_factory=list)

    def record(self, idx, lhs, rhs, eps):
        margin = float((lhs - rhs) / (1.0 + abs(lhs)))
        if margin < self.worst:
            self.worst, self.worst_sample = margin, idx
        if margin < -eps:
            self.violations.append((idx, lhs, rhs))

    @property
    def passed(self):
        return not self.violations


@dataclass
class BoundReport:
    params: Params
    samples: int
    seed: int
    alpha: float
    delta0: float
    checks: dict

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values())

    def to_dict(self):
        return {name: {"worst_margin": c.worst, "worst_sample": c.worst_sample,
                       "violations": len(c.violations)} for name, c in self.checks.items()}


def random_triple(rng, rmin=0.02, rmax=6.0):
    """Three smooth bumps with random supports and polynomial factors."""
    out = []
    for _ in range(3):
        a = rng.uniform(rmin, rmax)
        b = a + rng.uniform(0.3, 8.0)
        out.append(bump_radial(a, b, rng.standard_normal(3)))
    return out


def check_phi02_bounds(prof, samples=100, seed=0, ref0=None, delta0=1e-3, eps=1e-9):
    """Certify the Phi_{0,2} lower bounds on random compactly supported triples.

    alpha = u0''(0) / (4 s+) uses the a2 = 0 reference profile.
    """
    p = prof.params
    if ref0 is None:
        ref0 = solve_profile(Params(0.0, p.b2, p.c2))
    alpha = ref0.u2pp0 / (4.0 * s_plus(p))
    quad = radial_quad(prof)
    shape = quad.r.shape
    r, wr = quad.r, quad.w
    w = r * quad.du / quad.u
    r2 = r ** 2
    lam2, lam3 = phi0i_lambda(2), phi0i_lambda(3)
    names = ("phi03_over_phi02", "w2_only", "w0_only", "w4_only", "combined", "uniaxial")
    checks = {n: BoundCheck(n) for n in names}
    rng = np.random.default_rng(seed)

    def integ(c, v):
        return float(np.sum(wr * c * v ** 2))

    for s in range(samples):
        comps = []
        for g in random_triple(rng):
            v, dv = g.at(quad)
            v, dv = v.reshape(shape), dv.reshape(shape)
            scale = math.sqrt(integ(1.0, v)) or 1.0
            comps.append((v / scale, dv / scale))
        (w0, d0), (w2, d2), (w4, d4) = comps
        zero = (np.zeros(shape), np.zeros(shape))

        def phi2(c):
            return eval_phi0i(2, quad, c, lam2)

        full = phi2(comps)
        a0, a4 = math.sqrt(2.0), math.sqrt(10.0) / 2.0
        checks["phi03_over_phi02"].record(s, eval_phi0i(3, quad, comps, lam3),
                                   phi2([(a0 * w0, a0 * d0), (w2, d2), (a4 * w4, a4 * d4)]), eps)
        checks["w2_only"].record(s, phi2([zero, (w2, d2), zero]), integ(4.0 * w + 2.0, w2), eps)
        checks["w0_only"].record(s, phi2([(w0, d0), zero, zero]),
                                   integ(8.0 * w - 44.0 / 9.0 + 24.0 / w, w0), eps)
        lower_w4 = (integ(-43.0 + 120.0 / w + 6.0 * (2.0 - w) * (2.0 * w + 3.0), w4)
                   + 4.0 * integ((quad.ft - 2.5 * quad.fh + 6.0 * quad.f) * r2, w4))
        checks["w4_only"].record(s, phi2([zero, zero, (w4, d4)]), lower_w4, eps)
        combined = (delta0 * (integ(1.0, w0) + integ(1.0, w2) + integ(1.0, w4))
                    + (alpha / 100.0 - 22.0 * p.a2) * integ(r2, w4))
        checks["combined"].record(s, full, combined, eps)
        checks["uniaxial"].record(s, phi2([(w0, d0), (w2, d2), zero]), 0.0, eps)
    return BoundReport(p, samples, seed, alpha, delta0, checks)


# ---------------------------------------------------------------- kernel

@dataclass
class KernelReport:
    ratios: dict
    pointwise_gap: float
    frame_gap: float

    @property
    def passed(self):
        return (max(abs(v) for v in self.ratios.values()) < 1e-6
                and self.pointwise_gap < 1e-10 and self.frame_gap < 1e-10)


def grad_H_cartesian(alpha, x, prof):
    """alpha . grad H at a point as an explicit 3x3 matrix."""
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    r = np.linalg.norm(x)
    u, du, _ = (float(v) for v in prof.eval(np.array(r)))
    ax = alpha @ x
    return ((du - 2.0 * u / r) * ax * np.outer(x, x) / r ** 3 - du * ax * np.eye(3) / (3.0 * r)
            + u / r ** 2 * (np.outer(alpha, x) + np.outer(x, alpha)))


def grad_H_norm2(alpha, x, prof):
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    r2 = x @ x
    u, du, _ = (float(v) for v in prof.eval(np.array(math.sqrt(r2))))
    ax = alpha @ x
    return 2.0 * ax ** 2 * du ** 2 / (3.0 * r2) + 2.0 * u ** 2 * (alpha @ alpha * r2 - ax ** 2) / r2 ** 2


def kernel_check(prof, points=1000, seed=0, agrid=None):
    """Q of the three translation fields, and the pointwise algebra at random points."""
    quad = field_quad(prof)
    agrid = agrid or AngularGrid(32)
    ratios = {}
    for name, a in (("x", (1, 0, 0)), ("y", (0, 1, 0)), ("z", (0, 0, 1))):
        fld = translation_field(a, prof)
        ratios[name] = q_full(fld, quad, agrid) / dirichlet_energy(fld, quad, agrid)
    rng = np.random.default_rng(seed)
    pgap = fgap = 0.0
    for _ in range(points):
        a = rng.standard_normal(3)
        x = rng.standard_normal(3) * rng.uniform(0.1, 5.0)
        M = grad_H_cartesian(a, x, prof)
        nrm = np.sum(M * M)
        pgap = max(pgap, abs(nrm - grad_H_norm2(a, x, prof)) / max(nrm, 1e-300))
        r = np.linalg.norm(x)
        th, ph = math.acos(x[2] / r), math.atan2(x[1], x[0])
        W = translation_field(a, prof).components(np.array(r), np.array(th), np.array(ph))[0]
        E = frame_matrices(th, ph)
        rec = sum(float(W[j]) * E[j] for j in range(5))
        fgap = max(fgap, np.max(np.abs(rec - M)) / max(np.max(np.abs(M)), 1e-300))
    return KernelReport(ratios, pgap, fgap)
