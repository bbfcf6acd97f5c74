"""Acceptance criteria 1-11.  Each test prints one PASS/FAIL line."""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from hedgehog import Params, RadialGrid, default_grid, solve_profile
from hedgehog.angular import AngularFunction, AngularGrid, eigenvalue, inner, mode, rayleigh
from hedgehog.errors import DegenerateMode
from hedgehog.model import rescale_params
from hedgehog.profile import ode_residual, verify_profile_bounds
from hedgehog.quadforms import assemble_phi0i, min_eigen, pwh_check, radial_quad
from hedgehog.reduction import (FrameField, ModeBlock, dirichlet_energy, field_quad,
                                fourier_split, mode_domination_check, qk_split_check,
                                random_field, random_v_block, theta_project)
from hedgehog.stability import (check_phi02_bounds, coercivity_polynomial, instability_witness,
                                kernel_check, kernel_cosine, mode_spectrum, richardson_ratio)


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(num, title):
        t0 = time.perf_counter()
        status = "FAIL"
        try:
            yield
            status = "PASS"
        finally:
            with capsys.disabled():
                print(f"\ncriterion {num:2d} {status}  {title}  ({time.perf_counter() - t0:.1f} s)")
    return run


def _solve(a2, b2=1.0, c2=1.0, n=8000):
    p = Params(a2, b2, c2)
    return solve_profile(p, default_grid(p, n))


def test_c01_profile_fidelity(criterion):
    with criterion(1, "profile fidelity at (0, 1, 1), N = 8000, R_max = 60"):
        t0 = time.perf_counter()
        prof = solve_profile(Params(0.0, 1.0, 1.0), RadialGrid.uniform(60.0, 8000))
        elapsed = time.perf_counter() - t0
        assert np.max(np.abs(ode_residual(prof.params, prof.grid, prof.u))) < 1e-8
        assert abs(prof.u[-1] - 0.5) < 1e-6
        assert np.all(np.diff(prof.u) > 0)
        w = prof.w[1:-1]
        assert np.all((w > 0) & (w < 2))
        assert elapsed < 10.0


def test_c02_profile_inequalities(criterion):
    with criterion(2, "six profile inequality families at a2 in {0.01, 0.1, 1, 10}"):
        t0 = time.perf_counter()
        for a2 in (0.01, 0.1, 1.0, 10.0):
            prof = _solve(a2)
            ref0 = solve_profile(Params(0.0, 1.0, 1.0), prof.grid)
            rep = verify_profile_bounds(prof, ref0, eps=1e-9)
            assert len(rep.checks) == 6
            assert rep.passed, (a2, rep.to_dict())
        assert time.perf_counter() - t0 < 60.0


def test_c03_angular_spectra(criterion):
    with criterion(3, "angular Rayleigh quotients, normalizations, zero modes"):
        G = AngularGrid(256)
        for k in (0, 1, 2):
            for m in (0, 2, 4):
                for i in range(1, 11):
                    if m == 4 and k < 2 and i == 1:
                        continue
                    md = mode(k, m, i, G)
                    lam = eigenvalue(k, i)
                    assert lam == (i * (i + 1) if k < 2 else (i + 1) * (i + 2))
                    assert abs(rayleigh(k, m, md) - lam) < 1e-6
                    want = {0: lam, 2: 1.0, 4: lam - 2.0}[m]
                    assert abs(inner(G, md.values, md.values) - want) < 1e-8
        for k in (0, 1):
            with pytest.raises(DegenerateMode):
                mode(k, 4, 1, G)


def test_c04_pwh(criterion):
    with criterion(4, "weighted Hardy equality and 100 perturbations"):
        lhs, rhs = pwh_check(2, AngularFunction(1.0, 1.0, np.ones(1)))
        assert abs(lhs - 32 / 5) < 1e-10 and abs(rhs - 32 / 5) < 1e-10
        rng = np.random.default_rng(0)
        for _ in range(100):
            c = 0.3 * rng.standard_normal(5)
            c[0] += 1.0
            lhs, rhs = pwh_check(2, AngularFunction(1.0, 1.0, c))
            assert lhs >= rhs - 1e-10


def _unit(fld, blocks, quad, ag):
    """Scale a seeded field and its blocks to unit Dirichlet energy."""
    c = 1.0 / math.sqrt(dirichlet_energy(fld, quad, ag))
    sc = lambda fs: [None if f is None else f * c for f in fs]
    modes = {k: (sc(mu), sc(nu)) for k, (mu, nu) in fld.modes.items()}
    blocks = {k: [ModeBlock(b.k, sc(b.fields), b.rep) for b in bs] for k, bs in blocks.items()}
    return FrameField(modes), blocks


def test_c05_decomposition_chain(criterion, prof_stable):
    with criterion(5, "phi split, Q_k split, theta projection, mode domination"):
        quad = field_quad(prof_stable, 400)
        ag = AngularGrid(32)
        rng = np.random.default_rng(2024)
        worst = dict(split=0.0, qk=0.0, proj=0.0, dom=math.inf)
        for _ in range(20):
            fld, blocks = _unit(*random_field(rng, 4, 6, ag), quad, ag)
            sr = fourier_split(fld, quad, ag)
            worst["split"] = max(worst["split"], sr.gap)
            for k, bs in blocks.items():
                for b in bs:
                    worst["qk"] = max(worst["qk"], abs(qk_split_check(b, quad, ag)[2]))
                    if k <= 2:
                        v = b.fields
                        pr = theta_project(k, v[0], v[2], v[4], 8, quad, ag)
                        worst["proj"] = max(worst["proj"], abs(pr.gap))
            for k in (3, 4):
                worst["dom"] = min(worst["dom"], mode_domination_check(k, *fld.modes[k], quad, ag)[2])
            a, b = random_v_block(rng, 5), random_v_block(rng, 5)
            worst["dom"] = min(worst["dom"], mode_domination_check(5, a.fields, b.fields, quad, ag)[2])
        assert worst["split"] < 1e-10, worst
        assert worst["qk"] < 1e-8, worst
        assert worst["proj"] < 1e-6, worst
        assert worst["dom"] >= -1e-9, worst


def test_c06_kernel(criterion, prof_stable):
    with criterion(6, "translation kernel"):
        pen = assemble_phi0i(1, prof_stable)
        res = min_eigen(pen)
        assert -1e-6 < res.mu_min < 1e-6
        assert kernel_cosine(pen, res.vector, prof_stable) > 1 - 1e-6
        rep = kernel_check(prof_stable, points=1000)
        assert max(abs(v) for v in rep.ratios.values()) < 1e-6, rep.ratios
        assert rep.pointwise_gap < 1e-10 and rep.frame_gap < 1e-10


def test_c07_stable_regime(criterion, prof_stable):
    with criterion(7, "stable regime at (0.05, 1, 1)"):
        rep = mode_spectrum(prof_stable.params, prof_stable, i_max=8)
        assert all(r.mu_min >= -1e-7 for r in rep.rows)
        assert rep.verdict == "stable-with-kernel"


def test_c08_unstable_regime(criterion, prof_unstable):
    with criterion(8, "instability witness and negative spectrum at (1, 0.01, 1)"):
        wit = instability_witness(prof_unstable.params, prof_unstable)
        assert wit.q3 < 0
        rep = mode_spectrum(prof_unstable.params, prof_unstable)
        assert rep.min_mu < 0 and rep.unstable


def test_c09_phi02_bounds(criterion, prof_small):
    with criterion(9, "Phi_{0,2} lower bounds on 100 triples at a2 = 0.01"):
        rep = check_phi02_bounds(prof_small, samples=100, seed=0, delta0=1e-3, eps=1e-9)
        assert set(rep.checks) == {"phi03_over_phi02", "w2_only", "w0_only", "w4_only",
                                   "combined", "uniaxial"}
        assert rep.passed, rep.to_dict()


def test_c10_coercivity_polynomial(criterion):
    with criterion(10, "coercivity polynomial, delta0 = 1/1000"):
        t0 = time.perf_counter()
        val, at = coercivity_polynomial(1e-3, 10 ** 6)
        assert val > 0 and 0 < at <= 2
        assert time.perf_counter() - t0 < 5.0


def test_c11_convergence_invariance(criterion, prof_stable):
    with criterion(11, "verdicts under N -> 2N and rescaling, Richardson ratios"):
        for a2 in (0.05, 1.0, 10.0):
            v = [mode_spectrum(Params(a2, 1.0, 1.0), _solve(a2, n=n)).verdict for n in (8000, 16000)]
            assert v[0] == v[1], (a2, v)
        p = Params(0.05, 1.0, 1.0)
        q = rescale_params(p, 2.0, 0.5)[0]
        assert (mode_spectrum(q, solve_profile(q)).verdict
                == mode_spectrum(p, prof_stable).verdict)
        fine = _solve(0.05, n=16000)
        for i in (0, 2, 3):
            mus = [min_eigen(assemble_phi0i(i, fine, quad=radial_quad(fine, n))).mu_min
                   for n in (2000, 4000, 8000)]
            assert richardson_ratio(mus) >= 3.5, (i, mus)
