import math

import numpy as np
import pytest

from hedgehog.angular import AngularFunction, AngularGrid, mode
from hedgehog.quadforms import Field2D, bump_radial, eval_phi0i
from hedgehog.reduction import (FrameField, ModeBlock, change_vars, dirichlet_energy, field_quad,
                                fourier_split, frame_matrices, mode_domination_check,
                                qk_split_check, random_field, random_v_block, theta_project,
                                translation_field)

AG = AngularGrid(48)
ONE = AngularFunction(0.0, 0.0, np.ones(1))
PTS_R = np.array([0.3, 1.1, 2.5])
PTS_T = np.array([0.4, 1.3, 2.9])


@pytest.fixture(scope="module")
def quad(prof_stable):
    return field_quad(prof_stable, 600)


def _sep(a, b, co, alpha, cs):
    return Field2D.separable(bump_radial(a, b, co), AngularFunction(alpha, alpha, np.array(cs)))


def _vals(fld):
    return fld.at_points(PTS_R, PTS_T)[0]


def test_change_vars_examples():
    g = bump_radial(1.0, 2.0)
    z = Field2D.zero()
    xi = ModeBlock(0, [Field2D.separable(g, ONE) * 2.0, z, z, z, z])
    v = change_vars(xi)
    assert v.rep == "v"
    assert np.allclose(_vals(v.fields[0]), _vals(Field2D.separable(g, ONE)), rtol=0, atol=1e-15)
    one = Field2D.separable(g, ONE)
    v = change_vars(ModeBlock(0, [z, one, one, z, z]))
    assert np.allclose(_vals(v.fields[1]), _vals(one), atol=1e-15)
    assert v.fields[2].is_zero() or np.all(_vals(v.fields[2]) == 0)


def test_change_vars_roundtrip():
    rng = np.random.default_rng(0)
    b = random_v_block(rng, 3)
    back = change_vars(change_vars(b))
    assert back.rep == b.rep
    for x, y in zip(b.fields, back.fields):
        assert np.max(np.abs(_vals(x) - _vals(y))) <= 1e-15 * (1 + np.max(np.abs(_vals(x))))


def test_bad_rep():
    with pytest.raises(ValueError):
        ModeBlock(0, [None] * 5, "w")


def test_nu_must_vanish_for_k0():
    with pytest.raises(ValueError):
        FrameField({0: ([None] * 5, [_sep(1, 2, [1], 1, [1])] + [None] * 4)})


def test_split_single_mode(quad):
    fld = FrameField({2: ([_sep(0.5, 3, [1, 0.2], 1, [1, 0.3])] + [None] * 4, [None] * 5)})
    res = fourier_split(fld, quad, AG)
    assert list(res.blocks) == [2]
    assert res.gap <= 1e-12 * (1 + abs(res.q_total))


def test_split_two_modes(quad):
    mu0 = [_sep(0.5, 3, [1], 0, [1, 0.5]), None, _sep(0.5, 2, [1], 0.5, [1]), None, None]
    mu2 = [None, _sep(1, 4, [0.5, 0.2], 1, [0.3]), None, None, _sep(0.7, 2.5, [1], 1, [1])]
    fld = FrameField({0: (mu0, [None] * 5), 2: (mu2, [None] * 5)})
    res = fourier_split(fld, quad, AG)
    assert res.gap < 1e-12 * (1 + abs(res.q_total))


def test_split_random(quad):
    fld, _ = random_field(np.random.default_rng(11), k_max=4, i_max=4, agrid=AG)
    res = fourier_split(fld, quad, AG)
    assert res.gap <= 1e-10 * (1 + abs(res.q_total))


def test_domination_zero(quad):
    assert mode_domination_check(3, [None] * 5, [None] * 5, quad, AG) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        mode_domination_check(2, [None] * 5, [None] * 5, quad, AG)


@pytest.mark.parametrize("k", [3, 4, 5])
def test_domination_random(quad, k):
    rng = np.random.default_rng(k)
    for _ in range(3):
        a, b = random_v_block(rng, k), random_v_block(rng, k)
        _, _, margin = mode_domination_check(k, a.fields, b.fields, quad, AG)
        assert margin >= -1e-9


def test_qk_split_zero(quad):
    qk, split, gap = qk_split_check(ModeBlock(0, [None] * 5, "v"), quad, AG)
    assert (qk, split, gap) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_qk_split_random(quad, k):
    b = random_v_block(np.random.default_rng(20 + k), k, agrid=AG)
    qk, _, gap = qk_split_check(b, quad, AG)
    assert abs(gap) <= 1e-8 * (1 + abs(qk))


def test_qk_split_k2_v0_only(quad):
    z = Field2D.zero()
    v0 = _sep(0.5, 3, [1, 0.4], 1, [1, 0, 0.3])
    qk, _, gap = qk_split_check(ModeBlock(2, [v0, z, z, z, z], "v"), quad, AG)
    assert abs(gap) <= 1e-8 * (1 + abs(qk))


def test_project_pure_mode(quad):
    z = Field2D.zero()
    g = bump_radial(0.5, 4.0, (1.0, 0.3))
    v2 = Field2D.separable(g, mode(1, 2, 3, AG).func)
    res = theta_project(1, z, v2, z, 3, quad, AG)
    nz = [key for key, (a, _) in res.coeffs.items() if np.max(np.abs(a)) > 1e-12]
    assert nz == [(2, 3)]
    assert abs(res.gap) < 1e-8 * (1 + abs(res.phik))


def test_project_constant_mode(quad):
    z = Field2D.zero()
    g = bump_radial(0.5, 3.0)
    res = theta_project(0, Field2D.separable(g, ONE), z, z, 2, quad, AG)
    a, da = res.coeffs[(0, 0)]
    gv, dg = g.at(quad)
    assert np.allclose(a, gv, atol=1e-14)
    phi00 = eval_phi0i(0, quad, [(gv.reshape(quad.r.shape), dg.reshape(quad.r.shape))])
    assert abs(res.partial_sum - math.pi * phi00) < 1e-10 * abs(res.partial_sum)
    assert abs(res.gap) < 1e-8 * abs(res.phik)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_project_random(quad, k):
    rng = np.random.default_rng(40 + k)
    b = random_v_block(rng, k, i_max=6, agrid=AG)
    res = theta_project(k, b.fields[0], b.fields[2], b.fields[4], 8, quad, AG)
    assert abs(res.gap) < 1e-6 * (1 + abs(res.phik))


def test_translation_zero(prof_stable):
    assert translation_field((0, 0, 0), prof_stable).modes == {}


def test_translation_ez(prof_stable):
    fld = translation_field((0, 0, 1), prof_stable)
    r, th = np.array([0.7, 2.0]), np.array([0.3, 2.2])
    W = fld.components(r, th, np.zeros(2))[0]
    u, du, _ = prof_stable.eval(r)
    assert np.allclose(W[0], du * np.cos(th), atol=1e-14)
    assert np.allclose(W[2], -u / r * np.sin(th), atol=1e-14)
    assert np.allclose(W[[1, 3, 4]], 0)


def _H(prof, x):
    rr = np.linalg.norm(x)
    n = x / rr
    return prof.eval(np.array([rr]))[0][0] * (np.outer(n, n) - np.eye(3) / 3)


@pytest.mark.parametrize("alpha", [(0, 0, 1), (1, 0, 0), (0.3, -0.8, 0.5)])
def test_translation_matches_gradient(prof_stable, alpha):
    fld = translation_field(alpha, prof_stable)
    al = np.array(alpha, dtype=float)
    rng = np.random.default_rng(1)
    for _ in range(5):
        r, th, ph = rng.uniform(0.5, 3), rng.uniform(0.2, 2.9), rng.uniform(0, 2 * np.pi)
        W = fld.components(np.array([r]), np.array([th]), np.array([ph]))[0][:, 0]
        E = frame_matrices(th, ph)
        V = sum(W[j] * E[j] for j in range(5))
        x = r * np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        h = 1e-5
        fd = (_H(prof_stable, x + h * al) - _H(prof_stable, x - h * al)) / (2 * h)
        assert np.max(np.abs(V - fd)) < 1e-7
        u, du, _ = prof_stable.eval(np.array([r]))
        ax = al @ x
        want = 2 * ax ** 2 / (3 * r ** 2) * du[0] ** 2 + 2 * u[0] ** 2 * (al @ al * r ** 2 - ax ** 2) / r ** 4
        assert abs(np.sum(V * V) - want) < 1e-12 * (1 + want)


@pytest.mark.parametrize("alpha", [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
def test_translation_kernel(prof_stable, alpha):
    from hedgehog.quadforms import eval_Q
    quad = field_quad(prof_stable, 4000)
    fld = translation_field(alpha, prof_stable)
    q = eval_Q(fld, quad, AG)
    assert abs(q) / dirichlet_energy(fld, quad, AG) < 1e-6


def test_frame_relations():
    th, ph, h = 0.8, 1.9, 1e-6
    E = frame_matrices(th, ph)
    Ep, Em = frame_matrices(th + h, ph), frame_matrices(th - h, ph)
    dth = [(a - b) / (2 * h) for a, b in zip(Ep, Em)]
    for got, want in zip(dth, [E[2], E[3], E[4] - 3 * E[0], -E[1], -E[2]]):
        assert np.allclose(got, want, atol=1e-8)
    dph = (frame_matrices(th, ph + h)[0] - frame_matrices(th, ph - h)[0]) / (2 * h)
    assert np.allclose(dph, -math.sin(th) * E[1], atol=1e-8)
    for a in range(5):
        for b in range(5):
            ip = np.sum(E[a] * E[b])
            want = (2 / 3 if a == 0 else 2.0) if a == b else 0.0
            assert abs(ip - want) < 1e-14
        assert abs(np.trace(E[a])) < 1e-15 and np.allclose(E[a], E[a].T)
