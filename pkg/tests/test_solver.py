import math

import numpy as np
import pytest
from scipy.optimize import brentq

from minklog import (
    DirectionSet,
    DiscreteMeasure,
    GGParams,
    HemisphereConcentrationError,
    ParameterDomainError,
    SolveConfig,
    SupportVector,
    VariationalDomainError,
    ball_radius_for_volume,
    entropy,
    entropy_bound_check,
    euler_lagrange_residual,
    gg_cone_measure,
    gg_volume,
    hausdorff_distance,
    rescale_to_constraint,
    solve,
    wulff_shape,
)
from minklog.solver import CONSTRAINT_TOL

from conftest import manufactured_problem, param_grid, random_body, regular_polygon, square

GAUSS2 = GGParams(0.0, 2.0, 2)


def uniform(dirs):
    return DiscreteMeasure(dirs, np.ones(len(dirs)))


# -- entropy ------------------------------------------------------------------------


def test_entropy_examples():
    sv = square()
    mu = DiscreteMeasure(sv.dirs, [1.0, 2.0, 3.0, 4.0])
    assert entropy(mu, sv) == 0.0
    assert entropy(mu, sv.scaled(math.e)) == pytest.approx(10.0, rel=1e-15)
    assert entropy(mu, sv.with_h([1, 1, 2, 2])) == pytest.approx(7 * math.log(2), rel=1e-15)


def test_entropy_effective_uses_projection():
    u = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [math.sqrt(0.5), math.sqrt(0.5)]])
    sv = SupportVector(DirectionSet(u), [1, 1, 1, 1, 2.0])
    mu = uniform(sv.dirs)
    assert entropy(mu, sv, effective=True) == pytest.approx(0.5 * math.log(2))
    assert entropy(mu, sv, effective=True) < entropy(mu, sv)


# -- rescaling ----------------------------------------------------------------------


def test_rescale_examples():
    sv = regular_polygon(64, 0.7)
    s = rescale_to_constraint(sv, GAUSS2, 0.8)
    r = ball_radius_for_volume(0.8, GAUSS2)
    # the 64-gon at h = r sits between the discs of radius r and r / cos(pi/64)
    assert r * math.cos(math.pi / 64) <= s * 0.7 <= r
    body = sv.scaled(s)
    assert gg_volume(wulff_shape(body), GAUSS2) == pytest.approx(0.8, abs=1e-11)
    assert rescale_to_constraint(body, GAUSS2, 0.8) == pytest.approx(1.0, abs=1e-10)
    assert rescale_to_constraint(sv.scaled(2.0), GAUSS2, 0.8) == pytest.approx(s / 2, rel=1e-10)


def test_rescale_requires_variational():
    with pytest.raises(VariationalDomainError):
        rescale_to_constraint(square(), GGParams(0.4, 1.0, 2), 0.8)


# -- Euler-Lagrange residual ----------------------------------------------------------


def test_residual_zero_for_own_cone_measure(rng):
    sv = random_body(2, 9, rng)
    mu = DiscreteMeasure(sv.dirs, gg_cone_measure(wulff_shape(sv), GAUSS2).values)
    assert euler_lagrange_residual(sv, mu, GAUSS2) <= 1e-12


def test_residual_positive_and_scale_invariant():
    sv = regular_polygon(6)
    mu = DiscreteMeasure(sv.dirs, [1, 2, 1, 2, 1, 2])
    res = euler_lagrange_residual(sv, mu, GAUSS2)
    # uniform G against weights 1/9, 2/9
    assert res == pytest.approx(1 / 6 - 1 / 9, rel=1e-9)
    scaled = DiscreteMeasure(sv.dirs, 7.5 * mu.weights)
    assert euler_lagrange_residual(sv, scaled, GAUSS2) == pytest.approx(res, abs=1e-15)


# -- entropy lower bound ----------------------------------------------------------------


def test_bound_ball_like():
    sv = regular_polygon(64, 1.3)
    mu = uniform(sv.dirs)
    b = entropy_bound_check(sv, mu)
    assert b.lhs == pytest.approx(math.log(1.3), rel=1e-14)
    assert b.holds and b.C_tilde < 0
    assert b.rhs <= math.log(1.3) + b.C * math.log(1 / math.cos(math.pi / 64)) + 1e-15


def test_bound_elongated_body():
    sv = square([100.0, 1.0, 100.0, 1.0])
    b = entropy_bound_check(sv, uniform(sv.dirs))
    assert b.alpha0 == 0.9
    # four equally far corners: v0 points along +-e1 up to the 1/100 aspect tilt
    assert abs(np.dot(b.v0, [1.0, 0.0])) > 0.9999
    assert b.holds and b.lhs - b.rhs > 0.1


# -- solve ----------------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ParameterDomainError):
        SolveConfig(kappa0=0.7)
    with pytest.raises(ParameterDomainError):
        SolveConfig(kappa0=1.0)
    SolveConfig(kappa0=0.7, allow_small_kappa=True)
    with pytest.raises(ParameterDomainError):
        SolveConfig(el_tol=0.0)
    cfg = SolveConfig().resolved(3)
    assert cfg.el_tol == 1e-5 and cfg.quad is not None
    assert SolveConfig().resolved(2).el_tol == 1e-8


def test_regular_12gon():
    dirs = DirectionSet.regular_polygon(12)
    rep = solve(uniform(dirs), GAUSS2, SolveConfig(kappa0=0.8))
    h_ref = brentq(lambda h: gg_volume(wulff_shape(regular_polygon(12, h)), GAUSS2) - 0.8, 0.5, 3.0, xtol=1e-15)
    assert rep.converged
    assert np.max(np.abs(rep.h_star.h - h_ref)) <= 1e-8
    assert rep.el_residual < 1e-10
    assert rep.gamma > 0.5


def test_heptagon_self_consistency(rng):
    sv, mu = manufactured_problem(GAUSS2, 7, rng)
    rep = solve(mu, GAUSS2)
    assert rep.converged and rep.el_residual <= 1e-8
    assert hausdorff_distance(rep.h_star, sv) < 1e-5


def test_hemisphere_rejected():
    dirs = DirectionSet.from_angles(np.linspace(-math.pi / 2, math.pi / 2, 5))
    with pytest.raises(HemisphereConcentrationError) as exc:
        solve(uniform(dirs), GAUSS2)
    assert np.all(dirs.vectors @ np.array(exc.value.direction) >= -1e-12)


def test_variational_domain_rejected():
    with pytest.raises(VariationalDomainError):
        solve(uniform(square().dirs), GGParams(0.4, 1.0, 2))


def test_dimension_mismatch():
    with pytest.raises(ParameterDomainError):
        solve(uniform(square().dirs), GGParams(0.0, 2.0, 3))


def check_trace(rep, kappa0=0.8):
    ent = [t.entropy for t in rep.trace]
    assert all(abs(t.gamma - kappa0) <= CONSTRAINT_TOL for t in rep.trace)
    assert all(np.diff(ent) < 0)
    assert all(t.bound_holds for t in rep.trace)
    assert min(t.min_h for t in rep.trace) >= 1e-6


@pytest.mark.parametrize("params", param_grid(2)[::2], ids=lambda p: f"b{p.b}_m{p.m}")
def test_random_measure_trace_invariants(params, rng):
    dirs = random_body(2, 11, rng).dirs
    mu = DiscreteMeasure(dirs, rng.uniform(0.1, 1.0, len(dirs)))
    rep = solve(mu, params)
    assert rep.converged and rep.el_residual <= 1e-8
    check_trace(rep)
    assert rep.gamma > 0.5


def test_random_measure_3d(rng):
    params = GGParams(0.0, 2.0, 3)
    dirs = random_body(3, 14, rng).dirs
    mu = DiscreteMeasure(dirs, rng.uniform(0.1, 1.0, len(dirs)))
    rep = solve(mu, params)
    assert rep.converged and rep.el_residual <= 1e-5
    check_trace(rep)


def test_gradient_direction_rule(rng):
    dirs = random_body(2, 8, rng).dirs
    mu = DiscreteMeasure(dirs, rng.uniform(0.5, 1.0, len(dirs)))
    rep = solve(mu, GAUSS2, SolveConfig(direction="gradient", el_tol=1e-6))
    assert rep.converged
    check_trace(rep)


def test_max_iters_status(rng):
    dirs = random_body(2, 8, rng).dirs
    mu = DiscreteMeasure(dirs, rng.uniform(0.1, 1.0, len(dirs)))
    rep = solve(mu, GAUSS2, SolveConfig(max_iters=0))
    assert rep.status == "max_iters" and not rep.converged
    assert rep.iterations == 0 and len(rep.trace) == 1


def test_residual_rotation_equivariance(rng):
    dirs = random_body(2, 9, rng).dirs
    mu = DiscreteMeasure(dirs, rng.uniform(0.1, 1.0, len(dirs)))
    rep = solve(mu, GAUSS2, SolveConfig(el_tol=1e-6))
    t = rng.uniform(0, 2 * math.pi)
    R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    rdirs = dirs.rotated(R)
    rmu = DiscreteMeasure(rdirs, mu.weights)
    body = SupportVector(rdirs, rep.h_star.h)
    assert euler_lagrange_residual(body, rmu, GAUSS2) == pytest.approx(rep.el_residual, abs=1e-8)


def test_small_kappa_override(rng):
    dirs = random_body(2, 8, rng).dirs
    mu = DiscreteMeasure(dirs, rng.uniform(0.1, 1.0, len(dirs)))
    rep = solve(mu, GAUSS2, SolveConfig(kappa0=0.6, allow_small_kappa=True))
    assert rep.converged
    check_trace(rep, kappa0=0.6)
