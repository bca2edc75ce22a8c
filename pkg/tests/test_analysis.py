import json
import math

import numpy as np
import pytest

from lyapboussinesq.analysis import (consistency_study, constant_family, convergence_study,
                                     deviation_rates, operator_report, oracle_crosscheck,
                                     positive_root, stability_probe, stability_report,
                                     theoretical_eta, truncation_residual, zero_family)
from lyapboussinesq.errors import ProfileError
from lyapboussinesq.grid import build_grid
from lyapboussinesq.operators import build_matrices, coefficient_set
from lyapboussinesq.profiles import affine, constant, cosine, cosine_decay, zero
from lyapboussinesq.solver import SolverOptions


def test_truncation_needs_exact(grid8):
    with pytest.raises(ProfileError):
        truncation_residual(cosine(), grid8, build_matrices(grid8), 0.0)


@pytest.mark.parametrize("profile", [constant(0.4), affine(1.0, -2.0, 0.5)])
def test_polynomial_profiles_have_zero_defect(profile):
    study = consistency_study(profile, build_grid(0, 1, 8), levels=2)
    assert study.exact_zero
    assert all(lv.residual_eq1 <= 1e-9 and lv.residual_eq2 <= 1e-9 for lv in study.levels)


def test_consistency_ratios_near_four():
    study = consistency_study(cosine_decay(), build_grid(0, 1, 8), levels=3)
    for key in ("eq1", "eq2"):
        assert all(3.2 <= r <= 4.8 for r in study.ratios[key])


def test_convergence_zero_and_constant():
    base = build_grid(0, 1, 4)
    assert convergence_study(zero(), base).exact_zero
    assert convergence_study(constant(0.2), base, right_transpose=True).exact_zero


def test_convergence_cosine_positive_order():
    study = convergence_study(cosine(), build_grid(0, 1, 8), right_transpose=True)
    assert study.orders["solution"][0] > 0
    assert len(study.levels) == 3 and study.levels[-1].J == 32


def test_convergence_rejects_fractional_ratio():
    with pytest.raises(ValueError, match="not an integer"):
        convergence_study(cosine(), build_grid(0, 1, 4, s=0.3))


def test_positive_root():
    assert positive_root(1.0, 0.0, -4.0) == pytest.approx(2.0)
    assert positive_root(1.0, 1.0, 0.0) is None
    # tiny c: the stable form keeps full relative accuracy
    assert positive_root(1.0, 1e8, -1.0) == pytest.approx(1e-8, rel=1e-12)


def test_eta_closed_form():
    c = coefficient_set(0.25, 0.0, 100.0)
    eta = theoretical_eta(1.0, 0.0, 0.0, c, 0.1)
    assert eta.eta1 == pytest.approx((math.sqrt(393) - 19) / 16, rel=1e-14)
    assert eta.eps1 == pytest.approx(eta.eta1, rel=1e-14)
    assert not eta.degenerate
    for value in eta.back_substitution.values():
        assert abs(value) <= 1e-10


def test_eta_degenerate_when_phi_dominates():
    c = coefficient_set(0.25, 1e-4, 100.0)
    eta = theoretical_eta(1e-3, 0.01, 10.0, c, 0.1)
    assert "eta1_prime" in eta.degenerate and eta.eta1_prime == 0.0
    with pytest.raises(ValueError):
        theoretical_eta(0.0, 0.0, 0.0, c, 0.1)


def test_operator_report_explicit_weight():
    g = build_grid(0, 1, 8, 0.0)
    rep = operator_report(g, build_matrices(g), samples=10, seed=1)
    p = rep.payload
    assert p["lyapunov_deviation"] == 0.0
    assert p["lwa_min"] == pytest.approx(1.0) and p["lwa_max"] == pytest.approx(1.0)
    assert p["lwa_at_identity"] == pytest.approx(1.0)
    assert all(p["checks"].values())


def test_operator_report_reproducible():
    g = build_grid(0, 1, 8)
    m = build_matrices(g)
    a = operator_report(g, m, 20, 5, timestamp="x").to_json()
    b = operator_report(g, m, 20, 5, timestamp="x").to_json()
    assert a == b


def test_probe_zero_family_accepts_epsilon(grid8):
    res = stability_probe(grid8, build_matrices(grid8), SolverOptions(), 0.1, n_steps=3,
                          trials=2, family=zero_family())
    assert res.eta_found == 0.1


def test_probe_constant_family():
    g = build_grid(0, 1, 8)
    m = build_matrices(g, True)
    res = stability_probe(g, m, SolverOptions(right_transpose=True), 0.5, n_steps=5,
                          trials=1, family=constant_family())
    # a constant c has pair norm max(c, c^2) = c below one and stays put; the
    # rescaled start can land an ulp above epsilon, so the probe stops just short
    assert 0.499 <= res.eta_found <= 0.5
    assert all(e["accepted"] for e in res.log if e["amplitude"] == res.eta_found)
    rep = json.loads(stability_report(res, g, 0, "t").to_json())
    assert rep["payload"]["finite_horizon_only"] is True


def test_probe_cosine_log_is_checkable():
    g = build_grid(0, 1, 8)
    m = build_matrices(g, True)
    res = stability_probe(g, m, SolverOptions(right_transpose=True), 0.1, n_steps=10,
                          trials=2, bisect_iter=4)
    assert 0 < res.eta_found <= 0.1
    accepted = [e for e in res.log if e["amplitude"] == res.eta_found]
    assert accepted and all(e["accepted"] and e["peak"] <= 0.1 for e in accepted)


@pytest.mark.parametrize("s", [0.5, 1.0])
def test_deviation_rates(s):
    _, ratios = deviation_rates(s, levels=3)
    assert all(0.7 * 4 ** s <= r <= 1.3 * 4 ** s for r in ratios)


def test_oracle_crosscheck_rows():
    rows = oracle_crosscheck(Js=[2, 8], alphas=[0.25, 0.4], samples=3)
    assert len(rows) == 8
    skipped = [r for r in rows if r["skipped"]]
    assert [(r["J"], r["alpha"]) for r in skipped] == [(2, 0.4), (2, 0.4)]
    assert all(r["max_difference"] <= 1e-10 for r in rows if not r["skipped"])
