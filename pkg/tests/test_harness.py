import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pepsplit.core import CompositeProblem, FunctionClass, OperatorBound, SumProblem
from pepsplit.emit import CSV_HEADER, curves_to_csv, emit
from pepsplit.harness import (ConfigError, RateCurve, Sample, find_best, load_config, parse_config,
                              parse_tau_grid, rescale_class, sigma_rule, sweep)

BASE = """
[problem]
alpha = 1
beta = 5
rho = 0.9
mu = 0
[sweep]
methods = {methods}
engines = {engines}
tau_grid = {grid}
"""


def config(methods="GM", engines="pep", grid="list 0.5, 1, 1.5, 3"):
    return parse_config(BASE.format(methods=methods, engines=engines, grid=grid))


def test_rescale_examples():
    assert rescale_class(FunctionClass(0.0, 1.0), 5.0) == FunctionClass(0.0, 5.0)
    c = FunctionClass(0.3, 2.0)
    assert rescale_class(c, 1.0) == c
    for lam in (0.0, -1.0):
        with pytest.raises(ValueError):
            rescale_class(c, lam)


@given(st.floats(0, 3), st.floats(0.01, 5), st.floats(0.05, 20))
def test_rescale_involution(mu, gap, lam):
    c = FunctionClass(mu, mu + gap)
    back = rescale_class(rescale_class(c, lam), 1 / lam)
    assert back.mu == pytest.approx(c.mu) and back.L == pytest.approx(c.L)


def test_parse_presets():
    cfg = load_config("fig1a")
    assert cfg.name == "fig1a"
    assert cfg.problems[0].problem == SumProblem(FunctionClass(0.9, 1.0), FunctionClass(0.0, 0.2))
    assert len(cfg.taus) == 50 and cfg.axis == "log"
    assert load_config("fig1c").problems[0].problem.g_class == FunctionClass(0.0, 5.0)
    fig5 = load_config("fig5")
    assert [p.label for p in fig5.problems] == ["delta0", "delta0.1"]
    assert isinstance(fig5.problems[1].problem, CompositeProblem)
    assert fig5.sigma_rules == {"CPM": "cpm_boundary", "CVM": "cvm_boundary"}
    for name in ("fig1b", "fig2", "fig3", "fig4"):
        load_config(name)


def test_gamma_falls_back_to_beta():
    text = "[problem]\nstructure = composite\nalpha = 1\nbeta = 5\nrho = 0.1\n[sweep]\nmethods = DRS\n"
    assert parse_config(text).problems[0].problem.h_class == FunctionClass(0.0, 0.2)


@pytest.mark.parametrize("text,message", [
    ("", "no \\[problem\\]"),
    ("[problem]\nalpha = 1\nrho = 0.1\n", "missing beta"),
    ("[problem]\nalpha = x\nbeta = 1\nrho = 0.1\n", "not a number"),
    ("[problem]\nalpha = 1\nbeta = 1\nrho = 2\n", "^\\[problem\\] need mu < L"),
    ("[problem]\nalpha = 1\nbeta = 1\nrho = 0.1\nfoo = 2\n", "unknown keys"),
    ("[problem]\nalpha = 1\nalpha = 2\n", "duplicate"),
    ("alpha = 1\n", "outside"),
    ("[problem]\nalpha 1\n", "key = value"),
    ("[nope]\n", "unknown section"),
    ("[problem]\nalpha = 1\nbeta = 1\nrho = 0.1\n[sweep]\nmethods = XYZ\n", "unknown method"),
    ("[problem]\nalpha = 1\nbeta = 1\nrho = 0.1\n[sweep]\nengines = magic\n", "unknown engine"),
    ("[problem]\nalpha = 1\nbeta = 1\nrho = 0.1\n[sweep]\nmethods = CPM\n", "composite"),
    ("[problem]\nalpha = 1\nbeta = 1\nrho = 0.1\n[sweep]\naxis = weird\n", "axis"),
    ("[problem]\nalpha = 1\nbeta = 1\nrho = 0.1\n[sweep]\nsigma_rule = CPM:wild\n", "sigma rule"),
    ("[problem]\nalpha = 1\nbeta = 1\nrho = 0.1\n[sweep]\nsigma_rule = GM:1\n", "non primal-dual"),
    ("[problem a]\nalpha = 1\nbeta = 1\nrho = 0.1\n[problem a]\nalpha = 1\nbeta = 1\nrho = 0.1\n",
     "distinct"),
    ("[problem]\nalpha = 1\nbeta = 1\nrho = 0.1\nlambda = -1\n", "lambda"),
])
def test_config_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_missing_preset():
    with pytest.raises(ConfigError):
        load_config("no_such_preset_here")


def test_tau_grid():
    np.testing.assert_allclose(parse_tau_grid("log 0.1 10 3"), [0.1, 1.0, 10.0])
    np.testing.assert_allclose(parse_tau_grid("lin 1 2 3"), [1.0, 1.5, 2.0])
    np.testing.assert_allclose(parse_tau_grid("list 3, 1, 2, 1"), [1.0, 2.0, 3.0])
    for bad in ("", "log 1 0.1 5", "cubic 1 2 3", "list -1, 2", "log a b c"):
        with pytest.raises(ConfigError):
            parse_tau_grid(bad)


def test_sigma_rules():
    p = CompositeProblem(FunctionClass(0.1, 1.0), FunctionClass(0.0, 0.2), OperatorBound(2.0))
    assert sigma_rule("cpm_boundary", 0.5, p) == pytest.approx(1 / (0.5 * 4))
    assert sigma_rule("cvm_boundary", 0.5, p) == pytest.approx(1 / (0.5 * 4) - 1.0 / 8)
    assert sigma_rule(0.3, 0.5, p) == 0.3
    with pytest.raises(ConfigError):
        sigma_rule("other", 0.5, p)


def test_sweep_curves_and_inadmissible_rows():
    cfg = config("GM, PRS", "pep, closed_form")
    curves = sweep(cfg)
    assert [(c.method, c.engine) for c in curves] == [
        ("GM", "pep"), ("GM", "closed_form"), ("PRS", "pep"), ("PRS", "closed_form")]
    gm = curves[0]
    # GM admissible range is (0, 2/1.2): tau = 3 is kept with an empty rate
    assert [s.rate is None for s in gm.samples] == [False, False, False, True]
    assert gm.samples[-1].status == "inadmissible"
    for pep, cf in ((curves[0], curves[1]), (curves[2], curves[3])):
        for a, b in zip(pep.samples, cf.samples):
            if a.rate is not None:
                assert a.rate == pytest.approx(b.rate, abs=1e-4)
    text = curves_to_csv(curves)
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    assert "GM,pep,3,," in lines
    assert text.endswith("\n") and "\r" not in text


def test_drs_closed_form_series():
    curves = sweep(config("DRS", "closed_form", "list 1"))
    assert [c.series for c in curves] == ["closed_form_upper", "closed_form_lower"]


def test_csv_format():
    c = RateCurve("GM", "pep", [Sample(2.0, None, 1 / 3), Sample(1.0, 0.25, None)], "x")
    assert curves_to_csv([c]) == ("method,engine,tau,sigma,rate\n"
                                  "GM,pep,1,0.25,\n"
                                  "GM,pep,2,,0.333333333333\n")


def test_emit_splits_by_problem(tmp_path):
    cfg = load_config("fig4")
    cfg.taus = np.array([1.0, 5.0])
    paths = emit(sweep(cfg), tmp_path, cfg.name)
    assert [p.name for p in paths] == ["fig4_sum.csv", "fig4_composite.csv"]
    with pytest.raises(ValueError):
        emit([], tmp_path, "x")


def test_emit_svg(tmp_path):
    cfg = config("GM", "pep, closed_form", "list 0.5, 1")
    paths = emit(sweep(cfg), tmp_path, "g", formats=("csv", "svg"))
    svg = [p for p in paths if p.suffix == ".svg"][0]
    assert svg.read_text().lstrip().startswith("<?xml")


def test_csv_deterministic_and_worker_independent():
    cfg = config("GM, FBS2, DRS", "pep, quad_oracle", "log 0.1 3 6")
    a = curves_to_csv(sweep(cfg))
    assert curves_to_csv(sweep(cfg)) == a
    assert curves_to_csv(sweep(cfg, workers=3)) == a


def test_fingerprint_tracks_parameters():
    a = config().problems[0].fingerprint()
    b = parse_config(BASE.format(methods="GM", engines="pep", grid="list 1").replace("rho = 0.9", "rho = 0.8"))
    assert a == config(grid="list 7").problems[0].fingerprint()
    assert a != b.problems[0].fingerprint()


def test_primal_dual_sweep_uses_sigma_rule():
    cfg = load_config("fig5")
    cfg.taus = np.array([0.5, 1.0])
    cfg.methods = ["CPM"]
    cfg.engines = ["pep"]
    curves = sweep(cfg)
    for s in curves[0].samples:
        assert s.sigma == pytest.approx(1 / s.tau)
        assert s.rate is not None and s.rate > 0


def test_cvm_negative_sigma_is_inadmissible():
    cfg = load_config("fig5")
    cfg.taus = np.array([3.0])
    cfg.methods, cfg.engines = ["CVM"], ["pep"]
    s = sweep(cfg)[0].samples[0]
    assert s.rate is None and s.status == "inadmissible"


def test_find_best_gm():
    cfg = config("GM")
    choice = find_best(cfg, tau_range=(0.01, 20), resolution=40)
    assert choice.method == "GM"
    assert choice.tau == pytest.approx(2 / 2.1, rel=1e-3)
    assert choice.rate == pytest.approx(1 / 7, abs=1e-4)


def test_find_best_prefers_drs_on_ill_conditioned_problem():
    cfg = load_config("fig1b")
    cfg.methods = ["PRS", "DRS"]
    choice = find_best(cfg, tau_range=(0.1, 30), resolution=25)
    assert choice.method == "DRS"
    assert choice.rate < 9 / 11
    assert 1.0 < choice.tau < 10.0


def test_find_best_errors():
    cfg = config("GM")
    with pytest.raises(ValueError):
        find_best(cfg, tau_range=(1.0, 1.0))
    with pytest.raises(ValueError):
        find_best(cfg, tau_range=(5.0, 10.0))  # above the GM range


def test_find_best_reproducible():
    cfg = config("GM, FBS1")
    a = find_best(cfg, tau_range=(0.05, 5), resolution=20)
    b = find_best(cfg, tau_range=(0.05, 5), resolution=20)
    assert a == b
    assert math.isfinite(a.rate)
