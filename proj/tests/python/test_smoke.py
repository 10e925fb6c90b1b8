"""End-to-end smoke tests for the Python bindings."""

import math

import pytest

import stergm


@pytest.fixture(scope="module")
def panel():
    doc = stergm.simulate(
        n=5,
        games=4,
        transitions=3,
        initial_ties=4,
        seed=11,
        formation="edges",
        persistence="edges",
        theta_formation=[-0.4],
        theta_persistence=[0.7],
        attr_source="bernoulli:0.5",
    )
    assert doc["schema_version"] == "stergm-panel/1"
    return doc


def test_version():
    assert stergm.__version__ == "0.1.0"


def test_simulate_shape_and_determinism(panel):
    assert len(panel["games"]) == 4
    for game in panel["games"]:
        assert game["n"] == 5
        assert len(game["times"]) == 4
        assert len(game["times"][0]["edges"]) == 4
        for snap in game["times"]:
            assert len(snap["attrs"]["decision"]) == 5
            assert len(snap["attrs"]["wealth"]) == 5

    again = stergm.simulate(
        n=5, games=4, transitions=3, initial_ties=4, seed=11,
        formation="edges", persistence="edges",
        theta_formation=[-0.4], theta_persistence=[0.7],
        attr_source="bernoulli:0.5",
    )
    assert again == panel


def test_digest_stable(panel):
    d = stergm.panel_digest(panel)
    assert d.startswith("sha256:") and len(d) == 7 + 64
    assert stergm.panel_digest(panel) == d


def test_fit_roundtrip(panel):
    fit = stergm.fit(panel, formation="edges", persistence="edges")
    assert fit["schema_version"] == "stergm-fit/1"
    assert fit["converged"] is True
    assert fit["n_params"] == 2
    assert fit["data_digest"] == stergm.panel_digest(panel)
    # Estimates should be finite and in a sane neighbourhood of the truth.
    est_f = fit["coefficients"]["formation"][0]
    est_p = fit["coefficients"]["persistence"][0]
    assert abs(est_f + 0.4) < 1.0
    assert abs(est_p - 0.7) < 1.5

    # The reported log-likelihood matches a direct evaluation at the estimate.
    ll = stergm.loglik(panel, "edges", "edges", [est_f], [est_p])
    assert math.isclose(ll, fit["loglik"], rel_tol=1e-12)
    assert math.isclose(fit["residual_deviance"], -2.0 * fit["loglik"], rel_tol=1e-15)


def test_loglik_null_model(panel):
    ll = stergm.loglik(panel, "", "", [], [])
    dyads = 10  # n = 5
    assert math.isclose(ll, -dyads * math.log(2.0) * 12, rel_tol=1e-12)


def test_lr_test(panel):
    reduced = stergm.fit(panel, formation="edges", persistence="edges")
    full = stergm.fit(
        panel, formation="edges,nodematch(decision,C)", persistence="edges"
    )
    r = stergm.lr_test(reduced, full)
    assert r["df"] == 1
    assert r["deviance"] >= 0
    assert 0 <= r["p_value"] <= 1
    assert math.isclose(
        r["deviance"],
        reduced["residual_deviance"] - full["residual_deviance"],
        rel_tol=1e-9,
        abs_tol=1e-9,
    )


def test_stat_totals(panel):
    totals = stergm.stat_totals(panel, "edges", "edges")
    assert len(totals) == 2
    assert totals[0] > 0
    assert totals[0] == int(totals[0])  # edge counts are integers


def test_input_errors():
    with pytest.raises(Exception):
        stergm.fit({"schema_version": "bogus"}, formation="edges")
    with pytest.raises(Exception):
        stergm.simulate(n=30)
    with pytest.raises(Exception):
        stergm.fit({}, formation="edgse")
