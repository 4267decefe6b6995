import json
import math

import numpy as np
import pytest

import geobound


def test_list_metrics():
    names = [m["name"] for m in geobound.list_metrics()]
    assert "h2xh2" in names
    assert "squashed-h3" in names
    sq = next(m for m in geobound.list_metrics() if m["name"] == "squashed-h3")
    assert sq["flags"]["nonpositive_sectional"]
    assert not sq["flags"]["einstein"]


def test_metric_at_base_point():
    info = geobound.metric("hd", {"d": 3})
    assert info["dim"] == 3
    g = info["metric"]
    x = info["diagonal"]
    assert x @ g @ x == pytest.approx(1.0, abs=1e-12)


def test_bounds_product_of_planes():
    r = geobound.bounds("h2xh2", n=1024)
    assert r["bg_rate2"] == pytest.approx(3.0, abs=1e-9)
    assert r["new_rate2"] == pytest.approx(23 / 8, abs=1e-9)
    assert r["refined_rate2"] == pytest.approx(63 / 22, abs=1e-9)
    assert r["symmetric_rate"] == pytest.approx(math.sqrt(2), abs=1e-9)
    assert r["refined_rate2"] <= r["new_rate2"] <= r["bg_rate2"]


def test_tidal_hyperbolic_has_no_traceless_part():
    t = geobound.tidal("hd", direction=[1.0, 0.3, -0.2], params={"d": 3})
    assert t["r2"] == pytest.approx(2.0, abs=1e-7)
    assert t["tr_w2"] < 1e-12
    assert np.allclose(t["sectional_spectrum"], [1.0, 1.0], atol=1e-7)


def test_simulate_hyperbolic_expansion():
    s = geobound.simulate("hd", params={"d": 3}, t_end=5.0, dt=1e-3)
    t, theta = s["t"], s["theta"]
    # point source in unit hyperbolic 3-space: theta = 2 coth t
    late = t > 1.0
    assert np.max(np.abs(theta[late] - 2.0 / np.tanh(t[late]))) < 1e-6
    assert np.max(s["sigma2"]) < 1e-10
    assert s["raychaudhuri_first"] < 1e-5


def test_simulate_averages():
    s = geobound.simulate("h2xh2", t_end=40.0, dt=1e-2, t_burn=10.0)
    a = s["averages"]
    assert a["mean_theta2"] <= 3.0
    assert a["identity_residual"] < 1e-1


def test_comparison_volume():
    # unit hyperbolic 3-space: pi (sinh 2t - 2t)
    assert geobound.bg_volume(3, -2.0, 1.5) == pytest.approx(math.pi * (math.sinh(3.0) - 3.0), rel=1e-9)
    assert geobound.sn(-4.0, 0.5) == pytest.approx(math.sinh(1.0) / 2.0, rel=1e-14)


def test_trace_bounds():
    sigma = np.diag([0.5, -0.25, -0.25])
    c = geobound.shear_trace_bounds_check(sigma, 2.0, True)
    assert all(c["holds"])


def test_jacobi_and_lemma():
    s = geobound.solve_jacobi(4.0, 2.0, 1e-3)
    assert s["j"][-1] == pytest.approx(math.sinh(4.0) / 2.0, rel=1e-10)
    assert s["stuck_at"] is None
    assert geobound.solve_jacobi(-1.0, 4.0, 1e-3)["stuck_at"] == pytest.approx(math.pi, abs=1e-8)

    c = geobound.lemma_check(lambda t: 1.0 + math.sin(t), 0.5, t_end=3.0)
    assert c["product_holds"] and c["ratio_holds"]
    assert c["taylor_prediction"] == pytest.approx((1.0 + 0.25 - 2 * 0.75**2) / 45.0, rel=1e-12)


def test_shuffle_rate():
    st = geobound.shuffle_convergence(4.0, 0.0, [1e-1, 1e-2, 1e-3], 2.0)
    assert st["state_slope"] == pytest.approx(1.0, abs=0.15)
    assert st["slope"] > 1.7


def test_errors_carry_kind():
    with pytest.raises(geobound.GeoboundError) as info:
        geobound.bounds("nowhere")
    assert info.value.kind == "UnknownMetric"
    with pytest.raises(geobound.GeoboundError):
        geobound.metric("squashed-h3", {"c": 0.5})
    with pytest.raises(TypeError):
        geobound.solve_jacobi("four", 1.0)


def test_run_cli_in_process():
    code, out, _ = geobound.run_cli(["bounds", "--metric", "h2xh2", "--no-timestamp"])
    assert code == 0
    assert json.loads(out)["bounds"]["new_rate2"] == pytest.approx(23 / 8, abs=1e-9)
    assert geobound.run_cli(["bounds", "--metric", "nowhere"])[0] == 2
