import importlib.resources
import json
import math
import os

import numpy as np
import pytest

from comib.cli import dispatch, parse_range, render_csv, render_json
from comib.errors import DomainError
from comib.modulo_saddle import ModuloSpec, low_snr_saddle
from comib.simplex_core import Pmf, binary_entropy
from comib.tv_bounds import entropy_continuity_omega, min_entropy_tv_ball_uniform
from comib.units import set_log_base


@pytest.fixture(autouse=True)
def _clean_base(monkeypatch):
    monkeypatch.delenv("COMIB_LOG_BASE", raising=False)
    set_log_base(None)
    yield
    set_log_base(None)


@pytest.fixture
def nominal_file(tmp_path):
    path = tmp_path / "nominal.json"
    path.write_text("[0.6, 0.25, 0.15]\n")
    return str(path)


def test_rate_binary_full_budgets(tmp_path):
    out = tmp_path / "r.json"
    rc = dispatch(["rate", "binary", "--c1", "1", "--c2", "1", "-o", str(out)])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["rate_bits"] == 1.0
    assert payload["params"]["alpha"] == pytest.approx(0.0, abs=1e-12)
    assert payload["params"]["beta"] == pytest.approx(0.0, abs=1e-12)
    assert payload["log_base"] == "bits"


def test_modulo_saddle_matches_library(tmp_path):
    out = tmp_path / "s.json"
    rc = dispatch(
        ["modulo", "saddle", "--n", "3", "--eta1", "1.3", "--eta2", "0.7", "-o", str(out)]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    exact = low_snr_saddle(ModuloSpec(3, 1.3, 0.7))
    # canonical floats round trip bit exactly
    assert payload["value"] == exact.value
    assert payload["rate_bits"] == exact.rate
    assert len(payload["p_w"]) == 3 and len(payload["p_v"]) == 3


def test_sweep_modulo_bounds_csv(tmp_path):
    out = tmp_path / "bounds.csv"
    rc = dispatch(
        ["sweep", "modulo-bounds", "--n", "3", "--eta1", "0.5",
         "--eta2", "0:0.05:1.58", "-o", str(out), "--gnuplot-hint"]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# gnuplot:") and lines[1].startswith("# gnuplot:")
    assert lines[2] == "eta2,lower,upper,saddle"
    rows = [line.split(",") for line in lines[3:]]
    assert len(rows) == 32  # 0, 0.05, ..., 1.55; the stop is not on the lattice
    for row in rows:
        e2, lo, hi, sad = (float(c) for c in row)
        assert lo <= hi + 1e-12
        assert math.isnan(sad)  # open regime at eta1 = 0.5
    assert (tmp_path / "bounds.png").exists()


def test_sweep_closed_regime_saddle_column(tmp_path):
    out = tmp_path / "b2.csv"
    rc = dispatch(
        ["sweep", "modulo-bounds", "--n", "3", "--eta1", "1.2",
         "--eta2", "0.6:0.2:1.0", "-o", str(out)]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    for line in lines[1:]:
        e2, lo, hi, sad = (float(c) for c in line.split(","))
        assert lo == pytest.approx(sad, abs=1e-12)
        assert hi == pytest.approx(sad, abs=1e-12)


def test_usage_errors_exit_2():
    assert dispatch([]) == 2
    assert dispatch(["rate"]) == 2
    assert dispatch(["no-such-command"]) == 2
    assert dispatch(["rate", "binary", "--c1", "0.5"]) == 2
    assert dispatch(["tv", "theta"]) == 2  # needs --channel or --nominal


def test_domain_errors_exit_3(tmp_path, capsys):
    assert dispatch(["rate", "binary", "--c1", "1.4", "--c2", "0.5"]) == 3
    assert "comib:" in capsys.readouterr().err
    # closed form requested outside its regime
    assert dispatch(["modulo", "saddle", "--n", "3", "--eta1", "0.5", "--eta2", "1.0"]) == 3
    # missing input file surfaces as exit 3, not a traceback
    assert dispatch(
        ["tv", "phi", "--delta", "0.2", "--nominal", str(tmp_path / "missing.json")]
    ) == 3
    assert dispatch(
        ["modulo", "bounds", "--n", "3", "--eta1", "0.5", "--eta2", "1.0", "--support-k", "9"]
    ) == 3


def test_solve_nonconvergence_exit_4(tmp_path):
    out = tmp_path / "sol.json"
    rc = dispatch(
        ["solve", "--n", "3", "--eta1", "1.2", "--eta2", "0.8",
         "--outer-max", "1", "-o", str(out)]
    )
    assert rc == 4
    payload = json.loads(out.read_text())  # result still written
    assert payload["diagnostics"]["converged"] is False
    assert math.isfinite(payload["value"])


def test_solve_trace_csv(tmp_path):
    out = tmp_path / "sol.json"
    trace = tmp_path / "trace.csv"
    rc = dispatch(
        ["solve", "--n", "3", "--eta1", "1.3", "--eta2", "0.7",
         "--trace", str(trace), "-o", str(out)]
    )
    assert rc == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "iter,side,beta,entropy_p,objective_bits"
    assert len(lines) >= 3
    for line in lines[1:]:
        it, side, beta, ent, obj = line.split(",")
        int(it)
        assert side in ("pf", "ib")
        float(ent), float(obj)
    payload = json.loads(out.read_text())
    exact = low_snr_saddle(ModuloSpec(3, 1.3, 0.7)).value
    assert payload["value"] == pytest.approx(exact, abs=1e-4)


def test_byte_determinism(tmp_path, nominal_file):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["tv", "bounds", "--nominal", nominal_file, "--delta", "0.3",
            "--eta2", "1.0", "--seed", "5"]
    assert dispatch(argv + ["-o", str(a)]) == 0
    assert dispatch(argv + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_nats_scaling(tmp_path):
    bits_out, nats_out = tmp_path / "bits.json", tmp_path / "nats.json"
    argv = ["rate", "gaussian", "--rho", "0.8", "--capacity", "1.0"]
    assert dispatch(argv + ["-o", str(bits_out)]) == 0
    assert dispatch(argv + ["--log-base", "nats", "-o", str(nats_out)]) == 0
    pb = json.loads(bits_out.read_text())
    pn = json.loads(nats_out.read_text())
    assert pn["rate_bits"] == pytest.approx(pb["rate_bits"] * math.log(2.0), rel=1e-15)
    assert pn["log_base"] == "nats"
    # parameters are not units, only scalar rates rescale
    assert pn["params"] == pb["params"]


def test_log_base_resolution_order(tmp_path, monkeypatch):
    argv = ["rate", "gaussian", "--rho", "0.8", "--capacity", "1.0"]
    out = tmp_path / "o.json"
    monkeypatch.setenv("COMIB_LOG_BASE", "nats")
    assert dispatch(argv + ["-o", str(out)]) == 0
    assert json.loads(out.read_text())["log_base"] == "nats"
    # an explicit flag wins over the environment
    assert dispatch(argv + ["--log-base", "bits", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["log_base"] == "bits"
    monkeypatch.delenv("COMIB_LOG_BASE")
    monkeypatch.chdir(tmp_path)
    (tmp_path / "comib.toml").write_text('log_base = "nats"\n')
    assert dispatch(argv + ["-o", str(out)]) == 0
    assert json.loads(out.read_text())["log_base"] == "nats"


def test_parse_range():
    np.testing.assert_allclose(parse_range("0.2:0.1:0.5"), [0.2, 0.3, 0.4, 0.5], atol=1e-12)
    assert parse_range("0:0.05:1.58").size == 32
    np.testing.assert_allclose(parse_range("0.7"), [0.7])
    for bad in ("1:2", "0:-0.1:1", "0:0.1:-1"):
        with pytest.raises(DomainError):
            parse_range(bad)


def test_oracle_binary_csv(tmp_path):
    out = tmp_path / "o.csv"
    rc = dispatch(
        ["oracle", "binary", "--c1", "0.5", "--c2", "0.5", "--steps", "150", "-o", str(out)]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "param1,param2,value_bits,arg0,arg1"
    row = [float(c) for c in lines[1].split(",")]
    from comib.closed_form import binary_compound_rate

    assert row[2] == pytest.approx(binary_compound_rate(0.5, 0.5).rate_bits, abs=1e-3)


def test_oracle_modulo_csv(tmp_path):
    out = tmp_path / "om.csv"
    rc = dispatch(
        ["oracle", "modulo", "--n", "3", "--eta1", "0.0", "--eta2", "0.8", "-o", str(out)]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "param1,param2,value_bits,arg0,arg1,arg2,arg3,arg4,arg5"
    row = [float(c) for c in lines[1].split(",")]
    assert row[2] == pytest.approx(0.8, abs=1e-12)


def test_tv_sweep_csv_and_figure(tmp_path, nominal_file):
    out = tmp_path / "tv.csv"
    rc = dispatch(
        ["tv", "bounds", "--nominal", nominal_file, "--delta", "0.1:0.1:0.3",
         "--eta2", "1.0", "--sweep", "delta", "-o", str(out)]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "delta,lower,upper"
    assert len(lines) == 4
    for line in lines[1:]:
        d, lo, hi = (float(c) for c in line.split(","))
        assert lo <= hi + 1e-12
    assert (tmp_path / "tv.png").exists()


def test_tv_scalar_outputs(tmp_path, nominal_file):
    out = tmp_path / "g.json"
    assert dispatch(["tv", "gamma", "--delta", "0.5", "--n", "4", "-o", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["gamma"] == min_entropy_tv_ball_uniform(0.5, 4)["gamma"]
    assert len(payload["argmin"]) == 4
    assert dispatch(["tv", "omega", "--delta", "0.3", "--n", "3", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["omega"] == entropy_continuity_omega(0.3, 3)
    assert dispatch(["tv", "theta", "--nominal", nominal_file, "-o", str(out)]) == 0
    assert 0.0 <= json.loads(out.read_text())["theta"] <= 1.0


def test_rate_spectral_commands(tmp_path):
    out = tmp_path / "c.json"
    rc = dispatch(
        ["rate", "continuous", "--bands", "1.0:3.0,0.5:1.0", "--c2", "0.8", "-o", str(out)]
    )
    assert rc == 0
    from comib.closed_form import SpectrumSpec, continuous_ib_rate

    expect = continuous_ib_rate(SpectrumSpec(((1.0, 3.0), (0.5, 1.0)), 0.8)).rate_bits
    assert json.loads(out.read_text())["rate_bits"] == expect
    rc = dispatch(
        ["rate", "compound-continuous", "--bandwidth", "1.0", "--c1", "2.0",
         "--c2", "0.8", "-o", str(out)]
    )
    assert rc == 0
    assert json.loads(out.read_text())["rate_bits"] > 0.0


def test_packaged_counterexample_pmf():
    text = (
        importlib.resources.files("comib.data")
        .joinpath("counterexample_pw.json")
        .read_text(encoding="utf-8")
    )
    p = Pmf.from_json(text)
    np.testing.assert_allclose(p.probs, [0.27, 0.73, 0.0], atol=0)
    from comib.simplex_core import entropy

    assert entropy(p.probs) == pytest.approx(binary_entropy(0.27), abs=1e-12)
    # the canonical rendering is stable
    assert p.to_json() == text.strip()


def test_render_helpers():
    assert render_json({"a": float("nan"), "b": [1.0, True, None]}) == (
        '{"a": NaN, "b": [1.0000000000000000e+00, true, null]}'
    )
    assert json.loads(render_json({"x": float("inf")}))["x"] == math.inf
    text = render_csv(["a", "b"], [[1, 0.5], ["s", 2]])
    assert text == "a,b\n1,5.0000000000000000e-01\ns,2\n"


def test_stdout_default(capsys):
    rc = dispatch(["rate", "binary", "--c1", "0.5", "--c2", "0.5"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["rate_bits"] == pytest.approx(0.2864632714340216, abs=1e-10)
