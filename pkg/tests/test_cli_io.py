"""Config parsing, CSV/JSON emission, and exit codes of the command line."""
import json
import py_compile

import numpy as np
import pytest
import yaml

import passagelab as pl
from passagelab import cli_io
from passagelab.exceptions import ConfigError, ConvergenceError

# light config so CLI runs finish in seconds; mirrors the toy fixtures
TOY_YAML = """
particle: {mass: 1e-26 kg}
packet: {center: 0.0, sigma: 2 um, velocity: 5 cm/s}
detector1: {start: 20 um, stop: 40 um, decay_rate: 2e4}
detector2: {start: 100 um, stop: 120 um, decay_rate: 2e4}
grid: {x_min: -40 um, x_max: 260 um, n_points: 2048}
solver: {dt: 0.2 us}
entry_grid: {n: 16}
"""


@pytest.fixture()
def toy_yaml(tmp_path):
    p = tmp_path / "toy.yaml"
    p.write_text(TOY_YAML)
    return str(p)


def test_parse_quantity_units():
    assert cli_io.parse_quantity("7.17 mm/s", "velocity", "p") == pytest.approx(7.17e-3)
    assert cli_io.parse_quantity("50 nm", "length", "p") == pytest.approx(50e-9)
    assert cli_io.parse_quantity("0.167 ms", "time", "p") == pytest.approx(1.67e-4)
    assert cli_io.parse_quantity("2.3895e4 1/s", "rate", "p") == pytest.approx(2.3895e4)
    assert cli_io.parse_quantity("2782 s^-1/2", "coupling", "p") == pytest.approx(2782.0)
    assert cli_io.parse_quantity(3.5e-6, "length", "p") == 3.5e-6
    assert cli_io.parse_quantity("1e-6", "length", "p") == 1e-6  # bare string is SI
    assert cli_io.parse_quantity(7, "float", "p") == 7.0
    assert cli_io.parse_quantity(128, "int", "p") == 128
    assert cli_io.parse_quantity(None, "time?", "p") is None


@pytest.mark.parametrize(
    "raw,kind",
    [
        (None, "time"),
        (True, "float"),
        (1.5, "int"),
        ("fast", "velocity"),
        ("3 parsecs", "length"),
        ([1.0], "float"),
    ],
)
def test_parse_quantity_rejects(raw, kind):
    with pytest.raises(ConfigError):
        cli_io.parse_quantity(raw, kind, "p")


def test_unknown_unit_error_names_alternatives():
    with pytest.raises(ConfigError, match="mm/s"):
        cli_io.parse_quantity("3 km/h", "velocity", "packet.velocity")


def test_load_config_defaults_reference_study():
    conf = cli_io.load_config(None)
    assert conf["packet"]["sigma"] == 1e-6
    assert conf["packet"]["velocity"] == 7.17e-3
    assert conf["detector1"]["stop"] == 20e-6
    assert conf["detector2"]["start"] == 100e-6
    assert conf["grid"]["n_points"] == 8192
    assert conf["solver"]["dt2"] is None
    assert conf["bath"]["n_modes"] == 15
    assert conf["bath"]["omega_max"] is None
    assert conf["bath"]["omega_max_ratio"] == 4.6


def test_load_config_unknown_key_reports_dotted_path(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("solver: {dt: 1e-7, dt_two: 1e-7}\n")
    with pytest.raises(ConfigError, match="solver.dt_two"):
        cli_io.load_config(str(p))


def test_load_config_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        cli_io.load_config("/nonexistent/conf.yaml")


def test_load_config_rejects_non_mapping(tmp_path):
    p = tmp_path / "list.yaml"
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        cli_io.load_config(str(p))


def test_config_echo_round_trip(tmp_path):
    conf = cli_io.load_config(None)
    p = tmp_path / "echo.yaml"
    p.write_text(yaml.safe_dump(conf))
    assert cli_io.load_config(str(p)) == conf


def test_build_experiment_from_defaults():
    cfg = cli_io.build_experiment(cli_io.load_config(None))
    assert isinstance(cfg, pl.ExperimentConfig)
    assert cfg.packet.sigma_x == 1e-6
    assert cfg.distance_d == pytest.approx(100e-6)
    assert cfg.grid.n_points == 8192


def test_build_bath_ratio_fallback():
    conf = cli_io.load_config(None)
    bath, _ = cli_io.build_bath(conf)
    assert bath.omega_max == pytest.approx(4.6 * 2.38e12)
    conf["bath"]["omega_max"] = 1e13
    bath2, _ = cli_io.build_bath(conf)
    assert bath2.omega_max == 1e13
    conf["bath"]["omega_max"] = None
    conf["bath"]["omega_max_ratio"] = None
    with pytest.raises(ConfigError):
        cli_io.build_bath(conf)


def test_kijowski_subcommand_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli_io.main(["kijowski", "--out", str(out1)]) == 0
    assert cli_io.main(["kijowski", "--out", str(out2)]) == 0
    csv1 = (out1 / "kijowski.csv").read_bytes()
    assert csv1 == (out2 / "kijowski.csv").read_bytes()
    lines = csv1.decode().strip().split("\n")
    assert lines[0] == "t_seconds,pi_k_per_second"
    assert len(lines) == 1 + 2001
    doc = json.loads((out1 / "kijowski_summary.json").read_text())
    assert doc["subcommand"] == "kijowski"
    assert doc["results"]["normalization_on_grid"] == pytest.approx(1.0, abs=2e-3)
    assert doc["warnings"] == []
    assert doc["config"]["packet"]["velocity"] == 7.17e-3


def test_arrival_subcommand_toy(tmp_path, toy_yaml):
    out = tmp_path / "arr"
    assert cli_io.main(["arrival", "--config", toy_yaml, "--out", str(out)]) == 0
    doc = json.loads((out / "arrival_summary.json").read_text())
    res = doc["results"]
    assert res["detection_probability"] > 0.9
    assert res["peak_time_seconds"] > 0.0
    header, first = (out / "arrival.csv").read_text().split("\n")[:2]
    assert header == "t_seconds,w1_per_second"
    assert len(first.split(",")) == 2


def test_passage_subcommand_toy(tmp_path, toy_yaml):
    # the light toy particle has a heavy late tail, so the run completes with
    # the tau-capture warning: exit 3 with all outputs written
    out = tmp_path / "pas"
    assert cli_io.main(["passage", "--config", toy_yaml, "--out", str(out)]) == 3
    doc = json.loads((out / "passage_summary.json").read_text())
    res = doc["results"]
    assert res["total_probability"] > 0.8
    assert res["mean_tau_seconds"] == pytest.approx(80e-6 / 0.05, rel=0.2)
    assert res["entry_grid_size"] == 16
    assert (out / "passage.csv").is_file()
    assert any("tau grid captures" in w for w in doc["warnings"])


def test_reset_state_subcommand_toy(tmp_path, toy_yaml):
    out = tmp_path / "rst"
    assert cli_io.main(["reset-state", "--config", toy_yaml, "--out", str(out)]) == 0
    doc = json.loads((out / "reset_state_summary.json").read_text())
    res = doc["results"]
    assert res["norm_sq"] > 0.0
    assert res["std_p_kg_m_per_s"] > 0.0
    pos = (out / "reset_state_position.csv").read_text().split("\n")
    assert pos[0] == "x_meters,density_per_meter"
    mom = (out / "reset_state_momentum.csv").read_text().split("\n")
    assert mom[0] == "p_kg_m_per_s,reset_density,initial_packet_density"
    # momentum axis strictly increasing after the fftfreq reorder
    p_vals = np.array([float(r.split(",")[0]) for r in mom[1:] if r])
    assert np.all(np.diff(p_vals) > 0.0)


def test_discrete_compare_subcommand_small_bath(tmp_path):
    conf = tmp_path / "bath.yaml"
    conf.write_text(
        """
bath:
  n_modes: 5
  n_time_samples: 2048
  grid: {x_min: -0.6 um, x_max: 0.6 um, n_points: 512}
"""
    )
    out = tmp_path / "cmp"
    assert cli_io.main(["discrete-compare", "--config", str(conf), "--out", str(out)]) == 0
    doc = json.loads((out / "discrete_compare_summary.json").read_text())
    res = doc["results"]
    assert res["l1_masked"] < res["l1_full"] + 1e-12
    assert res["decay_a_per_second"] > 0.0
    header = (out / "discrete_compare.csv").read_text().split("\n")[0]
    assert header == "x_meters,discrete_density_per_meter,continuum_density_per_meter"


def test_weak_detector_warning_gives_exit_3(tmp_path, toy_yaml):
    conf = yaml.safe_load(TOY_YAML)
    conf["detector1"]["decay_rate"] = "5 1/s"
    p = tmp_path / "weak.yaml"
    p.write_text(yaml.safe_dump(conf))
    out = tmp_path / "weak"
    assert cli_io.main(["arrival", "--config", str(p), "--out", str(out)]) == 3
    doc = json.loads((out / "arrival_summary.json").read_text())
    assert doc["warnings"]  # the regime complaint lands in the summary too


def test_missing_config_gives_exit_2(tmp_path):
    assert cli_io.main(["arrival", "--config", "/no/such.yaml", "--out", str(tmp_path)]) == 2


def test_unknown_key_gives_exit_2(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("packet: {sigmaa: 1e-6}\n")
    assert cli_io.main(["arrival", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_bad_threads_gives_exit_2(tmp_path):
    assert cli_io.main(["kijowski", "--threads", "0", "--out", str(tmp_path)]) == 2


def test_convergence_failure_gives_exit_4(tmp_path, monkeypatch):
    def boom(*a, **kw):
        raise ConvergenceError("sweep aborted at v0=0.003")

    monkeypatch.setattr(cli_io, "scaling_sweep", boom)
    assert cli_io.main(["precision-sweep", "--out", str(tmp_path)]) == 4


def test_precision_sweep_emission_with_stub(tmp_path, monkeypatch):
    captured = {}

    def fake_sweep(v0s, d, particle, n_entry, mapper):
        captured["mapper"] = mapper
        v0s = np.sort(np.asarray(v0s))
        e = 0.5 * particle.mass * v0s**2
        return pl.SweepResult(
            v0=v0s,
            energy=e,
            std_tau=1e-3 * (e / e[0]) ** -0.75,
            delta_tau_opt=1.1e-3 * (e / e[0]) ** -0.75,
            total_probability=np.full(len(v0s), 0.97),
            exponent=-0.75,
        )

    monkeypatch.setattr(cli_io, "scaling_sweep", fake_sweep)
    out = tmp_path / "sweep"
    assert cli_io.main(["precision-sweep", "--threads", "2", "--out", str(out)]) == 0
    assert captured["mapper"] is not map  # thread pool map was wired in
    doc = json.loads((out / "precision_sweep_summary.json").read_text())
    assert doc["results"]["exponent"] == -0.75
    ref = doc["results"]["reference_plan_v0_7.17mm_s"]
    assert ref["a_opt_per_second"] == pytest.approx(1963.889203489088, rel=1e-12)
    header = (out / "precision_sweep.csv").read_text().split("\n")[0]
    assert header == "v0_m_per_s,energy_joules,std_tau_seconds,delta_tau_opt_seconds"


def test_emit_plots_scripts_compile(tmp_path, toy_yaml):
    out = tmp_path / "plots"
    code = cli_io.main(
        ["reset-state", "--config", toy_yaml, "--out", str(out), "--emit-plots"]
    )
    assert code == 0
    scripts = sorted(out.glob("plot_*.py"))
    assert len(scripts) == 2
    for s in scripts:
        py_compile.compile(str(s), doraise=True)
