"""Configuration schema and command-line behavior.

Validation must be exhaustive (every violation reported in one pass, unknown
keys rejected at every level) and the CLI must map error classes onto its
documented exit codes: 0 ok, 2 config, 3 numerical, 4 I/O.
"""

import json

import pytest

from kinmarket import (
    ConfigurationError,
    PRESET_IDS,
    figure_preset,
    load_config,
    parse_config,
    read_series,
)
from kinmarket.cli import main

MINIMAL = {
    "model": "meanfield",
    "prefs": {"alpha": 0.5},
    "saving": {"lambda_x": 0.8, "lambda_y": 0.2},
    "means0": {"Mx": 3, "My": 3, "mx": 10, "my": 2},
}


def _doc(**overrides):
    doc = json.loads(json.dumps(MINIMAL))
    doc.update(overrides)
    return doc


def _violations(doc):
    with pytest.raises(ConfigurationError) as err:
        parse_config(doc)
    return err.value.violations


class TestParseConfig:
    def test_minimal_document_fills_defaults(self):
        config = parse_config(_doc(), default_name="demo")
        assert config.name == "demo"
        assert config.prefs.beta == 0.5
        assert (config.n_dealers, config.n_speculators) == (5000, 5000)
        assert (config.sigma, config.mu, config.dt) == (1.0, 1.0, 0.01)
        assert (config.t_end, config.phase1_end) == (50.0, 10.0)
        assert config.seed == 0
        assert (config.out_dir, config.out_format) == ("runs", "csv")
        assert (config.init_kind, config.init_width) == ("degenerate", 0.0)
        assert config.snapshot_every == 100
        assert config.coeff_model.mode == "deterministic"

    def test_explicit_beta_must_complement_alpha(self):
        violations = _violations(_doc(prefs={"alpha": 0.5, "beta": 0.6}))
        assert violations == ["prefs: alpha + beta must equal 1 within 1e-12, got 1.1"]

    def test_saving_range_enforced(self):
        violations = _violations(_doc(saving={"lambda_x": 1.2, "lambda_y": 0.2}))
        assert violations == ["saving.lambda_x: must lie in [0, 1], got 1.2"]

    def test_every_violation_reported_in_one_pass(self):
        doc = {
            "model": "warp_drive",
            "prefs": {"alpha": 1.5, "gamma": 1},
            "saving": {"lambda_x": -0.1, "lambda_y": 2.0},
            "means0": {"Mx": -3, "My": 3, "mx": 10},
            "N_A": 0,
            "sigma": "fast",
            "turbo": True,
        }
        violations = _violations(doc)
        joined = "\n".join(violations)
        assert "turbo: unknown key" in joined
        assert "prefs.gamma: unknown key" in joined
        assert "model: must be one of" in joined
        assert "prefs.alpha: must lie in (0, 1)" in joined
        assert "saving.lambda_x" in joined
        assert "saving.lambda_y" in joined
        assert "means0.Mx: must be nonnegative" in joined
        assert "means0.my: required number is missing" in joined
        assert "N_A: must be at least 1" in joined
        assert "sigma: must be a number, got str" in joined
        assert len(violations) >= 10

    @pytest.mark.parametrize(
        "section,key",
        [
            ("saving", "lambda_z"),
            ("means0", "Mz"),
            ("coeff_model", "distribution"),
            ("output", "compression"),
            ("init_shape", "scale"),
        ],
    )
    def test_unknown_keys_rejected_at_every_level(self, section, key):
        doc = _doc()
        doc.setdefault(section, dict(MINIMAL.get(section, {"kind": "degenerate"})))
        if section == "coeff_model":
            doc[section] = {"mode": "deterministic"}
        if section == "output":
            doc[section] = {"path": "runs"}
        doc[section][key] = 1
        assert any(f"{section}.{key}: unknown key" in v for v in _violations(doc))

    def test_booleans_are_not_integers(self):
        violations = _violations(_doc(N_A=True))
        assert violations == ["N_A: must be an integer, got bool"]

    def test_fractional_counts_rejected(self):
        assert _violations(_doc(N_A=10.5)) == ["N_A: must be an integer, got float"]

    def test_document_must_be_an_object(self):
        assert _violations([1, 2]) == ["document must be a JSON object, got list"]

    def test_phase_boundary_defaults_to_ten_over_sigma(self):
        config = parse_config(_doc(model="nonlinear_mc", sigma=2.0, dt=0.005))
        assert config.phase1_end == 5.0

    def test_default_phase_boundary_clamps_to_short_runs(self):
        config = parse_config(_doc(t_end=5.0))
        assert config.phase1_end == 5.0

    def test_explicit_phase_boundary_beyond_end_rejected(self):
        violations = _violations(_doc(phase1_end=60.0))
        assert any("must not exceed t_end" in v for v in violations)

    def test_update_probability_cross_check_only_for_mc_models(self):
        violations = _violations(_doc(model="linear_mc", sigma=200.0))
        assert any("sigma*dt" in v for v in violations)
        parse_config(_doc(model="meanfield", sigma=200.0))  # dt is just the ODE grid

    def test_collision_budget_cross_check(self):
        violations = _violations(_doc(model="nonlinear_mc", mu=1e7, N_A=100, N_B=10))
        assert any("mu*dt" in v for v in violations)

    def test_market_must_open_with_goods(self):
        violations = _violations(
            _doc(saving={"lambda_x": 0.0, "lambda_y": 0.2}, means0={"Mx": 0, "My": 3, "mx": 10, "my": 2})
        )
        assert any("no good X on the market" in v for v in violations)

    def test_explicit_model_needs_the_hoarding_policy(self):
        violations = _violations(_doc(model="explicit"))
        assert any("lambda_x = 0 and lambda_y = 1" in v for v in violations)
        parse_config(_doc(model="explicit", saving={"lambda_x": 0.0, "lambda_y": 1.0}))

    def test_seed_range(self):
        assert _violations(_doc(seed=-1)) == ["seed: must lie in [0, 2**64), got -1"]
        assert any("seed" in v for v in _violations(_doc(seed=2**64)))
        parse_config(_doc(seed=2**64 - 1))

    def test_snapshot_cadence_can_be_disabled(self):
        assert parse_config(_doc(snapshot_every=None)).snapshot_every is None
        assert parse_config(_doc(snapshot_every=7)).snapshot_every == 7
        assert any("snapshot_every" in v for v in _violations(_doc(snapshot_every=0)))

    def test_uniform_coefficients_must_stay_in_range(self):
        doc = _doc(coeff_model={"mode": "uniform", "half_width_alpha": 0.7})
        assert any("leaves [0, 1]" in v for v in _violations(doc))
        ok = parse_config(_doc(coeff_model={"mode": "uniform", "half_width_alpha": 0.5}))
        assert ok.coeff_model.half_width_alpha == 0.5

    def test_init_shape_width_rules(self):
        doc = _doc(init_shape={"kind": "uniform_spread"})
        assert any("width: required" in v for v in _violations(doc))
        doc = _doc(init_shape={"kind": "degenerate", "width": 0.5})
        assert any("only valid for kind" in v for v in _violations(doc))
        ok = parse_config(_doc(init_shape={"kind": "uniform_spread", "width": 0.3}))
        assert (ok.init_kind, ok.init_width) == ("uniform_spread", 0.3)

    def test_round_trip_through_serialization(self):
        config = parse_config(
            _doc(
                model="nonlinear_mc",
                seed=17,
                coeff_model={"mode": "uniform", "half_width_alpha": 0.2, "half_width_beta": 0.1},
                init_shape={"kind": "uniform_spread", "width": 0.4},
                snapshot_every=None,
            ),
            default_name="custom",
        )
        assert parse_config(config.to_json_dict()) == config


class TestLoadConfig:
    def test_reads_and_names_after_the_file(self, tmp_path):
        path = tmp_path / "my-scenario.json"
        path.write_text(json.dumps(_doc()))
        config = load_config(path)
        assert config.name == "my-scenario"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError) as err:
            load_config(tmp_path / "absent.json")
        assert any("cannot read config" in v for v in err.value.violations)

    def test_broken_json_reports_the_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "model": nonlinear\n}\n')
        with pytest.raises(ConfigurationError) as err:
            load_config(path)
        assert any("line 2" in v for v in err.value.violations)


class TestPresets:
    def test_known_ids(self):
        assert PRESET_IDS == (
            "fig1-left", "fig1-right", "fig2-left", "fig2-right", "fig3-left", "fig3-right"
        )

    def test_reference_panel_parameters(self):
        config = figure_preset("fig1-left")
        assert config.model == "nonlinear_mc"
        assert (config.prefs.alpha, config.prefs.beta) == (0.5, 0.5)
        assert config.means0.as_tuple() == (3.0, 3.0, 10.0, 2.0)
        assert (config.saving.lambda_x, config.saving.lambda_y) == (0.8, 0.2)
        assert (config.n_dealers, config.n_speculators) == (5000, 5000)
        assert (config.t_end, config.phase1_end) == (50.0, 10.0)
        assert config.coeff_model.mode == "deterministic"

    def test_skewed_panels(self):
        assert figure_preset("fig2-left").prefs.alpha == 0.25
        assert figure_preset("fig2-right").prefs.alpha == 0.75
        left = figure_preset("fig3-left").means0
        assert (left.Mx, left.My, left.mx, left.my) == (3.0, 7.5, 20.0, 5.0)
        right = figure_preset("fig3-right")
        assert (right.means0.mx, right.means0.My) == (7.5, 20.0)
        assert (right.saving.lambda_x, right.saving.lambda_y) == (0.2, 0.8)

    def test_every_preset_round_trips(self):
        for preset_id in PRESET_IDS:
            config = figure_preset(preset_id, seed=3, out_dir="elsewhere")
            assert parse_config(config.to_json_dict()) == config

    def test_unknown_id(self):
        with pytest.raises(ConfigurationError) as err:
            figure_preset("fig9-middle")
        assert any("unknown preset" in v for v in err.value.violations)


@pytest.fixture
def tiny_config(tmp_path):
    """A fast meanfield scenario writing into the pytest sandbox."""
    doc = _doc(t_end=2.0, dt=0.1, output={"path": str(tmp_path / "runs"), "format": "csv"})
    doc["name"] = "tiny"
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc))
    return path


class TestCli:
    def test_run_writes_the_series_and_prints_its_path(self, tiny_config, tmp_path, capsys):
        assert main(["run", str(tiny_config)]) == 0
        out = capsys.readouterr().out.strip()
        assert out.endswith("tiny_0.csv")
        rows = read_series(out)
        assert len(rows) == 21
        assert rows[0].price == pytest.approx(11.0 / 3.4, rel=1e-15)

    def test_reruns_are_byte_identical(self, tiny_config, tmp_path, capsys):
        assert main(["run", str(tiny_config)]) == 0
        path = capsys.readouterr().out.strip()
        first = open(path, "rb").read()
        assert main(["run", str(tiny_config)]) == 0
        assert open(path, "rb").read() == first

    def test_flag_overrides(self, tiny_config, tmp_path, capsys):
        out_dir = tmp_path / "other"
        assert main(["run", str(tiny_config), "--seed", "9", "--out", str(out_dir), "--t-end", "1.0"]) == 0
        path = capsys.readouterr().out.strip()
        assert path.endswith("tiny_9.csv")
        assert str(out_dir) in path
        assert len(read_series(path)) == 11

    def test_summary_line(self, tiny_config, capsys):
        assert main(["run", str(tiny_config), "--summary"]) == 0
        line = capsys.readouterr().out.strip()
        assert line.startswith("tiny seed=0 model=meanfield terminal_price=")
        assert "predicted_limit=" in line
        assert "drift=" in line

    def test_bad_seed_flag(self, tiny_config, capsys):
        assert main(["run", str(tiny_config), "--seed", "-3"]) == 2
        assert "config error:" in capsys.readouterr().err

    def test_missing_config_is_a_config_error(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "absent.json")]) == 2
        assert "config error: cannot read config" in capsys.readouterr().err

    def test_violations_print_one_per_line(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(_doc(prefs={"alpha": 1.5}, seed=-1)))
        assert main(["run", str(path)]) == 2
        err_lines = [l for l in capsys.readouterr().err.splitlines() if l.startswith("config error:")]
        assert len(err_lines) == 2

    def test_numerical_failure_exit_code(self, tmp_path, capsys):
        # valid config, but the equilibrium solver rejects zero saving
        doc = _doc(model="equilibrium", saving={"lambda_x": 0.0, "lambda_y": 0.2})
        path = tmp_path / "eq.json"
        path.write_text(json.dumps(doc))
        assert main(["run", str(path)]) == 3
        assert "numerical failure:" in capsys.readouterr().err

    def test_io_failure_exit_code(self, tiny_config, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        assert main(["run", str(tiny_config), "--out", str(blocker / "sub")]) == 4
        assert "output error:" in capsys.readouterr().err

    def test_equilibrium_subcommand(self, tmp_path, capsys):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(_doc()))
        assert main(["equilibrium", str(path)]) == 0
        out = capsys.readouterr().out
        assert "rho = 0.708633561741" in out
        assert "limit_price = 5.24794238749" in out
        assert "iterations = " in out

    def test_preset_dump_config_round_trips(self, tmp_path, capsys):
        dump = tmp_path / "preset.json"
        assert main(["preset", "fig1-left", "--dump-config", str(dump)]) == 0
        assert capsys.readouterr().out.strip() == str(dump)
        config = parse_config(json.loads(dump.read_text()))
        assert config == figure_preset("fig1-left")

    def test_preset_unknown_id(self, capsys):
        assert main(["preset", "fig7-left"]) == 2
        assert "unknown preset" in capsys.readouterr().err

    def test_preset_tiny_run(self, tmp_path, capsys):
        out_dir = tmp_path / "runs"
        code = main(["preset", "fig1-left", "--t-end", "0.5", "--out", str(out_dir), "--summary"])
        assert code == 0
        line = capsys.readouterr().out.strip()
        assert line.startswith("fig1-left seed=0 model=nonlinear_mc")
        assert (out_dir / "fig1-left_0.csv").exists()
        # snapshots land next to the series, grouped one file per instant
        assert (out_dir / "fig1-left_0_hist_0.json").exists()

    def test_ensemble_runs_consecutive_seeds(self, tiny_config, tmp_path, capsys):
        assert main(["ensemble", str(tiny_config), "--replicas", "3", "--seed", "5"]) == 0
        paths = capsys.readouterr().out.split()
        assert [p.split("_")[-1] for p in paths] == ["5.csv", "6.csv", "7.csv"]

    def test_ensemble_replica_count_validated(self, tiny_config, capsys):
        assert main(["ensemble", str(tiny_config), "--replicas", "0"]) == 2
