import json

import pytest
from click.testing import CliRunner

from newsflow import cli
from utils.config import Settings, load_settings_from_env
from utils.synth import SynthConfig


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_synth(tmp_path):
    config_path = tmp_path / "synth.json"
    config_path.write_text(json.dumps(SynthConfig(n_days=80, seed=2).to_dict()))
    return config_path


def invoke(runner, *args, env=None):
    return runner.invoke(cli, ["--log-level", "WARNING", *map(str, args)], env=env, catch_exceptions=False)


@pytest.fixture
def ingest_dir(runner, synth_files, tmp_path):
    out = tmp_path / "ingest"
    result = invoke(runner, "ingest", "--transactions", synth_files["transactions"],
                    "--prices", synth_files["prices"], "--headlines", synth_files["headlines"], "--out", out)
    assert result.exit_code == 0, result.output
    return out


class TestSettings:
    def test_defaults(self, monkeypatch):
        for name in ("THETA", "DROP_LAST_MINUTES", "BOOTSTRAP_REPLICATES", "SEED", "CI_LEVEL", "LOG_LEVEL"):
            monkeypatch.delenv(f"NEWSFLOW_{name}", raising=False)
        assert load_settings_from_env() == Settings()

    def test_overrides(self, monkeypatch):
        monkeypatch.setenv("NEWSFLOW_THETA", "0.05")
        monkeypatch.setenv("NEWSFLOW_SEED", "7")
        monkeypatch.setenv("NEWSFLOW_LOG_LEVEL", "debug")
        settings = load_settings_from_env()
        assert (settings.theta, settings.seed, settings.log_level) == (0.05, 7, "DEBUG")

    @pytest.mark.parametrize("name, value", [
        ("NEWSFLOW_THETA", "2"),
        ("NEWSFLOW_SEED", "abc"),
        ("NEWSFLOW_BOOTSTRAP_REPLICATES", "10"),
        ("NEWSFLOW_DROP_LAST_MINUTES", "600"),
    ])
    def test_rejected(self, monkeypatch, name, value):
        monkeypatch.setenv(name, value)
        with pytest.raises(ValueError, match=name):
            load_settings_from_env()


class TestCommands:
    def test_ingest_writes_files(self, ingest_dir):
        summary = json.loads((ingest_dir / "ingest_summary.json").read_text())
        assert summary["trading_days"] == 300
        assert (ingest_dir / "headlines.csv").exists()

    def test_drop_last_minutes(self, runner, synth_files, ingest_dir, tmp_path):
        out = tmp_path / "short"
        result = invoke(runner, "ingest", "--transactions", synth_files["transactions"],
                        "--prices", synth_files["prices"], "--headlines", synth_files["headlines"],
                        "--drop-last-minutes", 10, "--out", out)
        assert result.exit_code == 0, result.output
        short = json.loads((out / "ingest_summary.json").read_text())
        full = json.loads((ingest_dir / "ingest_summary.json").read_text())
        assert short["outside_window"] >= full["outside_window"]
        assert short["drop_last_minutes"] == 10

    def test_series_commands(self, runner, synth_files, ingest_dir, tmp_path):
        flows = tmp_path / "flows.csv"
        market = tmp_path / "market.csv"
        news = tmp_path / "news.csv"
        assert invoke(runner, "classify", "--in", ingest_dir, "--out", flows).exit_code == 0
        assert invoke(runner, "marketvars", "--prices", synth_files["prices"], "--out", market).exit_code == 0
        assert invoke(runner, "sentiment", "--buckets", ingest_dir, "--lexicon", synth_files["lexicon"],
                      "--out", news).exit_code == 0
        assert flows.read_text().splitlines()[0] == \
            "day,category,n_buy,n_sell,n_buysell,n_total,imbalance_abs,imbalance_rel"
        assert market.read_text().splitlines()[0] == "day,ret,vol"
        assert news.read_text().splitlines()[0] == "day,h,good,bad,s_abs,s_rel"

        out = tmp_path / "fit.json"
        result = invoke(runner, "regress", "--y", f"{flows}:n_total", "--x1", f"{news}:h", "--x2", f"{market}:vol",
                        "--category", "Households", "--boot", 1000, "--seed", 3, "--out", out)
        assert result.exit_code == 0, result.output
        report = json.loads(out.read_text())
        assert (report["y"], report["x1"], report["x2"]) == ("n_total", "h", "vol")
        assert report["T"] == 300
        assert report["seed"] == 3
        assert report["null_1"]["n_shuffles"] == 1000

        table = tmp_path / "table.csv"
        assert invoke(runner, "report", "regressions", "--in", out, "--format", "csv", "--out", table).exit_code == 0
        assert table.read_text().startswith("category,y,x1,x2,T,alpha1")

    def test_regress_needs_category(self, runner, ingest_dir, tmp_path):
        flows = tmp_path / "flows.csv"
        invoke(runner, "classify", "--in", ingest_dir, "--out", flows)
        result = runner.invoke(cli, ["regress", "--y", f"{flows}:n_total", "--x1", f"{flows}:n_buy",
                                     "--x2", f"{flows}:n_sell", "--boot", "1000", "--out", str(tmp_path / "r.json")])
        assert result.exit_code == 1
        assert "category" in result.output

    def test_bad_input_file(self, runner, synth_files, tmp_path):
        broken = tmp_path / "prices.csv"
        broken.write_text("day,close,high,low\n2003-01-02,100,101,99\n2003-01-03,abc,101,99\n")
        result = runner.invoke(cli, ["marketvars", "--prices", str(broken), "--out", str(tmp_path / "m.csv")])
        assert result.exit_code == 1
        assert "row 2" in result.output

    def test_identity_failure_is_reported(self, runner, tmp_path, monkeypatch):
        series = tmp_path / "series.csv"
        series.write_text("day,a,b,c\n" + "".join(f"2003-01-{d:02d},{d},{d * d % 7},{d % 3}\n" for d in range(1, 21)))

        def failing_fit(*args, **kwargs):
            raise ArithmeticError("Coefficient/partial-correlation identity violated by 1.0e-06")

        monkeypatch.setattr("newsflow.fit_regression", failing_fit)
        result = runner.invoke(cli, ["regress", "--y", f"{series}:a", "--x1", f"{series}:b", "--x2", f"{series}:c",
                                     "--out", str(tmp_path / "r.json")])
        assert result.exit_code == 1
        assert "identity violated" in result.output

    def test_bad_environment(self, runner, tmp_path):
        result = runner.invoke(cli, ["synth", "--out", str(tmp_path / "s")], env={"NEWSFLOW_THETA": "2"})
        assert result.exit_code == 1
        assert "NEWSFLOW_THETA" in result.output

    def test_synth_seed_override(self, runner, tiny_synth, tmp_path):
        assert invoke(runner, "synth", "--config", tiny_synth, "--seed", 9, "--out", tmp_path / "s").exit_code == 0
        written = SynthConfig.from_json(tmp_path / "s" / "synth_config.json")
        assert written.seed == 9
        assert written.n_days == 80

    def test_pipeline_requires_inputs(self, runner, tmp_path):
        result = runner.invoke(cli, ["pipeline", "--out", str(tmp_path / "run")])
        assert result.exit_code == 1
        assert "--synth-config" in result.output

    def test_pipeline_deterministic(self, runner, tiny_synth, tmp_path):
        for name in ("a", "b"):
            result = invoke(runner, "pipeline", "--synth-config", tiny_synth, "--boot", 1000, "--out", tmp_path / name)
            assert result.exit_code == 0, result.output
        for name in ("regressions.json", "flows.csv", "market.csv", "news.csv", "synth/transactions.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestReports:
    @pytest.fixture
    def run_dir(self, runner, tiny_synth, tmp_path):
        out = tmp_path / "run"
        assert invoke(runner, "pipeline", "--synth-config", tiny_synth, "--boot", 1000, "--out", out).exit_code == 0
        return out

    def test_summary_json(self, runner, run_dir, tmp_path):
        out = tmp_path / "summary.json"
        assert invoke(runner, "report", "summary", "--in", run_dir, "--format", "json", "--out", out).exit_code == 0
        records = json.loads(out.read_text())
        assert records[0]["variable"] == "n_total"
        assert records[0]["category"] == "Companies"
        assert records[-1]["variable"] == "s_rel"

    def test_histogram(self, runner, run_dir, tmp_path):
        out = tmp_path / "hist.csv"
        result = invoke(runner, "report", "histogram", "--in", run_dir / "ingest", "--bin-minutes", 60,
                        "--format", "csv", "--out", out)
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "bin_start,start_minute,count,rate"
        assert len(lines) == 25

    def test_histogram_bad_bin(self, runner, run_dir):
        result = runner.invoke(cli, ["report", "histogram", "--in", str(run_dir / "ingest"), "--bin-minutes", "7"])
        assert result.exit_code == 1

    def test_regressions_text(self, runner, run_dir, tmp_path):
        out = tmp_path / "reg.txt"
        assert invoke(runner, "report", "regressions", "--in", run_dir / "regressions.json", "--out", out).exit_code == 0
        lines = out.read_text().splitlines()
        assert lines[0].split()[:5] == ["category", "y", "x1", "x2", "T"]
        assert len(lines) > 1

    def test_dataset(self, runner, run_dir, tmp_path):
        out = tmp_path / "dataset.json"
        assert invoke(runner, "report", "dataset", "--in", run_dir / "ingest", "--format", "json",
                      "--out", out).exit_code == 0
        records = json.loads(out.read_text())
        assert records[-1]["category"] == "Total"
        assert records[-1]["investors"] == sum(r["investors"] for r in records[:-1])

    def test_acf(self, runner, run_dir, tmp_path):
        out = tmp_path / "acf.txt"
        result = invoke(runner, "report", "acf", "--in", f"{run_dir / 'flows.csv'}:n_total",
                        "--category", "Households", "--max-lag", 10, "--out", out)
        assert result.exit_code == 0, result.output
        text = out.read_text()
        assert text.splitlines()[0].split() == ["lag", "acf", "significant", "band"]
        assert text.rstrip().splitlines()[-1].startswith("significant lag run: ")
