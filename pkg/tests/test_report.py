import json
from datetime import date, datetime, timedelta, timezone

import numpy as np
import pandas as pd
import pytest

from utils.ingest import HeadlineRecord, InvestorCategory, TransactionRecord
from utils.pipeline import build_daily_frames, run_ingest, run_regression_suite
from utils.report import (
    REGRESSION_COLUMNS,
    SUMMARY_COLUMNS,
    acf_table,
    dataset_table,
    intraday_histogram,
    nearest_rank,
    panel_summary,
    regression_table,
    render_table,
    summary_stats,
    summary_table,
)
from utils.sentiment import load_lexicon
from utils.stats import fit_regression


def at(day, hour, minute):
    return HeadlineRecord(datetime(2003, 1, day, hour, minute, tzinfo=timezone.utc), f"item {day} {hour} {minute}")


class TestQuantiles:
    def test_one_to_hundred(self):
        stats = summary_stats(range(1, 101), "x")
        assert (stats.q05, stats.median, stats.q95) == (5, 50, 95)
        assert (stats.min, stats.max, stats.mean) == (1, 100, 50.5)
        assert stats.n == 100

    @pytest.mark.parametrize("p, expected", [(0.0, 1), (0.01, 1), (0.5, 2), (0.51, 3), (1.0, 4)])
    def test_nearest_rank(self, p, expected):
        assert nearest_rank([1, 2, 3, 4], p) == expected

    def test_rank_rounding(self):
        # 0.07 * 100 is 7.000000000000001 in floating point
        assert nearest_rank(list(range(1, 101)), 0.07) == 7

    def test_ignores_undefined(self):
        stats = summary_stats([1.0, np.nan, 3.0], "x")
        assert stats.n == 2
        assert stats.std == pytest.approx(np.sqrt(2))

    def test_single_value(self):
        stats = summary_stats([7.0], "x")
        assert (stats.q05, stats.median, stats.q95, stats.std) == (7.0, 7.0, 7.0, 0.0)

    def test_empty(self):
        with pytest.raises(ValueError, match="No defined values"):
            summary_stats([np.nan], "x")

    def test_table_keys(self):
        df = summary_table({"a": [1, 2, 3], ("b", "Households"): [4, 5]})
        assert list(df.columns) == SUMMARY_COLUMNS
        assert list(df["variable"]) == ["a", "b"]
        assert df["category"].iloc[0] is None
        assert df["category"].iloc[1] == "Households"


class TestIntradayHistogram:
    def test_bin_width_must_divide_day(self):
        with pytest.raises(ValueError, match="1440"):
            intraday_histogram([at(2, 8, 0)], bin_minutes=7)

    def test_single_bin(self):
        hist = intraday_histogram([at(2, 8, 0), at(3, 8, 0), at(6, 8, 10)], bin_minutes=30)
        assert len(hist.counts) == 48
        assert list(np.flatnonzero(hist.counts)) == [16]
        assert hist.counts[16] == 3
        assert hist.n_days == 3
        assert hist.rates[16] == pytest.approx(3 / (3 * 30))

    def test_counts_conserved(self):
        headlines = [at(2 + (k % 3), k % 24, (7 * k) % 60) for k in range(200)]
        assert intraday_histogram(headlines, 60).counts.sum() == 200

    def test_uniform_arrivals_are_flat(self):
        start = datetime(2003, 1, 2, tzinfo=timezone.utc)
        headlines = [HeadlineRecord(start + timedelta(minutes=m), f"h{m}") for m in range(10 * 24 * 60)]
        hist = intraday_histogram(headlines, 30)
        assert np.allclose(hist.rates, 1.0)

    def test_explicit_day_count(self):
        hist = intraday_histogram([at(2, 9, 0)], 60, n_days=4)
        assert hist.rates[9] == pytest.approx(1 / 240)

    def test_frame(self):
        df = intraday_histogram([at(2, 16, 30)], 30).to_frame()
        assert list(df.columns) == ["bin_start", "start_minute", "count", "rate"]
        assert df["bin_start"].iloc[33] == "16:30"
        assert df["count"].iloc[33] == 1


@pytest.fixture(scope="module")
def synth_frames(synth_files):
    result = run_ingest(synth_files["transactions"], synth_files["prices"], synth_files["headlines"])
    flows, market, news = build_daily_frames(result, load_lexicon(synth_files["lexicon"]))
    return result, flows, market, news


class TestPanelSummary:
    def test_layout(self, synth_frames):
        _, flows, market, news = synth_frames
        df = panel_summary(flows, market, news)
        assert list(df["variable"][:6]) == ["n_total"] * 6
        assert list(df["category"][:6]) == [c.value for c in InvestorCategory]
        assert list(df["variable"][-5:]) == ["ret", "vol", "h", "s_abs", "s_rel"]

    def test_activity_right_skewed(self, synth_frames):
        _, flows, market, news = synth_frames
        df = panel_summary(flows, market, news)
        row = df[(df["variable"] == "n_total") & (df["category"] == "Households")].iloc[0]
        assert row["mean"] > row["median"]

    def test_first_return_ignored(self, synth_frames):
        _, flows, market, news = synth_frames
        df = panel_summary(flows, market, news).set_index("variable")
        assert df.loc["ret", "n"] == len(market) - 1
        assert df.loc["h", "n"] == len(news)


class TestTables:
    def test_regression_table(self, make_triple):
        report = fit_regression(make_triple((0.2, 0.5), 0.3, 400, 1), replicates=1000, category="Foreign")
        df = regression_table([report, report.to_dict()])
        assert list(df.columns) == REGRESSION_COLUMNS
        assert len(df) == 2
        row = df.iloc[0]
        assert row["residual_var_pct"] == pytest.approx(100 * report.beta_sq)
        assert row["ci_boot_2_low"] == report.ci_boot_2.low
        assert row["category"] == "Foreign"

    def test_regression_table_empty(self):
        df = regression_table([])
        assert df.empty and list(df.columns) == REGRESSION_COLUMNS
        lines = render_table(df).splitlines()
        assert len(lines) == 1 and lines[0].split() == REGRESSION_COLUMNS

    def test_regression_table_six_categories(self, synth_frames):
        _, flows, market, news = synth_frames
        reports = run_regression_suite(flows, market, news, replicates=1000,
                                       presets={"activity": {"y": "n_total", "x1": "h", "x2": "vol"}})
        df = regression_table(reports["activity"])
        assert list(df["category"]) == [c.value for c in InvestorCategory]
        for row, report in zip(df.itertuples(), reports["activity"]):
            assert row.residual_var_pct == pytest.approx(100 * report.beta_sq)
            assert row.null_sd_1 == report.null_1.std

    def test_dataset_table(self):
        day = date(2003, 1, 2)
        records = [
            TransactionRecord("a", InvestorCategory.HOUSEHOLDS, day, 10, 0),
            TransactionRecord("b", InvestorCategory.HOUSEHOLDS, day, 0, 0),
            TransactionRecord("c", InvestorCategory.FOREIGN, day, 5, 5),
        ]
        df = dataset_table(records)
        assert list(df["category"]) == ["Households", "Foreign", "Total"]
        total = df.iloc[-1]
        assert total["investors"] == 3
        assert total["active_days"] == 2
        assert total["volume_bought"] == 15

    def test_acf_table(self):
        rng = np.random.default_rng(0)
        x = np.zeros(800)
        for t in range(1, 800):
            x[t] = 0.8 * x[t - 1] + rng.normal()
        x[5] = np.nan
        df = acf_table(x, max_lag=20)
        assert list(df.columns) == ["lag", "acf", "significant", "band"]
        assert len(df) == 21
        assert df["band"].iloc[0] == pytest.approx(2 / np.sqrt(799))
        assert df.attrs["significant_run"] >= 5


class TestRenderTable:
    frame = pd.DataFrame({"name": ["a", "b"], "value": [1 / 3, np.nan], "n": [1, 20]})

    def test_text_alignment(self):
        lines = render_table(self.frame).splitlines()
        assert len(lines) == 3
        assert len({len(line) for line in lines}) == 1
        assert "0.333333" in lines[1]

    def test_json_nulls(self):
        records = json.loads(render_table(self.frame, "json"))
        assert records[1]["value"] is None
        assert records[0]["value"] == 1 / 3
        assert records[1]["n"] == 20

    def test_csv(self):
        text = render_table(self.frame, "csv")
        assert text.splitlines()[0] == "name,value,n"

    def test_unknown_format(self):
        with pytest.raises(ValueError, match="Unknown format"):
            render_table(self.frame, "xml")

    def test_text_and_json_agree(self):
        df = summary_table({"x": np.random.default_rng(1).normal(size=300)})
        text_row = render_table(df).splitlines()[1].split()
        record = json.loads(render_table(df, "json"))[0]
        for column, token in zip(df.columns[2:], text_row[1:]):
            assert float(token) == pytest.approx(record[column], rel=1e-5), column
