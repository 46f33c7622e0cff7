import random
from datetime import date, datetime, timezone

import pytest

from utils.ingest import HeadlineRecord, TradingCalendar
from utils.sentiment import (
    DailyNewsVars,
    LexiconError,
    PolarityLexicon,
    build_news_series,
    load_lexicon,
    news_to_frame,
    score_day,
    tokenize,
    write_lexicon,
)

DAY = date(2003, 1, 2)
TOY = PolarityLexicon.from_words({"good", "gain"}, {"bad", "loss"})


def headlines(*texts):
    return [HeadlineRecord(datetime(2003, 1, 2, 9, i, tzinfo=timezone.utc), t) for i, t in enumerate(texts)]


@pytest.mark.parametrize("text, expected", [
    ("Nokia beats profit estimates", ["NOKIA", "BEATS", "PROFIT", "ESTIMATES"]),
    ("Q3: loss-making unit", ["Q", "LOSS", "MAKING", "UNIT"]),
    ("", []),
    ("under_score 2003 ...", ["UNDER", "SCORE"]),
])
def test_tokenize(text, expected):
    assert tokenize(text) == expected


class TestLexicon:
    def test_load(self, tmp_path):
        path = tmp_path / "lexicon.txt"
        path.write_text("# polarity list\ngood POS\nBad, neg\n\n  gain   pos\n")
        lexicon = load_lexicon(path)
        assert lexicon.positive == {"GOOD", "GAIN"}
        assert lexicon.negative == {"BAD"}

    def test_word_in_both_sets(self, tmp_path):
        path = tmp_path / "lexicon.txt"
        path.write_text("good POS\ngood NEG\n")
        with pytest.raises(LexiconError, match="both"):
            load_lexicon(path)

    def test_bad_tag(self, tmp_path):
        path = tmp_path / "lexicon.txt"
        path.write_text("good POSITIVE\n")
        with pytest.raises(LexiconError, match="line 1"):
            load_lexicon(path)

    def test_write_then_load(self, tmp_path):
        write_lexicon(TOY, tmp_path / "toy.txt")
        assert load_lexicon(tmp_path / "toy.txt") == TOY


class TestScoreDay:
    def test_below_threshold(self):
        news = score_day(DAY, headlines("good good bad"), TOY)
        assert (news.h, news.good, news.bad, news.s_abs, news.s_rel) == (1, 2, 1, 1, 0.0)

    def test_all_positive(self):
        news = score_day(DAY, headlines("good gain good", "gain good"), TOY)
        assert news.good == 5 and news.s_rel == 1.0

    def test_mixed_at_threshold(self):
        news = score_day(DAY, headlines("good gain", "bad loss bad"), TOY)
        assert news.s_rel == pytest.approx(-0.2)
        assert news.s_abs == -1

    def test_counts_multiplicity_across_headlines(self):
        news = score_day(DAY, headlines("Good news", "GOOD, good!", "nothing here"), TOY)
        assert (news.h, news.good) == (3, 3)

    def test_order_invariant(self):
        items = headlines("good gain", "bad", "loss loss good", "neutral words", "gain")
        expected = score_day(DAY, items, TOY)
        for seed in range(10):
            shuffled = items[:]
            random.Random(seed).shuffle(shuffled)
            assert score_day(DAY, shuffled, TOY) == expected

    def test_relative_sentiment_bounds(self):
        for good in range(12):
            for bad in range(12):
                news = DailyNewsVars(DAY, 1, good, bad)
                assert -1 <= news.s_rel <= 1
                if abs(news.s_rel) == 1:
                    assert min(good, bad) == 0 and max(good, bad) >= 5


class TestNewsSeries:
    calendar = TradingCalendar((DAY, date(2003, 1, 3), date(2003, 1, 6)))

    def test_dense_with_empty_days(self):
        series = build_news_series({DAY: headlines("good")}, TOY, self.calendar)
        assert list(series) == list(self.calendar)
        empty = series[date(2003, 1, 6)]
        assert (empty.h, empty.s_abs, empty.s_rel) == (0, 0, 0.0)

    def test_headline_conservation(self):
        buckets = {DAY: headlines("a", "b", "c"), date(2003, 1, 6): headlines("d")}
        series = build_news_series(buckets, TOY, self.calendar)
        assert sum(n.h for n in series.values()) == 4

    def test_swapped_lexicon_negates(self):
        buckets = {
            DAY: headlines("good gain good loss bad", "gain"),
            date(2003, 1, 3): headlines("bad loss", "good"),
            date(2003, 1, 6): headlines("loss loss loss bad bad good"),
        }
        straight = build_news_series(buckets, TOY, self.calendar)
        swapped = build_news_series(buckets, TOY.swapped(), self.calendar)
        for day in self.calendar:
            assert swapped[day].s_abs == -straight[day].s_abs
            assert swapped[day].s_rel == -straight[day].s_rel

    def test_frame_columns(self):
        df = news_to_frame(build_news_series({}, TOY, self.calendar))
        assert list(df.columns) == ["day", "h", "good", "bad", "s_abs", "s_rel"]
        assert list(df["day"]) == ["2003-01-02", "2003-01-03", "2003-01-06"]
