"""
Lexicon-based headline sentiment
Counts positive and negative lexicon words in each trading day's headlines and
builds the daily H, S_A and S_R series
"""
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import pandas as pd
from loguru import logger
from nltk.tokenize import RegexpTokenizer

from common import MIN_SENTIMENT_WORDS

NEWS_COLUMNS = ["day", "h", "good", "bad", "s_abs", "s_rel"]

# maximal runs of letters; digits, punctuation and underscores separate tokens
_TOKENIZER = RegexpTokenizer(r"[^\W\d_]+")


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class PolarityLexicon:
    positive: frozenset
    negative: frozenset

    def __post_init__(self):
        overlap = self.positive & self.negative
        if overlap:
            raise LexiconError(f"Words listed as both positive and negative: {sorted(overlap)[:10]}")

    @classmethod
    def from_words(cls, positive, negative):
        return cls(frozenset(w.upper() for w in positive), frozenset(w.upper() for w in negative))

    def swapped(self):
        return PolarityLexicon(self.negative, self.positive)


@dataclass(frozen=True)
class DailyNewsVars:
    day: date
    h: int
    good: int
    bad: int

    @property
    def s_abs(self):
        return self.good - self.bad

    @property
    def s_rel(self):
        total = self.good + self.bad
        if total < MIN_SENTIMENT_WORDS:
            return 0.0
        return (self.good - self.bad) / total


def load_lexicon(path):
    """
    Load a two-column lexicon file: WORD and POS or NEG per line, separated by
    whitespace or a comma. Blank lines and lines starting with '#' are skipped.

    Raises:
        LexiconError: Bad polarity tag, malformed line, or a word tagged both ways
    """
    positive, negative = set(), set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.replace(",", " ").split()
        if len(parts) != 2:
            raise LexiconError(f"line {lineno}: expected 'WORD POS|NEG', got {stripped!r}")
        word, tag = parts[0].upper(), parts[1].upper()
        if tag == "POS":
            positive.add(word)
        elif tag == "NEG":
            negative.add(word)
        else:
            raise LexiconError(f"line {lineno}: unknown polarity {parts[1]!r}")

    lexicon = PolarityLexicon(frozenset(positive), frozenset(negative))
    logger.info(f"📖 Lexicon loaded: {len(positive)} positive, {len(negative)} negative words")
    return lexicon


def write_lexicon(lexicon, path):
    lines = [f"{w} POS" for w in sorted(lexicon.positive)] + [f"{w} NEG" for w in sorted(lexicon.negative)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def tokenize(text):
    """Split on runs of non-letters and uppercase; no stemming."""
    return [token.upper() for token in _TOKENIZER.tokenize(text)]


def score_day(day, headlines, lexicon):
    """
    Score one trading day's headlines.

    Word occurrences are counted with multiplicity across all headlines.

    Returns:
        DailyNewsVars: h = number of headlines, good/bad = lexicon hits
    """
    good = bad = 0
    for h in headlines:
        for token in tokenize(h.text):
            if token in lexicon.positive:
                good += 1
            elif token in lexicon.negative:
                bad += 1
    return DailyNewsVars(day, len(headlines), good, bad)


def build_news_series(buckets, lexicon, calendar):
    """Dense day -> DailyNewsVars over the calendar; empty days score zero."""
    return {day: score_day(day, buckets.get(day, []), lexicon) for day in calendar}


def news_to_frame(series):
    rows = [
        {"day": n.day.isoformat(), "h": n.h, "good": n.good, "bad": n.bad, "s_abs": n.s_abs, "s_rel": n.s_rel}
        for n in sorted(series.values(), key=lambda n: n.day)
    ]
    return pd.DataFrame(rows, columns=NEWS_COLUMNS)


if __name__ == "__main__":
    print(tokenize("Q3: loss-making unit"))
    from datetime import datetime, timezone
    from utils.ingest import HeadlineRecord

    toy = PolarityLexicon.from_words({"good"}, {"bad"})
    day = date(2003, 1, 2)
    headline = HeadlineRecord(datetime(2003, 1, 2, 9, 0, tzinfo=timezone.utc), "good good bad")
    print(score_day(day, [headline], toy))
