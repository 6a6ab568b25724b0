"""Rule-based rweet detection: 18 expert-curated sequential patterns
compiled to regular expressions.

Rules evaluate the ORIGINAL tweet text, not cleaned tokens; several patterns
depend on case variants, apostrophes, and question marks that cleaning
destroys. Matching is case-insensitive. Token order inside a pattern is
significant: "where can I donate" fires pattern 8, "donate can I where" does
not.
"""

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .corpus import NOT_RWEET, RWEET, Dataset
from .errors import ValidationError

PATTERN_SOURCES = (
    r"\b(I|we)\b.*\b(am|are|will be)\b.*\b(bringing|giving|helping|raising|donating|auctioning)\b",
    r"\b(I\'m)\b.*\b(bringing|giving|helping|raising|donating|auctioning)\b",
    r"\b(we\'re)\b.*\b(bringing|giving|helping|raising|donating|auctioning)\b",
    r"\b(I|we)\b.*\b(will|would like to)\b.*\b(bring|give|help|raise|donate|auction)\b",
    r"\b(I|we)\b.*\b(will|would like to)\b.*\b(work|volunteer|assist)\b",
    r"\b(we\'ll)\b.*\b(bring|give|help|raise|donate|auction)\b",
    r"\b(I|we)\b.*\b(ready|prepared)\b.*\b(bring|give|help|raise|donate|auction)\b",
    r"\b(where)\b.*\b(can I|can we)\b.*\b(bring|give|help|raise|donate)\b",
    r"\b(where)\b.*\b(can I|can we)\b.*\b(work|volunteer|assist)\b",
    r"\b(I|we)\b.*\b(like|want)\b.*\bto\b.*\b(bring|give|help|raise|donate)\b",
    r"\b(I|we)\b.*\b(like|want)\b.*\bto\b.*\b(work|volunteer|assist)\b",
    r"\b(will be)\b.*\b(brought|given|raised|donated|auctioned)\b",
    r"\b\w*\s*\b\?",
    r"\b(you|u).*(can|could|should|want to)\b",
    r"\b(can|could|should).*(you|u)\b",
    r"\b(like|want)\b.*\bto\b.*\b(bring|give|help|raise|donate)\b",
    r"\b(how)\b.*\b(can I|can we)\b.*\b(bring|give|help|raise|donate)\b",
    r"\b(how)\b.*\b(can I|can we)\b.*\b(work|volunteer|assist)\b",
)

N_PATTERNS = len(PATTERN_SOURCES)


@dataclass(frozen=True)
class RulePattern:
    id: int  # 1-based
    source: str
    regex: re.Pattern

    def matches(self, text: str) -> bool:
        return self.regex.search(text) is not None


@lru_cache(maxsize=1)
def compile_patterns() -> tuple[RulePattern, ...]:
    """Compile all 18 patterns once; a failure names the offending id."""
    patterns = []
    for i, source in enumerate(PATTERN_SOURCES, start=1):
        try:
            regex = re.compile(source, re.IGNORECASE)
        except re.error as exc:
            raise ValidationError(f"rule pattern {i} failed to compile: {exc}") from exc
        patterns.append(RulePattern(i, source, regex))
    return tuple(patterns)


def match_tweet(text: str) -> tuple[bool, ...]:
    """18 match bits for one tweet, indexed by pattern id minus one."""
    return tuple(p.matches(text) for p in compile_patterns())


def rule_classify(text: str) -> str:
    """A tweet satisfying at least one pattern is a rweet."""
    return RWEET if any(p.matches(text) for p in compile_patterns()) else NOT_RWEET


def rule_features(dataset_or_texts) -> np.ndarray:
    """Binary matrix of shape (n_tweets, 18); row i holds match_tweet of
    tweet i. Accepts a Dataset or any iterable of texts."""
    if isinstance(dataset_or_texts, Dataset):
        texts = [tw.text for tw in dataset_or_texts]
    else:
        texts = list(dataset_or_texts)
    out = np.zeros((len(texts), N_PATTERNS), dtype=np.float64)
    for i, text in enumerate(texts):
        out[i, :] = match_tweet(text)
    return out


def rule_block_for_ids(ids, texts_by_id) -> np.ndarray:
    """Rule features for specific tweet ids looked up in an id->text map."""
    missing = [i for i in ids if i not in texts_by_id]
    if missing:
        raise ValidationError(f"no original text for tweet ids {missing[:5]!r}")
    return rule_features([texts_by_id[i] for i in ids])
