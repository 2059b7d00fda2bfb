"""Sentiment class ids, fixed in (negative, neutral, positive) order everywhere."""

NEGATIVE = 0
NEUTRAL = 1
POSITIVE = 2

N_CLASSES = 3
CLASS_NAMES = ("negative", "neutral", "positive")
VALID_LABELS = frozenset((NEGATIVE, NEUTRAL, POSITIVE))
