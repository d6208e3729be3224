"""Weakly supervised harvesting of duration sentences from raw text.

A sentence is kept when one of the trigger words is followed, within a
run of characters free of clause punctuation, by an integer and a
temporal unit ("... jailed for 23 years ..."). Four filter rules then
discard the common false positives (ages, rates, ordinals, "more than"
hedges). Surviving sentences are turned into training instances: the
duration expression is replaced by mask tokens and its normalized value
becomes the exact label, its closest unit the range label.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .text import find_mask_positions, mask_string, tokenize
from .units import UNITS_8, InvalidQuantityError, TemporalUnit, closest_unit, normalize

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_TRIGGER_WORDS",
    "TRIGGER_FAMILIES",
    "FILTER_NAMES",
    "ExtractionConfig",
    "DurationExpression",
    "MatchResult",
    "LabeledInstance",
    "ExtractionStats",
    "match_sentence",
    "passes_filters",
    "failed_filters",
    "label_sentence",
    "extract_corpus",
    "segment_sentences",
    "read_documents",
    "write_instances",
    "read_instances",
]

# Seven trigger families; "last", "spend" and "take" carry inflected variants.
TRIGGER_FAMILIES: dict[str, tuple[str, ...]] = {
    "duration": ("duration",),
    "period": ("period",),
    "for": ("for",),
    "last": ("last", "lasting"),
    "spend": ("spend", "spent"),
    "over": ("over",),
    "take": ("take", "took", "taken"),
}

DEFAULT_TRIGGER_WORDS: tuple[str, ...] = tuple(
    w for words in TRIGGER_FAMILIES.values() for w in words
)

_FAMILY_OF_WORD = {w: fam for fam, words in TRIGGER_FAMILIES.items() for w in words}

DEFAULT_GAP_CLASS = "[^,.!?;]"

_UNIT_ALTERNATION = "|".join(u.word for u in UNITS_8)

_FILTER_WORDS = ("at", "age", "every", "next", "per")
_FILTER_PHRASE = "more than"
_ORDINALS = "first|second|third|fourth|fifth|sixth|seventh|eighth|ninth"

FILTER_NAMES = ("word_blocklist", "ordinal_time", "numeric_secondary", "unit_old")

_WORD_FILTER_RE = re.compile(
    r"\b(?:" + "|".join(_FILTER_WORDS) + r"|" + _FILTER_PHRASE + r")\b", re.IGNORECASE
)
_ORDINAL_TIME_RE = re.compile(r"(?:" + _ORDINALS + r") time", re.IGNORECASE)
_SECONDARY_RE = re.compile(r"\d+ secondary", re.IGNORECASE)
_UNIT_OLD_RE = re.compile(r"(?:" + _UNIT_ALTERNATION + r")s? old", re.IGNORECASE)

# Sentence segmentation: terminal punctuation followed by whitespace.
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class ExtractionConfig:
    """Pattern knobs; the defaults reproduce the published extraction rules."""

    trigger_words: tuple[str, ...] = DEFAULT_TRIGGER_WORDS
    max_gap_class: str = DEFAULT_GAP_CLASS
    enabled_patterns: tuple[str, ...] | None = None  # None = all families

    def __post_init__(self) -> None:
        if not self.trigger_words:
            raise ValueError("trigger_words must be nonempty")
        if self.enabled_patterns is not None and not self.enabled_patterns:
            raise ValueError("enabled_patterns must be nonempty when given")

    @classmethod
    def from_selector(cls, selector: str) -> "ExtractionConfig":
        """Build a config from a CLI-style selector: "all", "for-only", or
        a comma-separated list of family names."""
        sel = selector.strip().lower()
        if sel in ("all", ""):
            return cls()
        if sel.endswith("-only"):
            sel = sel[: -len("-only")]
        families = tuple(part.strip() for part in sel.split(",") if part.strip())
        unknown = [f for f in families if f not in TRIGGER_FAMILIES]
        if unknown:
            raise ValueError(f"unknown trigger families: {unknown}")
        return cls(enabled_patterns=families)

    def active_words(self) -> tuple[str, ...]:
        if self.enabled_patterns is None:
            return self.trigger_words
        return tuple(
            w for w in self.trigger_words
            if _FAMILY_OF_WORD.get(w, w) in self.enabled_patterns
        )

    def family_of(self, trigger: str) -> str:
        return _FAMILY_OF_WORD.get(trigger, trigger)


@dataclass(frozen=True)
class DurationExpression:
    quantity: float
    unit: TemporalUnit
    span: tuple[int, int]  # [start, end) character offsets in the sentence


@dataclass(frozen=True)
class MatchResult:
    trigger: str
    trigger_family: str
    trigger_span: tuple[int, int]
    expression: DurationExpression
    matched_text: str  # sub-sentence from trigger start to expression end
    match_span: tuple[int, int]


@dataclass(frozen=True)
class LabeledInstance:
    masked_text: str
    mask_positions: tuple[int, ...]
    exact_label: float  # log-seconds
    range_label: TemporalUnit
    source_id: str

    def to_json(self) -> dict:
        return {
            "masked_text": self.masked_text,
            "mask_positions": list(self.mask_positions),
            "exact_label": self.exact_label,
            "range_label": self.range_label.word,
            "source_id": self.source_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabeledInstance":
        return cls(
            masked_text=obj["masked_text"],
            mask_positions=tuple(obj["mask_positions"]),
            exact_label=float(obj["exact_label"]),
            range_label=TemporalUnit.from_string(obj["range_label"]),
            source_id=obj.get("source_id", ""),
        )


@dataclass
class ExtractionStats:
    """Counters for one extraction run; merging is an associative add."""

    documents: int = 0
    skipped_documents: int = 0
    sentences: int = 0
    matched: int = 0
    filtered: int = 0
    skipped_instances: int = 0
    emitted: int = 0
    by_trigger: dict[str, int] = field(default_factory=dict)
    by_filter: dict[str, int] = field(default_factory=dict)

    def merge(self, other: "ExtractionStats") -> "ExtractionStats":
        merged = ExtractionStats(
            documents=self.documents + other.documents,
            skipped_documents=self.skipped_documents + other.skipped_documents,
            sentences=self.sentences + other.sentences,
            matched=self.matched + other.matched,
            filtered=self.filtered + other.filtered,
            skipped_instances=self.skipped_instances + other.skipped_instances,
            emitted=self.emitted + other.emitted,
            by_trigger=dict(self.by_trigger),
            by_filter=dict(self.by_filter),
        )
        for key, n in other.by_trigger.items():
            merged.by_trigger[key] = merged.by_trigger.get(key, 0) + n
        for key, n in other.by_filter.items():
            merged.by_filter[key] = merged.by_filter.get(key, 0) + n
        return merged

    def to_json(self) -> dict:
        return {
            "documents": self.documents,
            "skipped_documents": self.skipped_documents,
            "sentences": self.sentences,
            "matched": self.matched,
            "filtered": self.filtered,
            "skipped_instances": self.skipped_instances,
            "emitted": self.emitted,
            "by_trigger": {k: self.by_trigger[k] for k in sorted(self.by_trigger)},
            "by_filter": {k: self.by_filter[k] for k in sorted(self.by_filter)},
        }


def _build_pattern(cfg: ExtractionConfig) -> re.Pattern[str]:
    # Longest trigger variants first so the reported trigger is the full
    # word ("lasting", not its prefix "last"); the overall span is the
    # same either way because the gap absorbs the remainder. Triggers are
    # matched verbatim (no word boundary, no case folding) while the unit
    # is case-insensitive with an optional plural "s".
    words = sorted(cfg.active_words(), key=len, reverse=True)
    trigger = "|".join(re.escape(w) for w in words)
    # The lookbehind keeps the greedy gap from splitting a numeral: the
    # quantity is always the full digit run ("23 years", never "3 years"
    # inside "23 years").
    return re.compile(
        rf"(?P<trigger>{trigger}){cfg.max_gap_class}*"
        rf"(?<!\d)(?P<expr>(?P<qty>\d+) (?i:(?P<unit>{_UNIT_ALTERNATION})s?)\b)"
    )


_PATTERN_CACHE: dict[tuple, re.Pattern[str]] = {}


def _pattern_for(cfg: ExtractionConfig) -> re.Pattern[str]:
    key = (cfg.trigger_words, cfg.max_gap_class, cfg.enabled_patterns)
    pattern = _PATTERN_CACHE.get(key)
    if pattern is None:
        pattern = _PATTERN_CACHE[key] = _build_pattern(cfg)
    return pattern


def match_sentence(sentence: str, cfg: ExtractionConfig | None = None) -> MatchResult | None:
    """Leftmost match of the trigger-gap-value pattern, or None.

    The gap is greedy, so when several values follow one trigger before a
    stop character the furthest one is taken, mirroring the source
    pattern's behavior.
    """
    cfg = cfg or ExtractionConfig()
    m = _pattern_for(cfg).search(sentence)
    if m is None:
        return None
    # float() saturates huge numerals to inf; label_sentence rejects those.
    quantity = float(m.group("qty"))
    expression = DurationExpression(
        quantity=quantity,
        unit=TemporalUnit.from_string(m.group("unit")),
        span=(m.start("expr"), m.end("expr")),
    )
    trigger = m.group("trigger")
    return MatchResult(
        trigger=trigger,
        trigger_family=cfg.family_of(trigger),
        trigger_span=(m.start("trigger"), m.end("trigger")),
        expression=expression,
        matched_text=m.group(0),
        match_span=(m.start(), m.end()),
    )


def failed_filters(m: MatchResult, sentence: str) -> list[str]:
    """Names of filter rules that fire on this match, in check order."""
    fired = []
    if _WORD_FILTER_RE.search(m.matched_text):
        fired.append("word_blocklist")
    if _ORDINAL_TIME_RE.search(m.matched_text):
        fired.append("ordinal_time")
    if _SECONDARY_RE.search(sentence):
        fired.append("numeric_secondary")
    if _UNIT_OLD_RE.search(sentence):
        fired.append("unit_old")
    return fired


def passes_filters(m: MatchResult, sentence: str) -> bool:
    return not failed_filters(m, sentence)


def label_sentence(sentence: str, m: MatchResult, source_id: str = "") -> LabeledInstance:
    """Mask the duration expression and attach both labels.

    One mask token is written per whitespace token of the expression, so
    "23 years" becomes "[MASK] [MASK]". Raises InvalidQuantityError for
    quantities that cannot be normalized (zero, or numerals too large for
    a float); callers skip those sentences.
    """
    start, end = m.expression.span
    expression_text = sentence[start:end]
    n_tokens = len(tokenize(expression_text))
    masked = sentence[:start] + mask_string(n_tokens) + sentence[end:]
    exact = normalize(m.expression.quantity, m.expression.unit)
    return LabeledInstance(
        masked_text=masked,
        mask_positions=tuple(find_mask_positions(masked)),
        exact_label=exact,
        range_label=closest_unit(exact, UNITS_8),
        source_id=source_id,
    )


def segment_sentences(document: str) -> list[str]:
    """Split on terminal punctuation followed by whitespace; no
    abbreviation handling."""
    return [s for s in _SENTENCE_SPLIT_RE.split(document) if s.strip()]


def extract_corpus(
    documents: Iterable[tuple[str, str]],
    cfg: ExtractionConfig | None = None,
) -> tuple[list[LabeledInstance], ExtractionStats]:
    """Run match/filter/label over a stream of (doc_id, text) pairs.

    Documents that are not text (bytes that fail UTF-8 decoding, None)
    are skipped and counted. Filter counts can exceed the number of
    rejected sentences because several rules may fire on one match.
    """
    cfg = cfg or ExtractionConfig()
    stats = ExtractionStats()
    instances: list[LabeledInstance] = []
    for doc_id, raw_text in documents:
        if isinstance(raw_text, bytes):
            try:
                raw_text = raw_text.decode("utf-8")
            except UnicodeDecodeError:
                stats.skipped_documents += 1
                logger.debug("skipping undecodable document %s", doc_id)
                continue
        elif not isinstance(raw_text, str):
            stats.skipped_documents += 1
            continue
        stats.documents += 1
        for idx, sentence in enumerate(segment_sentences(raw_text)):
            stats.sentences += 1
            m = match_sentence(sentence, cfg)
            if m is None:
                continue
            stats.matched += 1
            stats.by_trigger[m.trigger_family] = stats.by_trigger.get(m.trigger_family, 0) + 1
            fired = failed_filters(m, sentence)
            if fired:
                stats.filtered += 1
                for name in fired:
                    stats.by_filter[name] = stats.by_filter.get(name, 0) + 1
                continue
            try:
                instance = label_sentence(sentence, m, source_id=f"{doc_id}#{idx}")
            except InvalidQuantityError as exc:
                stats.skipped_instances += 1
                logger.debug("skipping %s#%d: %s", doc_id, idx, exc)
                continue
            instances.append(instance)
            stats.emitted += 1
    return instances, stats


def read_documents(lines: Iterable[str], default_id: str = "doc") -> Iterator[tuple[str, str]]:
    """Parse JSONL document records ({"id": ..., "text": ...})."""
    for i, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        yield str(obj.get("id", f"{default_id}-{i}")), obj["text"]


def write_instances(instances: Sequence[LabeledInstance]) -> str:
    """Serialize instances to JSONL (one record per line, stable key order)."""
    return "".join(json.dumps(inst.to_json(), sort_keys=True) + "\n" for inst in instances)


def read_instances(lines: Iterable[str]) -> list[LabeledInstance]:
    out = []
    for line in lines:
        line = line.strip()
        if line:
            out.append(LabeledInstance.from_json(json.loads(line)))
    return out
