"""Adapters from event-annotation and QA rows to masked model inputs.

Event rows (TimeBank style) get the pattern ", lasting [MASK] [MASK],"
spliced in right after the annotated event word; their label is the log
of the arithmetic mean of the annotated min and max durations. QA rows
(McTACO style) are rewritten question-to-statement, suffixed with
", lasting [MASK] [MASK].", and joined to their context sentence.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .text import find_mask_positions
from .units import (
    UNITS_7,
    TemporalUnit,
    UnitInventory,
    closest_unit,
    normalize,
)

__all__ = [
    "MalformedRowError",
    "TimeBankRow",
    "McTacoRow",
    "ModelInput",
    "timebank_to_input",
    "question_to_statement",
    "mctaco_to_input",
    "mctaco_training_label",
    "parse_answer_value",
    "group_mctaco_rows",
    "read_timebank_tsv",
    "write_timebank_tsv",
    "read_mctaco_jsonl",
]

MASK_PATTERN_MID = ", lasting [MASK] [MASK],"
MASK_PATTERN_END = ", lasting [MASK] [MASK]."

TIMEBANK_COLUMNS = (
    "sentence",
    "event_start",
    "event_end",
    "min_quantity",
    "min_unit",
    "max_quantity",
    "max_unit",
)


class MalformedRowError(ValueError):
    """Raised when an annotation row cannot be interpreted."""


@dataclass(frozen=True)
class TimeBankRow:
    sentence: str
    event_span: tuple[int, int]
    min_duration: tuple[float, TemporalUnit]
    max_duration: tuple[float, TemporalUnit]


@dataclass(frozen=True)
class McTacoRow:
    context: str
    question: str
    answer: str
    gold: bool


@dataclass(frozen=True)
class ModelInput:
    text: str
    mask_positions: tuple[int, ...]
    exact_label: float | None = None
    range_label: TemporalUnit | None = None


def _mean_log_seconds(row: TimeBankRow) -> float:
    # Arithmetic mean of the two annotated durations, taken in linear
    # seconds before the log.
    lo = row.min_duration[0] * row.min_duration[1].seconds
    hi = row.max_duration[0] * row.max_duration[1].seconds
    return normalize((lo + hi) / 2.0, TemporalUnit.SECOND)


def timebank_to_input(row: TimeBankRow, inventory: UnitInventory = UNITS_7) -> ModelInput:
    """Insert the duration pattern after the event word and label the row."""
    start, end = row.event_span
    if not (0 <= start < end <= len(row.sentence)):
        raise MalformedRowError(
            f"event span {row.event_span} outside sentence of length {len(row.sentence)}"
        )
    text = row.sentence[:end] + MASK_PATTERN_MID + row.sentence[end:]
    exact = _mean_log_seconds(row)
    return ModelInput(
        text=text,
        mask_positions=tuple(find_mask_positions(text)),
        exact_label=exact,
        range_label=closest_unit(exact, inventory),
    )


_AUXILIARIES = (
    "did", "does", "do", "would", "will", "has", "have", "had",
    "is", "was", "are", "were",
)
_HOW_LONG_RE = re.compile(
    r"^\s*how\s+long\s+(?:(?:" + "|".join(_AUXILIARIES) + r")\s+)?", re.IGNORECASE
)


def question_to_statement(question: str) -> tuple[str, bool]:
    """Rewrite a duration question into statement order.

    Strips a leading "How long" plus auxiliary and the trailing question
    mark; no verb re-inflection is attempted. Returns (text, converted);
    unconverted questions pass through unchanged so callers can flag them.
    """
    m = _HOW_LONG_RE.match(question)
    if m is None:
        return question, False
    statement = question[m.end():].strip()
    statement = statement.rstrip("?").rstrip()
    if not statement:
        return question, False
    return statement, True


_NUMBER_WORDS = {
    "a": 1, "an": 1, "one": 1, "two": 2, "three": 3, "four": 4,
    "five": 5, "six": 6, "seven": 7, "eight": 8, "nine": 9,
    "ten": 10, "eleven": 11, "twelve": 12,
}
_UNIT_WORDS = "|".join(u.word for u in TemporalUnit)
_ANSWER_RE = re.compile(
    r"\b(?P<qty>\d+(?:\.\d+)?|" + "|".join(_NUMBER_WORDS) + r")\s+"
    r"(?P<unit>(?:" + _UNIT_WORDS + r"))s?\b",
    re.IGNORECASE,
)


def parse_answer_value(answer: str) -> float | None:
    """Log-second value of an answer like "2 hours" or "an hour"; None when
    no quantity-unit pair is present ("a few moments")."""
    m = _ANSWER_RE.search(answer)
    if m is None:
        return None
    qty_text = m.group("qty").lower()
    quantity = float(_NUMBER_WORDS.get(qty_text, 0) or qty_text)
    if quantity <= 0:
        return None
    return normalize(quantity, TemporalUnit.from_string(m.group("unit")))


def mctaco_to_input(row: McTacoRow) -> tuple[ModelInput, float | None]:
    """Build the masked input for a QA row and parse its answer value."""
    statement, _ = question_to_statement(row.question)
    text = row.context.strip() + " " + statement + MASK_PATTERN_END
    model_input = ModelInput(text=text, mask_positions=tuple(find_mask_positions(text)))
    return model_input, parse_answer_value(row.answer)


def mctaco_training_label(rows: Sequence[McTacoRow]) -> float | None:
    """Mean log-second value of the parseable correct answers of one question.

    Averaging happens in log space (the geometric mean of the durations),
    which keeps one outlier answer from dominating. None when no correct
    answer parses.
    """
    values = [
        v for row in rows
        if row.gold and (v := parse_answer_value(row.answer)) is not None
    ]
    if not values:
        return None
    return sum(values) / len(values)


def group_mctaco_rows(rows: Iterable[McTacoRow]) -> list[tuple[str, list[McTacoRow]]]:
    """Group rows by (context, question), preserving first-seen order.

    The returned key is a stable question id "q<index>"."""
    groups: dict[tuple[str, str], list[McTacoRow]] = {}
    for row in rows:
        groups.setdefault((row.context, row.question), []).append(row)
    return [(f"q{i}", rows) for i, (_, rows) in enumerate(groups.items())]


def read_timebank_tsv(lines: Iterable[str]) -> list[TimeBankRow]:
    """Parse TSV rows with columns sentence, event_start, event_end,
    min_quantity, min_unit, max_quantity, max_unit. A header row is
    recognized and skipped."""
    out = []
    reader = csv.reader(lines, delimiter="\t")
    for i, record in enumerate(reader):
        if not record or all(not cell.strip() for cell in record):
            continue
        if i == 0 and record[0].strip().lower() == "sentence":
            continue
        if len(record) != len(TIMEBANK_COLUMNS):
            raise MalformedRowError(
                f"row {i}: expected {len(TIMEBANK_COLUMNS)} columns, got {len(record)}"
            )
        sentence, start, end, min_q, min_u, max_q, max_u = record
        try:
            row = TimeBankRow(
                sentence=sentence,
                event_span=(int(start), int(end)),
                min_duration=(float(min_q), TemporalUnit.from_string(min_u)),
                max_duration=(float(max_q), TemporalUnit.from_string(max_u)),
            )
        except ValueError as exc:
            raise MalformedRowError(f"row {i}: {exc}") from exc
        if row.min_duration[0] * row.min_duration[1].seconds > (
            row.max_duration[0] * row.max_duration[1].seconds
        ):
            # Annotations occasionally swap the bounds; reorder.
            row = TimeBankRow(row.sentence, row.event_span, row.max_duration, row.min_duration)
        out.append(row)
    return out


def write_timebank_tsv(rows: Sequence[TimeBankRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    writer.writerow(TIMEBANK_COLUMNS)
    for row in rows:
        writer.writerow([
            row.sentence,
            row.event_span[0],
            row.event_span[1],
            _format_quantity(row.min_duration[0]),
            row.min_duration[1].word,
            _format_quantity(row.max_duration[0]),
            row.max_duration[1].word,
        ])
    return buf.getvalue()


def _format_quantity(q: float) -> str:
    return str(int(q)) if float(q).is_integer() else repr(q)


def read_mctaco_jsonl(lines: Iterable[str]) -> list[McTacoRow]:
    """Parse JSONL rows with fields context, question, answer, gold."""
    out = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        try:
            out.append(
                McTacoRow(
                    context=obj["context"],
                    question=obj["question"],
                    answer=obj["answer"],
                    gold=bool(obj["gold"]),
                )
            )
        except KeyError as exc:
            raise MalformedRowError(f"missing field {exc} in row: {line[:80]}") from exc
    return out
