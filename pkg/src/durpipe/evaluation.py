"""Scoring protocols: coarse one-day split, fine-grained units with
approximate agreement, and QA correctness under the range rule.

Reports keep the raw confusion counts and one record per scored item so
that every aggregate can be recomputed from the report itself.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .units import (
    LESS_THAN_DAY,
    MORE_THAN_DAY,
    UNITS_7,
    UNITS_8,
    TemporalUnit,
    UnitInventory,
    approx_match,
    closest_unit,
    coarse_of_unit,
    coarse_of_value,
)

__all__ = [
    "RangeRule",
    "ItemRecord",
    "EvalReport",
    "ErrorProfile",
    "eval_coarse",
    "eval_fine",
    "eval_mctaco",
    "majority_baseline",
    "error_profile",
    "f1_from_counts",
    "report_to_json",
]


@dataclass(frozen=True)
class RangeRule:
    """Acceptance band for the exact head on QA data: an answer counts as
    correct when it lies within `range_width` of the predicted value in
    log-second space. 3.0 is the dev-tuned default."""

    range_width: float = 3.0

    def __post_init__(self) -> None:
        if not self.range_width > 0:
            raise ValueError(f"range must be positive, got {self.range_width}")


@dataclass(frozen=True)
class ItemRecord:
    item_id: str
    prediction: str
    gold: str
    correct: bool
    key: str = ""  # free-form grouping key (e.g. event word) for error profiles


@dataclass
class EvalReport:
    protocol: str
    accuracy: float
    f1_per_class: dict[str, float | None] = field(default_factory=dict)
    confusion: dict[str, dict[str, int]] = field(default_factory=dict)  # class -> tp/fp/fn
    exact_match: float | None = None
    items: list[ItemRecord] = field(default_factory=list)
    diagnostics: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "accuracy": self.accuracy,
            "f1_per_class": self.f1_per_class,
            "confusion": self.confusion,
            "exact_match": self.exact_match,
            "diagnostics": dict(sorted(self.diagnostics.items())),
            "items": [
                {
                    "id": rec.item_id,
                    "prediction": rec.prediction,
                    "gold": rec.gold,
                    "correct": rec.correct,
                    "key": rec.key,
                }
                for rec in self.items
            ],
        }

    def to_item_tsv(self) -> str:
        lines = ["id\tprediction\tgold\tcorrect\tkey"]
        for rec in self.items:
            lines.append(
                f"{rec.item_id}\t{rec.prediction}\t{rec.gold}\t{int(rec.correct)}\t{rec.key}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ErrorProfile:
    """Most frequent item keys among wrong and right predictions."""

    incorrect: tuple[tuple[str, int], ...]
    correct: tuple[tuple[str, int], ...]
    totals: dict[str, int]


def f1_from_counts(tp: int, fp: int, fn: int) -> float | None:
    """F1 from confusion counts; None when the class never occurs at all."""
    if tp == fp == fn == 0:
        return None
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def _coarse_label(pred: object) -> str:
    if isinstance(pred, TemporalUnit):
        return coarse_of_unit(pred)
    if isinstance(pred, str):
        if pred not in (LESS_THAN_DAY, MORE_THAN_DAY):
            raise ValueError(f"not a coarse label: {pred!r}")
        return pred
    return coarse_of_value(float(pred))


def eval_coarse(
    preds: Sequence[object],
    golds: Sequence[str],
    ids: Sequence[str] | None = None,
    keys: Sequence[str] | None = None,
) -> EvalReport:
    """Binary less-than-a-day task. Predictions may be log-second values
    (exact head), units (range head), or coarse labels directly."""
    if len(preds) != len(golds) or not golds:
        raise ValueError(f"need equal nonempty preds/golds, got {len(preds)}/{len(golds)}")
    counts = {label: {"tp": 0, "fp": 0, "fn": 0} for label in (LESS_THAN_DAY, MORE_THAN_DAY)}
    items = []
    hits = 0
    for i, (raw_pred, gold) in enumerate(zip(preds, golds)):
        if gold not in (LESS_THAN_DAY, MORE_THAN_DAY):
            raise ValueError(f"not a coarse gold label: {gold!r}")
        pred = _coarse_label(raw_pred)
        correct = pred == gold
        hits += correct
        if correct:
            counts[gold]["tp"] += 1
        else:
            counts[pred]["fp"] += 1
            counts[gold]["fn"] += 1
        items.append(ItemRecord(
            item_id=ids[i] if ids else str(i),
            prediction=pred,
            gold=gold,
            correct=correct,
            key=keys[i] if keys else "",
        ))
    return EvalReport(
        protocol="coarse",
        accuracy=hits / len(golds),
        f1_per_class={
            label: f1_from_counts(c["tp"], c["fp"], c["fn"]) for label, c in counts.items()
        },
        confusion=counts,
        items=items,
    )


def eval_fine(
    preds: Sequence[TemporalUnit],
    golds: Sequence[TemporalUnit],
    inventory: UnitInventory = UNITS_7,
    ids: Sequence[str] | None = None,
    keys: Sequence[str] | None = None,
) -> EvalReport:
    """Fine-grained unit task under approximate agreement."""
    if len(preds) != len(golds) or not golds:
        raise ValueError(f"need equal nonempty preds/golds, got {len(preds)}/{len(golds)}")
    inventory = tuple(inventory)
    items = []
    hits = 0
    for i, (pred, gold) in enumerate(zip(preds, golds)):
        if pred not in inventory:
            raise ValueError(f"prediction {pred.word} outside inventory")
        if gold not in inventory:
            raise ValueError(f"gold {gold.word} outside inventory")
        correct = approx_match(pred, gold)
        hits += correct
        items.append(ItemRecord(
            item_id=ids[i] if ids else str(i),
            prediction=pred.word,
            gold=gold.word,
            correct=correct,
            key=keys[i] if keys else "",
        ))
    return EvalReport(protocol="fine", accuracy=hits / len(golds), items=items)


def eval_mctaco(
    preds: Sequence[object] | Mapping[str, object],
    answers: Sequence[tuple[str, float, bool]],
    rule: RangeRule = RangeRule(),
    inventory: UnitInventory = UNITS_8,
) -> EvalReport:
    """QA correctness: the model judges each candidate answer of a question
    against its one prediction for that question.

    `answers` holds (question_id, log-second answer value, gold) triples;
    unparseable answers are expected to be dropped upstream. `preds` is
    either a mapping from question id to prediction or a sequence aligned
    with the question ids in order of first appearance. An exact-head
    prediction accepts answers within the rule's band; a range-head
    prediction accepts answers whose closest unit approximately matches.
    """
    if not answers:
        raise ValueError("no answers to evaluate")
    question_order: list[str] = []
    for qid, _, _ in answers:
        if qid not in question_order:
            question_order.append(qid)
    if isinstance(preds, Mapping):
        pred_by_qid = dict(preds)
    else:
        if len(preds) != len(question_order):
            raise ValueError(
                f"{len(question_order)} questions but {len(preds)} predictions"
            )
        pred_by_qid = dict(zip(question_order, preds))
    missing = [q for q in question_order if q not in pred_by_qid]
    if missing:
        raise ValueError(f"missing predictions for questions: {missing[:5]}")
    known = set(question_order)
    extra = sum(1 for q in pred_by_qid if q not in known)

    inventory = tuple(inventory)
    tp = fp = fn = 0
    hits = 0
    items = []
    per_question_ok: dict[str, bool] = {q: True for q in question_order}
    answer_index: Counter[str] = Counter()
    for qid, value, gold in answers:
        pred = pred_by_qid[qid]
        if isinstance(pred, TemporalUnit):
            verdict = approx_match(pred, closest_unit(value, inventory))
            shown = pred.word
        else:
            verdict = abs(value - float(pred)) <= rule.range_width
            shown = f"{float(pred):.6g}"
        correct = verdict == gold
        hits += correct
        per_question_ok[qid] = per_question_ok[qid] and correct
        if verdict and gold:
            tp += 1
        elif verdict and not gold:
            fp += 1
        elif not verdict and gold:
            fn += 1
        idx = answer_index[qid]
        answer_index[qid] += 1
        items.append(ItemRecord(
            item_id=f"{qid}#a{idx}",
            prediction=f"{shown}:{'correct' if verdict else 'incorrect'}",
            gold="correct" if gold else "incorrect",
            correct=correct,
            key=qid,
        ))
    report = EvalReport(
        protocol="mctaco",
        accuracy=hits / len(answers),
        f1_per_class={"correct": f1_from_counts(tp, fp, fn)},
        confusion={"correct": {"tp": tp, "fp": fp, "fn": fn}},
        exact_match=sum(per_question_ok.values()) / len(question_order),
        items=items,
    )
    if extra:
        report.diagnostics["predictions_without_answers"] = extra
    return report


def majority_baseline(
    golds: Sequence[object],
    protocol: str,
    inventory: UnitInventory = UNITS_7,
) -> EvalReport:
    """Constant predictor: "month" for the fine task (it approximately
    matches week, month and year), the majority label for the coarse task."""
    if not golds:
        raise ValueError("no gold labels")
    if protocol == "fine":
        preds = [TemporalUnit.MONTH] * len(golds)
        return eval_fine(preds, list(golds), inventory)
    if protocol == "coarse":
        tally = Counter(golds)
        majority = MORE_THAN_DAY if tally[MORE_THAN_DAY] >= tally[LESS_THAN_DAY] else LESS_THAN_DAY
        return eval_coarse([majority] * len(golds), list(golds))
    raise ValueError(f"majority baseline not defined for protocol {protocol!r}")


def error_profile(
    report: EvalReport,
    key_fn: Callable[[ItemRecord], str] | None = None,
    top_k: int | None = 15,
) -> ErrorProfile:
    """Count item keys among incorrect and correct predictions, most
    frequent first (ties broken lexicographically). top_k=None keeps all."""
    key_fn = key_fn or (lambda rec: rec.key)
    wrong: Counter[str] = Counter()
    right: Counter[str] = Counter()
    for rec in report.items:
        (right if rec.correct else wrong)[key_fn(rec)] += 1

    def ranked(counter: Counter[str]) -> tuple[tuple[str, int], ...]:
        ordered = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
        return tuple(ordered[:top_k] if top_k is not None else ordered)

    totals = dict(wrong)
    for key, n in right.items():
        totals[key] = totals.get(key, 0) + n
    return ErrorProfile(incorrect=ranked(wrong), correct=ranked(right), totals=totals)


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n"
