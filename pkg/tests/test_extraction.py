import io
import math

import pytest

from durpipe.extraction import (
    ExtractionConfig,
    DurationExpression,
    MatchResult,
    extract_corpus,
    failed_filters,
    label_sentence,
    match_sentence,
    passes_filters,
    read_documents,
    read_instances,
    segment_sentences,
    write_instances,
)
from durpipe.units import InvalidQuantityError, TemporalUnit

import oracles
from fixture_gen import generate_sentences


def test_match_figure_example():
    m = match_sentence("He was jailed for 23 years.")
    assert m is not None
    assert m.trigger == "for"
    assert m.expression.quantity == 23
    assert m.expression.unit is TemporalUnit.YEAR
    assert "He was jailed for 23 years."[slice(*m.expression.span)] == "23 years"


def test_no_match_without_trigger_or_numeral():
    assert match_sentence("He smiled.") is None
    assert match_sentence("They take their work seriously.") is None
    assert match_sentence("Roughly 3 hours had passed.") is None


def test_leftmost_match_only():
    m = match_sentence("It took 3 hours, then 2 days.")
    assert m.trigger == "took"
    assert m.expression.quantity == 3
    assert m.expression.unit is TemporalUnit.HOUR


def test_greedy_gap_takes_furthest_value_in_clause():
    # mirrors the source pattern: the unpunctuated gap is greedy
    m = match_sentence("He ran for 2 hours and 3 days")
    assert m.expression.quantity == 3
    assert m.expression.unit is TemporalUnit.DAY


def test_clause_punctuation_blocks_the_gap():
    assert match_sentence("It was over, 3 hours they said.") is None


def test_unit_case_insensitive_trigger_case_sensitive():
    assert match_sentence("stayed for 2 Hours straight") is not None
    assert match_sentence("For 2 hours they trained") is None


def test_numeral_not_split_by_greedy_gap():
    m = match_sentence("jailed for 115 years total")
    assert m.expression.quantity == 115


def test_trigger_substring_inside_word_matches():
    # "for" inside "performed" is a trigger occurrence under the raw pattern
    m = match_sentence("He performed 2 hours of surgery.")
    assert m is not None
    assert m.trigger == "for"
    assert m.expression.quantity == 2


@pytest.mark.parametrize(
    "sentence,expected_filter",
    [
        ("It lasted for more than 10 years.", "word_blocklist"),
        ("They took breaks every 2 weeks on schedule.", "word_blocklist"),
        ("He took first time honors in 3 years.", "ordinal_time"),
        ("The council spent 4 years planning 12 secondary schools.", "numeric_secondary"),
        ("He looked over 23 years old.", "unit_old"),
    ],
)
def test_filters_reject_matched_sentences(sentence, expected_filter):
    m = match_sentence(sentence)
    assert m is not None, sentence
    assert expected_filter in failed_filters(m, sentence)
    assert not passes_filters(m, sentence)


def test_clean_sentence_passes_all_filters():
    sentence = "He was jailed for 23 years."
    m = match_sentence(sentence)
    assert failed_filters(m, sentence) == []


def test_age_sentence_without_trigger_never_matches():
    # no trigger word at all, so the pipeline cannot emit it
    assert match_sentence("She is 23 years old.") is None
    instances, stats = extract_corpus([("d", "She is 23 years old.")])
    assert instances == []
    assert stats.matched == 0


def test_filter_words_are_whole_words():
    sentence = "The strike lasted 3 weeks later that year."
    m = match_sentence(sentence)
    assert m is not None
    # "later" contains "at" but must not trip the word filter
    assert passes_filters(m, sentence)


def test_label_sentence_masks_expression():
    sentence = "He was jailed for 23 years."
    inst = label_sentence(sentence, match_sentence(sentence), "doc#0")
    assert inst.masked_text == "He was jailed for [MASK] [MASK]."
    assert inst.mask_positions == (4, 5)
    assert inst.exact_label == pytest.approx(math.log(23 * 31_536_000))
    assert inst.range_label is TemporalUnit.DECADE


def test_label_sentence_one_hour():
    sentence = "It took 1 hour."
    inst = label_sentence(sentence, match_sentence(sentence), "doc#1")
    assert inst.masked_text == "It took [MASK] [MASK]."
    assert inst.exact_label == pytest.approx(math.log(3600))


def test_label_sentence_expression_at_start():
    # label_sentence only needs a consistent MatchResult, wherever it came from
    sentence = "3 days of work remained."
    m = MatchResult(
        trigger="", trigger_family="", trigger_span=(0, 0),
        expression=DurationExpression(3.0, TemporalUnit.DAY, (0, 6)),
        matched_text="3 days", match_span=(0, 6),
    )
    inst = label_sentence(sentence, m)
    assert inst.masked_text == "[MASK] [MASK] of work remained."
    assert inst.mask_positions == (0, 1)


def test_label_sentence_rejects_overflowing_numeral():
    sentence = f"They took {'9' * 400} years."
    m = match_sentence(sentence)
    assert m is not None
    with pytest.raises(InvalidQuantityError):
        label_sentence(sentence, m)


def test_label_sentence_rejects_zero_quantity():
    sentence = "It took 0 seconds exactly."
    m = match_sentence(sentence)
    with pytest.raises(InvalidQuantityError):
        label_sentence(sentence, m)


def test_segment_sentences():
    text = "He ran. She walked! Did they rest? Yes."
    assert segment_sentences(text) == ["He ran.", "She walked!", "Did they rest?", "Yes."]
    assert segment_sentences("No terminal punctuation here") == ["No terminal punctuation here"]


# Three documents, five clean planted matches, two filter traps.
FIXTURE_DOCS = [
    ("news-1",
     "The siege lasted for 23 years. It lasted for more than 10 years they claimed. "
     "Repairs took 3 hours."),
    ("news-2", "She spent 2 weeks at sea. The crew smiled."),
    ("news-3",
     "The inquiry ran for 6 months. He looked over 23 years old. "
     "Overnight the journey took 45 minutes."),
]


def test_extract_corpus_fixture_counts():
    # "at sea" follows the expression, so it is outside the matched
    # sub-sentence and the word filter stays quiet there
    instances, stats = extract_corpus(FIXTURE_DOCS)
    assert stats.documents == 3
    assert stats.sentences == 8
    assert stats.matched == len(instances) + stats.filtered
    assert stats.filtered == 2
    assert len(instances) == 5
    assert {i.source_id for i in instances} == {
        "news-1#0", "news-1#2", "news-2#0", "news-3#0", "news-3#2"
    }
    assert stats.by_filter == {"word_blocklist": 1, "unit_old": 1}


def test_extract_corpus_for_only_subset():
    cfg = ExtractionConfig.from_selector("for-only")
    instances, stats = extract_corpus(FIXTURE_DOCS, cfg)
    assert set(stats.by_trigger) == {"for"}
    # only the "for"-triggered clean sentences survive
    assert {i.source_id for i in instances} == {"news-1#0", "news-3#0"}


def test_extract_corpus_empty_stream():
    instances, stats = extract_corpus([])
    assert instances == []
    assert stats.documents == 0
    assert stats.emitted == 0


def test_stats_merge_is_associative_add():
    _, a = extract_corpus(FIXTURE_DOCS[:1])
    _, b = extract_corpus(FIXTURE_DOCS[1:])
    _, whole = extract_corpus(FIXTURE_DOCS)
    merged = a.merge(b)
    assert merged.to_json() == whole.to_json()
    # merge leaves the operands untouched
    assert a.documents == 1 and b.documents == 2


def test_extract_corpus_skips_undecodable():
    docs = [("bad", b"\xff\xfe\x00bogus"), ("good", "It took 2 days.")]
    instances, stats = extract_corpus(docs)
    assert stats.skipped_documents == 1
    assert len(instances) == 1


def test_extract_corpus_counts_skipped_quantities():
    docs = [("d", f"It took {'9' * 400} years. It took 0 days.")]
    instances, stats = extract_corpus(docs)
    assert instances == []
    assert stats.matched == 2
    assert stats.skipped_instances == 2


def test_selector_parsing():
    assert ExtractionConfig.from_selector("all").enabled_patterns is None
    assert ExtractionConfig.from_selector("for-only").enabled_patterns == ("for",)
    assert ExtractionConfig.from_selector("for,take").enabled_patterns == ("for", "take")
    with pytest.raises(ValueError):
        ExtractionConfig.from_selector("bogus-only")


def test_instances_jsonl_roundtrip():
    instances, _ = extract_corpus(FIXTURE_DOCS)
    payload = write_instances(instances)
    assert read_instances(io.StringIO(payload)) == instances


def test_read_documents_jsonl():
    lines = ['{"id": "a", "text": "It took 2 days."}', "", '{"text": "He smiled."}']
    docs = list(read_documents(lines))
    assert docs[0] == ("a", "It took 2 days.")
    assert docs[1][1] == "He smiled."


# --- agreement with the reference scanner ---------------------------------


def _assert_agreement(sentences):
    docs = [(f"s{i}", s) for i, s in enumerate(sentences)]
    instances, stats = extract_corpus(docs)
    # extract_corpus segments per document; fixtures are single sentences,
    # but source ids append the in-document sentence index
    got = [
        (i.masked_text, i.mask_positions, i.range_label.word, i.source_id.split("#")[0])
        for i in instances
    ]
    got_values = [i.exact_label for i in instances]

    want_inst, matched, filtered, skipped = oracles.scan_corpus(sentences)
    want = [
        (w["masked_text"], w["mask_positions"], w["range_label"], w["source_id"])
        for w in want_inst
    ]
    want_values = [w["exact_label"] for w in want_inst]

    assert got == want
    assert stats.matched == matched
    assert stats.filtered == filtered
    assert stats.skipped_instances == skipped
    for a, b in zip(got_values, want_values):
        assert math.isclose(a, b, rel_tol=1e-12)


def test_scanner_agreement_on_handpicked_sentences():
    _assert_agreement([
        "He was jailed for 23 years.",
        "It took 3 hours, then 2 days.",
        "He ran for 2 hours and 3 days straight",
        "The overall mission lasted 18 months as planned.",
        "He performed 2 hours of surgery.",
        "They met every 2 weeks on schedule.",
        "Set take mode x427 5 days.",
        "It spent 0 seconds exactly.",
        "For 2 hours they trained.",
        "A blast shook the mine for 3 seconds.",
        "The yearly audit took 2 weeks overall.",
    ])


def test_scanner_agreement_on_randomized_fixtures():
    _assert_agreement(generate_sentences(250, seed=91))


def test_emitted_instances_satisfy_contract():
    sentences = generate_sentences(250, seed=17)
    docs = [(f"s{i}", s) for i, s in enumerate(sentences)]
    instances, _ = extract_corpus(docs)
    assert instances, "fixture should plant some matches"
    for inst in instances:
        # labels are finite and nonnegative (integer numerals are >= 1)
        assert math.isfinite(inst.exact_label)
        assert inst.exact_label >= 0.0
        assert inst.mask_positions
        # un-masking with any expression re-matches the main pattern
        rebuilt = inst.masked_text.replace("[MASK] [MASK]", "7 weeks").replace("[MASK]", "7")
        assert match_sentence(rebuilt) is not None
        # the matched sub-sentence of the rebuilt sentence passes filters
        m = match_sentence(rebuilt)
        assert passes_filters(m, rebuilt)
