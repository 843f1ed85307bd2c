import math
import random

import pytest

from hilite.corpus import Sentence, Chunk, chunk_sentence, tokenize
from hilite.segment import (
    CandidateSegment,
    TreeAlignmentError,
    enumerate_candidates,
    extract_tree_segments,
    parse_bracketed,
    quartile_filter,
)


def make_sentence(text, doc_id="d1", position=0):
    tokens = tuple(tokenize(text))
    return Sentence(doc_id, position, text, tokens, tuple(chunk_sentence(tokens)))


def make_candidate(seg_id, p_start, p_end, start=0, end=4, **kw):
    fields = dict(
        segment_id=seg_id,
        topic_id="t",
        doc_id="d1",
        sentence_index=0,
        token_range=(start, end),
        word_count=end - start + 1,
    )
    fields.update(kw)
    c = CandidateSegment(**fields)
    return c.with_scores(p_start, p_end)


def brute_force_spans(word_positions, min_words):
    """Independent enumeration: filter the power of all (a, b) pairs."""
    out = []
    for a in range(len(word_positions)):
        for b in range(len(word_positions)):
            if b >= a and b - a + 1 >= min_words:
                out.append((word_positions[a], word_positions[b]))
    return sorted(out)


def test_enumerate_below_minimum():
    s = make_sentence("only four words here")
    assert enumerate_candidates(s, s.chunks[0], 5) == []


def test_enumerate_exact_minimum():
    s = make_sentence("exactly five plain words here")
    spans = enumerate_candidates(s, s.chunks[0], 5)
    assert spans == [(0, 4)]


def test_enumerate_eight_words_gives_ten_spans():
    s = make_sentence("one two three four five six seven eight")
    spans = enumerate_candidates(s, s.chunks[0], 5)
    assert len(spans) == 10
    assert spans == brute_force_spans(list(range(8)), 5)


def test_enumerate_skips_internal_punctuation_in_word_count():
    # Quotes stay inside the chunk but do not count as words.
    s = make_sentence('the "new" rule was applied')
    chunk = s.chunks[0]
    spans = enumerate_candidates(s, chunk, 5)
    words = [k for k in range(chunk.first, chunk.last + 1) if not s.tokens[k].is_punct]
    assert spans == brute_force_spans(words, 5)
    for i, j in spans:
        assert not s.tokens[i].is_punct and not s.tokens[j].is_punct


def test_enumerate_closed_form_spot_checks():
    for n in (5, 6, 9, 17, 40):
        text = " ".join(f"w{k}" for k in range(n))
        s = make_sentence(text)
        spans = enumerate_candidates(s, s.chunks[0], 5)
        assert len(spans) == (n - 4) * (n - 3) // 2


def reference_quartile_filter(cands):
    """Ten-line reference implementation used as the oracle."""
    def q3(values):
        ordered = sorted(values)
        return ordered[math.ceil(0.75 * len(ordered)) - 1]

    q3s = q3([c.p_start for c in cands])
    q3e = q3([c.p_end for c in cands])
    return {c.segment_id for c in cands if c.p_start >= q3s and c.p_end >= q3e}


def test_quartile_single_candidate_survives():
    c = make_candidate(0, 0.2, 0.9)
    assert quartile_filter([c]) == [c]


def test_quartile_four_candidates_expected_survivors():
    cands = [make_candidate(k, p, p) for k, p in enumerate([0.1, 0.2, 0.3, 0.4])]
    survivors = quartile_filter(cands)
    assert {c.segment_id for c in survivors} == reference_quartile_filter(cands)
    assert {c.p_start for c in survivors} == {0.3, 0.4}


def test_quartile_identical_values_all_survive():
    cands = [make_candidate(k, 0.5, 0.5) for k in range(6)]
    assert len(quartile_filter(cands)) == 6


def test_quartile_empty():
    assert quartile_filter([]) == []


def test_quartile_matches_reference_on_random_inputs():
    rng = random.Random(7)
    for _ in range(300):
        n = rng.randint(1, 12)
        cands = [
            make_candidate(k, rng.random(), rng.random()) for k in range(n)
        ]
        got = {c.segment_id for c in quartile_filter(cands)}
        assert got == reference_quartile_filter(cands)


def test_quartile_ordering_deterministic():
    cands = [
        make_candidate(0, 0.9, 0.9, start=2, end=8),
        make_candidate(1, 0.9, 0.9, start=0, end=6),
        make_candidate(2, 0.9, 0.9, start=0, end=4),
    ]
    survivors = quartile_filter(cands)
    # Equal p_self: earlier start wins, then shorter span.
    assert [c.segment_id for c in survivors] == [2, 1, 0]


def test_parse_bracketed_shape():
    tree = parse_bracketed("(S (NP (DT the) (NN dog)) (VP (VBD ran)))")
    assert tree.label == "S"
    assert [c.label for c in tree.children] == ["NP", "VP"]
    assert tree.children[0].children[0].children[0].leaf_text == "the"


def test_parse_bracketed_rejects_garbage():
    from hilite.corpus import CorpusError

    with pytest.raises(CorpusError):
        parse_bracketed("(S (NP broken")


def test_tree_single_node_whole_sentence():
    s = make_sentence("five whole words right here")
    tree = parse_bracketed("(S five whole words right here)")
    assert extract_tree_segments(tree, s, 5, 4) == [(0, 4)]


def test_tree_np_vp_example():
    s = make_sentence("the dog chased the red ball")
    tree = parse_bracketed("(S (NP the dog) (VP chased the red ball))")
    spans = extract_tree_segments(tree, s, 3, 4)
    # Root span first (depth 0), then the VP (4 words); NP dropped at 2 words.
    assert spans == [(0, 5), (2, 5)]


def test_tree_truncation_to_root():
    s = make_sentence("the dog chased the red ball")
    tree = parse_bracketed("(S (NP the dog) (VP chased the red ball))")
    assert extract_tree_segments(tree, s, 1, 1) == [(0, 5)]


def test_tree_punct_leaves_skipped():
    s = make_sentence("storms hit , travel slowed badly .")
    tree = parse_bracketed(
        "(S (S (NP storms) (VP hit)) (, ,) (S (NP travel) (VP slowed badly)) (. .))"
    )
    spans = extract_tree_segments(tree, s, 2, 8)
    texts = [[t.text for t in s.tokens[i:j + 1]] for i, j in spans]
    assert ["storms", "hit", ",", "travel", "slowed", "badly"] in texts


def test_tree_misaligned_raises():
    s = make_sentence("four words are here")
    tree = parse_bracketed("(S (NP the dog) (VP ran))")
    with pytest.raises(TreeAlignmentError, match="d1 sentence 0"):
        extract_tree_segments(tree, s, 1, 4)


def test_tree_spans_contiguous_and_deduplicated():
    s = make_sentence("a b c d e f g h")
    tree = parse_bracketed("(S (X (Y a b c d)) (Z e f g h))")
    spans = extract_tree_segments(tree, s, 1, 10)
    assert len(spans) == len(set(spans))
    # Unary chain X over Y yields one copy of the shared span.
    assert spans.count((0, 3)) == 1
