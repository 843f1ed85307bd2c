"""Self-contained HTML output: highlights overlaid on the source documents.

Each topic renders to one HTML file. Document text is reproduced exactly
from the stored sentences; selected spans are wrapped in <mark> elements.
Overlapping selections within a sentence are merged for display only. A
sidebar lists the highlights in selection order with their word total.
"""

from __future__ import annotations

import html
from typing import Sequence

from .corpus import Topic
from .segment import CandidateSegment

__all__ = ["render_html", "render_topic_html", "DanglingSegmentError"]

_CSS = """
body { font-family: Georgia, serif; margin: 0; display: flex; }
main { padding: 1.5rem 2rem; max-width: 46rem; }
aside { padding: 1.5rem; background: #f4f4f0; min-width: 18rem; border-left: 1px solid #ddd; }
h1 { font-size: 1.2rem; } h2 { font-size: 1rem; color: #444; }
p.sentence { margin: 0.3rem 0; line-height: 1.5; }
mark.hl { background: #ffe873; padding: 0 0.1em; }
aside ol { padding-left: 1.2rem; } aside li { margin-bottom: 0.5rem; }
.total { font-weight: bold; margin-top: 1rem; }
""".strip()


class DanglingSegmentError(ValueError):
    """A selected segment does not resolve to a sentence of the topic."""


def _merge_ranges(ranges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Union of overlapping inclusive ranges; adjacent ranges stay separate."""
    merged: list[tuple[int, int]] = []
    for lo, hi in sorted(ranges):
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def render_topic_html(topic: Topic, selected: Sequence[CandidateSegment]) -> str:
    by_doc = {doc.doc_id: doc for doc in topic.documents}
    per_sentence: dict[tuple[str, int], list[tuple[int, int]]] = {}
    sidebar: list[str] = []
    word_total = 0

    for seg in selected:
        doc = by_doc.get(seg.doc_id)
        if doc is None or seg.sentence_index >= len(doc.sentences):
            raise DanglingSegmentError(
                f"segment {seg.segment_id} points at missing "
                f"{seg.doc_id} sentence {seg.sentence_index}"
            )
        sentence = doc.sentences[seg.sentence_index]
        i, j = seg.token_range
        if j >= len(sentence.tokens):
            raise DanglingSegmentError(
                f"segment {seg.segment_id} token range {seg.token_range} exceeds "
                f"{seg.doc_id} sentence {seg.sentence_index}"
            )
        per_sentence.setdefault((seg.doc_id, seg.sentence_index), []).append((i, j))
        sidebar.append(sentence.span_text(i, j))
        word_total += seg.word_count

    parts = [
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8">',
        f"<title>{html.escape(topic.topic_id)}</title>",
        f"<style>{_CSS}</style></head><body>",
        "<main>",
        f"<h1>Topic {html.escape(topic.topic_id)}</h1>",
    ]
    for doc in topic.documents:
        parts.append(f"<h2>{html.escape(doc.doc_id)}</h2>")
        for sentence in doc.sentences:
            ranges = _merge_ranges(per_sentence.get((doc.doc_id, sentence.position), []))
            pieces = []
            cursor = 0
            for i, j in ranges:
                lo = sentence.tokens[i].char_span[0]
                hi = sentence.tokens[j].char_span[1]
                pieces.append(html.escape(sentence.text[cursor:lo]))
                pieces.append(f'<mark class="hl">{html.escape(sentence.text[lo:hi])}</mark>')
                cursor = hi
            pieces.append(html.escape(sentence.text[cursor:]))
            parts.append(f'<p class="sentence">{"".join(pieces)}</p>')
    parts.append("</main>")

    parts.append("<aside><h2>Highlights</h2><ol>")
    for text in sidebar:
        parts.append(f"<li>{html.escape(text)}</li>")
    parts.append("</ol>")
    parts.append(f'<p class="total">{word_total} words highlighted</p>')
    parts.append("</aside></body></html>")
    return "\n".join(parts) + "\n"


def render_html(
    topic: Topic, selected: Sequence[CandidateSegment], out_path: str
) -> None:
    content = render_topic_html(topic, selected)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(content)
