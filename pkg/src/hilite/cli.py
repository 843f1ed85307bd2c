"""Command line interface.

Subcommands cover the whole pipeline, JSONL in and out at every stage:

    segment    enumerate, score and filter candidate segments
    score      build a span score cache through the scoring gateway
    label      construct ground-truth segment labels from references
    train      fit the quality model on labeled topics
    summarize  select highlight segments under the word budget
    evaluate   score selections against references (R-1 / R-2 / R-SU4)
    stats      corpus statistics over generated segments

Exit codes: 0 success, 1 data or runtime error, 2 usage error.
Diagnostics go to stderr; data goes to --out files or stdout.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import corpus, dpp, oracle, pipeline, rouge, scores, segment
from .corpus import CorpusError
from .dpp import TrainConfig, TrainingInstance
from .features import (
    FeatureConfigError,
    PyramidFeaturizer,
    PyramidServiceClient,
    TfidfModel,
    assemble_features,
    similarity_matrix,
)
from .html_render import DanglingSegmentError, render_html
from .scores import SCORER_URL_ENV, GatewayError

__all__ = ["main"]


class DataError(RuntimeError):
    """Input files are inconsistent with each other or with the flags."""


@contextlib.contextmanager
def _open_out(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _load_topics(path: str, budget: int = 100) -> list[corpus.Topic]:
    return corpus.load_topics(path, budget_words=budget)


def _candidates_by_topic(path: str) -> dict[str, list[segment.CandidateSegment]]:
    grouped: dict[str, list[segment.CandidateSegment]] = {}
    for c in segment.read_candidates(path):
        grouped.setdefault(c.topic_id, []).append(c)
    return grouped


def _map_topics(jobs: int, fn, items: list):
    """Apply fn over topics, optionally in a thread pool, preserving order."""
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _build_scorer(args, topics) -> scores.ScoreSource:
    if args.method == "fallback" or getattr(args, "source", None) == "fallback":
        model = scores.train_fallback(topics, alpha=args.alpha)
        return scores.FallbackScoreSource(model)
    if getattr(args, "source", None) == "http":
        return scores.HttpScoreSource(getattr(args, "url", None))
    if args.method == "xlnet-scores":
        if not args.scores:
            raise DataError("score file required for --method xlnet-scores")
        return scores.FileScoreSource(args.scores)
    raise DataError(f"no scorer for method {args.method!r}")


def _featurizer(topic: corpus.Topic, mode: str, url: str | None) -> PyramidFeaturizer:
    tfidf = TfidfModel(topic)
    if mode == "service":
        endpoint = os.environ.get(SCORER_URL_ENV) or url
        if not endpoint:
            raise DataError(
                f"pyramid service mode needs --url or {SCORER_URL_ENV}"
            )
        return PyramidFeaturizer(tfidf, PyramidServiceClient(endpoint))
    return PyramidFeaturizer(tfidf)


def _cmd_segment(args) -> int:
    topics = _load_topics(args.topics, args.budget)
    if args.method == "tree":
        if not args.parses:
            raise DataError("parse file required for --method tree")
        parses = segment.load_parse_sidecar(args.parses)

        def run_tree(topic):
            return pipeline.tree_candidates(
                topic, parses, args.min_words, args.max_per_sentence
            )

        results = _map_topics(args.jobs, run_tree, topics)
    else:
        scorer = _build_scorer(args, topics)

        def run_prob(topic):
            cands = pipeline.generate_candidates(topic, args.min_words)
            scored = pipeline.score_candidates(topic, cands, scorer)
            return pipeline.filter_and_rank(scored, args.max_per_sentence)

        results = _map_topics(args.jobs, run_prob, topics)

    with _open_out(args.out) as fh:
        for cands in results:
            segment.write_candidates(cands, fh)
    total = sum(len(r) for r in results)
    print(f"segment: wrote {total} candidates for {len(topics)} topic(s)", file=sys.stderr)
    return 0


def _cmd_score(args) -> int:
    topics = _load_topics(args.topics, args.budget)
    if args.source == "fallback":
        source = scores.FallbackScoreSource(scores.train_fallback(topics, alpha=args.alpha))
    else:
        source = scores.HttpScoreSource(args.url)
    rows = []
    for topic in topics:
        cands = pipeline.generate_candidates(topic, args.min_words)
        requests = []
        by_doc = {doc.doc_id: doc for doc in topic.documents}
        for c in cands:
            sentence = by_doc[c.doc_id].sentences[c.sentence_index]
            requests.append(
                scores.ScoreRequest(
                    request_id=str(c.segment_id),
                    sentence_tokens=tuple(t.text for t in sentence.tokens),
                    span=c.token_range,
                    doc_id=c.doc_id,
                    sentence_index=c.sentence_index,
                )
            )
        responses = scores.score_spans(source, requests)
        rows.extend(zip(requests, responses))
    with _open_out(args.out) as fh:
        scores.write_score_file(rows, fh)
    print(f"score: wrote {len(rows)} span scores", file=sys.stderr)
    return 0


def _cmd_label(args) -> int:
    topics = _load_topics(args.topics, args.budget)
    grouped = _candidates_by_topic(args.candidates)

    def run(topic):
        return oracle.build_oracle_labels(topic, grouped.get(topic.topic_id, []))

    results = _map_topics(args.jobs, run, topics)
    with _open_out(args.out) as fh:
        oracle.write_labels(results, fh)
    print(f"label: labeled {len(results)} topic(s)", file=sys.stderr)
    return 0


def _resolve_label_indices(
    cands: list[segment.CandidateSegment], spans: list[dict], topic_id: str
) -> tuple[int, ...]:
    index = {
        (c.doc_id, c.sentence_index, c.token_range[0], c.token_range[1]): k
        for k, c in enumerate(cands)
    }
    out = []
    for span in spans:
        key = (span["doc_id"], span["sentence_index"], span["i"], span["j"])
        if key not in index:
            raise DataError(
                f"label span {key} of topic {topic_id} is not among the candidates"
            )
        out.append(index[key])
    return tuple(out)


def _cmd_train(args) -> int:
    topics = _load_topics(args.topics, args.budget)
    grouped = _candidates_by_topic(args.candidates)
    labels = oracle.read_labels(args.labels)

    instances = []
    pyramid_dim = None
    for topic in topics:
        spans = labels.get(topic.topic_id)
        cands = grouped.get(topic.topic_id, [])
        if not spans or not cands:
            print(f"train: skipping topic {topic.topic_id} (no labels or candidates)",
                  file=sys.stderr)
            continue
        featurizer = _featurizer(topic, args.pyramid, args.url)
        if pyramid_dim is None:
            pyramid_dim = featurizer.dim
        elif pyramid_dim != featurizer.dim:
            raise FeatureConfigError("pyramid feature dimension changed between topics")
        feats = assemble_features(topic, cands, featurizer)
        S = similarity_matrix(pipeline._segment_token_lists(topic, cands), featurizer.tfidf)
        selected = _resolve_label_indices(cands, spans, topic.topic_id)
        instances.append(
            TrainingInstance(feats, S, selected, topic.topic_id)
        )
    if not instances:
        raise DataError("no trainable topics (missing labels or candidates)")

    config = TrainConfig(learning_rate=args.lr, max_iters=args.iters, tol=args.tol)
    result = dpp.train(instances, config, pyramid_dim=pyramid_dim)
    dpp.save_model(result.model, args.out)
    print(
        f"train: {result.iterations} iterations, final log-likelihood "
        f"{result.trace[-1]:.6f}, {result.skipped_instances} skipped instance(s)",
        file=sys.stderr,
    )
    return 0


def _cmd_summarize(args) -> int:
    topics = _load_topics(args.topics, args.budget)
    grouped = _candidates_by_topic(args.candidates)
    model = dpp.load_model(args.model)

    def run(topic):
        featurizer = _featurizer(topic, args.pyramid, args.url)
        expected = featurizer.dim + 4 + 1
        if expected != model.feature_dim:
            raise FeatureConfigError(
                f"model was trained with {model.feature_dim} features but the "
                f"current pyramid source yields {expected}"
            )
        return pipeline.select_summary(
            topic, grouped.get(topic.topic_id, []), model, featurizer
        )

    selections = _map_topics(args.jobs, run, topics)
    with _open_out(args.out) as fh:
        pipeline.write_selections(selections, fh)
    if args.html:
        os.makedirs(args.html, exist_ok=True)
        for topic, sel in zip(topics, selections):
            render_html(topic, sel.segments, os.path.join(args.html, f"{topic.topic_id}.html"))
    total = sum(len(s.segments) for s in selections)
    print(f"summarize: selected {total} segments over {len(topics)} topic(s)",
          file=sys.stderr)
    return 0


def _cmd_evaluate(args) -> int:
    topics = {t.topic_id: t for t in _load_topics(args.topics, args.budget)}
    selections = pipeline.read_selections(args.selections)

    per_topic: dict[str, list[rouge.Score]] = {"R1": [], "R2": [], "RSU4": []}
    for topic_id, spans in selections.items():
        topic = topics.get(topic_id)
        if topic is None:
            raise DataError(f"selection references unknown topic {topic_id}")
        summary_tokens: list[str] = []
        by_doc = {doc.doc_id: doc for doc in topic.documents}
        for span in spans:
            doc = by_doc.get(span["doc_id"])
            if doc is None:
                raise DataError(
                    f"selection for topic {topic_id} references unknown doc "
                    f"{span['doc_id']}"
                )
            sentence = doc.sentences[span["sentence_index"]]
            summary_tokens.extend(
                t.text for t in sentence.tokens[span["i"]:span["j"] + 1]
            )
        refs = topic.reference_token_texts()
        limit = topic.budget_words
        per_topic["R1"].append(rouge.rouge_n(summary_tokens, refs, 1, True, limit))
        per_topic["R2"].append(rouge.rouge_n(summary_tokens, refs, 2, True, limit))
        per_topic["RSU4"].append(rouge.rouge_su4(summary_tokens, refs, True, limit))

    n_topics = len(per_topic["R1"])
    report: dict = {}
    for metric in ("R1", "R2", "RSU4"):
        scored = per_topic[metric]
        mean = [sum(s[k] for s in scored) / n_topics for k in range(3)] if n_topics else [0.0] * 3
        entry = {"p": mean[0], "r": mean[1], "f": mean[2], "ci95": None}
        if args.bootstrap > 0:
            ci = rouge.bootstrap_ci(scored, args.bootstrap, 0.95, args.seed)
            if ci is None:
                print("evaluate: fewer than two topics, confidence intervals omitted",
                      file=sys.stderr)
            else:
                entry["ci95"] = [ci["f"].low, ci["f"].high]
        report[metric] = entry
    report["topics"] = n_topics
    report["bootstrap"] = args.bootstrap
    report["seed"] = args.seed

    with _open_out(args.out) as fh:
        json.dump(report, fh, ensure_ascii=False)
        fh.write("\n")
    return 0


def _cmd_stats(args) -> int:
    topics = _load_topics(args.topics, args.budget)
    grouped = _candidates_by_topic(args.candidates)
    stats = pipeline.segment_stats(topics, grouped)
    with _open_out(args.out) as fh:
        json.dump(stats, fh, ensure_ascii=False)
        fh.write("\n")
    return 0


def _apply_config(
    subparser: argparse.ArgumentParser, namespace, path: str, argv: list[str]
) -> None:
    """key=value config defaults; explicitly passed flags always win."""
    if not os.path.exists(path):
        raise DataError(f"config file not found: {path}")
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}: line {lineno} is not key=value")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    for action in subparser._actions:
        if action.dest not in values:
            continue
        explicit = any(
            arg in action.option_strings
            or any(arg.startswith(opt + "=") for opt in action.option_strings)
            for arg in argv
        )
        if explicit:
            continue
        raw = values[action.dest]
        setattr(namespace, action.dest, action.type(raw) if action.type else raw)


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="hilite",
        description="Sub-sentence summary highlighting for multi-document topics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    by_name: dict[str, argparse.ArgumentParser] = {}

    def common(p: argparse.ArgumentParser, jobs: bool = False) -> None:
        p.add_argument("--topics", required=True, help="topic corpus JSONL")
        p.add_argument("--budget", type=int, default=100, help="summary word budget")
        p.add_argument("--config", help="key=value defaults file; flags win")
        p.add_argument("--out", help="output path (default stdout)")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="topic-level parallelism")

    p = by_name["segment"] = sub.add_parser("segment", help="generate candidate segments")
    common(p, jobs=True)
    p.add_argument("--method", choices=("fallback", "xlnet-scores", "tree"),
                   default="fallback")
    p.add_argument("--scores", help="score cache JSONL for --method xlnet-scores")
    p.add_argument("--parses", help="parse sidecar JSONL for --method tree")
    p.add_argument("--min-words", type=int, default=segment.DEFAULT_MIN_WORDS)
    p.add_argument("--max-per-sentence", type=int, default=segment.DEFAULT_MAX_PER_SENTENCE)
    p.add_argument("--alpha", type=float, default=1.0, help="fallback smoothing")
    p.set_defaults(func=_cmd_segment)

    p = by_name["score"] = sub.add_parser("score", help="emit a span score cache")
    common(p)
    p.add_argument("--source", choices=("fallback", "http"), default="fallback")
    p.add_argument("--url", help="scorer service base URL")
    p.add_argument("--min-words", type=int, default=segment.DEFAULT_MIN_WORDS)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(func=_cmd_score)

    p = by_name["label"] = sub.add_parser("label", help="build oracle ground-truth labels")
    common(p, jobs=True)
    p.add_argument("--candidates", required=True)
    p.set_defaults(func=_cmd_label)

    p = by_name["train"] = sub.add_parser("train", help="train the quality model")
    common(p)
    p.add_argument("--candidates", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--pyramid", choices=("fallback", "service"), default="fallback")
    p.add_argument("--url", help="scorer service base URL for --pyramid service")
    p.set_defaults(func=_cmd_train)

    p = by_name["summarize"] = sub.add_parser("summarize", help="select highlight segments")
    common(p, jobs=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--html", help="directory for per-topic HTML renderings")
    p.add_argument("--pyramid", choices=("fallback", "service"), default="fallback")
    p.add_argument("--url", help="scorer service base URL for --pyramid service")
    p.set_defaults(func=_cmd_summarize)

    p = by_name["evaluate"] = sub.add_parser("evaluate", help="score selections with ROUGE")
    common(p)
    p.add_argument("--selections", required=True)
    p.add_argument("--bootstrap", type=int, default=1000,
                   help="bootstrap resamples; 0 disables confidence intervals")
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(func=_cmd_evaluate)

    p = by_name["stats"] = sub.add_parser("stats", help="segment statistics")
    common(p)
    p.add_argument("--candidates", required=True)
    p.set_defaults(func=_cmd_stats)

    return parser, by_name


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, by_name = _build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            _apply_config(by_name[args.command], args, args.config, list(argv))
        return args.func(args)
    except (CorpusError, DataError, GatewayError, FeatureConfigError,
            DanglingSegmentError, dpp.TrainingDivergedError, dpp.NumericalError,
            segment.TreeAlignmentError, FileNotFoundError, ValueError) as exc:
        print(f"hilite {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
