"""Command-line pipeline: synth -> build-cooccur -> recognize -> anticipate -> evaluate.

Stage boundaries are plain files, so any stage can be swapped for externally
produced data. All outputs are written atomically (temp file + rename).

Exit codes: 0 success, 1 usage error, 2 data validation or I/O error,
3 endpoint transport error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from ._fileio import atomic_write_text, dump_jsonl
from .anticipation import (
    DEFAULT_PROMPT,
    LlmPredictor,
    NgramPredictor,
    RepeatLastPredictor,
    fit_ngram,
    load_prompt_template,
)
from .cooccurrence import build_cooccurrence, load_matrix, save_matrix
from .dataset_io import (
    DEFAULT_HORIZON,
    load_annotations,
    load_distributions,
    load_predictions,
    save_annotations,
    save_distributions,
    save_predictions,
)
from .errors import DataError, LlmError
from .llm_client import LlmClient, LlmConfig, load_script, mock_from_script
from .metrics import corpus_eval, format_report, normalized_ed, save_report
from .recognition import (
    DEFAULT_TOP_K,
    group_segments,
    load_recognition,
    naive_clip,
    recognize_clip,
    save_recognition,
)
from .synthgen import SynthConfig, generate_corpus, provenance
from .taxonomy import Taxonomy, format_action, load_taxonomy, save_taxonomy


class UsageError(Exception):
    """Flag combinations argparse cannot express (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _map_over_clips(groups: dict, fn, workers: int) -> list:
    """Apply fn per clip, optionally threaded; results stay in input clip order."""
    items = list(groups.values())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(fn, items))
    else:
        batches = [fn(item) for item in items]
    return [result for batch in batches for result in batch]


def _cmd_synth(args) -> None:
    config = SynthConfig(
        num_verbs=args.verbs,
        num_nouns=args.nouns,
        num_templates=args.templates,
        routine_length=args.routine_length,
        num_clips=args.clips,
        observed_segments=args.n_obs,
        horizon=args.horizon,
        noise_temperature=args.tau,
        verb_distractor_mass=args.eps_verb,
        noun_distractor_mass=args.eps_noun,
        routine_jitter=args.jitter,
        seed=args.seed,
    )
    corpus = generate_corpus(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_taxonomy(out_dir / "taxonomy.txt", corpus.taxonomy)
    save_annotations(out_dir / "annotations.jsonl", corpus.annotations, corpus.taxonomy)
    save_distributions(out_dir / "distributions.jsonl", corpus.distributions)
    atomic_write_text(
        out_dir / "provenance.json", json.dumps(provenance(config, __version__), indent=2) + "\n"
    )
    print(
        f"wrote {len(corpus.annotations)} clips / {len(corpus.distributions)} segments to {out_dir}"
    )


def _cmd_build_cooccur(args) -> None:
    taxonomy = load_taxonomy(args.taxonomy)
    annotations = load_annotations(args.annotations, taxonomy, args.horizon)
    matrix = build_cooccurrence(annotations, taxonomy, args.alpha)
    save_matrix(args.out, matrix)
    print(f"wrote {matrix.shape[0]}x{matrix.shape[1]} matrix ({int(matrix.total())} actions) to {args.out}")


def _cmd_recognize(args) -> None:
    taxonomy = load_taxonomy(args.taxonomy)
    matrix = load_matrix(args.matrix, taxonomy)
    distributions = load_distributions(args.distributions, taxonomy)
    groups = group_segments(distributions)
    if args.naive:
        fn = naive_clip
    else:
        fn = lambda segments: recognize_clip(segments, matrix, args.top_k)
    results = _map_over_clips(groups, fn, args.workers)
    save_recognition(args.out, results, taxonomy)
    mode = "naive" if args.naive else f"reranked (top-{args.top_k})"
    print(f"wrote {len(results)} {mode} segments for {len(groups)} clips to {args.out}")


def _build_predictor(args, taxonomy: Taxonomy):
    """Predictor instance plus the client (when one exists) for request logging."""
    train = None
    if args.train_annotations:
        train = load_annotations(args.train_annotations, taxonomy, args.horizon)

    if args.predictor == "repeat-last":
        return RepeatLastPredictor(), None

    if args.predictor in ("ngram", "frequency"):
        if train is None:
            raise UsageError(f"--predictor {args.predictor} requires --train-annotations")
        order = 1 if args.predictor == "frequency" else args.order
        model = fit_ngram(train, order, args.beta, taxonomy)
        return NgramPredictor(model, args.mode, args.seed, args.sample_top_k), None

    # LLM path: a scripted mock when --llm-script is given, a live client otherwise.
    if args.llm_script:
        client = mock_from_script(load_script(args.llm_script))
    else:
        if not args.llm_endpoint or not args.llm_model:
            raise UsageError("--predictor llm requires --llm-endpoint and --llm-model (or --llm-script)")
        client = LlmClient(
            LlmConfig(
                endpoint_url=args.llm_endpoint,
                model_name=args.llm_model,
                temperature=args.llm_temperature,
                max_tokens=args.llm_max_tokens,
                timeout=args.llm_timeout,
                max_retries=args.llm_max_retries,
                auth_token_env_var=args.llm_auth_env,
            )
        )
    template = load_prompt_template(args.prompt_template) if args.prompt_template else DEFAULT_PROMPT
    fallback = None
    if train:
        fallback = fit_ngram(train, 1, 1.0, taxonomy).most_frequent_action()
    predictor = LlmPredictor(client, taxonomy, template, fallback, args.llm_temperature)
    return predictor, client


def _cmd_anticipate(args) -> None:
    taxonomy = load_taxonomy(args.taxonomy)
    results = load_recognition(args.recognition, taxonomy)
    groups: dict[str, list] = {}
    for result in results:
        groups.setdefault(result.clip_id, []).append(result)
    predictor, client = _build_predictor(args, taxonomy)

    def run_clip(item):
        clip_id, clip_results = item
        history = [r.chosen for r in sorted(clip_results, key=lambda r: r.segment_index)]
        return [predictor.predict(clip_id, history, args.horizon, args.candidates)]

    predictions = _map_over_clips(
        {cid: (cid, rs) for cid, rs in groups.items()}, run_clip, args.workers
    )
    save_predictions(args.out, predictions, taxonomy)
    if args.llm_request_log and client is not None:
        atomic_write_text(args.llm_request_log, dump_jsonl(client.requests))
    print(
        f"wrote {len(predictions)} prediction sets "
        f"({args.candidates} x {args.horizon} each) to {args.out}"
    )


def _cmd_evaluate(args) -> None:
    taxonomy = load_taxonomy(args.taxonomy)
    annotations = load_annotations(args.annotations, taxonomy, args.horizon)
    predictions = load_predictions(args.predictions, taxonomy, args.horizon)
    recognition = load_recognition(args.recognition, taxonomy) if args.recognition else None
    report = corpus_eval(predictions, annotations, recognition)
    if args.out:
        save_report(args.out, report)
    print(format_report(report))


def _cmd_report(args) -> None:
    taxonomy = load_taxonomy(args.taxonomy)
    annotations = load_annotations(args.annotations, taxonomy, args.horizon)
    record = next((r for r in annotations if r.clip_id == args.clip), None)
    if record is None:
        raise DataError(f"clip {args.clip!r} not found in {args.annotations}")

    lines = [f"clip {record.clip_id}"]
    recognition = None
    if args.recognition:
        recognition = [
            r for r in load_recognition(args.recognition, taxonomy) if r.clip_id == args.clip
        ]
        recognition.sort(key=lambda r: r.segment_index)
    lines.append("observed:")
    for i, action in enumerate(record.observed):
        line = f"  [{i}] {format_action(action, taxonomy)}"
        if recognition is not None and i < len(recognition):
            res = recognition[i]
            line += f"  | chosen: {format_action(res.chosen, taxonomy)}"
            line += f"  naive: {format_action(res.naive, taxonomy)}"
            if res.used_fallback:
                line += "  (fallback)"
        lines.append(line)
    if recognition:
        lines.append("candidates per segment:")
        for res in recognition:
            rendered = ", ".join(
                f"{format_action(c.action, taxonomy)} {c.score:.4g} ({c.branch})"
                for c in res.candidates
            )
            lines.append(f"  [{res.segment_index}] {rendered or '-'}")
    if record.future is not None:
        lines.append("future (ground truth):")
        lines.append("  " + ", ".join(format_action(a, taxonomy) for a in record.future))
    if args.predictions:
        sets = [
            p
            for p in load_predictions(args.predictions, taxonomy, args.horizon)
            if p.clip_id == args.clip
        ]
        if sets:
            lines.append("predicted candidates:")
            for idx, candidate in enumerate(sets[0].candidates):
                rendered = ", ".join(format_action(a, taxonomy) for a in candidate)
                if record.future is not None:
                    gt = [(a.verb, a.noun) for a in record.future]
                    ed = normalized_ed([(a.verb, a.noun) for a in candidate], gt)
                    lines.append(f"  [{idx}] action ED {ed:.4f}: {rendered}")
                else:
                    lines.append(f"  [{idx}] {rendered}")
    print("\n".join(lines))


def _build_parser() -> tuple[_Parser, set[str], list[_Parser]]:
    dests: set[str] = set()
    parser = _Parser(
        prog="ltakit",
        description="Long-term action anticipation pipeline: synthesize, re-rank, anticipate, evaluate.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file supplying flag defaults; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    # Subcommands parse into a fresh namespace whose values overwrite the root
    # one, so config-supplied defaults must be installed on every parser.
    parsers = [parser]

    def new_command(name, help_text):
        p = sub.add_parser(
            name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )
        p.add_argument("--config", help="JSON file supplying flag defaults; explicit flags win")
        parsers.append(p)
        return p

    def arg(p, *names, **kwargs):
        action = p.add_argument(*names, **kwargs)
        dests.add(action.dest)

    p = new_command("synth", "generate a seeded synthetic corpus")
    arg(p, "--out-dir", required=True, help="directory for taxonomy/annotations/distributions")
    arg(p, "--verbs", type=int, default=8, help="vocabulary size |V|")
    arg(p, "--nouns", type=int, default=96, help="vocabulary size |N|")
    arg(p, "--templates", type=int, default=3, help="number of routine templates")
    arg(p, "--routine-length", type=int, default=30, help="actions per routine cycle")
    arg(p, "--clips", type=int, default=200, help="number of clips to window out")
    arg(p, "--n-obs", type=int, default=8, help="observed segments per clip")
    arg(p, "--horizon", type=int, default=DEFAULT_HORIZON, help="future actions per clip (Z)")
    arg(p, "--tau", type=float, default=0.05, help="softening temperature for true labels")
    arg(p, "--eps-verb", type=float, default=0.0, help="mean distractor mass on verbs")
    arg(p, "--eps-noun", type=float, default=0.0, help="mean distractor mass on nouns")
    arg(p, "--jitter", type=float, default=0.0, help="per-position chance of going off-routine")
    arg(p, "--seed", type=int, default=0, help="generator seed")
    p.set_defaults(handler=_cmd_synth)

    p = new_command("build-cooccur", "tally the verb-noun co-occurrence matrix")
    arg(p, "--annotations", required=True, help="annotations JSONL")
    arg(p, "--taxonomy", required=True, help="taxonomy file")
    arg(p, "--alpha", type=float, default=0.0, help="additive smoothing")
    arg(p, "--horizon", type=int, default=DEFAULT_HORIZON, help="expected future length (Z)")
    arg(p, "--out", required=True, help="matrix file to write")
    p.set_defaults(handler=_cmd_build_cooccur)

    p = new_command("recognize", "re-rank per-segment distributions against co-occurrence")
    arg(p, "--distributions", required=True, help="distributions JSONL")
    arg(p, "--matrix", required=True, help="co-occurrence matrix file")
    arg(p, "--taxonomy", required=True, help="taxonomy file")
    arg(p, "--top-k", type=int, default=DEFAULT_TOP_K, help="anchors per branch")
    arg(p, "--naive", action="store_true", help="ablation: per-track argmax, no re-ranking")
    arg(p, "--workers", type=int, default=1, help="clip-parallel worker threads")
    arg(p, "--out", required=True, help="recognition JSONL to write")
    p.set_defaults(handler=_cmd_recognize)

    p = new_command("anticipate", "predict K future sequences per clip")
    arg(p, "--recognition", required=True, help="recognition JSONL (the observed history)")
    arg(p, "--taxonomy", required=True, help="taxonomy file")
    arg(p, "--predictor", choices=["ngram", "frequency", "repeat-last", "llm"], default="ngram",
        help="prediction backend")
    arg(p, "--train-annotations", help="annotations JSONL used to fit ngram/frequency (and the llm fallback)")
    arg(p, "--order", type=int, default=2, help="n-gram order m")
    arg(p, "--beta", type=float, default=0.1, help="n-gram additive smoothing")
    arg(p, "--horizon", type=int, default=DEFAULT_HORIZON, help="future actions to predict (Z)")
    arg(p, "--candidates", type=int, default=5, help="candidate sequences per clip (K)")
    arg(p, "--mode", choices=["greedy", "sample"], default="greedy", help="n-gram decoding mode")
    arg(p, "--seed", type=int, default=0, help="sampling seed")
    arg(p, "--sample-top-k", type=int, default=5, help="sampling truncation width")
    arg(p, "--prompt-template", help="JSON prompt template file (system_text, user_template)")
    arg(p, "--llm-endpoint", help="chat-completions endpoint URL")
    arg(p, "--llm-model", help="model name sent in requests")
    arg(p, "--llm-temperature", type=float, default=0.7, help="sampling temperature for candidates 2..K")
    arg(p, "--llm-max-tokens", type=int, default=256, help="completion token budget")
    arg(p, "--llm-timeout", type=float, default=30.0, help="request timeout in seconds")
    arg(p, "--llm-max-retries", type=int, default=3, help="transport retries per request")
    arg(p, "--llm-auth-env", default="", help="environment variable holding the bearer token")
    arg(p, "--llm-script", help="scripted mock responses (JSON array) instead of a live endpoint")
    arg(p, "--llm-request-log", help="write every request body (token-free) to this JSONL file")
    arg(p, "--workers", type=int, default=1, help="clip-parallel worker threads")
    arg(p, "--out", required=True, help="predictions JSONL to write")
    p.set_defaults(handler=_cmd_anticipate)

    p = new_command("evaluate", "score predictions against ground-truth futures")
    arg(p, "--predictions", required=True, help="predictions JSONL")
    arg(p, "--annotations", required=True, help="annotations JSONL with futures")
    arg(p, "--taxonomy", required=True, help="taxonomy file")
    arg(p, "--recognition", help="recognition JSONL; enables the AR accuracy block")
    arg(p, "--horizon", type=int, default=DEFAULT_HORIZON, help="future length (Z)")
    arg(p, "--out", help="report JSON to write")
    p.set_defaults(handler=_cmd_evaluate)

    p = new_command("report", "qualitative dump for a single clip")
    arg(p, "--clip", required=True, help="clip id to inspect")
    arg(p, "--annotations", required=True, help="annotations JSONL")
    arg(p, "--taxonomy", required=True, help="taxonomy file")
    arg(p, "--recognition", help="recognition JSONL")
    arg(p, "--predictions", help="predictions JSONL")
    arg(p, "--horizon", type=int, default=DEFAULT_HORIZON, help="future length (Z)")
    p.set_defaults(handler=_cmd_report)

    return parser, dests, parsers


def _peel_config(argv: list[str]) -> dict:
    """Read the --config file (if any) without disturbing normal parsing."""
    path = None
    for i, token in enumerate(argv):
        if token == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file argument")
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return raw


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, dests, parsers = _build_parser()
    try:
        config = _peel_config(argv)
        if config:
            unknown = sorted(k for k in config if k.replace("-", "_") not in dests)
            if unknown:
                raise UsageError(f"unknown config key {unknown[0]!r}")
            defaults = {k.replace("-", "_"): v for k, v in config.items()}
            for p in parsers:
                p.set_defaults(**defaults)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"ltakit: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help (0) or usage error (1)
        return exc.code if isinstance(exc.code, int) else 0
    try:
        args.handler(args)
    except UsageError as exc:
        print(f"ltakit: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"ltakit: error: {exc}", file=sys.stderr)
        return 2
    except LlmError as exc:
        print(f"ltakit: error: {exc}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
