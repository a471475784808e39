"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 I/O
error. Every stochastic subcommand takes an explicit --seed; nothing
falls back to the wall clock, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import VqbenchError
from .store import IoFailure

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") or not text else text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_categorize(args) -> int:
    from .taxonomy import categorize, load_keyword_table

    table = load_keyword_table(args.table)
    with open(args.prompts, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    rows = []
    for i, line in enumerate(lines):
        if line.lstrip().startswith("{"):
            try:
                obj = json.loads(line)
                prompt_id, text = obj["prompt_id"], obj["text"]
            except (json.JSONDecodeError, KeyError) as exc:
                raise VqbenchError(f"{args.prompts} line {i + 1}: bad prompt record: {exc}") from exc
        else:
            prompt_id, text = f"p{i:04d}", line
        cats = categorize(text, table)
        rows.append(json.dumps({"prompt_id": prompt_id, **cats.to_json_obj()}, separators=(",", ":")))
    _emit("".join(r + "\n" for r in rows), args.out)
    return EXIT_OK


def _cmd_mos(args) -> int:
    from .subjective import compute_mos, read_ratings_csv, write_mos_csv

    ratings = read_ratings_csv(args.ratings)
    rows = compute_mos(ratings, policy=args.constant_rater)
    write_mos_csv(rows, args.out)
    if args.json:
        print(json.dumps({"videos": len({r.video_id for r in rows}), "rows": len(rows)}))
    return EXIT_OK


def _cmd_pairs_enumerate(args) -> int:
    from .pairstudy import build_groups, enumerate_all_pairs, read_meta_jsonl, write_pairs_jsonl

    meta = read_meta_jsonl(args.meta)
    pairs = enumerate_all_pairs(build_groups(meta))
    if args.out is None:
        from .pairstudy import pair_to_json_line

        for p in pairs:
            sys.stdout.write(pair_to_json_line(p) + "\n")
    else:
        write_pairs_jsonl(pairs, args.out)
        if args.json:
            print(json.dumps({"pairs": len(pairs)}))
    return EXIT_OK


def _cmd_pairs_sample(args) -> int:
    from .pairstudy import read_pairs_jsonl, sample_pairs, write_pairs_jsonl

    pool = read_pairs_jsonl(args.pairs)
    chosen = sample_pairs(pool, args.n, args.seed)
    write_pairs_jsonl(chosen, args.out)
    if args.json:
        print(json.dumps({"sampled": len(chosen), "pool": len(pool)}))
    return EXIT_OK


def _cmd_pairs_aggregate(args) -> int:
    from .pairstudy import aggregate_judgments, read_judgments_jsonl, write_verdicts_jsonl

    verdicts = aggregate_judgments(read_judgments_jsonl(args.judgments))
    write_verdicts_jsonl(verdicts, args.out)
    if args.json:
        print(json.dumps({"verdicts": len(verdicts)}))
    return EXIT_OK


def _cmd_leaderboard(args) -> int:
    from .pairstudy import read_meta_jsonl, read_pairs_jsonl, read_verdicts_jsonl, win_rates, write_win_rates_csv

    categories = None
    if args.categories:
        from .taxonomy import read_categories_jsonl

        categories = read_categories_jsonl(args.categories)
    rows = win_rates(
        read_verdicts_jsonl(args.verdicts),
        read_pairs_jsonl(args.pairs),
        read_meta_jsonl(args.meta),
        categories=categories,
        group_by=args.group_by,
        dimension=args.dimension,
    )
    write_win_rates_csv(rows, args.out)
    if args.json:
        print(json.dumps([
            {"model_id": r.model_id, "dimension": r.dimension, "category": r.category,
             "wins": r.wins, "losses": r.losses, "ties": r.ties,
             "win_rate": round(r.win_rate, 6)}
            for r in rows
        ]))
    return EXIT_OK


def _cmd_metrics(args) -> int:
    from .metrics import evaluate_scores, read_score_csv, report_to_json

    report = evaluate_scores(read_score_csv(args.pred), read_score_csv(args.gt))
    if args.json:
        print(report_to_json(report))
    else:
        for dim, vals in report.items():
            parts = "  ".join(f"{m}={v:.4f}" for m, v in vals.items())
            print(f"{dim:9s} {parts}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    from .synthgen import SynthConfig, gen_dataset

    config = SynthConfig(frames=args.frames, size=args.size, fps=args.fps)
    rows = gen_dataset(args.n, args.seed, args.out, config)
    if args.json:
        print(json.dumps({"clips": len(rows), "out": args.out}))
    return EXIT_OK


def _load_labeled_clips(manifest_path: str, config):
    from .scorer.features import extract_features
    from .scorer.train import LabeledClip
    from .store import read_avf
    from .synthgen import read_manifest

    base = os.path.dirname(os.path.abspath(manifest_path))
    clips = []
    for row in read_manifest(manifest_path):
        video = read_avf(os.path.join(base, row.path))
        features = extract_features(video.frames, config, concept_id=row.prompt_concept)
        levels = [row.levels[d] for d in ("static", "temporal", "dynamic", "tv")]
        clips.append(LabeledClip(row.clip_id, features, row.ground_truth.as_array(), levels))
    return clips


_ABLATIONS = ("no-temporal", "no-level", "freeze-encoders")


def _cmd_train(args) -> int:
    from .scorer.config import ScorerConfig
    from .scorer.train import train
    from .store import save_checkpoint

    ablations = [a for a in (args.ablate or "").split(",") if a]
    unknown = set(ablations) - set(_ABLATIONS)
    if unknown:
        raise VqbenchError(f"unknown ablation(s) {sorted(unknown)}; valid: {', '.join(_ABLATIONS)}")
    config = ScorerConfig(
        seed=args.seed,
        use_temporal="no-temporal" not in ablations,
        use_level_stage="no-level" not in ablations,
        finetune_encoders_stage2="freeze-encoders" not in ablations,
        epochs_stage1=args.epochs_stage1,
        epochs_stage2=args.epochs_stage2,
        epochs_stage3=args.epochs_stage3,
        batch_size=args.batch_size,
        stage3_pairs=args.stage3_pairs,
    )
    clips = _load_labeled_clips(args.manifest, config)
    stages = (2, 3) if "no-level" in ablations else (1, 2, 3)
    result = train(clips, config, stages=stages)
    save_checkpoint(args.out, result.params, config.to_dict())
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            for entry in result.log:
                fh.write(json.dumps(entry, separators=(",", ":")) + "\n")
    if args.json:
        last = {s: e["loss"] for s in sorted({e["stage"] for e in result.log})
                for e in result.log if e["stage"] == s}
        print(json.dumps({"clips": len(clips), "stages": sorted(stages), "final_loss": last}))
    return EXIT_OK


def _scores_from_checkpoint(args):
    from .metrics import ScoreVector
    from .scorer.config import ScorerConfig
    from .scorer.features import stack_features
    from .scorer.train import predict_scores
    from .store import load_checkpoint
    from .subjective import DIMENSIONS

    params, config_dict = load_checkpoint(args.checkpoint)
    config = ScorerConfig.from_dict(config_dict)
    clips = _load_labeled_clips(args.manifest, config)
    ids = tuple(c.clip_id for c in clips)
    scores = predict_scores(params, config, stack_features([c.features for c in clips]))
    gt = {
        dim: ScoreVector(ids, tuple(float(c.gt_scores[d]) for c in clips))
        for d, dim in enumerate(DIMENSIONS)
    }
    pred = {
        dim: ScoreVector(ids, tuple(float(v) for v in scores[:, d]))
        for d, dim in enumerate(DIMENSIONS)
    }
    return pred, gt


def _cmd_eval(args) -> int:
    from .protocol import protocol_to_json, protocol_to_text, run_protocol

    if args.checkpoint:
        if not args.manifest:
            raise VqbenchError("--checkpoint needs --manifest for the evaluation clips")
        pred, gt = _scores_from_checkpoint(args)
    else:
        if not (args.pred and args.gt):
            raise VqbenchError("eval needs either --checkpoint/--manifest or --pred/--gt")
        from .metrics import read_score_csv

        pred, gt = read_score_csv(args.pred), read_score_csv(args.gt)
    report = run_protocol(pred, gt)
    print(protocol_to_json(report) if args.json else protocol_to_text(report))
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import run_server

    run_server(args.study, port=args.port, seed=args.seed)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="vqbench", description="Video-quality benchmark toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("categorize", help="tag prompts with aspect/complexity categories")
    p.add_argument("--prompts", required=True, help="text file, one prompt per line, or JSONL with prompt_id/text")
    p.add_argument("--table", default=None, help="keyword table JSON (default: packaged table)")
    p.add_argument("--out", default=None, help="output JSONL (default: stdout)")
    p.set_defaults(func=_cmd_categorize)

    p = sub.add_parser("mos", help="aggregate a ratings CSV into MOS values")
    p.add_argument("--ratings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--constant-rater", choices=("drop", "midpoint"), default="drop")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_mos)

    pairs = sub.add_parser("pairs", help="pairwise study plumbing").add_subparsers(
        dest="pairs_command", required=True, metavar="ACTION"
    )
    p = pairs.add_parser("enumerate", help="all within-group pairs from a metadata JSONL")
    p.add_argument("--meta", required=True)
    p.add_argument("--out", default=None, help="pairs JSONL (default: stdout)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_pairs_enumerate)

    p = pairs.add_parser("sample", help="seeded subsample of an enumerated pair pool")
    p.add_argument("--pairs", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_pairs_sample)

    p = pairs.add_parser("aggregate", help="majority-vote verdicts from judgments")
    p.add_argument("--judgments", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_pairs_aggregate)

    p = sub.add_parser("leaderboard", help="per-model win rates from verdicts")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--categories", default=None, help="categorize output JSONL, for per-category boards")
    p.add_argument("--group-by", choices=("all", "spatial", "temporal", "attribute", "complexity"), default="all")
    p.add_argument("--dimension", choices=("static", "temporal", "dynamic", "tv"), default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_leaderboard)

    p = sub.add_parser("metrics", help="SRCC/PLCC/KRCC between two score CSVs")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("synth", help="generate a synthetic clip dataset with ground truth")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--fps", type=float, default=8.0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train the scorer on a synthetic manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint JSON path")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--ablate", default=None, help=f"comma list of {', '.join(_ABLATIONS)}")
    p.add_argument("--epochs-stage1", type=int, default=1200)
    p.add_argument("--epochs-stage2", type=int, default=2000)
    p.add_argument("--epochs-stage3", type=int, default=400)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--stage3-pairs", type=int, default=2000)
    p.add_argument("--log", default=None, help="training-log JSONL path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="ten-split protocol report (mean +/- std per metric)")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--pred", default=None, help="score CSV alternative to --checkpoint")
    p.add_argument("--gt", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--study", required=True, help="study directory")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except VqbenchError as exc:
        print(f"vqbench: {exc}", file=sys.stderr)
        return EXIT_DATA
    except IoFailure as exc:
        print(f"vqbench: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"vqbench: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
