"""Command-line entry point: ``vitalforge synth|ingest|extract|balance|train|eval|report``.

Exit status is 0 on success, 2 when an input fails validation and 1 on any
other error. Logs go to stderr; artifacts go under ``--out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import balance as bal
from .errors import StageError, ValidationError
from .features import read_feature_csv, write_feature_csv
from .models.train import FUSION_MODES, MODEL_KINDS
from .pipeline import Pipeline, PipelineConfig
from .synth import CohortSpec, gen_cohort, verify_cohort

log = logging.getLogger("vitalforge")

EXIT_OK, EXIT_INTERNAL, EXIT_VALIDATION = 0, 1, 2


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--jobs", type=int, help="worker threads for per-patient work")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def _pipeline_args(p):
    _common(p)
    p.add_argument("--cohort", help="cohort root holding matched/, episodes/ and labels.csv")


def _model_args(p, required=False):
    p.add_argument("--model", choices=MODEL_KINDS, required=required)
    p.add_argument("--fusion", choices=FUSION_MODES)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vitalforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    _common(p)
    p.add_argument("--n-patients", type=int)
    p.add_argument("--effect-size", type=float)
    p.add_argument("--coverage", type=float, help="fraction of patients with waveform records")
    p.add_argument("--deceased-fraction", type=float)
    p.add_argument("--verify", action="store_true", help="re-parse and check the written cohort")

    for name, text in (
        ("ingest", "validate episode tables and join labels"),
        ("extract", "window, preprocess and featurise the waveform records"),
    ):
        _pipeline_args(sub.add_parser(name, help=text))

    p = sub.add_parser("balance", help="A-SUWO oversampling of a feature CSV or of the training split")
    _pipeline_args(p)
    p.add_argument("--input", help="feature CSV to balance; omit to balance the pipeline's training split")
    p.add_argument("--output", help="where to write the balanced feature CSV")
    p.add_argument("--linkage-threshold", type=float)
    p.add_argument("--knn", type=int)

    p = sub.add_parser("train", help="train one model variant")
    _pipeline_args(p)
    _model_args(p)

    p = sub.add_parser("eval", help="score the test split; without --model runs every configured variant")
    _pipeline_args(p)
    _model_args(p)

    p = sub.add_parser("report", help="rebuild the comparison report from persisted scores")
    _pipeline_args(p)
    return parser


def load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    over = {}
    if getattr(args, "cohort", None):
        over["cohort_dir"] = args.cohort
    if args.out:
        over["out_dir"] = args.out
    if args.seed is not None:
        over["seed"] = args.seed
    if args.jobs is not None:
        over["jobs"] = args.jobs
    if getattr(args, "model", None):
        over["models"] = (args.model,)
    if getattr(args, "fusion", None):
        over["fusion"] = args.fusion
    if getattr(args, "linkage_threshold", None) is not None:
        over["linkage_threshold"] = args.linkage_threshold
    if getattr(args, "knn", None) is not None:
        over["knn"] = args.knn
    return replace(cfg, **over) if over else cfg


def cmd_synth(args):
    doc = json.loads(Path(args.config).read_text()) if args.config else {}
    known = {f.name for f in fields(CohortSpec)}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown cohort option(s): {sorted(unknown)}")
    for flag, key in (
        ("n_patients", "n_patients"),
        ("effect_size", "effect_size"),
        ("coverage", "waveform_coverage"),
        ("deceased_fraction", "deceased_fraction"),
        ("seed", "seed"),
    ):
        if getattr(args, flag) is not None:
            doc[key] = getattr(args, flag)
    spec = CohortSpec(**doc)
    out = Path(args.out or "cohort")
    manifest = gen_cohort(spec, out)
    log.info("wrote %d patients to %s", manifest["counts"]["patients"], out)
    if args.verify:
        verify_cohort(out / "manifest.json")
        log.info("cohort verified")
    print(json.dumps(manifest["counts"], sort_keys=True))


def cmd_ingest(args):
    p = Pipeline(load_config(args))
    table = p.run_ingest()
    print(json.dumps({"stays": len(table.stay_ids), "dropped_rows": table.dropped_rows}))


def cmd_extract(args):
    p = Pipeline(load_config(args))
    ids, _, _ = p.run_extract()
    missing = json.loads(p.missing_path.read_text())
    print(json.dumps({"with_features": len(ids), "without_features": len(missing)}))


def cmd_balance(args):
    cfg = load_config(args)
    if args.input:
        ids, matrix, labels = read_feature_csv(args.input)
        lm = bal.LabeledMatrix(matrix, labels, ids)
        out = bal.balance_dataset(lm, seed=cfg.seed, linkage_threshold=cfg.linkage_threshold, k=cfg.knn)
        dest = Path(args.output) if args.output else cfg.out / "balanced_features.csv"
        dest.parent.mkdir(parents=True, exist_ok=True)
        write_feature_csv(dest, out.stay_ids, out.rows, out.labels)
        print(json.dumps({"rows_in": len(lm), "rows_out": len(out), "path": str(dest)}))
        return
    d, _ = Pipeline(cfg).run_balance()
    print(json.dumps({"rows": len(d), "positives": int(d.y.sum())}))


def cmd_train(args):
    cfg = load_config(args)
    p = Pipeline(cfg)
    for kind in cfg.models:
        p.run_train(kind, cfg.fusion)
        print(p.checkpoint_path(kind, cfg.fusion))


def cmd_eval(args):
    cfg = load_config(args)
    p = Pipeline(cfg)
    if args.model and args.fusion:
        p.run_eval(args.model, args.fusion)
        print(p.scores_path(args.model, args.fusion))
        return
    fusions = (args.fusion,) if args.fusion else FUSION_MODES
    for kind in cfg.models:
        for fusion in fusions:
            p.run_eval(kind, fusion)
    if not args.fusion:
        print(p.write_report().to_text(), end="")


def cmd_report(args):
    cfg = load_config(args)
    print(Pipeline(cfg).write_report().to_text(), end="")


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "extract": cmd_extract,
    "balance": cmd_balance,
    "train": cmd_train,
    "eval": cmd_eval,
    "report": cmd_report,
}


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (ValidationError, FileNotFoundError, json.JSONDecodeError)):
        return EXIT_VALIDATION
    return EXIT_INTERNAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        COMMANDS[args.command](args)
    except Exception as exc:  # mapped to an exit status below
        code = exit_code(exc)
        if code == EXIT_INTERNAL:
            log.exception("internal error")
        else:
            log.error("%s", exc)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
