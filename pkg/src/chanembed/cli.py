"""``chanembed`` command line: generate -> features -> embed -> evaluate, plus modify and plot.

Every option may also come from a JSON file passed with ``--config``; flags
override the file, which overrides built-in defaults. Each run writes the fully
resolved option set as JSON beside its outputs, and feeding that file back with
``--config`` reproduces the outputs byte for byte.

Exit codes: 0 success, 2 bad input (usage, unreadable or malformed files,
invalid values), 3 a computation failed (calibration, divergence, degenerate
data and similar).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import embed_baseline
from .channel import to_frequency_domain
from .embedding import TECHNIQUES, read_embedding, write_embedding
from .errors import ChanEmbedError
from .evaluation import CLASSIFIERS, default_axis, fitness, repeated_kfold, sweep_fitness
from .features import (
    CSV_COLUMNS,
    DEFAULT_K_CLAMP_DB,
    DEFAULT_SNR,
    extract_features,
    read_feature_table,
    write_feature_table,
)
from .plotting import scatter_svg, surface_svg
from .scenarios import ChannelDataset, ModificationSpec, ScenarioSpec, emulate_scenario, generate_dataset
from .tsne import TsneConfig, run_tsne

log = logging.getLogger("chanembed")

RESOLVED = "resolved_config.json"


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_resolved(path, args) -> None:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "config", "log_level")}
    Path(path).write_text(_dump(cfg))


def _beside(path, suffix) -> Path:
    p = Path(path)
    return p.with_name(p.stem + suffix)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{args.command}: missing required option(s) {flags}")


def _zscore(X):
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - X.mean(axis=0)) / sd


def _read_points(path):
    """Load an embedding or feature CSV (told apart by the header)."""
    with open(path) as fh:
        header = fh.readline().strip()
    if header == "label,y1,y2":
        labels, y, meta = read_embedding(path)
        return labels, y, "embedding", meta
    if header == ",".join(("label",) + CSV_COLUMNS):
        labels, X = read_feature_table(path)
        return labels, X, "features", {}
    raise UsageError(f"{path}: neither an embedding nor a feature CSV")


# commands -------------------------------------------------------------------

def _scenario_entries(doc):
    if isinstance(doc, list):
        return doc, None
    if "scenarios" in doc:
        return doc["scenarios"], doc.get("seed")
    if "provenance" in doc and "scenarios" in doc["provenance"]:
        return doc["provenance"]["scenarios"], doc["provenance"].get("seed")
    return [doc], doc.get("seed") if "archetype" not in doc else None


def cmd_generate(args):
    _require(args, "spec", "out")
    doc = json.loads(Path(args.spec).read_text())
    entries, file_seed = _scenario_entries(doc)
    if not entries:
        raise UsageError("spec lists no scenarios")
    seed = args.seed if args.seed is not None else (file_seed if file_seed is not None else 0)
    specs = []
    for i, entry in enumerate(entries):
        entry = dict(entry)
        if "seed" not in entry:
            entry["seed"] = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        specs.append(ScenarioSpec.from_dict(entry))
    channels, labels = [], []
    for spec in specs:
        log.info("generating %d %s channels (seed %d)", spec.count, spec.archetype, spec.seed)
        for h, label in generate_dataset(spec):
            channels.append(h)
            labels.append(label)
    provenance = {"kind": "generate", "seed": seed, "scenarios": [s.to_dict() for s in specs]}
    ChannelDataset(channels, labels, provenance=provenance).save(args.out, packed=args.packed)
    args.seed = seed
    _write_resolved(Path(args.out) / RESOLVED, args)


def cmd_features(args):
    _require(args, "dataset", "out")
    ds = ChannelDataset.load(args.dataset)
    k_clamp = None if args.strict else args.k_clamp_db
    labels, rows, skipped = [], [], []
    for i, (h, label) in enumerate(zip(ds.channels, ds.labels)):
        try:
            fv = extract_features(h, to_frequency_domain(h, ds.frequency_grid), args.snr,
                                  k_clamp_db=k_clamp, noise_floor_db=args.noise_floor_db,
                                  path_loss_average=args.path_loss_average)
        except (ChanEmbedError, ValueError) as exc:
            if args.strict:
                raise ChanEmbedError(f"channel ch{i:05d}: {exc}") from exc
            log.warning("channel ch%05d skipped: %s", i, exc)
            skipped.append(f"ch{i:05d}")
            continue
        labels.append(label)
        rows.append(fv.as_array())
    write_feature_table(args.out, labels, np.array(rows).reshape(-1, len(CSV_COLUMNS)))
    summary = {"channels": len(ds), "written": len(rows), "skipped": len(skipped),
               "skipped_channels": skipped}
    _beside(args.out, ".summary.json").write_text(_dump(summary))
    _write_resolved(_beside(args.out, ".config.json"), args)
    log.info("%d feature rows written, %d skipped", len(rows), len(skipped))


def _embed(X, args):
    if args.technique == "tsne":
        config = TsneConfig(perplexity=args.perplexity, learning_rate=args.learning_rate,
                            iterations=args.iterations, distance=args.distance, seed=args.seed)
        return run_tsne(X, config.plain() if args.plain_gd else config)
    params = {"pca": {}, "kpca": {"gamma": args.gamma, "metric": args.kpca_metric},
              "isomap": {"k_neighbors": args.k_neighbors}}[args.technique]
    return embed_baseline(X, args.technique, **params)


def cmd_embed(args):
    _require(args, "input", "out")
    labels, X = read_feature_table(args.input)
    if X.shape[0] == 0:
        raise UsageError(f"{args.input}: no feature rows")
    if args.scale == "zscore":
        X = _zscore(X)
    emb = _embed(X, args)
    emb.params["scale"] = args.scale
    write_embedding(args.out, labels, emb)
    _write_resolved(_beside(args.out, ".config.json"), args)


def cmd_evaluate(args):
    _require(args, "input", "out")
    labels, pts, kind, meta = _read_points(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    space = "embedding" if kind == "embedding" else "features"
    if kind == "features" and args.scale == "zscore":
        pts = _zscore(pts)

    if args.mode == "fitness":
        report = fitness(pts, labels, strict=args.strict, space=space)
        (out / "fitness.json").write_text(report.to_json())
        if kind == "embedding" and args.plot:
            title = f"{meta.get('technique', 'embedding')}  F = {report.overall:.3f}"
            scatter_svg(out / "scatter.svg", pts, labels, title=title)

    elif args.mode == "cv":
        technique = args.technique_tag or (meta.get("technique", "embedding") if kind == "embedding"
                                           else "original_6d")
        dataset = args.dataset_tag or Path(args.input).stem
        means = {}
        for name in args.classifiers:
            if name not in CLASSIFIERS:
                raise UsageError(f"unknown classifier {name!r}; choose from {CLASSIFIERS}")
            params = {"covariance": args.lda_cov} if name == "lda" else None
            rep = repeated_kfold(pts, labels, name, folds=args.folds, repeats=args.repeats,
                                 seed=args.seed, n_jobs=args.n_jobs, classifier_params=params)
            (out / f"cv_{name}.json").write_text(rep.to_json())
            means[name] = rep.mean
            log.info("%s: %.4f +/- %.4f", name, rep.mean, rep.std)
        with open(out / "cv.csv", "w", newline="") as fh:
            fh.write(",".join(("technique", "dataset") + CLASSIFIERS) + "\n")
            cells = [repr(means[c]) if c in means else "" for c in CLASSIFIERS]
            fh.write(",".join([technique, dataset] + cells) + "\n")

    elif args.mode == "sweep":
        if kind != "features":
            raise UsageError("sweep mode needs a feature CSV (t-SNE runs inside every cell)")
        lrs = args.learning_rates or default_axis()
        perps = args.perplexities or default_axis()
        template = TsneConfig(iterations=args.iterations, distance=args.distance, seed=args.seed)
        if args.plain_gd:
            template = template.plain()
        grid = sweep_fitness(pts, labels, lrs, perps, template, n_jobs=args.n_jobs)
        grid.write_csv(out / "sweep.csv")
        best = grid.best
        (out / "sweep_best.json").write_text(_dump(best))
        if args.plot:
            surface_svg(out / "sweep.svg", grid.learning_rates, grid.perplexities, grid.surface,
                        best=grid.argmax, title="fitness over learning rate x perplexity")
        if best is None:
            raise ChanEmbedError("every sweep cell failed")
    _write_resolved(out / RESOLVED, args)


def cmd_modify(args):
    _require(args, "dataset", "out")
    if not Path(args.dataset, "manifest.json").exists():
        raise UsageError(f"{args.dataset}: no dataset manifest found")
    ds = ChannelDataset.load(args.dataset)
    mod = ModificationSpec(extra_delay=args.delay_ns * 1e-9, target_mean_path_loss=args.target_pl,
                           attenuation_db=args.attenuation_db)
    modified = emulate_scenario(ds, mod, delay_method=args.delay_method)
    modified.save(args.out, packed=args.packed)
    log.info("applied gain %.6g to %d channels", modified.provenance["modification"]["gain"], len(ds))
    _write_resolved(Path(args.out) / RESOLVED, args)


def cmd_plot(args):
    _require(args, "input", "out")
    labels, y, meta = read_embedding(args.input)
    title = args.title if args.title is not None else meta.get("technique")
    scatter_svg(args.out, y, labels, title=title, xlabel=args.xlabel, ylabel=args.ylabel)
    _write_resolved(_beside(args.out, ".config.json"), args)


# parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chanembed", description="Channel feature embedding toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    parser.add_argument("--config", help="JSON file of option values; flags override it")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("generate", help="synthesize a scenario dataset")
    p.add_argument("spec", nargs="?", help="scenario spec JSON (or a dataset manifest)")
    p.add_argument("--out", help="output dataset directory")
    p.add_argument("--packed", action="store_true", help="store all channels in one CSV")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("features", help="extract the six channel features")
    p.add_argument("dataset", nargs="?", help="dataset directory")
    p.add_argument("--out", help="feature CSV to write")
    p.add_argument("--snr", type=float, default=DEFAULT_SNR, help="linear SNR for spectral efficiency")
    p.add_argument("--strict", action="store_true", help="abort on the first failing channel")
    p.add_argument("--k-clamp-db", type=float, default=DEFAULT_K_CLAMP_DB)
    p.add_argument("--noise-floor-db", type=float, default=None)
    p.add_argument("--path-loss-average", choices=["db", "magnitude"], default="db")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("embed", help="reduce features to two dimensions")
    p.add_argument("input", nargs="?", help="feature CSV")
    p.add_argument("--out", help="embedding CSV to write")
    p.add_argument("--technique", choices=TECHNIQUES, default="tsne")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--learning-rate", type=float, default=200.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--distance", choices=["mahalanobis", "euclidean"], default="mahalanobis")
    p.add_argument("--gamma", type=float, default=0.1, help="kernel PCA Laplacian width")
    p.add_argument("--kpca-metric", choices=["euclidean", "mahalanobis"], default="euclidean")
    p.add_argument("--k-neighbors", type=int, default=15, help="Isomap graph degree")
    p.add_argument("--plain-gd", action="store_true", help="t-SNE without momentum or early exaggeration")
    p.add_argument("--scale", choices=["zscore", "none"], default="zscore",
                   help="per-feature standardization before embedding")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("evaluate", help="fitness, cross-validation or hyperparameter sweep")
    p.add_argument("input", nargs="?", help="embedding or feature CSV")
    p.add_argument("--out", help="report directory")
    p.add_argument("--mode", choices=["fitness", "cv", "sweep"], default="fitness")
    p.add_argument("--strict", action="store_true", help="fail on classes with zero spread")
    p.add_argument("--classifiers", nargs="+", default=list(CLASSIFIERS))
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--lda-cov", choices=["pooled", "total"], default="pooled",
                   help="LDA shared covariance: within-class (pooled) or of all data (total)")
    p.add_argument("--plain-gd", action="store_true", help="sweep t-SNE without momentum or early exaggeration")
    p.add_argument("--technique-tag")
    p.add_argument("--dataset-tag")
    p.add_argument("--learning-rates", type=float, nargs="+")
    p.add_argument("--perplexities", type=float, nargs="+")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--distance", choices=["mahalanobis", "euclidean"], default="mahalanobis")
    p.add_argument("--scale", choices=["zscore", "none"], default="zscore",
                   help="standardization applied to feature input")
    p.add_argument("--no-plot", dest="plot", action="store_false", help="skip SVG figures")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("modify", help="delay and attenuate a dataset")
    p.add_argument("dataset", nargs="?", help="source dataset directory")
    p.add_argument("--out", help="output dataset directory")
    p.add_argument("--delay-ns", type=float, default=0.0)
    p.add_argument("--target-pl", type=float, default=None, help="target dataset-mean path loss, dB")
    p.add_argument("--attenuation-db", type=float, default=None, help="explicit gain in dB")
    p.add_argument("--delay-method", choices=["offset", "resample"], default="offset")
    p.add_argument("--packed", action="store_true")
    p.set_defaults(func=cmd_modify)

    p = sub.add_parser("plot", help="render an embedding as SVG")
    p.add_argument("input", nargs="?", help="embedding CSV")
    p.add_argument("--out", help="SVG file to write")
    p.add_argument("--title")
    p.add_argument("--xlabel", default="y1")
    p.add_argument("--ylabel", default="y2")
    p.set_defaults(func=cmd_plot)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    cfg = {}
    if known.config:
        cfg = json.loads(Path(known.config).read_text())
        if not isinstance(cfg, dict):
            raise UsageError(f"{known.config}: config must be a JSON object")
    args = parser.parse_args(argv)
    command = args.command or cfg.get("command")
    if command is None:
        parser.print_usage(sys.stderr)
        raise UsageError("no command given")
    if cfg.get("command", command) != command:
        raise UsageError(f"config was written for {cfg['command']!r}, not {command!r}")
    sub = _subparser(parser, command)
    values = {k: v for k, v in cfg.items() if k != "command"}
    known_dests = {a.dest for a in sub._actions} | {"seed"}
    unknown = set(values) - known_dests
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
    if "seed" in values:
        parser.set_defaults(seed=values.pop("seed"))
    sub.set_defaults(**values)
    if args.command is None:
        argv = list(argv) + [command]
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 2
    log.setLevel(args.log_level)
    if args.seed is None and args.command != "generate":
        args.seed = 0
    try:
        args.func(args)
    except (UsageError, OSError, json.JSONDecodeError, KeyError) as exc:
        log.error("%s", exc)
        return 2
    except ChanEmbedError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 3
    except ValueError as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
