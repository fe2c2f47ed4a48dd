"""Command line entry point.

    medal run --config cfg.txt --data synthetic --sampler medal --seeds 0,1,2 --out results/
    medal eval-distances --config cfg.txt --data features.csv --out results/
    medal init-compare --config cfg.txt --data images/ --seeds 10 --out results/
    medal extract-orb images/ --out descriptors.csv

Exit status is 0 on success; failures print ``error [<category>]: ...``
to stderr and exit with the category's code.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .core import SAMPLERS, RunConfig
from .descriptors import BriefPattern, describe_image, read_pgm
from .errors import MedalError
from .harness.config import config_items, load_config
from .harness.data import (Dataset, SyntheticSpec, generate_synthetic, list_pgm_files,
                           load_dataset, write_csv_atomic, write_text_atomic)
from .harness.experiments import (AUDIT_HEADER, ENTROPY_HEADER, INIT_HEADER, CurveTable,
                                  audit_rows, compare_init, entropy_rows,
                                  eval_distance_functions, init_rows, run_al_experiment)

log = logging.getLogger("medal")


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma separated integers: {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _load(args, cfg: RunConfig) -> Dataset:
    if args.data == "synthetic":
        return generate_synthetic(SyntheticSpec.from_config(cfg))
    return load_dataset(args.data, args.format)


def _config(args) -> RunConfig:
    return load_config(args.config) if args.config else RunConfig()


def _manifest(command, args, cfg, extra):
    doc = {
        "command": command,
        "data": args.data,
        "version": __version__,
        "config": config_items(cfg),
        **extra,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_run(args) -> int:
    cfg = _config(args)
    dataset = _load(args, cfg)
    descriptors = dataset.descriptors(cfg.orb_threshold, cfg.orb_max_keypoints)
    out = Path(args.out)
    curves = CurveTable()
    audit, runs = [], []
    for seed in args.seeds:
        run_cfg = cfg.replace(master_seed=seed)
        res = run_al_experiment(run_cfg, dataset, args.sampler, descriptors=descriptors)
        curves.merge(res.curve)
        run_id = f"{args.sampler}-seed{seed}"
        audit += list(audit_rows(run_id, res.audit))
        runs.append({"run_id": run_id, "master_seed": seed,
                     "iterations": len(res.fitted), "fitted_iterations": sum(res.fitted),
                     "initial_ids": list(res.initial_ids)})
    write_csv_atomic(out / "curves.csv", CurveTable.HEADER, curves.rows())
    if args.sampler == "medal":
        write_csv_atomic(out / "medal_audit.csv", AUDIT_HEADER, audit)
    write_text_atomic(out / "run_manifest.json",
                      _manifest("run", args, cfg, {"sampler": args.sampler,
                                                   "seeds": args.seeds, "runs": runs}))
    print(f"wrote {out / 'curves.csv'}")
    return 0


def cmd_eval_distances(args) -> int:
    cfg = _config(args)
    dataset = _load(args, cfg)
    rows = eval_distance_functions(cfg, dataset)
    out = Path(args.out)
    write_csv_atomic(out / "entropy_table.csv", ENTROPY_HEADER, entropy_rows(rows))
    winner = next(r for r in rows if r.winner)
    print(f"wrote {out / 'entropy_table.csv'} (winner: {winner.metric_id}, layer {winner.layer})")
    return 0


def cmd_init_compare(args) -> int:
    cfg = _config(args)
    dataset = _load(args, cfg)
    rows, mean = compare_init(cfg, dataset, args.seeds)
    out = Path(args.out)
    write_csv_atomic(out / "init_compare.csv", INIT_HEADER, init_rows(rows, mean))
    print(f"wrote {out / 'init_compare.csv'} (mean random {mean.random_accuracy:.4f}, "
          f"farthest-first {mean.farthest_first_accuracy:.4f})")
    return 0


def cmd_extract_orb(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    names = list_pgm_files(directory)
    pattern = BriefPattern.generate(args.pattern_seed)
    rows = []
    for name in names:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            vec = describe_image(read_pgm(directory / name), pattern,
                                 args.threshold, args.max_keypoints)
        if caught:
            log.warning("%s: no keypoints, zero descriptor", name)
        values = [repr(float(v)) for v in vec]
        rows.append([name, *values] if args.with_names else values)
    header = [f"d{i}" for i in range(256)]
    if args.with_names:
        header = ["filename", *header]
    write_csv_atomic(args.out, header, rows)
    print(f"wrote {len(rows)} descriptors to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds_type):
        p.add_argument("--config", help="key = value config file (defaults if omitted)")
        p.add_argument("--data", required=True, help="feature CSV, PGM directory or 'synthetic'")
        p.add_argument("--format", choices=["feature-csv", "pgm-dir"],
                       help="dataset format (inferred from the path by default)")
        p.add_argument("--out", default="results", help="output directory")
        if seeds_type is not None:
            p.add_argument("--seeds", type=seeds_type, required=True)

    p = sub.add_parser("run", help="active-learning curves for one sampler")
    common(p, _parse_seeds)
    p.add_argument("--sampler", choices=SAMPLERS, required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval-distances", help="entropy table over metrics x layers")
    common(p, None)
    p.set_defaults(func=cmd_eval_distances)

    p = sub.add_parser("init-compare", help="random vs farthest-first initial sets")
    common(p, int)
    p.set_defaults(func=cmd_init_compare)

    p = sub.add_parser("extract-orb", help="pooled ORB descriptors of a PGM directory")
    p.add_argument("directory")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--threshold", type=int, default=20)
    p.add_argument("--max-keypoints", type=int, default=500)
    p.add_argument("--pattern-seed", type=int, default=0)
    p.add_argument("--with-names", action="store_true", help="prepend a filename column")
    p.set_defaults(func=cmd_extract_orb)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MedalError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())
