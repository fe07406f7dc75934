#!/usr/bin/env python3
"""Sweep the kernel classifier kinds over both ordinal tasks.

Runs speaker-disjoint CV once per (classifier kind, task) pair on a
synthetic corpus and writes per-fold and overall UAR to a CSV. By default
the sweep uses the linguistic dictionary features, which keeps a full
5 x 2 sweep in the tens of seconds; pass --modality acoustic for the
Fisher-vector stack.

Example:
    python scripts/sweep_classifiers.py --out /tmp/affect_corpus --csv sweep.csv
"""

import argparse
import csv
import logging
import time
from pathlib import Path

from affectpipe.config import load_config
from affectpipe.learn import MODEL_KINDS
from affectpipe.pipeline import load_pipeline_corpus, run_pipeline_cv
from affectpipe.synth import generate_corpus

log = logging.getLogger("sweep")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, required=True, help="corpus directory")
    ap.add_argument("--csv", type=Path, required=True, help="result table destination")
    ap.add_argument("--modality", choices=("linguistic", "acoustic"), default="linguistic")
    ap.add_argument(
        "--kinds", default=",".join(MODEL_KINDS),
        help=f"comma-separated subset of {MODEL_KINDS}",
    )
    ap.add_argument("--tasks", default="arousal,valence")
    ap.add_argument("--speakers", type=int, default=30)
    ap.add_argument("--stories", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    if not (args.out / "manifest.csv").exists():
        generate_corpus(
            args.out,
            seed=args.seed,
            n_speakers=args.speakers,
            stories_per_speaker=args.stories,
        )
        log.info("generated corpus in %s", args.out)

    cfg_path = args.out / f"config_{args.modality}.ini"
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    tasks = [t.strip() for t in args.tasks.split(",") if t.strip()]

    rows = []
    for kind in kinds:
        for task in tasks:
            cfg = load_config(cfg_path)
            cfg.task = task
            cfg.classifier.kind = kind
            cfg.validate()
            corpus = load_pipeline_corpus(cfg)
            t0 = time.perf_counter()
            result, _ = run_pipeline_cv(cfg, corpus=corpus)
            seconds = time.perf_counter() - t0
            per_fold = ";".join(f"{fr.uar:.4f}" for fr in result.fold_results)
            rows.append(
                [kind, task, args.modality, per_fold,
                 f"{result.overall_uar:.4f}", f"{seconds:.1f}"]
            )
            print(f"{kind:<9} {task:<8} overall UAR {result.overall_uar:.4f} ({seconds:.1f} s)")

    with args.csv.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "task", "modality", "per_fold_uar", "overall_uar", "seconds"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} sweep rows to {args.csv}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
