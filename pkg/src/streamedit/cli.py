"""Command-line entry point: ``streamedit <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("streamedit")


# ---------------------------------------------------------------- latency


def cmd_latency(args):
    from .runtime import load_profiles, report

    print(report(load_profiles(args.profile)))
    return 0


# ---------------------------------------------------------------- stream


def cmd_stream(args):
    from .codec import BlockDCTCodec, load_raw_video, save_raw_video, RGBVideo
    from .editor import load_checkpoint
    from .runtime import StreamConfig, measure, run_stream

    model, meta = load_checkpoint(args.checkpoint)
    video = load_raw_video(args.source)
    codec = BlockDCTCodec(n_channels=model.config.latent_channels)
    expect = (model.config.latent_height * 8, model.config.latent_width * 8)
    if video.frames.shape[2:] != expect:
        raise SystemExit(f"source is {video.frames.shape[2:]} pixels; this checkpoint expects {expect}")
    cfg = StreamConfig(steps=args.steps, seed=args.seed, instruction=args.instruction, mode=args.mode,
                       mask_first_for_last=meta.get("mask_first_for_last", True))
    res = run_stream(video, model, cfg, codec)
    save_raw_video(args.out, RGBVideo(np.clip(res.frames, 0.0, 1.0), video.fps))
    for line in measure(res).lines():
        print(line)
    return 0


# ---------------------------------------------------------------- training


def _log(path):
    from .distill import TrainingLog

    return TrainingLog(path) if path else TrainingLog()


def cmd_train_toy(args):
    from .autodiff import save_tensor

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tlog = _log(out / "log.jsonl")
    if args.kind == "editor":
        from .distill.toys import ChunkedARProcess, train_editor_teacher
        from .editor import save_checkpoint

        model = train_editor_teacher(ChunkedARProcess(), n_iter=args.n_iter, seed=args.seed, log=tlog)
        save_checkpoint(out, model, {"role": "teacher", "n_iter": args.n_iter, "seed": args.seed})
        print(f"teacher checkpoint written to {out}")
        return 0
    from .toyflow import ToyFlowModel

    rng = np.random.default_rng(args.seed)
    if args.kind == "gaussian":
        mean = np.array([1.0, -2.0])
        cov = np.array([[1.0, 0.6], [0.6, 2.0]])
        X = rng.multivariate_normal(mean, cov, size=20_000)
    else:
        from .distill.toys import Mixture1D

        X = Mixture1D().sample(20_000, rng)
    model = ToyFlowModel(n_iter=args.n_iter, random_state=args.seed).fit(X)
    for step, loss in enumerate(model.loss_curve_):
        tlog.write(kind="train", step=step, loss=loss)
    samples = model.sample(args.n_samples, random_state=args.seed + 1)
    save_tensor(out / "samples.tensor", samples.astype(np.float32))
    print(f"data mean {np.round(X.mean(0), 3)}  sample mean {np.round(samples.mean(0), 3)}")
    print(f"data cov\n{np.round(np.atleast_2d(np.cov(X.T)), 3)}\nsample cov\n{np.round(np.atleast_2d(np.cov(samples.T)), 3)}")
    return 0


def _distill_config(base, args):
    from dataclasses import replace

    changes = {k: getattr(args, k) for k in ("generator_steps", "batch_size", "lr_multiplier", "seed")
               if getattr(args, k) is not None}
    return replace(base, **changes)


def cmd_distill_dmd(args):
    from .distill import critic_ratio

    tlog = _log(args.log)
    if args.teacher is None:
        from .distill.toys import TOY_MIXTURE_DMD, Mixture1D, distill_mixture, sample_vector_model, train_mixture_teacher

        cfg = _distill_config(TOY_MIXTURE_DMD, args)
        teacher = train_mixture_teacher(seed=cfg.seed)
        tr = distill_mixture(teacher, cfg, tlog)
        t = sample_vector_model(teacher, cfg.teacher_steps, 10_000, seed=1)
        s = sample_vector_model(tr.ema.shadow, cfg.student_steps, 10_000, seed=1)
        print(f"target mixture mean {Mixture1D().mean:.3f} var {Mixture1D().var:.3f}")
        print(f"teacher ({cfg.teacher_steps} NFE) mean {t.mean():.3f} var {t.var():.3f}")
        print(f"student ({cfg.student_steps} NFE) mean {s.mean():.3f} var {s.var():.3f}")
        print(f"critic steps per generator step: {critic_ratio(tlog.records)}")
        return 0
    from .distill.toys import TOY_EDITOR_DMD, ChunkedARProcess, distill_editor_dmd
    from .editor import load_checkpoint, save_checkpoint

    cfg = _distill_config(TOY_EDITOR_DMD, args)
    teacher, _ = load_checkpoint(args.teacher)
    tr = distill_editor_dmd(teacher, ChunkedARProcess(), cfg, tlog)
    save_checkpoint(args.out, tr.ema.shadow, {"role": "dmd-student", **cfg.to_dict()})
    print(f"DMD student written to {args.out} (critic ratio {critic_ratio(tlog.records)})")
    return 0


def cmd_distill_sf(args):
    from .distill import critic_ratio
    from .distill.toys import TOY_EDITOR_SF, ChunkedARProcess, distill_editor_self_forcing
    from .editor import load_checkpoint, save_checkpoint

    cfg = _distill_config(TOY_EDITOR_SF, args)
    teacher, _ = load_checkpoint(args.teacher)
    student, _ = load_checkpoint(args.student)
    tlog = _log(args.log)
    tr = distill_editor_self_forcing(student, teacher, ChunkedARProcess(), cfg, tlog)
    save_checkpoint(args.out, tr.ema.shadow, {"role": "causal-student", **cfg.to_dict()})
    print(f"causal student written to {args.out} (critic ratio {critic_ratio(tlog.records)})")
    return 0


# ---------------------------------------------------------------- bench


def cmd_bench(args):
    from . import bench

    if args.bench_cmd == "build":
        sources = bench.load_sources(args.sources)
        if len(sources) > args.clusters * args.per_cluster:
            sources, _ = bench.diverse_sources(sources, args.clusters, args.per_cluster, seed=args.seed)
        entries = bench.build_benchmark(sources)
        bench.save_manifest(args.out, entries)
        counts = {t: sum(e.task == t for e in entries) for t in bench.TASKS}
        print(f"{len(entries)} entries from {len(sources)} sources")
        for t in bench.TASKS:
            print(f"  {bench.DISPLAY_NAMES[t]}: {counts[t]}")
        return 0
    if args.bench_cmd == "score":
        entries = bench.load_manifest(args.manifest)
        rep = bench.aggregate(bench.load_scores(args.scores), entries)
        for metric in rep.overall:
            print(f"[{metric}]")
            print(rep.grid(metric))
        if args.out:
            Path(args.out).write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
        return 0
    # fixtures
    table = bench.load_vlm_table()
    print("per-task VLM means -> equal-weight overall")
    for method, row in table.items():
        rep = bench.aggregate(*bench.fixture_records(method, table))
        print(f"  {method:<20} {rep.overall['VLM']:.4f}  (printed {row['printed_overall']})")
    agree = bench.load_agreement_table()
    print("judge/human agreement")
    for baseline, printed in agree["printed_overall"].items():
        r = bench.preference_agreement(*bench.expand_agreement_rows(agree["rows"], baseline))
        matched = sum(m for m, _ in r.counts.values())
        print(f"  vs {baseline:<10} {r.overall:.1f}% ({matched}/{sum(n for _, n in r.counts.values())}, printed {printed})")
    return 0


# ---------------------------------------------------------------- curate


def cmd_curate(args):
    from . import curation

    stages = curation.load_pipeline_manifest(args.manifest) if args.manifest else curation.default_stages()
    if args.items:
        items = curation.load_items(args.items)
    else:
        items = curation.synthetic_items(args.synthetic, seed=args.seed)
    review = [s.name for s in stages if s.kind == curation.HUMAN_REVIEW]
    if args.decisions:
        decisions = curation.DecisionQueue.load(args.decisions)
    else:
        decisions = curation.synthetic_decisions(items, review, args.accept_rate, seed=args.seed)
    res = curation.Pipeline(stages, decisions, workers=args.workers).run(items)
    print(res.ledger.report(curation.PRINTED_STAGE_RATES))
    printed = curation.product_of_rates(curation.PRINTED_STAGE_RATES.values())
    print(f"product of the printed stage rates: {100 * printed:.4f}% "
          f"(overall figure printed alongside: {100 * curation.PRINTED_OVERALL_RATE:.1f}%)")
    if args.out:
        curation.save_items(args.out, res.survivors)
    if res.errors:
        print(f"{len(res.errors)} items failed with errors")
    return 0


# ---------------------------------------------------------------- parser


def _add_distill_args(p):
    p.add_argument("--generator-steps", type=int, dest="generator_steps")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr-multiplier", type=float, dest="lr_multiplier")
    p.add_argument("--seed", type=int)
    p.add_argument("--log", help="JSONL training log")


def build_parser():
    parser = argparse.ArgumentParser(prog="streamedit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("latency", help="first-chunk latency and throughput report")
    p.add_argument("--profile", help="JSON profile file (default: built-in profiles)")
    p.set_defaults(func=cmd_latency)

    p = sub.add_parser("stream", help="edit a raw video chunk by chunk")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--source", required=True, help="raw video file")
    p.add_argument("--instruction", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("pipelined", "sequential"), default="pipelined")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("train-toy", help="train a toy flow model or the toy editor teacher")
    p.add_argument("--kind", choices=("gaussian", "mixture", "editor"), default="gaussian")
    p.add_argument("--n-iter", type=int, default=2000)
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("distill-dmd", help="few-step distillation (1-D mixture demo without --teacher)")
    p.add_argument("--teacher", help="editor teacher checkpoint")
    p.add_argument("--out", help="student checkpoint directory")
    _add_distill_args(p)
    p.set_defaults(func=cmd_distill_dmd)

    p = sub.add_parser("distill-sf", help="causal student trained on its own rollouts")
    p.add_argument("--teacher", required=True)
    p.add_argument("--student", required=True, help="DMD student checkpoint to start from")
    p.add_argument("--out", required=True)
    _add_distill_args(p)
    p.set_defaults(func=cmd_distill_sf)

    p = sub.add_parser("bench", help="benchmark construction and scoring")
    bsub = p.add_subparsers(dest="bench_cmd", required=True)
    b = bsub.add_parser("build")
    b.add_argument("--sources", required=True, help="JSONL source list")
    b.add_argument("--out", required=True)
    b.add_argument("--clusters", type=int, default=10)
    b.add_argument("--per-cluster", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b = bsub.add_parser("score")
    b.add_argument("--manifest", required=True)
    b.add_argument("--scores", required=True)
    b.add_argument("--out")
    bsub.add_parser("fixtures", help="recompute the overall and agreement figures from the bundled tables")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("curate", help="run the curation pipeline")
    p.add_argument("--manifest", help="pipeline manifest (JSON); default stage list otherwise")
    p.add_argument("--items", help="item manifest (JSONL); synthetic clips otherwise")
    p.add_argument("--decisions", help="review decisions (JSONL)")
    p.add_argument("--synthetic", type=int, default=500)
    p.add_argument("--accept-rate", type=float, default=0.5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "distill-dmd" and args.teacher and not args.out:
        raise SystemExit("--out is required with --teacher")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
