"""tube-rank command line: synth, filter, minimize, query, eval."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, EmptyGalleryError, EmptyQueryError, GalleryFormatError, TubeRankError
from .evaluation import STAGE_NAMES, EvalConfig, evaluate_stages, run_benchmark
from .gallery_io import load_gallery, write_gallery, write_tubes
from .minimizer import MinimizerConfig, minimize_tube
from .model import Gallery, Tube, build_gallery
from .noise_filter import FilterConfig, filter_tube
from .pipeline import PipelineConfig, run_query
from .retrieval import RetrievalConfig, ScoredImage
from .synth import SynthConfig, generate_synthetic

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_dims(text: str) -> dict[str, int]:
    dims: dict[str, int] = {}
    for part in text.split(","):
        if not part:
            continue
        name, _, value = part.partition("=")
        try:
            dims[name.strip()] = int(value)
        except ValueError:
            raise ConfigError(f"bad dims entry {part!r}; expected channel=dim")
    if not dims:
        raise ConfigError("dims must not be empty")
    return dims


def _parse_stages(text: str) -> list[str]:
    stages = []
    for part in text.split(","):
        part = part.strip()
        if part not in {"1", "2", "3"}:
            raise ConfigError(f"bad stage {part!r}; expected 1, 2 or 3")
        stages.append(f"stage{part}")
    return stages


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tube-rank", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tube-rank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic gallery and probes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="gallery JSONL path")
    p.add_argument("--probes-out", help="probe JSONL path (default: <out>.probes.jsonl)")
    p.add_argument("--identities", type=int, default=10)
    p.add_argument("--cameras", type=int, default=2)
    p.add_argument("--tubes-per", type=int, default=1)
    p.add_argument("--frames", type=int, nargs=2, default=[10, 20], metavar=("MIN", "MAX"))
    p.add_argument("--noise-rate", type=float, default=0.0)
    p.add_argument("--appearance-sigma", type=float, default=0.2)
    p.add_argument("--camera-sigma", type=float, default=0.2)
    p.add_argument("--pose-drift-sigma", type=float, default=0.25)
    p.add_argument("--distractor-pairs", type=int, default=0)
    p.add_argument("--distractor-gap", type=float, default=0.3)
    p.add_argument("--dims", default="retrieval=32,selfsim=32,pose=16")

    p = sub.add_parser("filter", help="remove noisy frames from each tube of a file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--q-min", type=float, default=0.5)
    p.add_argument("--mad-k", type=float, default=3.0)
    p.add_argument("--channel", default="pose")
    p.add_argument("--out", help="write kept frames as JSONL")

    p = sub.add_parser("minimize", help="select key frames for each tube of a file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--phi", type=float, default=0.4)
    p.add_argument("--channel", default="pose")
    p.add_argument("--oracle", action="store_true", help="exhaustive search (<= 16 frames)")

    p = sub.add_parser("query", help="rank gallery tubes for each probe tube")
    _add_pipeline_flags(p)
    p.add_argument("--emit-stages", action="store_true", help="include stage-1/2 lists")
    p.add_argument("--out")

    p = sub.add_parser("eval", help="stagewise CMC/mAP benchmark")
    _add_pipeline_flags(p)
    p.add_argument("--max-rank", type=int, default=20)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--split", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stages", default="1,2,3")
    p.add_argument("--csv", help="write per-rank CMC curves as CSV")
    p.add_argument("--no-timings", action="store_true", help="omit wall-time fields")
    p.add_argument("--no-folds", action="store_true",
                   help="single pass over the full gallery, no identity split")
    p.add_argument("--out")
    return parser


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gallery", required=True)
    p.add_argument("--probes", help="probe tube JSONL")
    p.add_argument("--probe-camera",
                   help="take this camera's tubes from --gallery as probes")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--channel", default="retrieval")
    p.add_argument("--scorer", default="cosine")
    p.add_argument("--phi", type=float, default=0.4)
    p.add_argument("--minimize-channel", default="pose")
    p.add_argument("--q-min", type=float, default=0.5)
    p.add_argument("--mad-k", type=float, default=3.0)
    p.add_argument("--filter-channel", default="pose")
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--threads", type=int, default=1)


def _pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig(
        filter=FilterConfig(q_min=args.q_min, mad_k=args.mad_k, channel=args.filter_channel),
        minimizer=MinimizerConfig(phi=args.phi, channel=args.minimize_channel),
        retrieval=RetrievalConfig(k=args.k, channel=args.channel, scorer=args.scorer),
        apply_filter=not args.no_filter,
    )
    cfg.validate()
    if args.threads < 1:
        raise ConfigError("threads must be >= 1")
    return cfg


def _load_probe_setup(args) -> tuple[Gallery, list[Tube]]:
    gallery = load_gallery(args.gallery)
    if args.probe_camera is not None:
        probes = [t for t in gallery.tubes if t.camera_id == args.probe_camera]
        rest = [t for t in gallery.tubes if t.camera_id != args.probe_camera]
        if not probes:
            raise GalleryFormatError(f"no tubes with camera_id {args.probe_camera!r}")
        if not rest:
            raise GalleryFormatError("probe camera would leave the gallery empty")
        return build_gallery(rest), probes
    if not args.probes:
        raise ConfigError("either --probes or --probe-camera is required")
    probe_gallery = load_gallery(args.probes)
    return gallery, list(probe_gallery.tubes)


def _load_tubes(path: str) -> list[Tube]:
    return list(load_gallery(path).tubes)


def _emit(payload: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _image_dict(img: ScoredImage) -> dict:
    return {
        "tube_id": img.tube_id,
        "frame_index": img.frame_index,
        "score": img.score,
        "rank": img.rank,
    }


def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        seed=args.seed,
        n_identities=args.identities,
        n_cameras=args.cameras,
        tubes_per_identity_per_camera=args.tubes_per,
        frames_per_tube_range=(args.frames[0], args.frames[1]),
        dims=_parse_dims(args.dims),
        noise_frame_rate=args.noise_rate,
        appearance_noise_sigma=args.appearance_sigma,
        camera_offset_sigma=args.camera_sigma,
        pose_drift_sigma=args.pose_drift_sigma,
        distractor_pairs=args.distractor_pairs,
        distractor_gap=args.distractor_gap,
    )
    gallery, probes = generate_synthetic(cfg)
    probes_out = args.probes_out or f"{args.out}.probes.jsonl"
    write_gallery(gallery, args.out)
    with open(probes_out, "w", encoding="utf-8") as fh:
        write_tubes(probes, fh)
    summary = {
        "gallery_tubes": len(gallery.tubes),
        "gallery_frames": gallery.n_frames,
        "probe_tubes": len(probes),
        "probe_frames": sum(len(t) for t in probes),
        "out": args.out,
        "probes_out": probes_out,
    }
    sys.stdout.write(json.dumps(summary) + "\n")
    return EXIT_OK


def _cmd_filter(args) -> int:
    cfg = FilterConfig(q_min=args.q_min, mad_k=args.mad_k, channel=args.channel)
    cfg.validate()
    tubes = _load_tubes(args.infile)
    per_tube = []
    kept_tubes = []
    for tube in tubes:
        kept, removed = filter_tube(tube, cfg)
        kept_tubes.append(kept)
        per_tube.append(
            {"tube_id": tube.tube_id, "kept": len(kept), "removed": len(removed)}
        )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_tubes(kept_tubes, fh)
    payload = {
        "tubes": per_tube,
        "total_kept": sum(t["kept"] for t in per_tube),
        "total_removed": sum(t["removed"] for t in per_tube),
    }
    sys.stdout.write(json.dumps(payload) + "\n")
    return EXIT_OK


def _cmd_minimize(args) -> int:
    cfg = MinimizerConfig(phi=args.phi, channel=args.channel)
    cfg.validate()
    tubes = _load_tubes(args.infile)
    out = []
    for tube in tubes:
        minimized, _ = minimize_tube(tube, cfg, oracle=args.oracle)
        out.append(
            {
                "tube_id": tube.tube_id,
                "selected": minimized.selected,
                "excluded": minimized.excluded,
                "energy": {
                    "xi_sum": minimized.energy.xi_sum,
                    "gamma_sum": minimized.energy.gamma_sum,
                    "total": minimized.energy.total,
                },
            }
        )
    sys.stdout.write(json.dumps({"tubes": out}) + "\n")
    return EXIT_OK


def _run_queries(gallery, probes, cfg, threads):
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        gallery.frame_by_key
        gallery.tube_by_id
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda p: run_query(p, gallery, cfg), probes))
    return [run_query(p, gallery, cfg) for p in probes]


def _cmd_query(args) -> int:
    cfg = _pipeline_config(args)
    gallery, probes = _load_probe_setup(args)
    results = _run_queries(gallery, probes, cfg, args.threads)
    payload = {"probes": []}
    for res in results:
        entry = {
            "probe_tube_id": res.probe_tube_id,
            "kept_frames": len(res.kept.frames),
            "removed_frames": res.removed_count,
            "selected": res.minimized.selected,
            "tubes": [
                {
                    "tube_id": t.tube_id,
                    "score": t.score,
                    "support": t.support,
                    "beta": t.beta,
                }
                for t in res.tubes
            ],
            "final": [_image_dict(i) for i in res.final],
        }
        if args.emit_stages:
            entry["stage1"] = [
                {"query_frame": qi, "images": [_image_dict(i) for i in row]}
                for qi, row in res.stage1
            ]
            entry["result_matrix"] = [
                {"query_frame": qi, "images": [_image_dict(i) for i in row]}
                for qi, row in zip(res.matrix.query_indices, res.matrix.rows)
            ]
        payload["probes"].append(entry)
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_eval(args) -> int:
    cfg = _pipeline_config(args)
    eval_cfg = EvalConfig(
        max_rank=args.max_rank,
        folds=args.folds,
        split_fraction=args.split,
        seed=args.seed,
    )
    eval_cfg.validate()
    stages = _parse_stages(args.stages)
    gallery, probes = _load_probe_setup(args)
    if args.no_folds:
        report = evaluate_stages(gallery, probes, cfg, eval_cfg, threads=args.threads)
    else:
        report = run_benchmark(gallery, probes, cfg, eval_cfg, threads=args.threads)
    doc = report.to_dict(include_timing=not args.no_timings)
    doc["stages"] = {k: v for k, v in doc["stages"].items() if k in stages}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "filter": _cmd_filter,
    "minimize": _cmd_minimize,
    "query": _cmd_query,
    "eval": _cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"tube-rank: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"tube-rank: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GalleryFormatError, EmptyQueryError, EmptyGalleryError, FileNotFoundError) as exc:
        print(f"tube-rank: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TubeRankError, ValueError) as exc:
        print(f"tube-rank: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover
        print(f"tube-rank: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
