"""Command-line front end: transfer pipeline, metrics, flow fixtures.

Exit codes: 0 success, 2 usage or input-validation error, 1 runtime or
I/O failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys

from . import __version__
from .flow import FlowFormatError, identity_field, load_flo, write_flo
from .image import ImageFormatError, load_image, save_image
from .metrics import psnr, ssim
from .patches import build_pairs, merge_candidates
from .transfer import TransferConfig, run_transfer

# Variant label -> (mapper, with_position). nw_cp pairs colour with scaled
# pixel position; nw_c and the quantile baseline use colour-only patches.
VARIANTS = {
    "nw_c": ("nw", False),
    "nw_cp": ("nw", True),
    "ot": ("ot", False),
}

_CONFIG_KEYS = ("m", "with_position", "position_scale", "h", "mapper",
                "max_iterations", "rel_tol", "grid_size", "seed",
                "l2_directions", "l2_subsample", "pair_stride")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="inwdt",
        description="Correspondence-aware sliced distribution transfer "
                    "for colour grading.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser(
        "transfer",
        help="recolour a source image toward a target via paired patches",
        description="Loads a source/target pair plus a dense correspondence "
                    "field (Middlebury .flo, or a synthetic identity field), "
                    "builds paired patch features, runs the iterative sliced "
                    "transfer, merges the recoloured patches and writes a PNG.")
    t.add_argument("--source", help="source image (PNG or JPEG)")
    t.add_argument("--target", help="target image (PNG or JPEG)")
    flow = t.add_mutually_exclusive_group()
    flow.add_argument("--flow", help="correspondence field (.flo)")
    flow.add_argument("--identity-flow", action="store_true",
                      help="use a zero-displacement field (registered pair)")
    t.add_argument("--variant", choices=sorted(VARIANTS), default=None,
                   help="feature/mapper variant (default nw_cp)")
    t.add_argument("--patch-size", type=int, default=None, metavar="M",
                   help="odd patch side length (default 3)")
    t.add_argument("--bandwidth", type=float, default=None, metavar="H",
                   help="kernel bandwidth in 0-255 units (default 5)")
    t.add_argument("--max-iters", type=int, default=None,
                   help="iteration cap (default 30)")
    t.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default 0)")
    t.add_argument("--rel-tol", type=float, default=None,
                   help="relative-improvement stopping threshold (default 0.01)")
    t.add_argument("--grid-size", type=int, default=None,
                   help="1D mapper grid resolution (default 1024)")
    t.add_argument("--l2-directions", type=int, default=None,
                   help="probe directions for the convergence monitor (default 32)")
    t.add_argument("--l2-subsample", type=int, default=None,
                   help="row cap per set for the convergence monitor (default 1024)")
    t.add_argument("--pair-stride", type=int, default=None,
                   help="fit 1D maps on every k-th pair only (default 1)")
    t.add_argument("--out", help="output PNG path")
    t.add_argument("--trace", help="write per-iteration CSV here")
    t.add_argument("--manifest", help="write a reproducibility manifest here")
    t.add_argument("--from-manifest", metavar="PATH",
                   help="re-run a previous invocation; other flags except "
                        "--out/--trace/--manifest/--threads are ignored")
    t.add_argument("--threads", type=int, default=None,
                   help="cap internal worker threads (results are unaffected)")
    t.set_defaults(func=cmd_transfer)

    m = sub.add_parser("metrics",
                       help="print psnr_db,ssim for two same-sized images")
    m.add_argument("image_a")
    m.add_argument("image_b")
    m.set_defaults(func=cmd_metrics)

    f = sub.add_parser("make-identity-flow",
                       help="write a zero-displacement .flo field")
    f.add_argument("--width", type=int, required=True)
    f.add_argument("--height", type=int, required=True)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_make_identity_flow)
    return p


class _UsageError(Exception):
    pass


def _resolve_run(args) -> dict:
    """Collapse flags (or a manifest) into one plain dict describing the run."""
    if args.from_manifest:
        try:
            with open(args.from_manifest) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise _UsageError(f"manifest is not valid JSON: {exc}")
        try:
            run = {
                "source": doc["source"],
                "target": doc["target"],
                "flow": doc["flow"],
                "identity_flow": doc["identity_flow"],
                "variant": doc["variant"],
                "out": doc["out"],
                "trace": doc.get("trace"),
                "manifest": None,
                "config": {k: doc["config"][k] for k in _CONFIG_KEYS},
            }
        except KeyError as exc:
            raise _UsageError(f"manifest is missing key {exc}")
        if args.out:
            run["out"] = args.out
        if args.trace:
            run["trace"] = args.trace
        if args.manifest:
            run["manifest"] = args.manifest
        return run

    missing = [f"--{k}" for k in ("source", "target", "out")
               if not getattr(args, k)]
    if missing:
        raise _UsageError("missing required flags: " + ", ".join(missing))
    if not args.flow and not args.identity_flow:
        raise _UsageError("one of --flow or --identity-flow is required")
    variant = args.variant or "nw_cp"
    mapper, with_position = VARIANTS[variant]
    cfg = {
        "m": args.patch_size if args.patch_size is not None else 3,
        "with_position": with_position,
        "position_scale": None,
        "h": args.bandwidth if args.bandwidth is not None else 5.0,
        "mapper": mapper,
        "max_iterations": args.max_iters if args.max_iters is not None else 30,
        "rel_tol": args.rel_tol if args.rel_tol is not None else 0.01,
        "grid_size": args.grid_size if args.grid_size is not None else 1024,
        "seed": args.seed if args.seed is not None else 0,
        "l2_directions": args.l2_directions if args.l2_directions is not None else 32,
        "l2_subsample": args.l2_subsample if args.l2_subsample is not None else 1024,
        "pair_stride": args.pair_stride if args.pair_stride is not None else 1,
    }
    return {
        "source": args.source,
        "target": args.target,
        "flow": args.flow,
        "identity_flow": bool(args.identity_flow),
        "variant": variant,
        "out": args.out,
        "trace": args.trace,
        "manifest": args.manifest,
        "config": cfg,
    }


def _variant_of(cfg: TransferConfig) -> str:
    for name, (mapper, with_position) in VARIANTS.items():
        if cfg.mapper == mapper and cfg.with_position == with_position:
            return name
    return cfg.mapper


def cmd_transfer(args) -> int:
    run = _resolve_run(args)
    if args.threads is not None:
        _cap_threads(args.threads)
    cfg = TransferConfig(**run["config"])

    source = load_image(run["source"])
    target = load_image(run["target"])
    if run["identity_flow"]:
        fld = identity_field(source.width, source.height)
    else:
        fld = load_flo(run["flow"])

    pairs = build_pairs(source, target, fld, cfg.m,
                        with_position=cfg.with_position,
                        position_scale=cfg.position_scale)
    final_x, trace = run_transfer(pairs, cfg)
    out_img = merge_candidates(final_x, source.width, source.height, cfg.m,
                               with_position=cfg.with_position)
    save_image(out_img, run["out"])
    if run["trace"]:
        trace.save(run["trace"])
    if run["manifest"]:
        _write_manifest(run, pairs.d, run["manifest"])
    last = trace.records[-1]
    print(f"wrote {run['out']}  iterations={last.iteration}  "
          f"l2={trace.initial_l2:.6g}->{trace.final_l2:.6g}")
    return 0


def _write_manifest(run: dict, feature_dim: int, path: str) -> None:
    doc = {
        "tool": "inwdt",
        "version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc)
                       .isoformat(timespec="seconds"),
        "variant": run["variant"],
        "feature_dim": feature_dim,
        "source": os.path.abspath(run["source"]),
        "target": os.path.abspath(run["target"]),
        "flow": os.path.abspath(run["flow"]) if run["flow"] else None,
        "identity_flow": run["identity_flow"],
        "out": os.path.abspath(run["out"]),
        "trace": os.path.abspath(run["trace"]) if run["trace"] else None,
        "config": run["config"],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _cap_threads(n: int) -> None:
    if n < 1:
        raise _UsageError(f"--threads must be >= 1, got {n}")
    # Compute kernels are sequential by design; this only bounds the pools
    # of the numeric libraries so results cannot depend on it.
    try:
        import warnings

        import numba
        with warnings.catch_warnings():
            # probing the threading layer can warn about TBB versions
            warnings.simplefilter("ignore")
            numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def cmd_metrics(args) -> int:
    a = load_image(args.image_a)
    b = load_image(args.image_b)
    if a.data.shape != b.data.shape:
        raise _UsageError(
            f"images differ in size: {a.width}x{a.height} vs {b.width}x{b.height}")
    p = psnr(a, b)
    s = ssim(a, b)
    p_text = "inf" if math.isinf(p) else f"{p:.6f}"
    print(f"{p_text},{s:.6f}")
    return 0


def cmd_make_identity_flow(args) -> int:
    if args.width < 1 or args.height < 1:
        raise _UsageError(
            f"dimensions must be >= 1, got {args.width}x{args.height}")
    write_flo(identity_field(args.width, args.height), args.out)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ImageFormatError, FlowFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
