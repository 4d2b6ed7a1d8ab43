"""Command-line interface.

Subcommands wire the library end to end: persistence extraction (fast path
or oracle, with a cross-check mode), loss forward/backward, a finite
difference gradient check, raw-map gradient descent, synthetic scene
generation, keypoint detection, and repeatability reports. Every file
output gets a manifest JSON alongside it recording command, inputs, config,
seed, and tool version; outputs carry no timestamps so identical runs are
byte-identical.

Exit codes: 0 success, 1 failed check (oracle mismatch, gradcheck failure,
divergence), 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as tio
from .detect import DetectConfig, nms_keypoints, persistence_keypoints, truncate_keypoints
from .evaluation import EvalConfig, Homography, build_correspondence_map, classic_repeatability, mutual_nn_repeatability
from .grid import DimensionError, HeightMap, build_filtration
from .loss import CorrespondenceMap, LossConfig, detector_loss, gradient_check, symmetrized_loss
from .optimize import DivergenceError, OptimizeConfig, optimize_pair
from .persistence import h0_pairs, h1_generators, pairing_mismatch, reduce_boundary_matrix
from .synth import RNG_ALGORITHM, SynthConfig, make_scene, write_scene


class CheckFailure(RuntimeError):
    """A consistency check requested on the command line did not hold."""


def _manifest_path(out: Path, is_dir: bool) -> Path:
    return out / "manifest.json" if is_dir else Path(str(out) + ".manifest.json")


def _write_manifest(out: Path, *, command: str, inputs, config: dict, outputs, seed=None) -> None:
    is_dir = out.is_dir()
    payload = {
        "command": command,
        "inputs": [str(p) for p in inputs],
        "config": config,
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "rng": RNG_ALGORITHM if seed is not None else None,
        "tool_version": __version__,
    }
    tio.write_json(_manifest_path(out, is_dir), payload)


def _parse_eps(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list: {text!r}")


def _parse_budgets(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad budget list: {text!r}")


def _parse_shape(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return (int(h), int(w))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad shape, expected HxW: {text!r}")


def _load_correspondences(args, map1: HeightMap, map2: HeightMap):
    """(u12, u21, h) from --homography, else identity; u21 only if symmetric."""
    if args.homography is not None:
        h = Homography(tio.load_homography_matrix(args.homography))
        u12 = build_correspondence_map(map1.shape, map2.shape, h)
        u21 = build_correspondence_map(map2.shape, map1.shape, h.inverse()) if args.symmetric else None
        return u12, u21, h
    if map1.shape != map2.shape:
        raise ValueError(
            f"identity correspondence requires equal shapes, got {map1.shape} and {map2.shape}; "
            "pass --homography"
        )
    u12 = CorrespondenceMap.identity(map1.shape)
    u21 = CorrespondenceMap.identity(map1.shape) if args.symmetric else None
    return u12, u21, None


# subcommands ---------------------------------------------------------------

def cmd_persistence(args) -> int:
    hm = tio.load_height_map(args.input)
    if args.check:
        mismatch = pairing_mismatch(hm)
        if mismatch is not None:
            raise CheckFailure(mismatch)

    if args.oracle:
        diagram = reduce_boundary_matrix(build_filtration(hm))
        pairs = [p for p in diagram.pairs_of_dim(1)]
        if not args.keep_zero_pers:
            pairs = [p for p in pairs if p.death > p.birth]
        pairs.sort(key=lambda p: (-(p.death - p.birth), p.birth, p.saddle, p.maximum))
        h0 = diagram.pairs_of_dim(0)
        if not args.keep_zero_pers:
            h0 = [p for p in h0 if p.death > p.birth]
        essential = [c.anchor for c in diagram.essential if c.dim == 0]
    else:
        pairs = h1_generators(hm, keep_zero_persistence=args.keep_zero_pers)
        h0, ess = h0_pairs(hm, keep_zero_persistence=args.keep_zero_pers)
        essential = [ess]

    records = list(pairs) + (list(h0) if args.h0 else [])
    payload = tio.diagram_payload(records, essential)
    payload["shape"] = [hm.height, hm.width]
    if args.out is None:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        out = Path(args.out)
        tio.write_json(out, payload)
        _write_manifest(
            out,
            command="persistence",
            inputs=[args.input],
            config={
                "oracle": args.oracle,
                "check": args.check,
                "keep_zero_pers": args.keep_zero_pers,
                "h0": args.h0,
            },
            outputs=[out],
        )
    print(f"{len(pairs)} dim-1 pairs", file=sys.stderr)
    return 0


def cmd_loss(args) -> int:
    map1 = tio.load_height_map(args.map1)
    map2 = tio.load_height_map(args.map2)
    u12, u21, _ = _load_correspondences(args, map1, map2)
    cfg = LossConfig(alpha=args.alpha, keep_zero_persistence=args.keep_zero_pers)
    want_grads = args.grad_prefix is not None
    if args.symmetric:
        res = symmetrized_loss(map1, map2, u12, u21, cfg, with_grads=want_grads)
    else:
        res = detector_loss(map1, map2, u12, cfg, with_grads=want_grads)

    payload = tio.loss_payload(res, args.alpha)
    payload["symmetric"] = args.symmetric
    outputs = []
    if args.grad_prefix:
        g1_path = Path(args.grad_prefix + "_grad_map1.txt")
        g2_path = Path(args.grad_prefix + "_grad_map2.txt")
        tio.save_matrix_text(g1_path, res.grad_map1)
        tio.save_matrix_text(g2_path, res.grad_map2)
        payload["grad_map1"] = g1_path.name
        payload["grad_map2"] = g2_path.name
        outputs += [g1_path, g2_path]
    if args.out is None:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        out = Path(args.out)
        tio.write_json(out, payload)
        outputs.insert(0, out)
        _write_manifest(
            out,
            command="loss",
            inputs=[args.map1, args.map2] + ([args.homography] if args.homography else []),
            config={
                "alpha": args.alpha,
                "symmetric": args.symmetric,
                "keep_zero_pers": args.keep_zero_pers,
            },
            outputs=outputs,
        )
    print(f"loss {res.loss!r} over {res.n_generators} generators", file=sys.stderr)
    return 0


def cmd_gradcheck(args) -> int:
    map1 = tio.load_height_map(args.map1)
    map2 = tio.load_height_map(args.map2)
    u12, _, _ = _load_correspondences(args, map1, map2)
    cfg = LossConfig(alpha=args.alpha, keep_zero_persistence=args.keep_zero_pers)
    result = gradient_check(
        map1, map2, u12, cfg, step=args.step, n_random=args.n_random, seed=args.seed
    )
    if not result.step_ok:
        print(
            f"warning: step {result.step:g} is not below a third of the minimum value gap "
            f"{result.min_gap:g}; differences may cross a cell-order boundary",
            file=sys.stderr,
        )
    print(result.summary())
    return 0 if result.passed else 1


def cmd_optimize(args) -> int:
    if args.init is not None:
        map1 = tio.load_height_map(args.init[0])
        map2 = tio.load_height_map(args.init[1])
        inputs = list(args.init)
    else:
        rng = np.random.default_rng(args.seed)
        map1 = HeightMap(rng.uniform(0.0, 1.0, args.shape))
        map2 = HeightMap(rng.uniform(0.0, 1.0, args.shape))
        inputs = []
    cfg = OptimizeConfig(
        alpha=args.alpha,
        steps=args.steps,
        lr=args.lr,
        clamp=None if args.no_clamp else (0.0, 1.0),
        symmetric=args.symmetric,
    )
    result = optimize_pair(map1, map2, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tio.write_json(out / "trajectory.json", [r.as_dict() for r in result.history])
    tio.save_matrix_text(out / "map1_final.txt", result.map1.values)
    tio.save_matrix_text(out / "map2_final.txt", result.map2.values)
    _write_manifest(
        out,
        command="optimize",
        inputs=inputs,
        config={
            "alpha": args.alpha,
            "steps": args.steps,
            "lr": args.lr,
            "clamp": not args.no_clamp,
            "symmetric": args.symmetric,
            "shape": list(map1.shape),
        },
        outputs=["trajectory.json", "map1_final.txt", "map2_final.txt"],
        seed=None if args.init is not None else args.seed,
    )
    last = result.history[-1]
    print(
        f"final loss {last.loss:.6g}, {last.n_generators} generators, "
        f"mean pers {last.mean_pers:.4f}, mean sim {last.mean_sim:.4f}"
    )
    return 0


def cmd_synth(args) -> int:
    cfg = SynthConfig(size=args.size, n_blobs=args.n_blobs, warp=args.warp, noise=args.noise)
    scene = make_scene(cfg, args.seed)
    out = Path(args.out)
    files = write_scene(scene, out)
    _write_manifest(
        out,
        command="synth",
        inputs=[],
        config={
            "size": args.size,
            "n_blobs": args.n_blobs,
            "warp": args.warp,
            "noise": args.noise,
        },
        outputs=files,
        seed=args.seed,
    )
    print(f"scene written to {out}")
    return 0


def cmd_detect(args) -> int:
    hm = tio.load_height_map(args.input)
    cfg = DetectConfig(
        gamma=args.gamma,
        max_keypoints=args.max_keypoints,
        reject_plateaus=not args.keep_plateaus,
    )
    if args.method == "nms":
        kps = nms_keypoints(hm, cfg)
    else:
        kps = persistence_keypoints(hm, args.min_persistence, cfg)

    outputs = []
    if args.overlay:
        tio.render_keypoint_overlay(args.overlay, hm, kps)
        outputs.append(args.overlay)
    if args.out is None:
        print(json.dumps({"keypoints": tio.keypoint_records(kps), "shape": [hm.height, hm.width]},
                         indent=2, sort_keys=True))
    else:
        out = Path(args.out)
        tio.save_keypoints(out, kps, hm.shape)
        outputs.insert(0, out)
        _write_manifest(
            out,
            command="detect",
            inputs=[args.input],
            config={
                "method": args.method,
                "gamma": args.gamma,
                "min_persistence": args.min_persistence,
                "max_keypoints": args.max_keypoints,
                "reject_plateaus": not args.keep_plateaus,
            },
            outputs=outputs,
        )
    print(f"{len(kps)} keypoints", file=sys.stderr)
    return 0


def _scene_images(scene_dir: Path) -> list[tuple[int, Path]]:
    found = {}
    for p in sorted(scene_dir.iterdir()):
        if p.is_file() and p.stem.isdigit():
            found.setdefault(int(p.stem), p)
    return sorted(found.items())


def _metric_block(scores) -> dict:
    capped = [s for e, s in scores.per_eps.items() if e <= 5.0]
    return {
        "per_eps": {str(e): s for e, s in scores.per_eps.items()},
        "mean": scores.mean,
        "mean_capped_5px": float(np.mean(capped)) if capped else 0.0,
        "n_covisible": [scores.n_covisible_a, scores.n_covisible_b],
    }


def cmd_repeatability(args) -> int:
    eval_cfg = EvalConfig(epsilons=args.eps)
    det_cfg = DetectConfig(gamma=args.gamma)

    def detect_fn(hm):
        if args.method == "nms":
            return nms_keypoints(hm, det_cfg)
        return persistence_keypoints(hm, args.min_persistence, det_cfg)

    pairs_spec = []
    inputs = []
    if args.scene is not None:
        scene_dir = Path(args.scene)
        images = _scene_images(scene_dir)
        if len(images) < 2:
            raise ValueError(f"{scene_dir}: need at least two numbered images, found {len(images)}")
        ref_idx, ref_path = images[0]
        ref_map = tio.load_height_map(ref_path)
        ref_kps = detect_fn(ref_map)
        for idx, path in images[1:]:
            h_path = scene_dir / f"H_{ref_idx}_{idx}"
            if not h_path.exists():
                raise ValueError(f"missing homography file {h_path}")
            hm = tio.load_height_map(path)
            kps = detect_fn(hm)
            h = Homography(tio.load_homography_matrix(h_path))
            pairs_spec.append((f"{ref_idx}-{idx}", ref_kps, kps, h, ref_map.shape, hm.shape))
        inputs = [args.scene]
    else:
        if args.kps1 is None or args.kps2 is None or args.homography is None:
            raise ValueError("explicit mode needs --kps1, --kps2, and --homography")
        kps_a, shape_a = tio.load_keypoints(args.kps1)
        kps_b, shape_b = tio.load_keypoints(args.kps2)
        h = Homography(tio.load_homography_matrix(args.homography))
        pairs_spec.append(("1-2", kps_a, kps_b, h, shape_a, shape_b))
        inputs = [args.kps1, args.kps2, args.homography]

    report_pairs = []
    agg: dict[tuple[int, str], list] = {}
    for name, kps_a, kps_b, h, shape_a, shape_b in pairs_spec:
        for budget in args.budget:
            if budget > len(kps_a) or budget > len(kps_b):
                print(
                    f"warning: budget {budget} exceeds available keypoints "
                    f"({len(kps_a)}, {len(kps_b)}); using all",
                    file=sys.stderr,
                )
            a = truncate_keypoints(kps_a, budget, args.ranking)
            b = truncate_keypoints(kps_b, budget, args.ranking)
            mut = mutual_nn_repeatability(a, b, h, eval_cfg, shape1=shape_a, shape2=shape_b)
            cla = classic_repeatability(a, b, h, eval_cfg, shape1=shape_a, shape2=shape_b)
            report_pairs.append(
                {
                    "pair": name,
                    "budget": budget,
                    "n_keypoints": [len(a), len(b)],
                    "mutual": _metric_block(mut),
                    "classic": _metric_block(cla),
                }
            )
            agg.setdefault((budget, "mutual"), []).append(mut)
            agg.setdefault((budget, "classic"), []).append(cla)

    aggregate = []
    for (budget, metric), scores in sorted(agg.items()):
        per_eps = {
            str(e): float(np.mean([s.per_eps[e] for s in scores])) for e in args.eps
        }
        capped = [float(np.mean([s.per_eps[e] for s in scores])) for e in args.eps if e <= 5.0]
        aggregate.append(
            {
                "budget": budget,
                "metric": metric,
                "per_eps": per_eps,
                "mean": float(np.mean([s.mean for s in scores])),
                "mean_capped_5px": float(np.mean(capped)) if capped else 0.0,
            }
        )

    payload = {"pairs": report_pairs, "aggregate": aggregate}
    if args.scene is not None:
        payload["scene"] = str(args.scene)
    if args.out is None:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        out = Path(args.out)
        tio.write_json(out, payload)
        _write_manifest(
            out,
            command="repeatability",
            inputs=inputs,
            config={
                "budget": list(args.budget),
                "eps": list(args.eps),
                "method": args.method,
                "gamma": args.gamma,
                "min_persistence": args.min_persistence,
                "ranking": args.ranking,
            },
            outputs=[out],
        )
    return 0


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topokp",
        description="Topological keypoint engine: persistence, loss, detection, evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"topokp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("persistence", help="dimension-1 generators (and optionally dim-0 pairs)")
    p.add_argument("input", help="height map (matrix text or 8-bit grayscale image)")
    p.add_argument("-o", "--out", default=None, help="diagram JSON path (default: stdout)")
    p.add_argument("--oracle", action="store_true", help="use the boundary-matrix reduction")
    p.add_argument("--check", action="store_true",
                   help="verify fast path against the oracle; exit 1 on mismatch")
    p.add_argument("--keep-zero-pers", action="store_true",
                   help="retain zero-persistence pairs")
    p.add_argument("--h0", action="store_true", help="include dimension-0 pairs")
    p.set_defaults(func=cmd_persistence)

    p = sub.add_parser("loss", help="detector loss forward (and gradients)")
    p.add_argument("map1")
    p.add_argument("map2")
    p.add_argument("--homography", default=None,
                   help="homography file mapping map1 pixels into map2 (default: identity)")
    p.add_argument("--alpha", type=float, default=10.0, help="similarity weight (default 10)")
    p.add_argument("--symmetric", action="store_true", help="add the reverse-direction loss")
    p.add_argument("--keep-zero-pers", action="store_true")
    p.add_argument("--grad-prefix", default=None,
                   help="write dense gradients to PREFIX_grad_map{1,2}.txt")
    p.add_argument("-o", "--out", default=None, help="loss JSON path (default: stdout)")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradients")
    p.add_argument("map1")
    p.add_argument("map2")
    p.add_argument("--homography", default=None)
    p.add_argument("--alpha", type=float, default=10.0)
    p.add_argument("--step", type=float, default=1e-5, help="central difference step")
    p.add_argument("--n-random", type=int, default=50,
                   help="extra random positions beyond the critical ones")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep-zero-pers", action="store_true")
    p.set_defaults(func=cmd_gradcheck, symmetric=False)

    p = sub.add_parser("optimize", help="gradient descent directly on a map pair")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--init", nargs=2, metavar=("MAP1", "MAP2"), default=None,
                   help="initial maps (default: seeded uniform noise)")
    p.add_argument("--shape", type=_parse_shape, default=(32, 32),
                   help="random init shape HxW (default 32x32)")
    p.add_argument("--alpha", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--no-clamp", action="store_true", help="disable the [0, 1] projection")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("synth", help="seeded synthetic bump scene")
    p.add_argument("-o", "--out", required=True, help="scene directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--n-blobs", type=int, default=4)
    p.add_argument("--warp", choices=("none", "random"), default="random")
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="keypoints from a height map")
    p.add_argument("input")
    p.add_argument("--method", choices=("nms", "persistence"), default="nms")
    p.add_argument("--gamma", type=float, default=0.7, help="score threshold (default 0.7)")
    p.add_argument("--min-persistence", type=float, default=0.0)
    p.add_argument("--max-keypoints", type=int, default=None)
    p.add_argument("--keep-plateaus", action="store_true",
                   help="keep tie-break winners on flat regions")
    p.add_argument("--overlay", default=None, help="write a PNG overlay of the detections")
    p.add_argument("-o", "--out", default=None, help="keypoints JSON (default: stdout)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("repeatability", help="repeatability metrics for a scene or keypoint files")
    p.add_argument("scene", nargs="?", default=None,
                   help="scene dir with numbered images and H_1_k files")
    p.add_argument("--kps1", default=None, help="keypoints JSON for image 1 (explicit mode)")
    p.add_argument("--kps2", default=None, help="keypoints JSON for image 2 (explicit mode)")
    p.add_argument("--homography", default=None, help="homography file (explicit mode)")
    p.add_argument("--budget", type=_parse_budgets, default=(250, 500, 1000, 2000, 4000),
                   help="comma-separated keypoint budgets")
    p.add_argument("--eps", type=_parse_eps, default=(1.0, 2.0, 3.0, 4.0, 5.0),
                   help="comma-separated pixel thresholds")
    p.add_argument("--method", choices=("nms", "persistence"), default="nms")
    p.add_argument("--gamma", type=float, default=0.7)
    p.add_argument("--min-persistence", type=float, default=0.0)
    p.add_argument("--ranking", choices=("score", "persistence"), default="score")
    p.add_argument("-o", "--out", default=None, help="report JSON (default: stdout)")
    p.set_defaults(func=cmd_repeatability)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 1
    except (tio.ParseError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
