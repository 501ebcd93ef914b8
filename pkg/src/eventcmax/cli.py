"""Command-line interface: ``eventcmax {synth,landscape,estimate,maps,segment}``.

Negative numbers in list-valued flags need the ``=`` form, e.g.
``--range=-1:0.999:401`` or ``--init=0.5,-0.3,1``.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import events as ev
from .collapse import ObjectiveSpec, diwe, iwa, objective_terms
from .estimators import _result_from_scan, check_model_frame
from .metrics import aee, flow_from_warp, fwl, read_flow_csv, write_flow_csv
from .objectives import accumulate_iwe
from .optimize import adaptive_descent, default_box, landscape_scan, sampler_search
from .segmentation import em_segment
from .synth import SceneSpec, generate, merge
from .warps import WARP_MODELS, WarpDomainError, get_model_class
from .writers import (
    scale_diwe,
    scale_iwa,
    scale_iwe,
    write_grid_csv,
    write_landscape_csv,
    write_manifest,
    write_pgm,
)

log = logging.getLogger("eventcmax")


class UsageError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _range(text: str):
    parts = text.split(":")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps, got {text!r}")
    return lo, hi, steps


def _nonneg(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--events", help="event text file (t x y p per line)")
    common.add_argument("--calib", help="calibration file: width height fx fy cx cy")
    common.add_argument("--warp", choices=sorted(WARP_MODELS), default="zoom1dof")
    common.add_argument("--loss", choices=["variance", "gradmag", "avgts"], default="variance")
    common.add_argument("--lambda-div", type=_nonneg, default=0.0)
    common.add_argument("--lambda-def", type=_nonneg, default=0.0)
    common.add_argument("--alpha-div", type=float, default=-0.2)
    common.add_argument("--alpha-def", type=float, default=0.8)
    common.add_argument("--epsilon", type=float, default=1.0)
    common.add_argument("--polarity", choices=["on", "off"], default="off")
    common.add_argument("--optimizer", choices=["scan", "sampler", "descent"], default="sampler")
    common.add_argument("--samples", type=_nonneg_int, default=None,
                        help="sampler budget (300 for estimate, 60 per M-step for segment)")
    common.add_argument("--iters", type=_nonneg_int, default=None)
    common.add_argument("--step", type=float, default=0.01, help="descent step size")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--range", type=_range, default=None, metavar="LO:HI:STEPS")
    common.add_argument("--axis", type=int, default=0)
    common.add_argument("--init", type=_floats, default=None, metavar="P1,P2,...")
    common.add_argument("--out")
    common.add_argument("--out-prefix")
    common.add_argument("--gt-flow", help="ground-truth flow CSV (x,y,u,v,valid)")
    common.add_argument("--t-ref", type=float, default=None, help="reference time in seconds")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="eventcmax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic event stream")
    p.add_argument("--n-events", type=int, default=50_000)
    p.add_argument("--n-points", type=int, default=60)
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--distribution", choices=["uniform", "grid-lines"], default="uniform")
    p.add_argument("--width", type=int, default=240)
    p.add_argument("--height", type=int, default=180)
    p.add_argument("--focal", type=float, default=200.0)
    _second_motion(p, "add a second motion (seed + 1); the 5th event column is its source index")

    sub.add_parser("landscape", parents=[common], help="scan the objective along one axis")
    sub.add_parser("estimate", parents=[common], help="estimate warp parameters")
    sub.add_parser("maps", parents=[common], help="write IWE, DIWE and IWA images")
    p = sub.add_parser("segment", parents=[common], help="two-cluster EM motion segmentation")
    _second_motion(p, "parameters of the second cluster's warp")
    return parser


def _second_motion(p, help_init2):
    p.add_argument("--warp2", choices=sorted(WARP_MODELS), default="trans2dof")
    p.add_argument("--init2", type=_floats, default=None, metavar="P1,P2,...", help=help_init2)


def _spec(args) -> ObjectiveSpec:
    return ObjectiveSpec.make(
        args.loss, args.lambda_div, args.lambda_def, args.alpha_div, args.alpha_def,
        args.epsilon, args.polarity == "on",
    )


def _config(args) -> dict:
    cfg = {}
    for key in sorted(vars(args)):
        if key == "verbose":
            continue
        value = getattr(args, key)
        cfg[f"config.{key}"] = value
    return cfg


def _params(cls, values, what="--init"):
    if values is None:
        return cls.identity()
    if len(values) != cls.dof:
        raise UsageError(f"{what} needs {cls.dof} values for {cls.kind} ({', '.join(cls.param_names)})")
    return cls.from_vector(values)


def _load(args, cls=None):
    if not args.events:
        raise UsageError(f"{args.command} needs --events")
    camera = ev.load_calibration(args.calib) if args.calib else None
    if cls is not None and cls.kind == "rot3dof" and camera is None:
        raise UsageError("rot3dof works in calibrated coordinates and needs --calib")
    s = ev.load_events(args.events, camera)
    if args.t_ref is not None:
        if not s.t0 <= args.t_ref <= s.t1:
            raise UsageError(f"--t-ref {args.t_ref} outside the slice [{s.t0}, {s.t1}]")
        s = dataclasses.replace(s, t_ref=args.t_ref)
    s = ev.normalize_time(s)
    return check_model_frame(s, cls) if cls is not None else s


def _need(args, name):
    if not getattr(args, name):
        raise UsageError(f"{args.command} needs --{name.replace('_', '-')}")
    return getattr(args, name)


def _param_entries(prefix, model) -> dict:
    out = {f"{prefix}.kind": model.kind}
    for name, value in zip(model.param_names, model.to_vector()):
        out[f"{prefix}.{name}"] = float(value)
    return out


def cmd_synth(args) -> None:
    prefix = _need(args, "out_prefix")
    cls = get_model_class(args.warp)
    model = _params(cls, args.init)
    if args.calib:
        camera = ev.load_calibration(args.calib)
    else:
        camera = ev.CameraModel(args.width, args.height, args.focal, args.focal)
    scene = SceneSpec(args.n_points, args.distribution, args.n_events, args.noise, args.seed)
    slice_, flow = generate(scene, model, camera)
    labels, extra = None, {}
    if args.init2 is not None:
        model2 = _params(get_model_class(args.warp2), args.init2, "--init2")
        other, _ = generate(dataclasses.replace(scene, seed=args.seed + 1), model2, camera)
        slice_, labels = merge(slice_, other)
        extra = _param_entries("true2", model2)
    ev.save_events(slice_, f"{prefix}_events.txt", labels=labels)
    ev.save_calibration(camera, f"{prefix}_calib.txt")
    write_flow_csv(flow, f"{prefix}_gt_flow.csv")
    write_manifest(f"{prefix}_manifest.txt", {
        **_config(args),
        **_param_entries("true", model),
        **extra,
        "n_events": len(slice_),
        "events": f"{prefix}_events.txt",
        "calib": f"{prefix}_calib.txt",
        "gt_flow": f"{prefix}_gt_flow.csv",
    })


def cmd_landscape(args) -> None:
    out = _need(args, "out")
    cls = get_model_class(args.warp)
    s = _load(args, cls)
    lo, hi, steps = args.range or (-1.0, 1.0, 401)
    fixed = _params(cls, args.init).to_vector()
    rows = landscape_scan(s, cls, _spec(args), args.axis, lo, hi, steps, fixed=fixed)
    write_landscape_csv(out, rows)
    J = np.array([r.J for r in rows])
    entries = {**_config(args), "rows": len(rows), "missing": int(np.sum(~np.isfinite(J)))}
    if np.any(np.isfinite(J)):
        entries["argmin_J"] = rows[int(np.nanargmin(J))].value
        G = np.array([r.G for r in rows])
        entries["argmax_G"] = rows[int(np.nanargmax(G))].value
    write_manifest(_manifest_path(out), entries)


def _manifest_path(out) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + ".manifest.txt"))


def cmd_estimate(args) -> None:
    out = _need(args, "out")
    cls = get_model_class(args.warp)
    s = _load(args, cls)
    spec = _spec(args)
    init = _params(cls, args.init)
    box = default_box(cls)
    if args.optimizer == "sampler":
        result = sampler_search(s, cls, box, args.samples or 300, spec, seed=args.seed)
    elif args.optimizer == "descent":
        result = adaptive_descent(s, cls, init, args.iters or 100, spec, step=args.step)
    else:
        lo, hi, steps = args.range or (box.lo[args.axis], box.hi[args.axis], 401)
        rows = landscape_scan(s, cls, spec, args.axis, lo, hi, steps, fixed=init.to_vector())
        result = _result_from_scan(rows, cls, init, args.axis)
    best = result.best_params
    terms = objective_terms(s, best, spec, all_penalties=True)
    entries = {
        **_config(args),
        **_param_entries("best", best),
        "J": terms.J,
        "G": terms.G,
        "R_div": terms.R_div,
        "R_def": terms.R_def,
        "evaluations": result.evaluations,
        "failures": result.failures,
    }
    try:
        entries["FWL"] = fwl(s, best, args.epsilon)
    except ValueError as exc:
        log.warning("FWL undefined: %s", exc)
    if args.gt_flow:
        gt = read_flow_csv(args.gt_flow)
        pred = flow_from_warp(best, s.camera, s.frame)
        err, npe = aee(pred, gt)
        entries["AEE"] = err
        for n, pct in npe.items():
            entries[f"{n}PE"] = pct
    write_manifest(out, entries)


def cmd_maps(args) -> None:
    prefix = _need(args, "out_prefix")
    cls = get_model_class(args.warp)
    s = _load(args, cls)
    model = _params(cls, args.init)
    images = {
        "iwe": (accumulate_iwe(s, model, args.polarity == "on", args.epsilon), scale_iwe),
        "diwe": (diwe(s, model, args.epsilon), scale_diwe),
        "iwa": (iwa(s, model, args.epsilon), scale_iwa),
    }
    for name, (img, scale) in images.items():
        write_pgm(f"{prefix}_{name}.pgm", scale(img))
        write_grid_csv(f"{prefix}_{name}.csv", img)
    write_manifest(f"{prefix}_manifest.txt", {**_config(args), **_param_entries("params", model)})


def cmd_segment(args) -> None:
    prefix = _need(args, "out_prefix")
    classes = [get_model_class(args.warp), get_model_class(args.warp2)]
    if any(c.kind == "rot3dof" for c in classes) and not args.calib:
        raise UsageError("rot3dof works in calibrated coordinates and needs --calib")
    s = _load(args)
    init = [_params(classes[0], args.init), _params(classes[1], args.init2, "--init2")]
    res = em_segment(s, classes, init, args.iters or 5, _spec(args), seed=args.seed,
                     n_samples=args.samples or 60)
    raw = ev.load_events(args.events, s.camera)
    ev.save_events(raw, f"{prefix}_labeled.txt", labels=res.labels)
    for j, model in enumerate(res.params):
        write_manifest(f"{prefix}_cluster{j}_manifest.txt", {
            **_config(args),
            **_param_entries("params", model),
            "weight": float(res.responsibilities[:, j].sum()),
            "events": int(np.sum(res.labels == j)),
            "degenerate": res.degenerate[j],
        })
    write_manifest(f"{prefix}_manifest.txt", {**_config(args), "labeled": f"{prefix}_labeled.txt"})


COMMANDS = {
    "synth": cmd_synth,
    "landscape": cmd_landscape,
    "estimate": cmd_estimate,
    "maps": cmd_maps,
    "segment": cmd_segment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, ValueError, OSError, WarpDomainError, RuntimeError) as exc:
        print(f"eventcmax {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
