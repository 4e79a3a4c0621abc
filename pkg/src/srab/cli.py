"""``srab`` command line: train, attack, evaluate, robustness, defend, transfer.

Exit codes: 0 success, 2 usage error, 3 data error.  Output files depend
only on the arguments (and ``SOURCE_DATE_EPOCH`` for report timestamps), so
repeating a command reproduces them byte for byte.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import (CANONICAL_ALPHAS, AttackConfig, Mask, center_mask, ifgsm_basic, parse_alpha, partial_attack,
                      targeted_attack, universal_attack, apply_universal)
from .cache import cache_dir, resolve_weights
from .defenses import resize_defense, self_ensemble
from .errors import ConfigurationError, DataError
from .evaluation import (EvalReport, ImageRecord, emit_report, evaluate_sweep, outer_region_psnr, psnr,
                         robustness_sweep, transfer_matrix, _default_created)
from .imageio import IMAGE_SUFFIXES, load_image_dir, load_png, quantize, save_png
from .models import PRESETS
from .training import train_micro_model, smoothed
from .weights import save_weights

log = logging.getLogger("srab")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3


class UsageError(Exception):
    pass


def _alpha(text):
    try:
        return parse_alpha(text)
    except ConfigurationError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _alpha_list(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        # bare integers are k/255 budgets, matching the usual 1,2,4,... sweep
        out.append(_alpha(f"{part}/255" if part.isdigit() else part))
    return out


def _fmt(path, given):
    if given:
        return given
    return "csv" if Path(path).suffix.lower() == ".csv" else "json"


def _image_paths(items):
    paths = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            paths += sorted(q for q in p.iterdir() if q.suffix.lower() in IMAGE_SUFFIXES)
        else:
            paths.append(p)
    if not paths:
        raise DataError("no input images")
    return paths


def _load_mask(arg, shape, scale):
    if arg == "center":
        return center_mask(*shape, scale=scale)
    m = load_png(arg)[0]
    if m.shape != shape:
        raise DataError(f"mask {m.shape} does not match image {shape}")
    return Mask.from_lr((m >= 0.5).astype(np.float64), scale)


# -- subcommands --------------------------------------------------------------

def cmd_train(args):
    ds = load_image_dir(args.data)
    model = train_micro_model(PRESETS[args.preset], ds.hr, steps=args.steps, patch_size=args.patch_size,
                              learning_rate=args.lr, seed=args.seed, batch_size=args.batch_size,
                              name=args.preset)
    out = Path(args.out) if args.out else cache_dir() / f"{args.preset}.sraw"
    save_weights(model, out)
    s = smoothed(model.history)
    if len(s) >= 2:
        log.info("smoothed loss %.6f -> %.6f", s[0], s[-1])
    print(out)


def cmd_attack(args):
    model = resolve_weights(args.weights)
    paths = _image_paths(args.image)
    images = [load_png(p) for p in paths]
    cfg = AttackConfig(args.alpha, args.iters, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = None
    if args.kind == "targeted":
        if not args.target:
            raise UsageError("--kind targeted needs --target")
        target = load_png(args.target)
    delta = None
    if args.kind == "universal":
        ch = min(im.shape[-2] for im in images)
        cw = min(im.shape[-1] for im in images)
        delta = universal_attack(model, images, ch, cw, cfg)
        np.save(out / "universal_delta.npy", delta)

    records = []
    for p, x0 in zip(paths, images):
        mask = None
        if args.kind == "basic":
            x = ifgsm_basic(model, x0, cfg).adversarial
        elif args.kind == "partial":
            mask = _load_mask(args.mask, x0.shape[-2:], model.scale)
            x = partial_attack(model, x0, mask, cfg).adversarial
        elif args.kind == "targeted":
            x = targeted_attack(model, x0, target, cfg).adversarial
        else:
            x = apply_universal(x0, delta)
        x = quantize(x)
        clean_sr = np.clip(model.forward(x0), 0, 1)
        adv_sr = np.clip(model.forward(x), 0, 1)
        save_png(x, out / f"{p.stem}_adv.png")
        save_png(clean_sr, out / f"{p.stem}_sr_clean.png")
        save_png(adv_sr, out / f"{p.stem}_sr_adv.png")
        sr = outer_region_psnr(clean_sr, adv_sr, mask) if mask is not None else psnr(clean_sr, adv_sr)
        rec = ImageRecord(p.stem, cfg.alpha, psnr(x0, x), sr, model=model.name, kind=args.kind)
        if target is not None:
            rec.target_sr_psnr = psnr(adv_sr, np.clip(model.forward(target), 0, 1))
        records.append(rec)
    meta = {"kind": args.kind, "alpha": cfg.alpha, "iterations": cfg.iterations, "seed": cfg.seed,
            "quantized": True, "dataset": "cli"}
    report = EvalReport([model.name], meta, records, created=_default_created())
    emit_report(report, "json", out / "report.json")
    print(out / "report.json")


def cmd_evaluate(args):
    model = resolve_weights(args.weights)
    ds = load_image_dir(args.data)
    report = evaluate_sweep(model, ds, args.alphas, args.kind, args.iters, args.seed,
                            quantized=not args.float, jobs=args.jobs)
    print(emit_report(report, _fmt(args.out, args.format), args.out))


def cmd_robustness(args):
    model = resolve_weights(args.weights)
    ds = load_image_dir(args.data)
    report = robustness_sweep(model, ds, args.alpha, args.samples, args.seed, args.iters, jobs=args.jobs)
    print(emit_report(report, _fmt(args.out, args.format), args.out))
    c = report.correlation
    print(f"spearman {c['value']:.4f}" if c["defined"] else "spearman undefined")


def cmd_defend(args):
    model = resolve_weights(args.weights)
    paths = _image_paths(args.image)
    clean = _image_paths(args.clean) if args.clean else None
    if clean is not None and len(clean) != len(paths):
        raise DataError(f"{len(paths)} images but {len(clean)} clean references")
    defend = resize_defense if args.method == "resize" else self_ensemble
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for i, p in enumerate(paths):
        x = load_png(p)
        y = np.clip(defend(model, x), 0, 1)
        save_png(y, out / f"{p.stem}_sr_{args.method}.png")
        if clean is not None:
            x0 = load_png(clean[i])
            ref = np.clip(model.forward(x0), 0, 1)
            rec = ImageRecord(p.stem, float(np.abs(x - x0).max()), psnr(x0, x), psnr(ref, y),
                              model=model.name, kind=f"defend-{args.method}")
            rec.target_sr_psnr = psnr(ref, np.clip(model.forward(x), 0, 1))
            records.append(rec)
    if records:
        meta = {"kind": f"defend-{args.method}", "dataset": "cli",
                "note": ("alpha is the measured max |x - clean|; sr_psnr is the defended and "
                         "target_sr_psnr the undefended SR, both against f(clean)")}
        report = EvalReport([model.name], meta, records, created=_default_created())
        emit_report(report, "json", out / "report.json")
    print(out)


def cmd_transfer(args):
    models = [resolve_weights(w) for w in args.weights]
    ds = load_image_dir(args.data)
    report = transfer_matrix(models, ds, AttackConfig(args.alpha, args.iters, args.seed), jobs=args.jobs)
    print(emit_report(report, _fmt(args.out, args.format), args.out))


# -- parser -------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="srab", description="Adversarial robustness toolkit for x4 super-resolution.")
    parser.add_argument("--version", action="version", version=f"srab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, alpha=True):
        p.add_argument("--seed", type=int, default=0, help="seed for every random draw")
        p.add_argument("--iters", type=int, default=50, help="attack iterations T")
        if alpha:
            p.add_argument("--alpha", type=_alpha, default=8 / 255, help="budget as k/255 or a float")

    p = sub.add_parser("train", help="train a micro SR network on a directory of HR images")
    p.add_argument("--data", required=True, help="directory of HR training images")
    p.add_argument("--preset", choices=sorted(PRESETS), default="micro")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--patch-size", type=int, default=96, help="HR patch side")
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="weights file (default: $SRAB_CACHE/<preset>.sraw)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="attack LR images and write adversarial and SR PNGs plus a JSON report")
    p.add_argument("--weights", required=True, help="weights file, 'bicubic', or a cached preset name")
    p.add_argument("--image", nargs="+", required=True, help="LR image files or directories")
    p.add_argument("--kind", choices=["basic", "universal", "partial", "targeted"], default="basic")
    p.add_argument("--mask", default="center", help="'center' or a mask PNG (white = attackable)")
    p.add_argument("--target", help="LR target image for --kind targeted")
    p.add_argument("--out", required=True, help="output directory")
    common(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("evaluate", help="alpha sweep over a HR image directory")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True, help="directory of HR images (LR derived by bicubic /4)")
    p.add_argument("--alphas", type=_alpha_list, default=list(CANONICAL_ALPHAS),
                   help="comma list; integers mean k/255 (default 1,2,4,8,16,32)")
    p.add_argument("--kind", choices=["basic", "universal", "partial"], default="basic")
    p.add_argument("--float", action="store_true", help="measure unquantized adversarial inputs")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"])
    common(p, alpha=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("robustness", help="robustness index per image and its rank correlation with SR-PSNR")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--samples", type=int, default=1024)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"])
    common(p)
    p.set_defaults(alpha=1 / 255)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("defend", help="super-resolve (attacked) LR images through a defense")
    p.add_argument("--weights", required=True)
    p.add_argument("--image", nargs="+", required=True)
    p.add_argument("--method", choices=["resize", "ensemble"], required=True)
    p.add_argument("--clean", nargs="+", help="clean LR images, in the same order, to score against")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_defend)

    p = sub.add_parser("transfer", help="source x target SR-PSNR matrix for basic attacks")
    p.add_argument("--weights", nargs="+", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"])
    common(p)
    p.set_defaults(func=cmd_transfer)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.command == "transfer" and len(args.weights) < 2:
        parser.error("transfer needs at least two --weights")
    try:
        args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"srab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"srab: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
