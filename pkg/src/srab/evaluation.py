"""Measurement protocol: PSNR, attack sweeps, transfer matrices, robustness sweeps, reports.

LR quality is ``PSNR(X0, X)``; SR quality is ``PSNR(f(X0), f(X))`` (outer
region only for partial attacks).  Adversarial inputs are quantized to 8 bits
before they are measured or super-resolved, and SR outputs are clipped to
[0, 1].  Identical images have infinite PSNR.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field, fields, asdict
import io
import json
import math
import os
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .attacks import (AttackConfig, apply_universal, center_mask, ifgsm_basic, partial_attack,
                      targeted_attack, universal_attack)
from .errors import ConfigurationError, DataError, EmptyRegionError
from .imageio import quantize
from .robustness import robustness_index

__all__ = [
    "SCHEMA",
    "psnr",
    "outer_region_psnr",
    "spearman",
    "ImageRecord",
    "EvalReport",
    "attack_images",
    "evaluate_attack",
    "evaluate_sweep",
    "transfer_matrix",
    "robustness_sweep",
    "emit_report",
    "report_to_json",
    "report_from_json",
    "CSV_COLUMNS",
]

SCHEMA = "srab-report/1"
ATTACK_KINDS = ("basic", "universal", "partial", "targeted")
CSV_COLUMNS = ("image_id", "alpha", "lr_psnr", "sr_psnr", "sr_psnr_gt", "target_sr_psnr",
               "robustness_index", "model", "kind")


def psnr(a, b):
    """``10 log10(1 / MSE)`` over every channel and pixel; ``inf`` for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigurationError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def outer_region_psnr(a, b, mask):
    """PSNR restricted to HR pixels where ``mask.hr_mask`` is 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigurationError(f"shape mismatch: {a.shape} vs {b.shape}")
    if mask.hr_mask.shape[-2:] != a.shape[-2:]:
        raise ConfigurationError(f"HR mask {mask.hr_mask.shape[-2:]} does not match {a.shape[-2:]}")
    outer = np.broadcast_to(mask.hr_mask == 0, a.shape)
    count = int(outer.sum())
    if count == 0:
        raise EmptyRegionError("outer region is empty")
    mse = float(np.sum(((a - b) ** 2)[outer]) / count)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def spearman(xs, ys):
    """Spearman rank correlation; ``(nan, False)`` when undefined (constant input or n < 2)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) < 2 or np.all(xs == xs[0]) or np.all(ys == ys[0]):
        return math.nan, False
    rho = stats.spearmanr(xs, ys).statistic
    return float(rho), bool(np.isfinite(rho))


@dataclass
class ImageRecord:
    image_id: str
    alpha: float
    lr_psnr: float
    sr_psnr: float
    sr_psnr_gt: float = None
    target_sr_psnr: float = None
    robustness_index: float = None
    model: str = ""
    kind: str = "basic"


_PSNR_FIELDS = ("lr_psnr", "sr_psnr", "sr_psnr_gt", "target_sr_psnr")


@dataclass
class EvalReport:
    """Per-image measurements plus optional transfer matrix and correlation."""

    models: list
    attack: dict
    records: list = field(default_factory=list)
    transfer: dict = None
    correlation: dict = None
    created: str = None
    toolkit_version: str = __version__
    schema: str = SCHEMA

    def alphas(self):
        return sorted({r.alpha for r in self.records})

    def select(self, alpha=None, model=None):
        return [r for r in self.records
                if (alpha is None or r.alpha == alpha) and (model is None or r.model == model)]

    def mean(self, name, alpha=None, model=None):
        """Arithmetic mean of one record field (``inf`` if any entry is infinite)."""
        values = [getattr(r, name) for r in self.select(alpha, model)]
        values = [v for v in values if v is not None]
        if not values:
            return math.nan
        return float(np.mean(values))

    def summary(self):
        rows = []
        keys = sorted({(r.model, r.alpha) for r in self.records})
        for model, alpha in keys:
            row = {"model": model, "alpha": alpha, "count": len(self.select(alpha, model))}
            for name in ("lr_psnr", "sr_psnr", "sr_psnr_gt"):
                row[f"mean_{name}"] = self.mean(name, alpha, model)
            rows.append(row)
        return rows


def _default_created():
    # reproducible-build convention; absent means "no timestamp"
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return None
    import datetime

    return datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc).isoformat()


def _sr(model, x):
    return np.clip(model.forward(x), 0.0, 1.0)


def _chunks(dataset, batch_size):
    """Index runs of equal-shaped consecutive LR images, at most ``batch_size`` long."""
    runs, cur = [], []
    for i, lr in enumerate(dataset.lr):
        if cur and (len(cur) == batch_size or dataset.lr[cur[0]].shape != lr.shape):
            runs.append(cur)
            cur = []
        cur.append(i)
    if cur:
        runs.append(cur)
    return runs


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def attack_images(model, dataset, kind, config, mask=None, targets=None, delta=None,
                  batch_size=8, jobs=1):
    """Run one attack over every LR image of ``dataset``; returns unquantized adversarial images.

    :param kind: ``basic``, ``partial`` (``mask`` defaults to the central
        quarter), ``targeted`` (``targets`` aligned LR images) or ``universal``
        (``delta`` computed on the dataset itself when not given)
    """
    if kind not in ATTACK_KINDS:
        raise ConfigurationError(f"unknown attack kind {kind!r}")
    if len(dataset) == 0:
        raise DataError("empty dataset")
    if kind == "universal":
        if delta is None:
            ch = min(lr.shape[-2] for lr in dataset.lr)
            cw = min(lr.shape[-1] for lr in dataset.lr)
            delta = universal_attack(model, dataset.lr, ch, cw, config)
        return [apply_universal(lr, delta) for lr in dataset.lr]
    if kind == "targeted" and (targets is None or len(targets) != len(dataset)):
        raise ConfigurationError("targeted evaluation needs one target per image")

    def run(idx):
        x0 = np.stack([dataset.lr[i] for i in idx])
        if kind == "basic":
            res = ifgsm_basic(model, x0, config)
        elif kind == "partial":
            m = mask or center_mask(*x0.shape[-2:], scale=model.scale)
            res = partial_attack(model, x0, m, config)
        else:
            res = targeted_attack(model, x0, np.stack([targets[i] for i in idx]), config)
        return list(res.adversarial)

    out = _map(run, _chunks(dataset, batch_size), jobs)
    return [x for chunk in out for x in chunk]


def _measure(model, dataset, adversarial, kind, alpha, quantized, mask=None, targets=None, label=None):
    records = []
    for i, (image_id, x0, x) in enumerate(zip(dataset.ids, dataset.lr, adversarial)):
        if quantized:
            x = quantize(x)
        clean_sr = _sr(model, x0)
        adv_sr = _sr(model, x)
        if kind == "partial":
            m = mask or center_mask(*x0.shape[-2:], scale=model.scale)
            sr_psnr = outer_region_psnr(clean_sr, adv_sr, m)
        else:
            sr_psnr = psnr(clean_sr, adv_sr)
        rec = ImageRecord(image_id, alpha, psnr(x0, x), sr_psnr, psnr(adv_sr, dataset.hr[i]),
                          model=label or model.name, kind=kind)
        if targets is not None:
            rec.target_sr_psnr = psnr(adv_sr, _sr(model, targets[i]))
        records.append(rec)
    return records


def evaluate_attack(model, dataset, kind="basic", config=None, mask=None, targets=None, delta=None,
                    quantized=True, batch_size=8, jobs=1):
    """Attack every image and record LR-PSNR, SR-PSNR and SR-vs-ground-truth PSNR.

    :return: :class:`EvalReport`
    """
    config = config or AttackConfig(8 / 255)
    adversarial = attack_images(model, dataset, kind, config, mask, targets, delta, batch_size, jobs)
    records = _measure(model, dataset, adversarial, kind, config.alpha, quantized, mask,
                       targets if kind == "targeted" else None)
    return EvalReport([model.name], _attack_meta(kind, config, quantized, dataset), records,
                      created=_default_created())


def _attack_meta(kind, config, quantized, dataset, alphas=None):
    meta = {"kind": kind, "iterations": config.iterations, "seed": config.seed,
            "quantized": quantized, "dataset": dataset.name}
    if alphas is None:
        meta["alpha"] = config.alpha
    else:
        meta["alphas"] = list(alphas)
    return meta


def evaluate_sweep(model, dataset, alphas, kind="basic", iterations=50, seed=0, quantized=True,
                   batch_size=8, jobs=1, **kwargs):
    """:func:`evaluate_attack` over several budgets, merged into one report (alpha-major order)."""
    records = []
    for alpha in alphas:
        config = AttackConfig(alpha, iterations, seed)
        records += evaluate_attack(model, dataset, kind, config, quantized=quantized,
                                   batch_size=batch_size, jobs=jobs, **kwargs).records
    meta = _attack_meta(kind, AttackConfig(0.0, iterations, seed), quantized, dataset, alphas)
    return EvalReport([model.name], meta, records, created=_default_created())


def _unique_names(models):
    names, seen = [], {}
    for m in models:
        n = m.name
        if n in seen:
            seen[n] += 1
            n = f"{n}#{seen[n]}"
        else:
            seen[n] = 0
        names.append(n)
    return names


def transfer_matrix(models, dataset, config=None, quantized=True, batch_size=8, jobs=1):
    """Mean SR-PSNR of each target model on basic-attack examples crafted against each source.

    ``matrix[s][t]``: rows are sources, columns targets; the diagonal is the
    ordinary white-box result.
    """
    models = list(models)
    if len(models) < 2:
        raise ConfigurationError("transfer matrix needs at least two models")
    config = config or AttackConfig(8 / 255)
    names = _unique_names(models)
    matrix, records = [], []
    for src, src_name in zip(models, names):
        adversarial = attack_images(src, dataset, "basic", config, batch_size=batch_size, jobs=jobs)
        row = []
        for tgt, tgt_name in zip(models, names):
            recs = _measure(tgt, dataset, adversarial, "basic", config.alpha, quantized,
                            label=f"{src_name}->{tgt_name}")
            records += recs
            row.append(float(np.mean([r.sr_psnr for r in recs])))
        matrix.append(row)
    transfer = {"sources": names, "targets": names, "matrix": matrix}
    return EvalReport(names, _attack_meta("basic", config, quantized, dataset), records, transfer,
                      created=_default_created())


def robustness_sweep(model, dataset, alpha=1 / 255, n_samples=1024, seed=0, iterations=50,
                     quantized=True, batch_size=8, jobs=1):
    """Pair each image's robustness index with its basic-attack SR-PSNR at the same ``alpha``.

    The report's ``correlation`` holds the Spearman coefficient between the
    two; it is flagged undefined when either series is constant.
    """
    config = AttackConfig(alpha, iterations, seed)
    report = evaluate_attack(model, dataset, "basic", config, quantized=quantized,
                             batch_size=batch_size, jobs=jobs)

    def index(x0):
        return robustness_index(model, x0, alpha, n_samples, seed, keep_samples=False).index

    for rec, value in zip(report.records, _map(index, dataset.lr, jobs)):
        rec.robustness_index = value
    rho, defined = spearman([r.robustness_index for r in report.records],
                            [r.sr_psnr for r in report.records])
    report.correlation = {"method": "spearman", "n_samples": n_samples,
                          "value": rho if defined else None, "defined": defined}
    return report


# -- serialization ---------------------------------------------------------

def _psnr_json(v):
    if v is None:
        return None
    if math.isinf(v) and v > 0:
        return {"psnr": None, "identical": True}
    return {"psnr": v, "identical": False}


def _psnr_parse(v):
    if v is None:
        return None
    return math.inf if v["identical"] else v["psnr"]


def _num_json(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    if isinstance(v, float) and math.isinf(v):
        return {"psnr": None, "identical": True}
    return v


def report_to_dict(report):
    records = []
    for r in report.records:
        d = asdict(r)
        for name in _PSNR_FIELDS:
            d[name] = _psnr_json(d[name])
        records.append(d)
    summary = [{k: (_num_json(v) if k.startswith("mean_") else v) for k, v in row.items()}
               for row in report.summary()]
    transfer = None
    if report.transfer is not None:
        transfer = dict(report.transfer)
        transfer["matrix"] = [[_psnr_json(v) for v in row] for row in transfer["matrix"]]
    return {
        "schema": report.schema,
        "toolkit_version": report.toolkit_version,
        "created": report.created,
        "models": list(report.models),
        "attack": report.attack,
        "records": records,
        "summary": summary,
        "transfer": transfer,
        "correlation": report.correlation,
    }


def report_to_json(report):
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def report_from_json(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid report JSON: {exc}") from exc
    if d.get("schema") != SCHEMA:
        raise DataError(f"unsupported report schema {d.get('schema')!r}")
    known = {f.name for f in fields(ImageRecord)}
    records = []
    for rd in d["records"]:
        rd = {k: v for k, v in rd.items() if k in known}
        for name in _PSNR_FIELDS:
            rd[name] = _psnr_parse(rd.get(name))
        records.append(ImageRecord(**rd))
    transfer = d.get("transfer")
    if transfer is not None:
        transfer = dict(transfer)
        transfer["matrix"] = [[_psnr_parse(v) for v in row] for row in transfer["matrix"]]
    return EvalReport(d["models"], d["attack"], records, transfer, d.get("correlation"),
                      d.get("created"), d.get("toolkit_version"), d["schema"])


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def report_to_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if report.transfer is not None:
        t = report.transfer
        writer.writerow(["source"] + list(t["targets"]))
        for name, row in zip(t["sources"], t["matrix"]):
            writer.writerow([name] + [_csv_value(v) for v in row])
        return buf.getvalue()
    writer.writerow(CSV_COLUMNS)
    for r in report.records:
        writer.writerow([_csv_value(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_report(report, fmt, path):
    """Write ``report`` as ``"json"`` (schema ``srab-report/1``) or ``"csv"``.

    CSV holds one row per image record with columns :data:`CSV_COLUMNS`, or,
    for transfer reports, the source x target matrix with a header row.
    """
    if not report.records:
        raise DataError("refusing to emit a report with no records (empty dataset?)")
    fmt = fmt.lower()
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv":
        text = report_to_csv(report)
    else:
        raise ConfigurationError(f"unknown report format {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
