"""CSV and JSON readers and writers for sites, panels, fits and posteriors."""
import csv
import json
import math
from pathlib import Path

import numpy as np

from ..abc import PosteriorSample, Stage
from ..design import BlockMaximaPanel, MarginScale, SpatialDesign
from ..errors import ParseError, SchemaError
from ..margins import GevParams

FLOAT_FORMAT = "%.17g"


def _fmt(x):
    return FLOAT_FORMAT % x


def _read_rows(path):
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError(f"{path} is empty")
    return [[c.strip() for c in r] for r in rows]


def _float(cell, row, column, path):
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"{path}: row {row}, column {column!r}: {cell!r} is not a number") from None
    if not math.isfinite(value):
        raise ParseError(f"{path}: row {row}, column {column!r}: non-finite value {cell!r}")
    return value


# ---------------------------------------------------------------- sites

def load_sites(path):
    rows = _read_rows(path)
    if [h.lower() for h in rows[0]] != ["id", "x", "y"]:
        raise SchemaError(f"{path}: header must be id,x,y, got {','.join(rows[0])}")
    ids, coords = [], []
    for n, r in enumerate(rows[1:], start=1):
        if len(r) != 3:
            raise ParseError(f"{path}: row {n} has {len(r)} fields, expected 3")
        ids.append(r[0])
        coords.append((_float(r[1], n, "x", path), _float(r[2], n, "y", path)))
    return SpatialDesign(np.array(coords).reshape(-1, 2), ids)


def save_sites(design, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y"])
        for sid, (x, y) in zip(design.ids, design.coords):
            w.writerow([sid, _fmt(x), _fmt(y)])


# ---------------------------------------------------------------- panels

def meta_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def save_panel(panel, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(panel.design.ids)
        for row in panel.values:
            w.writerow([_fmt(v) for v in row])
    meta = {"scale": panel.scale.value, **panel.meta}
    meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default))


def load_panel(path, design, scale=None):
    """Read a panel whose header lists site ids of ``design``.

    Columns are reordered to the design order. The scale tag comes from the
    JSON sidecar when present, else from ``scale``, else ``raw``.
    """
    rows = _read_rows(path)
    header = rows[0]
    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicated site id in header")
    if sorted(header) != sorted(design.ids):
        missing = sorted(set(design.ids) - set(header))
        extra = sorted(set(header) - set(design.ids))
        raise SchemaError(f"{path}: header does not match the sites (missing {missing}, unknown {extra})")
    values = np.empty((len(rows) - 1, len(header)))
    for n, r in enumerate(rows[1:], start=1):
        if len(r) != len(header):
            raise ParseError(f"{path}: row {n} has {len(r)} fields, expected {len(header)}")
        values[n - 1] = [_float(c, n, header[k], path) for k, c in enumerate(r)]
    order = [header.index(i) for i in design.ids]
    meta = {}
    side = meta_path(path)
    if side.exists():
        try:
            meta = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{side}: {exc}") from None
    tag = meta.pop("scale", None) or scale or MarginScale.RAW
    if scale is not None and MarginScale(scale) is not MarginScale(tag):
        raise SchemaError(f"{path}: sidecar says {tag} but {MarginScale(scale).value} was requested")
    return BlockMaximaPanel(values[:, order], MarginScale(tag), design, meta)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default))


# ---------------------------------------------------------------- exports

def save_fits(design, fits, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site_id", "mu", "sigma", "xi", "se_mu", "se_sigma", "se_xi"])
        for sid, f in zip(design.ids, fits):
            p = f.params
            w.writerow([sid, *(_fmt(v) for v in (p.mu, p.sigma, p.xi, *f.se))])


def load_fits(path, design):
    """Per-site GEV parameters in design order."""
    rows = _read_rows(path)
    if rows[0][:4] != ["site_id", "mu", "sigma", "xi"]:
        raise SchemaError(f"{path}: header must start with site_id,mu,sigma,xi")
    params = {}
    for n, r in enumerate(rows[1:], start=1):
        if len(r) < 4:
            raise ParseError(f"{path}: row {n} has {len(r)} fields, expected at least 4")
        params[r[0]] = GevParams(*(_float(r[k], n, rows[0][k], path) for k in (1, 2, 3)))
    missing = [i for i in design.ids if i not in params]
    if missing:
        raise SchemaError(f"{path}: no parameters for site(s) {', '.join(missing)}")
    return [params[i] for i in design.ids]


def load_weights(path, design):
    """Two-column ``id,weight`` file in design order."""
    rows = _read_rows(path)
    if [h.lower() for h in rows[0]] != ["id", "weight"]:
        raise SchemaError(f"{path}: header must be id,weight")
    weights = {r[0]: _float(r[1], n, "weight", path) for n, r in enumerate(rows[1:], start=1)}
    missing = [i for i in design.ids if i not in weights]
    if missing:
        raise SchemaError(f"{path}: no weight for site(s) {', '.join(missing)}")
    return np.array([weights[i] for i in design.ids])


def save_clustering(clustering, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["triplet_j", "triplet_k", "triplet_l", "cluster_id"])
        ids = clustering.design.ids
        for (j, k, l), c in zip(clustering.triplets, clustering.labels):
            w.writerow([ids[j], ids[k], ids[l], int(c)])


def save_cluster_summary(summary, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cluster_id", "theta_bar", "count"])
        for c, (v, n) in enumerate(zip(summary.values, summary.clustering.counts), start=1):
            w.writerow([c, _fmt(v), int(n)])


def save_curve_summary(summary, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", summary.method.value])
        for h, v in zip(summary.grid, summary.values):
            w.writerow([_fmt(h), _fmt(v)])


def save_posterior(sample, path, extra_meta=None):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c2", "nu", "distance", "weight"])
        for (c2, nu), d, wt in zip(sample.phi, sample.distances, sample.weights):
            w.writerow([_fmt(c2), _fmt(nu), _fmt(d), _fmt(wt)])
    meta = {k: v for k, v in sample.provenance.items() if k != "candidates"}
    meta.update({"epsilon": sample.epsilon, "stage": sample.stage.value,
                 "particles": len(sample), **(extra_meta or {})})
    write_json(meta, meta_path(path))


def load_posterior(path):
    path = Path(path)
    rows = _read_rows(path)
    if rows[0] != ["c2", "nu", "distance", "weight"]:
        raise SchemaError(f"{path}: header must be c2,nu,distance,weight")
    data = np.array([[_float(c, n, rows[0][k], path) for k, c in enumerate(r)]
                     for n, r in enumerate(rows[1:], start=1)]).reshape(-1, 4)
    meta = {}
    if meta_path(path).exists():
        meta = json.loads(meta_path(path).read_text())
    w = data[:, 3]
    eps = meta.get("epsilon", float(data[:, 2].max()) if data.size else 0.0)
    return PosteriorSample(data[:, :2], data[:, 2], w / w.sum(), eps,
                           meta.get("percentile", float("nan")),
                           meta.get("stage", Stage.REJECTION.value),
                           meta.get("family", "whittle-matern"), provenance=meta)


def save_mcle(fit, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c2", "nu", "loglik", "converged"])
        w.writerow([_fmt(fit.phi_hat.c2), _fmt(fit.phi_hat.nu), _fmt(fit.loglik),
                    str(bool(fit.converged)).lower()])
