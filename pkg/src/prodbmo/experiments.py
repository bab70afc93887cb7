"""Configuration-driven certification runs and their reports.

A run is described by a JSON config (schema ``pbmo-config/1``). Each scenario
expands the config into sweep points, evaluates them (optionally in a process
pool) and reduces the results in sweep order, so the report depends on the
config alone. Rows with ``passed`` set to ``None`` are informational; all other
rows are assertions checked against the tolerance stored on the row.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .geometry import Grid, OpenSetApprox
from .haar import (GridFunction, forward_haar, haar_atom, haar_coefficient, inverse_haar,
                   project_open_set)
from .norms import (bmo_norm, lmo_norm, product_bmo_norm)
from .operators import (assemble_matrix, bmo_to_bmo_lowerbound, decomposition_residual,
                        enumerate_signatures, l2_operator_norm, named_operator, OperatorHandle)
from .testfns import FunctionRecipe, dyadic_log, sample

CONFIG_SCHEMA = "pbmo-config/1"
REPORT_SCHEMA = "pbmo-report/1"
COLUMNS = ("scenario", "resolution", "quantity", "value", "witness", "tolerance", "passed")

DEFAULT_TOLERANCES = {
    "round_trip": 1e-12,
    "parseval": 1e-12,
    "decomposition": 1e-10,
    "lmo_scaling": 1e-12,
    "haar_multiplier": 1e-12,
    "soundness": 1e-12,
    "heuristic_floor": 0.9,
    "band": 2.0,
    "band_upper": 2.0,
}


# ---------------------------------------------------------------- config

@dataclass
class ExperimentConfig:
    scenario: str
    grid: str | None = None
    resolutions: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    workers: int = 1
    schema: str = CONFIG_SCHEMA

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        schema = data.pop("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ValueError(f"unsupported config schema {schema!r}")
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        seeds = data.get("seeds", [])
        if isinstance(seeds, int):
            data["seeds"] = list(range(seeds))
        return cls(**data)

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def canonical(self) -> dict:
        """The parts that determine the results (output location and pool size excluded)."""
        d = asdict(self)
        d.pop("output")
        d.pop("workers")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def level_list(self, default) -> list[tuple[int, ...]]:
        """Resolutions as level tuples; a bare integer ``k`` on an ``N``-axis grid means ``(k,)*N``."""
        items = self.resolutions or ([Grid.parse(self.grid).levels] if self.grid else default)
        N = Grid.parse(self.grid).N if self.grid else None
        out = []
        for r in items:
            if isinstance(r, int):
                out.append((r,) * (N or 1))
            elif isinstance(r, str):
                out.append(Grid.parse(r).levels)
            else:
                out.append(tuple(int(x) for x in r))
        return out


# ---------------------------------------------------------------- report

@dataclass
class Row:
    scenario: str
    resolution: str
    quantity: str
    value: float
    witness: str = ""
    tolerance: float | None = None
    passed: bool | None = None


@dataclass
class Report:
    scenario: str
    config_hash: str
    rows: list[Row] = field(default_factory=list)
    version: str = __version__

    @property
    def asserted(self) -> list[Row]:
        return [r for r in self.rows if r.passed is not None]

    @property
    def failed(self) -> list[Row]:
        return [r for r in self.rows if r.passed is False]

    @property
    def ok(self) -> bool:
        return not self.failed

    def to_json(self) -> dict:
        return {"schema": REPORT_SCHEMA, "toolkit_version": self.version,
                "scenario": self.scenario, "config_hash": self.config_hash,
                "columns": list(COLUMNS),
                "rows": [{c: _json_value(getattr(r, c)) for c in COLUMNS} for r in self.rows],
                "summary": {"rows": len(self.rows), "asserted": len(self.asserted),
                            "failed": len(self.failed)}}


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "pass" if v else "fail"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_report(report: Report, fmt: str = "json") -> str:
    fmt = fmt.lower()
    if fmt == "json":
        return json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in report.rows:
            w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report: Report, path=None, fmt: str = "json") -> str:
    """Render the report and write it to ``path`` when given; returns the text."""
    text = render_report(report, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------- helpers

def _res(levels) -> str:
    return ",".join(map(str, levels))


def _random_values(grid: Grid, seed: int) -> GridFunction:
    return GridFunction(grid, np.random.default_rng(seed).uniform(-1.0, 1.0, grid.shape))


def _pure(grid, seed):
    return sample(FunctionRecipe.random(), grid, seed)


def _full(grid, seed):
    return sample(FunctionRecipe.random(pure=False), grid, seed)


def _band_rows(scn, res, name, values, tol, witness=""):
    """max/min of positive values and whether they sit within a factor ``tol``."""
    vals = [v for v in values if v > 0]
    if not vals:
        return [Row(scn, res, f"{name}_band", 0.0, "no positive values", tol, None)]
    lo, hi = min(vals), max(vals)
    return [Row(scn, res, f"{name}_min", lo), Row(scn, res, f"{name}_max", hi),
            Row(scn, res, f"{name}_spread", hi / lo, witness, None, None)]


# ---------------------------------------------------------------- scenarios
# Each scenario provides points(cfg) -> list, point(cfg, p) -> payload,
# reduce(cfg, points, payloads) -> rows.

def _seeds(cfg, default):
    return list(cfg.seeds) if cfg.seeds else list(default)


# round trip ------------------------------------------------------

def _rt_points(cfg):
    return cfg.level_list([(5,), (3, 3), (2, 2, 2)])


def _rt_point(cfg, levels):
    g = Grid(levels)
    rt = pv = 0.0
    for s in _seeds(cfg, range(100)):
        f = _random_values(g, s)
        spec = forward_haar(f)
        rt = max(rt, float(np.max(np.abs(inverse_haar(spec).values - f.values))))
        pv = max(pv, abs(spec.sum_of_squares() - float(np.mean(f.values ** 2))))
    return rt, pv


def _rt_reduce(cfg, points, payloads):
    rows = []
    for levels, (rt, pv) in zip(points, payloads):
        t1, t2 = cfg.tol("round_trip"), cfg.tol("parseval")
        rows.append(Row("round_trip", _res(levels), "max_round_trip_error", rt, "", t1, rt <= t1))
        rows.append(Row("round_trip", _res(levels), "max_parseval_error", pv, "", t2, pv <= t2))
    return rows


# decomposition ---------------------------------------------------

def _dec_points(cfg):
    return [(lv, s) for lv in cfg.level_list([(4, 4)]) for s in _seeds(cfg, range(20))]


def _dec_point(cfg, p):
    levels, s = p
    g = Grid(levels)
    return decomposition_residual(_pure(g, 2 * s), _pure(g, 2 * s + 1))


def _dec_reduce(cfg, points, payloads):
    t = cfg.tol("decomposition")
    return [Row("decomposition", _res(lv), "max_residual", r, f"seed={s}", t, r <= t)
            for (lv, s), r in zip(points, payloads)]


# embedding -------------------------------------------------------

def _emb_points(cfg):
    return [(lv, s) for lv in cfg.level_list([(2, 2)]) for s in _seeds(cfg, range(200))]


def _emb_point(cfg, p):
    levels, s = p
    f = _full(Grid(levels), s)
    B = product_bmo_norm(f, mode=cfg.params.get("mode", "auto"))
    b = bmo_norm(f).value
    return B.value, b, B.method


def _emb_reduce(cfg, points, payloads):
    rows, by_res = [], {}
    for (lv, s), (B, b, method) in zip(points, payloads):
        ratio = B / b if b > 0 else 0.0
        rows.append(Row("embedding", _res(lv), "BMO/bmo", ratio, f"seed={s} method={method}"))
        by_res.setdefault(_res(lv), []).append(ratio)
    for res, ratios in by_res.items():
        m = max(ratios)
        rows.append(Row("embedding", res, "max_ratio", m, "", None, bool(math.isfinite(m))))
    return rows


# strictness ------------------------------------------------------

def _str_points(cfg):
    return [int(k) for k in (cfg.resolutions or [2, 3, 4, 5])]


def _str_point(cfg, k):
    from .testfns import tensor_product
    g1 = Grid((k,))
    f = dyadic_log(g1.interval(0, k, 0), g1)
    F = tensor_product(f, f)
    # in one variable every open set splits into dyadic intervals, so the search is exact
    one = product_bmo_norm(f, mode="heuristic").value
    out = {"bmo": bmo_norm(F).value, "BMO_1d": one,
           "BMO_heuristic": product_bmo_norm(F, mode="heuristic").value}
    if F.grid.ncells <= 16:
        out["BMO_exact"] = product_bmo_norm(F, mode="exact").value
    return out


def _str_reduce(cfg, points, payloads):
    rows = []
    tol = cfg.tol("soundness")
    for k, d in zip(points, payloads):
        res = f"{k},{k}"
        bound = d["BMO_1d"] ** 2
        rows.append(Row("strictness", res, "bmo", d["bmo"]))
        rows.append(Row("strictness", res, "bmo/k", d["bmo"] / k))
        rows.append(Row("strictness", res, "BMO_heuristic", d["BMO_heuristic"], "method=heuristic"))
        if "BMO_exact" in d:
            rows.append(Row("strictness", res, "BMO_exact", d["BMO_exact"], "method=exact"))
        # product of the one-variable norms bounds the tensor from above
        rows.append(Row("strictness", res, "BMO_heuristic-tensor_bound", d["BMO_heuristic"] - bound,
                        f"tensor_bound={bound!r}", tol, d["BMO_heuristic"] <= bound + tol))
    bmos = [d["bmo"] for d in payloads]
    c = min(d["bmo"] / k for k, d in zip(points, payloads))
    sweep = ",".join(map(str, points))
    inc = all(b2 > b1 for b1, b2 in zip(bmos, bmos[1:]))
    rows.append(Row("strictness", sweep, "bmo_lower_slope_c", c, "min over k of bmo/k", 0.0, c > 0))
    rows.append(Row("strictness", sweep, "bmo_increasing", float(inc), "", None, inc))
    top = max(d["BMO_1d"] ** 2 for d in payloads)
    band = cfg.tol("band_upper")
    rows.append(Row("strictness", sweep, "max_tensor_bound", top, "upper bound for BMO over the sweep",
                    band, top <= band))
    return rows


# necessity probe -------------------------------------------------

def _nec_points(cfg):
    return [int(j) for j in (cfg.resolutions or [2, 3, 4, 5, 6])]


def _nec_point(cfg, j):
    K = int(cfg.params.get("K", 7))
    g = Grid((K,))
    phi = dyadic_log(g.interval(0, K, 0), g)
    chi = GridFunction(g, g.rectangle([(j, 0)]).mask(g).astype(float))
    top = product_bmo_norm(phi * chi, mode=cfg.params.get("mode", "auto"))
    return top.value / bmo_norm(chi).value, top.method


def _nec_reduce(cfg, points, payloads):
    K = int(cfg.params.get("K", 7))
    rows = [Row("necessity_probe", f"K={K} j={j}", "BMO(phi*chi)/bmo(chi)", r, f"method={m}")
            for j, (r, m) in zip(points, payloads)]
    ratios = [r for r, _ in payloads]
    inc = all(b > a for a, b in zip(ratios, ratios[1:]))
    rows.append(Row("necessity_probe", f"K={K}", "strictly_increasing", float(inc), "", None, inc))
    return rows


# LMO scaling identity --------------------------------------------

def _lmo_points(cfg):
    return [(lv, s) for lv in cfg.level_list([(3, 3)]) for s in _seeds(cfg, range(50))]


def _lmo_scaling_point(cfg, p):
    levels, s = p
    g = Grid(levels)
    rng = np.random.default_rng(10_000 + s)
    phi = _pure(g, s)
    R = g.rectangle([(int(j), int(rng.integers(2 ** j))) for j in (rng.integers(0, k + 1) for k in levels)])
    inside = np.flatnonzero(R.mask(g).ravel())
    pick = inside[rng.random(len(inside)) < 0.5]
    if len(pick) == 0:
        pick = inside[:1]
    omega = OpenSetApprox.from_flat(g, pick.tolist())
    K = sum(I.level for I in R.axes)
    lhs = project_open_set(phi * dyadic_log(R, g), omega).l2_norm() ** 2
    rhs = K ** 2 * project_open_set(phi, omega).l2_norm() ** 2
    return abs(lhs - rhs), str(R), len(pick)


def _lmo_scaling_reduce(cfg, points, payloads):
    t = cfg.tol("lmo_scaling")
    return [Row("lmo_scaling", _res(lv), "residual", r, f"seed={s} R={R} |Omega|={n} cells", t, r <= t)
            for (lv, s), (r, R, n) in zip(points, payloads)]


# Haar multiplier -------------------------------------------------

def _hm_points(cfg):
    return [(lv, s) for lv in cfg.level_list([(3, 3)]) for s in _seeds(cfg, [0])]


def _hm_point(cfg, p):
    levels, s = p
    g = Grid(levels)
    phi = _full(g, s)
    op = named_operator("T1", phi)
    err, best = 0.0, 0.0
    from .geometry import all_dyadic_rectangles
    for R in all_dyadic_rectangles(g):
        if any(I.level >= k for I, k in zip(R.axes, levels)):
            continue
        meas = float(R.measure)
        out = forward_haar(op(haar_atom(g, R, normalized=True)))[R] / meas ** 0.5
        mR = haar_coefficient(phi, R, [1] * g.N)
        err = max(err, abs(out - mR))
        best = max(best, abs(mR))
    lb = bmo_to_bmo_lowerbound(op, family=cfg.params.get("family", "default"))
    return err, best, lb.value, str(lb.witness)


def _hm_reduce(cfg, points, payloads):
    t = cfg.tol("haar_multiplier")
    rows = []
    for (lv, s), (err, best, lb, wit) in zip(points, payloads):
        res = _res(lv)
        rows.append(Row("haar_multiplier", res, "max_coefficient_error", err, f"seed={s}", t, err <= t))
        rows.append(Row("haar_multiplier", res, "max_abs_mean", best, f"seed={s}"))
        rows.append(Row("haar_multiplier", res, "lower_bound_minus_max_mean", lb - best, wit, t, lb >= best - t))
    return rows


# LMO modes -------------------------------------------------------

def _modes_points(cfg):
    return [(lv, s) for lv in cfg.level_list([(4,), (2, 2)]) for s in _seeds(cfg, range(50))]


def _modes_point(cfg, p):
    levels, s = p
    g = Grid(levels)
    zero_every = int(cfg.params.get("constant_every", 10))
    f = GridFunction.constant(g, s) if zero_every and s % zero_every == 0 else _full(g, s)
    mode = cfg.params.get("mode", "auto")
    return lmo_norm(f, "tail", search=mode).value, lmo_norm(f, "carleson", search=mode).value


def _modes_reduce(cfg, points, payloads):
    rows, ratios = [], {}
    eps = 1e-12
    for (lv, s), (tail, carl) in zip(points, payloads):
        res = _res(lv)
        zt, zc = tail <= eps, carl <= eps
        ratio = carl / tail ** 2 if not zt else 0.0
        rows.append(Row("lmo_modes", res, "carleson/tail^2", ratio, f"seed={s} tail={tail!r} carleson={carl!r}",
                        eps, zt == zc))
        if not zt:
            ratios.setdefault(res, []).append(ratio)
    for res, vals in ratios.items():
        rows += _band_rows("lmo_modes", res, "ratio", vals, None)
    return rows


# sufficiency -----------------------------------------------------

def _suf_points(cfg):
    return [(lv, s) for lv in cfg.level_list([(2, 2)]) for s in _seeds(cfg, range(20))]


def _suf_point(cfg, p):
    levels, s = p
    g = Grid(levels)
    phi, f = _full(g, 2 * s), _full(g, 2 * s + 1)
    mode = cfg.params.get("mode", "auto")
    top = product_bmo_norm(phi * f, mode=mode).value
    bottom = (phi.sup_norm() + lmo_norm(phi, "tail", search=mode).value) * bmo_norm(f).value
    return top / bottom if bottom > 0 else 0.0


def _suf_reduce(cfg, points, payloads):
    rows = [Row("sufficiency", _res(lv), "BMO(phi f)/((|phi|_inf+LMO(phi)) bmo(f))", r, f"seed={s}")
            for (lv, s), r in zip(points, payloads)]
    by = {}
    for (lv, _), r in zip(points, payloads):
        by.setdefault(_res(lv), []).append(r)
    for res, vals in by.items():
        m = max(vals)
        rows.append(Row("sufficiency", res, "max_ratio", m, "", None, bool(math.isfinite(m))))
    return rows


# heuristic soundness ---------------------------------------------

def _hs_points(cfg):
    return [(lv, s) for lv in cfg.level_list([(2, 2)]) for s in _seeds(cfg, range(100))]


def _hs_point(cfg, p):
    levels, s = p
    f = _full(Grid(levels), s)
    return product_bmo_norm(f, "exact").value, product_bmo_norm(f, "heuristic").value


def _hs_reduce(cfg, points, payloads):
    t, floor = cfg.tol("soundness"), cfg.tol("heuristic_floor")
    rows, worst = [], {}
    for (lv, s), (ex, he) in zip(points, payloads):
        res = _res(lv)
        rows.append(Row("heuristic_soundness", res, "heuristic-exact", he - ex, f"seed={s}", t, he <= ex + t))
        if ex > 0:
            worst[res] = min(worst.get(res, 1.0), he / ex)
    for res, w in worst.items():
        note = "meets floor" if w >= floor else f"gap below floor {floor}"
        rows.append(Row("heuristic_soundness", res, "min_heuristic/exact", w, note, floor, None))
    return rows


# L2 bounds of the bilinear family --------------------------------

def _l2_points(cfg):
    return [(lv, s) for lv in cfg.level_list([(3, 3)]) for s in _seeds(cfg, range(20))]


def _l2_point(cfg, p):
    levels, s = p
    g = Grid(levels)
    phi = _pure(g, s)
    B = product_bmo_norm(phi, mode=cfg.params.get("mode", "auto")).value
    out = []
    for sig in enumerate_signatures(g.N):
        op = OperatorHandle(str(sig), phi, sig)
        out.append((str(sig), l2_operator_norm(assemble_matrix(op)) / B))
    return out


def _l2_reduce(cfg, points, payloads):
    rows, C = [], {}
    for (lv, s), items in zip(points, payloads):
        res = _res(lv)
        for sig, r in items:
            rows.append(Row("paraproduct_l2", res, f"|B[{sig}]|/BMO(phi)", r, f"seed={s}"))
            C[res] = max(C.get(res, 0.0), r)
    for res, c in C.items():
        rows.append(Row("paraproduct_l2", res, "C", c, "max over signatures and seeds", None, bool(math.isfinite(c))))
    return rows


SCENARIOS = {
    "round_trip": (_rt_points, _rt_point, _rt_reduce),
    "decomposition": (_dec_points, _dec_point, _dec_reduce),
    "embedding": (_emb_points, _emb_point, _emb_reduce),
    "strictness": (_str_points, _str_point, _str_reduce),
    "necessity_probe": (_nec_points, _nec_point, _nec_reduce),
    "lmo_scaling": (_lmo_points, _lmo_scaling_point, _lmo_scaling_reduce),
    "haar_multiplier": (_hm_points, _hm_point, _hm_reduce),
    "lmo_modes": (_modes_points, _modes_point, _modes_reduce),
    "sufficiency": (_suf_points, _suf_point, _suf_reduce),
    "heuristic_soundness": (_hs_points, _hs_point, _hs_reduce),
    "paraproduct_l2": (_l2_points, _l2_point, _l2_reduce),
}


def _run_point(args):
    cfg, p = args
    return SCENARIOS[cfg.scenario][1](cfg, p)


def run_experiment(config: ExperimentConfig | dict) -> Report:
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    if cfg.scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {cfg.scenario!r}; choose from {sorted(SCENARIOS)}")
    points_fn, point_fn, reduce_fn = SCENARIOS[cfg.scenario]
    points = points_fn(cfg)
    if cfg.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            payloads = list(pool.map(_run_point, [(cfg, p) for p in points]))
    else:
        payloads = [point_fn(cfg, p) for p in points]
    return Report(cfg.scenario, cfg.config_hash(), reduce_fn(cfg, points, payloads))
