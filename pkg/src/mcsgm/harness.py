"""Experiment configuration, sweeps, rate fits and report files."""
from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from . import __version__
from .bounds import (BOUND_FUNCTIONS, BoundInputs, nonconvex_opt_bound, sgd_gen_bound, sgd_opt_bound,
                     sgd_stability_bound, sgda_gen_bounds, sgda_opt_bound, sgda_stability_bound)
from .chain import analyze, chain_for, mixing_time_to, sample_path, synthetic_spectrum
from .errors import InvalidArgument, InvalidConfiguration
from .losses import (DataGenerator, SaddleGenerator, empirical_risk, erm_oracle, family_for, generate_dataset,
                     saddle_oracle, sup_loss_at_zero)
from .optim import DomainSpec, StepSchedule, mc_sgd, mc_sgda
from .risk import (PLUG_IN_MIN, PLUG_IN_STREAM, estimate_stability_sgd, estimate_stability_sgda,
                   generalization_report_sgd, grad_norm_trace, mean_se, opt_gap_sgd, pd_gap_sgda, primal_report,
                   replicate_seeds, weak_pd_report)

log = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("chain-info", "sgd-rate", "sgd-stability", "sgd-gen", "sgda-rate", "sgda-risk",
                    "nonconvex-gradnorm", "hp-quantiles", "bounds")
BASE_COLUMNS = ("experiment", "status", "n", "T", "eta", "lambda", "seed")


# --------------------------------------------------------------------------
# fits and quantiles


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float

    def to_record(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared}


def fit_rate(points) -> RateFit:
    """Least-squares line through ``(log T, log value)``."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidArgument("points must be (T, value) pairs")
    T, val = pts[:, 0], pts[:, 1]
    if np.any(val <= 0) or np.any(T <= 0) or not np.all(np.isfinite(pts)):
        raise InvalidArgument("T and values must be positive and finite")
    if np.unique(T).size < 2:
        raise InvalidArgument("need at least two distinct T")
    x, y = np.log(T), np.log(val)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
    return RateFit(slope, intercept, r2)


def quantile_report(values, gamma: float) -> float:
    """Empirical ``(1 - gamma)``-quantile with linear interpolation between order statistics."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise InvalidArgument("no values")
    if not 0.0 < gamma < 1.0:
        raise InvalidArgument("gamma must lie in (0, 1)")
    return float(np.quantile(vals, 1.0 - gamma))


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    grid: tuple
    family: Mapping[str, Any] = field(default_factory=dict)
    generator: Mapping[str, Any] = field(default_factory=dict)
    chain: Mapping[str, Any] = field(default_factory=lambda: {"kind": "uniform"})
    schedule: Mapping[str, Any] = field(default_factory=lambda: {"kind": "inv_sqrt_tlogt"})
    replicates: int = 20
    master_seed: int = 0
    dataset_seed: int | None = None
    N_test: int = 100_000
    gamma: float = 0.05
    bound_inputs: Mapping[str, Any] = field(default_factory=dict)
    output: str = "results"

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise InvalidConfiguration(f"unknown config keys: {sorted(unknown)}")
        if "kind" not in raw or "grid" not in raw:
            raise InvalidConfiguration("config needs 'kind' and 'grid'")
        cfg = cls(**{**raw, "grid": tuple(resolve_grid(raw["grid"]))})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise InvalidConfiguration(f"unknown experiment kind {self.kind!r}")
        if not self.grid:
            raise InvalidConfiguration("grid is empty")
        if self.replicates < 1:
            raise InvalidConfiguration("replicates must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidConfiguration("gamma must lie in (0, 1)")
        # resolve everything once so errors surface before running
        if self.kind not in ("chain-info", "bounds"):
            gen = make_generator(self.generator)
            if not isinstance(gen, SaddleGenerator):
                make_family(self.family, gen)
            make_schedule(self.schedule)
        if self.kind != "bounds" or "lambda" not in self.bound_inputs:
            for pt in self.grid:
                chain_for(dict(self.chain), pt["n"])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "grid": [dict(p) for p in self.grid],
            "family": dict(self.family),
            "generator": dict(self.generator),
            "chain": dict(self.chain),
            "schedule": dict(self.schedule),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "dataset_seed": self.dataset_seed,
            "N_test": self.N_test,
            "gamma": self.gamma,
            "bound_inputs": dict(self.bound_inputs),
        }

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise InvalidConfiguration("config file must hold a mapping")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_dict(raw)


def _t_rule(rule, n: int) -> list[int]:
    if isinstance(rule, str):
        rules = {"n": n, "n^2": n * n, "n2": n * n}
        if rule not in rules:
            raise InvalidConfiguration(f"unknown T rule {rule!r}")
        return [rules[rule]]
    if isinstance(rule, (list, tuple)):
        return [int(t) for t in rule]
    return [int(rule)]


def resolve_grid(grid) -> list[dict]:
    """Expand a grid description into concrete ``{n, T[, eta]}`` points.

    Accepts an explicit list of points or a mapping ``{n: [...], T: rule}``
    where ``rule`` is a list of run lengths, ``"n"`` or ``"n^2"``.
    """
    if isinstance(grid, Mapping):
        ns = grid.get("n")
        if ns is None:
            raise InvalidConfiguration("grid needs n")
        ns = ns if isinstance(ns, (list, tuple)) else [ns]
        rule = grid.get("T", "n")
        etas = grid.get("eta")
        points = []
        for n in ns:
            for T in _t_rule(rule, int(n)):
                if etas is None:
                    points.append({"n": int(n), "T": T})
                else:
                    for eta in (etas if isinstance(etas, (list, tuple)) else [etas]):
                        points.append({"n": int(n), "T": T, "eta": float(eta)})
        return points
    if isinstance(grid, (list, tuple)):
        points = []
        for p in grid:
            if not isinstance(p, Mapping) or "n" not in p or "T" not in p:
                raise InvalidConfiguration("grid points need n and T")
            pt = {"n": int(p["n"]), "T": int(p["T"])}
            if "eta" in p:
                pt["eta"] = float(p["eta"])
            points.append(pt)
        return points
    raise InvalidConfiguration("grid must be a list of points or a mapping")


def make_generator(spec: Mapping[str, Any]):
    spec = dict(spec)
    kind = spec.pop("kind", "classification")
    try:
        if kind == "saddle":
            if "center" in spec and spec["center"] is not None:
                spec["center"] = tuple(tuple(map(tuple, a)) if np.ndim(a) == 2 else tuple(a) for a in spec["center"])
            return SaddleGenerator(**spec)
        for key in ("w_true", "point_x"):
            if spec.get(key) is not None:
                spec[key] = tuple(spec[key])
        return DataGenerator(kind=kind, **spec)
    except TypeError as exc:
        raise InvalidConfiguration(f"bad generator spec: {exc}") from exc


def make_family(spec: Mapping[str, Any], gen):
    if isinstance(gen, SaddleGenerator):
        return gen.family()
    if "kind" not in spec:
        raise InvalidConfiguration("family needs a kind")
    return family_for(spec["kind"], gen, spec.get("R"))


def make_schedule(spec: Mapping[str, Any]) -> StepSchedule:
    try:
        return StepSchedule(**spec)
    except TypeError as exc:
        raise InvalidConfiguration(f"bad schedule spec: {exc}") from exc


def _schedule_for(cfg: ExperimentConfig, pt: Mapping[str, Any]):
    if "eta" in pt:
        return float(pt["eta"])
    return make_schedule(cfg.schedule)


def _eta_of(sched, T: int) -> float:
    return float(sched) if isinstance(sched, float) else sched.resolve(T)


def point_seed(master_seed: int, index: int) -> int:
    return replicate_seeds(master_seed, index, 1)[0]


# --------------------------------------------------------------------------
# experiments; each returns an ordered dict of extra columns


def _lam(cfg: ExperimentConfig, n: int) -> float:
    return analyze(chain_for(dict(cfg.chain), n)).lam


def _chain_info(cfg, pt, seed):
    P = chain_for(dict(cfg.chain), pt["n"])
    spec = analyze(P)
    return {"c_p": spec.c_p, "c_eff": spec.c_eff, "k_p": spec.k_p, "symmetric": spec.symmetric,
            "mixing_time_1e-3": mixing_time_to(spec, 1e-3)}


def _sgd_setup(cfg, pt):
    gen = make_generator(cfg.generator)
    fam = make_family(cfg.family, gen)
    domain = DomainSpec(cfg.family.get("R"))
    return gen, fam, domain


def _fixed_dataset(cfg, gen, n):
    seed = cfg.dataset_seed if cfg.dataset_seed is not None else point_seed(cfg.master_seed, PLUG_IN_STREAM - 1)
    return generate_dataset(gen, n, seed)


def _sgd_gaps(cfg, pt, seed):
    gen, fam, domain = _sgd_setup(cfg, pt)
    n, T = pt["n"], pt["T"]
    S = _fixed_dataset(cfg, gen, n)
    P = chain_for(dict(cfg.chain), n)
    sched = _schedule_for(cfg, pt)
    w_star, _ = erm_oracle(fam, S, domain)
    big = generate_dataset(gen, 10 * max(n, PLUG_IN_MIN), point_seed(cfg.master_seed, PLUG_IN_STREAM))
    w_pop, _ = erm_oracle(fam, big, domain, budget=20_000)
    gaps, plug = np.empty(cfg.replicates), np.empty(cfg.replicates)
    for r in range(cfg.replicates):
        traj = mc_sgd(fam, S, sample_path(P, T, seed=replicate_seeds(seed, r, 1)[0]), sched, None, domain)
        gaps[r] = opt_gap_sgd(fam, S, traj, w_star)
        plug[r] = opt_gap_sgd(fam, S, traj, w_pop)
    eta = _eta_of(sched, T)
    bound = sgd_opt_bound(BoundInputs(G=fam.G, n=n, T=T, eta=eta, L=fam.L, spectrum=analyze(P),
                                      D0=float(np.linalg.norm(w_star)), f0_sup=sup_loss_at_zero(fam, gen.B_y)))
    return gaps, plug, bound


def _sgd_rate(cfg, pt, seed):
    gaps, plug, bound = _sgd_gaps(cfg, pt, seed)
    m, se = mean_se(gaps)
    pm, pse = mean_se(plug)
    return {"opt_gap": m, "opt_gap_se": se, "opt_gap_plugin": pm, "opt_gap_plugin_se": pse, "bound": bound}


def _hp_quantiles(cfg, pt, seed):
    gaps, _, bound = _sgd_gaps(cfg, pt, seed)
    m, se = mean_se(gaps)
    q = quantile_report(gaps, cfg.gamma)
    return {"quantile": q, "gamma": cfg.gamma, "opt_gap": m, "opt_gap_se": se, "ratio": q / m if m > 0 else math.nan,
            "bound": bound}


def _sgd_stability(cfg, pt, seed):
    gen, fam, domain = _sgd_setup(cfg, pt)
    sched = _schedule_for(cfg, pt)
    est = estimate_stability_sgd(fam, gen, pt["n"], pt["T"], sched, domain, dict(cfg.chain), cfg.replicates, seed)
    b = BoundInputs(G=fam.G, n=pt["n"], T=pt["T"], eta=_eta_of(sched, pt["T"]), L=fam.L)
    return {"stability": est.mean_distance, "stability_se": est.std_error, "bound": sgd_stability_bound(b, fam.smooth)}


def _sgd_gen(cfg, pt, seed):
    gen, fam, domain = _sgd_setup(cfg, pt)
    sched = _schedule_for(cfg, pt)
    rep = generalization_report_sgd(fam, gen, pt["n"], pt["T"], sched, domain, dict(cfg.chain), cfg.replicates,
                                    cfg.N_test, seed)
    b = BoundInputs(G=fam.G, n=pt["n"], T=pt["T"], eta=_eta_of(sched, pt["T"]), L=fam.L)
    return {"empirical": rep.empirical, "empirical_se": rep.empirical_se, "population": rep.population,
            "population_se": rep.population_se, "gen_gap": rep.gen_gap, "gen_gap_se": rep.gen_gap_se,
            "excess": rep.excess, "excess_se": rep.excess_se, "bound": sgd_gen_bound(b, fam.smooth)}


def _saddle_setup(cfg):
    gen = make_generator(cfg.generator)
    if not isinstance(gen, SaddleGenerator):
        raise InvalidConfiguration("minimax experiments need a saddle generator")
    return gen, gen.family(), DomainSpec(gen.R_w), DomainSpec(gen.R_v)


def _sgda_rate(cfg, pt, seed):
    gen, fam, W, V = _saddle_setup(cfg)
    n, T = pt["n"], pt["T"]
    S = _fixed_dataset(cfg, gen, n)
    P = chain_for(dict(cfg.chain), n)
    sched = _schedule_for(cfg, pt)
    ws, vs, _ = saddle_oracle(fam, S, W, V)
    gaps, outs = np.empty(cfg.replicates), []
    for r in range(cfg.replicates):
        traj = mc_sgda(fam, S, sample_path(P, T, seed=replicate_seeds(seed, r, 1)[0]), sched, W=W, V=V)
        gaps[r] = pd_gap_sgda(fam, S, traj, W, V)
        outs.append(np.concatenate(traj.averaged))
    m, se = mean_se(gaps)
    dist = float(np.linalg.norm(np.mean(outs, axis=0) - np.concatenate([ws, vs])))
    bound = sgda_opt_bound(BoundInputs(G=fam.G, n=n, T=T, eta=_eta_of(sched, T), L=fam.L, spectrum=analyze(P),
                                       D_w=2 * gen.R_w, D_v=2 * gen.R_v))
    return {"pd_gap": m, "pd_gap_se": se, "saddle_distance": dist, "bound": bound}


def _sgda_risk(cfg, pt, seed):
    gen, fam, W, V = _saddle_setup(cfg)
    n, T = pt["n"], pt["T"]
    sched = _schedule_for(cfg, pt)
    chain = dict(cfg.chain)
    est = estimate_stability_sgda(fam, gen, n, T, sched, W, V, chain, cfg.replicates, seed)
    weak = weak_pd_report(fam, gen, n, T, sched, W, V, chain, cfg.replicates, seed)
    smooth = bool(cfg.family.get("smooth", True))
    b = BoundInputs(G=fam.G, n=n, T=T, eta=_eta_of(sched, T), L=fam.L, rho=fam.rho)
    weak_bound, primal_bound = sgda_gen_bounds(b, smooth)
    row = {"stability": est.mean_distance, "stability_se": est.std_error,
           "stability_bound": sgda_stability_bound(b, smooth),
           "weak_pd_population": weak.population, "weak_pd_empirical": weak.empirical,
           "weak_pd_gap": weak.gen_gap, "weak_pd_gap_se": weak.gen_gap_se, "weak_pd_bound": weak_bound}
    if fam.rho > 0:
        pr = primal_report(fam, gen, n, T, sched, W, V, chain, cfg.replicates, seed)
        row.update({"primal_population": pr.population, "primal_empirical": pr.empirical, "primal_gap": pr.gen_gap,
                    "primal_gap_se": pr.gen_gap_se, "primal_excess": pr.excess, "primal_excess_se": pr.excess_se,
                    "primal_bound": primal_bound})
    return row


def _nonconvex(cfg, pt, seed):
    gen, fam, domain = _sgd_setup(cfg, pt)
    n, T = pt["n"], pt["T"]
    S = _fixed_dataset(cfg, gen, n)
    P = chain_for(dict(cfg.chain), n)
    sched = _schedule_for(cfg, pt)
    traces = []
    for r in range(cfg.replicates):
        traj = mc_sgd(fam, S, sample_path(P, T, seed=replicate_seeds(seed, r, 1)[0]), sched, None, domain)
        traces.append(grad_norm_trace(fam, S, traj)[0][1:])
    traces = np.array(traces)
    mean_trace = traces.mean(axis=0)
    j = int(np.argmin(mean_trace))
    R = domain.radius
    if R is None:
        bound = math.nan
    else:
        bound = nonconvex_opt_bound(BoundInputs(G=fam.G, n=n, T=T, eta=_eta_of(sched, T), L=fam.L,
                                                spectrum=analyze(P), D=2 * R,
                                                F_S_w0=empirical_risk(fam, S, np.zeros(fam.d))))
    _, se = mean_se(traces[:, j])
    return {"min_grad_sq": float(mean_trace[j]), "min_grad_sq_se": se,
            "mean_run_min": float(traces.min(axis=1).mean()), "bound": bound}


def _bounds(cfg, pt, seed):
    bi = dict(cfg.bound_inputs)
    lam = bi.pop("lambda", None)
    if lam is not None:
        spectrum = synthetic_spectrum(pt["n"], float(lam))
    else:
        spectrum = analyze(chain_for(dict(cfg.chain), pt["n"]))
    sched = _schedule_for(cfg, pt)
    eta = _eta_of(sched, pt["T"])
    try:
        b = BoundInputs(n=pt["n"], T=pt["T"], eta=eta, spectrum=spectrum, **bi)
    except TypeError as exc:
        raise InvalidConfiguration(f"bad bound_inputs: {exc}") from exc
    row = {}
    for name, fn in BOUND_FUNCTIONS.items():
        try:
            row[name] = fn(b)
        except (InvalidConfiguration, InvalidArgument):
            row[name] = math.nan
    return row


RUNNERS = {
    "chain-info": _chain_info,
    "sgd-rate": _sgd_rate,
    "sgd-stability": _sgd_stability,
    "sgd-gen": _sgd_gen,
    "sgda-rate": _sgda_rate,
    "sgda-risk": _sgda_risk,
    "nonconvex-gradnorm": _nonconvex,
    "hp-quantiles": _hp_quantiles,
    "bounds": _bounds,
}

CURVE_COLUMNS = {
    "sgd-rate": ("T", ["opt_gap", "opt_gap_plugin", "bound"]),
    "hp-quantiles": ("T", ["quantile", "opt_gap", "bound"]),
    "sgd-stability": ("n", ["stability", "bound"]),
    "sgd-gen": ("n", ["gen_gap", "bound"]),
    "sgda-rate": ("T", ["pd_gap", "bound"]),
    "sgda-risk": ("n", ["stability", "stability_bound", "weak_pd_gap", "weak_pd_bound"]),
    "nonconvex-gradnorm": ("T", ["min_grad_sq"]),
}
FIT_COLUMNS = {"sgd-rate": "opt_gap", "hp-quantiles": "quantile", "sgda-rate": "pd_gap",
               "nonconvex-gradnorm": "min_grad_sq"}


# --------------------------------------------------------------------------
# running and writing


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v).replace(",", ";").replace("\n", " ")


def _run_point(cfg: ExperimentConfig, index: int, pt: Mapping[str, Any]) -> dict:
    seed = point_seed(cfg.master_seed, index)
    base = {"experiment": cfg.kind, "status": "ok", "n": pt["n"], "T": pt["T"], "eta": math.nan,
            "lambda": math.nan, "seed": seed}
    try:
        if cfg.kind != "chain-info":
            base["eta"] = _eta_of(_schedule_for(cfg, pt), pt["T"])
        if not (cfg.kind == "bounds" and "lambda" in cfg.bound_inputs):
            base["lambda"] = _lam(cfg, pt["n"])
        else:
            base["lambda"] = float(cfg.bound_inputs["lambda"])
        base.update(RUNNERS[cfg.kind](cfg, pt, seed))
    except Exception as exc:  # flushed as a failure row, then re-raised
        base["status"] = "FAILED"
        base["error"] = f"{type(exc).__name__}: {exc}"
        base["_exc"] = exc
    return base


@dataclass
class ExperimentResult:
    rows: list
    fits: dict
    out_dir: Path
    failed: bool


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int = 1, plot_script: bool = True) -> ExperimentResult:
    """Run every grid point and write the results table, manifest and curve files.

    Rows are written in grid order whatever ``threads`` is, so outputs
    are byte-identical for identical configurations.
    """
    out = Path(out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    points = list(enumerate(cfg.grid))
    rows: list[dict] = []
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        for row in pool.map(lambda ip: _run_point(cfg, ip[0], ip[1]), points):
            rows.append(row)
            if row["status"] != "ok":
                log.error("grid point n=%s T=%s failed: %s", row["n"], row["T"], row["error"])
                break
    failure = next((r.pop("_exc") for r in rows if "_exc" in r), None)
    fits = _fits(cfg, rows)
    header = f"# mcsgm {__version__} config_sha256={cfg.config_hash}\n"
    _write_table(out / "results.csv", header, rows)
    _write_curves(out, header, cfg.kind, rows)
    _write_manifest(out / "manifest.yaml", cfg, rows, fits)
    if plot_script and cfg.kind in CURVE_COLUMNS:
        (out / "plot.py").write_text(_plot_script(cfg.kind))
    result = ExperimentResult(rows, fits, out, failure is not None)
    if failure is not None:
        raise failure
    return result


def _fits(cfg, rows) -> dict:
    col = FIT_COLUMNS.get(cfg.kind)
    ok = [r for r in rows if r["status"] == "ok"]
    if col is None or len({r["T"] for r in ok}) < 2:
        return {}
    fits = {}
    for n in sorted({r["n"] for r in ok}):
        pts = [(r["T"], r[col]) for r in ok if r["n"] == n]
        try:
            fits[f"{col}@n={n}"] = fit_rate(pts).to_record()
        except InvalidArgument as exc:
            fits[f"{col}@n={n}"] = {"error": str(exc)}
    return fits


def _write_table(path: Path, header: str, rows: list[dict]) -> None:
    cols = list(BASE_COLUMNS)
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    lines = [header.rstrip("\n"), ",".join(cols)]
    lines += [",".join(_fmt(r.get(c)) for c in cols) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_curves(out: Path, header: str, kind: str, rows: list[dict]) -> None:
    spec = CURVE_COLUMNS.get(kind)
    if spec is None:
        return
    x, ys = spec
    curves = out / "curves"
    curves.mkdir(exist_ok=True)
    ok = [r for r in rows if r["status"] == "ok"]
    for y in ys:
        if not any(y in r for r in ok):
            continue
        lines = [header.rstrip("\n")] + [f"{_fmt(r[x])} {_fmt(r[y])}" for r in ok if y in r]
        (curves / f"{y}.dat").write_text("\n".join(lines) + "\n")


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return None if math.isnan(v) else float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def _write_manifest(path: Path, cfg: ExperimentConfig, rows: list[dict], fits: dict) -> None:
    doc = {
        "tool": "mcsgm",
        "version": __version__,
        "config_sha256": cfg.config_hash,
        "config": cfg.to_dict(),
        "points": [{"n": r["n"], "T": r["T"], "eta": _plain(r["eta"]), "lambda": _plain(r["lambda"]),
                    "seed": r["seed"], "status": r["status"]} for r in rows],
        "fits": fits,
        "outputs": ["results.csv", "manifest.yaml"],
    }
    path.write_text(f"# mcsgm {__version__} config_sha256={cfg.config_hash}\n"
                    + yaml.safe_dump(doc, sort_keys=False, default_flow_style=False))


def _plot_script(kind: str) -> str:
    x, ys = CURVE_COLUMNS[kind]
    return f'''"""Plot the curve files next to this script (needs matplotlib)."""
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

here = Path(__file__).parent
fig, ax = plt.subplots()
for name in {ys!r}:
    path = here / "curves" / f"{{name}}.dat"
    if path.exists():
        data = np.loadtxt(path, comments="#", ndmin=2)
        ax.loglog(data[:, 0], data[:, 1], marker="o", label=name)
ax.set_xlabel({x!r})
ax.legend()
fig.savefig(here / "{kind}.png", dpi=150)
'''
