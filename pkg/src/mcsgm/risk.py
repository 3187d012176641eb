"""Stability and risk estimators built on coupled twin runs."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .chain import chain_for, sample_path
from .errors import InvalidArgument, Unsupported
from .losses import (DataGenerator, Dataset, LossFamily, MinimaxFamily, SaddleCoefficients, SaddleDataset,
                     SaddleGenerator, _max_over_ball, _project_ball, empirical_risk, erm_oracle, generate_dataset)
from .optim import DomainSpec, SaddleTrajectory, mc_sgd, mc_sgda

PLUG_IN_MIN = 1000
# replicate index reserved for the plug-in comparator sample
PLUG_IN_STREAM = 2 ** 32 - 1


def replicate_seeds(master_seed: int, r: int, k: int) -> list[int]:
    """``k`` independent 63-bit seeds for replicate ``r``."""
    state = np.random.SeedSequence([int(master_seed), int(r)]).generate_state(k, dtype=np.uint64)
    return [int(s >> np.uint64(1)) for s in state]


def mean_se(values) -> tuple[float, float]:
    vals = np.asarray(values, dtype=float)
    if vals.size < 2:
        return float(vals.mean()), math.nan
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


@dataclass(frozen=True)
class NeighborSpec:
    """Position ``i`` (0-based) of the training set and its replacement."""

    i: int
    replacement: object


@dataclass(frozen=True)
class StabilityEstimate:
    mean_distance: float
    std_error: float
    replicates: int
    kind: str
    distances: np.ndarray = field(repr=False, default=None)

    def to_record(self) -> dict:
        return {"mean_distance": self.mean_distance, "std_error": self.std_error,
                "replicates": self.replicates, "kind": self.kind}


@dataclass(frozen=True)
class RiskReport:
    """Means and standard errors over replicates.

    ``gen_gap`` is defined as ``population - empirical``; its standard
    error comes from the per-replicate differences.
    """

    empirical: float
    empirical_se: float
    population: float
    population_se: float
    gen_gap: float
    gen_gap_se: float
    excess: float = math.nan
    excess_se: float = math.nan
    opt_gap: float = math.nan
    opt_gap_se: float = math.nan
    replicates: int = 0
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec.update(rec.pop("extra"))
        return rec


def _gap_report(emp, pop, **kw) -> RiskReport:
    emp = np.asarray(emp, dtype=float)
    pop = np.asarray(pop, dtype=float)
    e, e_se = mean_se(emp)
    p, p_se = mean_se(pop)
    _, g_se = mean_se(pop - emp)
    return RiskReport(e, e_se, p, p_se, p - e, g_se, replicates=emp.size, **kw)


# --------------------------------------------------------------------------
# ERM


def twin_sgd(fam: LossFamily, S: Dataset, nb: NeighborSpec, path, sched, w0=None, domain=None,
             check: bool = True):
    """Run SGD on ``S`` and on ``S`` with position ``nb.i`` replaced, sharing one index path.

    Returns ``(w_bar, w_bar_neighbor, distance)``.
    """
    if not 0 <= nb.i < len(S):
        raise InvalidArgument(f"neighbor index {nb.i} outside [0, {len(S)})")
    S_i = S.replace(nb.i, nb.replacement)
    a = mc_sgd(fam, S, path, sched, w0, domain, check).averaged
    b = mc_sgd(fam, S_i, path, sched, w0, domain, check).averaged
    return a, b, float(np.linalg.norm(a - b))


def _sample_neighbor(gen, n: int, seed: int):
    """A uniformly random index and a fresh replacement example."""
    rng = np.random.default_rng(seed)
    i = int(rng.integers(n))
    fresh = generate_dataset(gen, 1, int(rng.integers(2 ** 62)))
    return i, fresh.example(0)


def estimate_stability_sgd(fam: LossFamily, gen: DataGenerator, n: int, T: int, sched, domain=None,
                           chain="uniform", replicates: int = 100, master_seed: int = 0,
                           w0=None) -> StabilityEstimate:
    """Monte-Carlo on-average argument stability of averaged MC-SGD.

    Each replicate draws ``S``, a chain path, a uniform index ``i`` and a
    replacement example, then measures the twin-run distance.
    """
    if replicates < 2:
        raise InvalidArgument("replicates must be >= 2")
    P = chain_for(chain, n)
    dists = np.empty(replicates)
    for r in range(replicates):
        s_data, s_path, s_nb = replicate_seeds(master_seed, r, 3)
        S = generate_dataset(gen, n, s_data)
        path = sample_path(P, T, seed=s_path)
        i, z = _sample_neighbor(gen, n, s_nb)
        dists[r] = twin_sgd(fam, S, NeighborSpec(i, z), path, sched, w0, domain)[2]
    m, se = mean_se(dists)
    return StabilityEstimate(m, se, replicates, "erm", dists)


def generalization_report_sgd(fam: LossFamily, gen: DataGenerator, n: int, T: int, sched, domain=None,
                              chain="uniform", replicates: int = 100, N_test: int = 100_000,
                              master_seed: int = 0, w0=None, plug_in_budget: int = 20_000) -> RiskReport:
    """Empirical, population and excess risk of averaged MC-SGD.

    The excess-risk comparator is the empirical minimizer of an independent
    sample of size ``10 * max(n, 1000)``; each replicate evaluates its
    output and the comparator on the same fresh test sample.
    """
    if replicates < 2:
        raise InvalidArgument("replicates must be >= 2")
    domain = domain or DomainSpec()
    P = chain_for(chain, n)
    plug_seed = replicate_seeds(master_seed, PLUG_IN_STREAM, 1)[0]
    big = generate_dataset(gen, 10 * max(n, PLUG_IN_MIN), plug_seed)
    w_star = erm_oracle(fam, big, domain, budget=plug_in_budget)[0] if fam.convex else None
    emp, pop, exc, opt = (np.empty(replicates) for _ in range(4))
    for r in range(replicates):
        s_data, s_path, s_test = replicate_seeds(master_seed, r, 3)
        S = generate_dataset(gen, n, s_data)
        w_bar = mc_sgd(fam, S, sample_path(P, T, seed=s_path), sched, w0, domain).averaged
        test = generate_dataset(gen, N_test, s_test)
        emp[r] = empirical_risk(fam, S, w_bar)
        pop[r] = empirical_risk(fam, test, w_bar)
        if w_star is not None:
            exc[r] = pop[r] - empirical_risk(fam, test, w_star)
            opt[r] = emp[r] - empirical_risk(fam, S, w_star)
        else:
            exc[r] = opt[r] = math.nan
    x, x_se = mean_se(exc)
    o, o_se = mean_se(opt)
    return _gap_report(emp, pop, excess=x, excess_se=x_se, opt_gap=o, opt_gap_se=o_se)


def opt_gap_sgd(fam: LossFamily, S: Dataset, trajectory, comparator) -> float:
    """``F_S(w_bar) - F_S(comparator)``; ``comparator`` is a point or a ``(point, value)`` pair."""
    w_bar = getattr(trajectory, "averaged", trajectory)
    if isinstance(comparator, tuple):
        comparator = comparator[0]
    return empirical_risk(fam, S, w_bar) - empirical_risk(fam, S, comparator)


def grad_norm_trace(fam: LossFamily, S: Dataset, trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Squared full-batch gradient norms at stored checkpoints and their running minimum."""
    if not fam.smooth:
        raise Unsupported("gradient norms need a smooth family")
    its = getattr(trajectory, "iterates", trajectory)
    its = np.atleast_2d(np.asarray(its, dtype=float))
    sq = np.array([float(np.sum(fam.full_gradient(w, S) ** 2)) for w in its])
    return sq, np.minimum.accumulate(sq)


# --------------------------------------------------------------------------
# minimax


def twin_sgda(fam: MinimaxFamily, S: SaddleDataset, nb: NeighborSpec, path, sched, w0=None, v0=None,
              W=None, V=None):
    """Twin SGDA runs on ``S`` and its neighbour; distance is ``|dw| + |dv|`` of the averages."""
    if not 0 <= nb.i < len(S):
        raise InvalidArgument(f"neighbor index {nb.i} outside [0, {len(S)})")
    S_i = S.replace(nb.i, nb.replacement)
    a = mc_sgda(fam, S, path, sched, w0, v0, W, V)
    b = mc_sgda(fam, S_i, path, sched, w0, v0, W, V)
    dw = float(np.linalg.norm(a.averaged_w - b.averaged_w))
    dv = float(np.linalg.norm(a.averaged_v - b.averaged_v))
    return a.averaged, b.averaged, dw + dv


def estimate_stability_sgda(fam: MinimaxFamily, gen: SaddleGenerator, n: int, T: int, sched, W=None, V=None,
                            chain="uniform", replicates: int = 100, master_seed: int = 0) -> StabilityEstimate:
    if replicates < 2:
        raise InvalidArgument("replicates must be >= 2")
    P = chain_for(chain, n)
    dists = np.empty(replicates)
    for r in range(replicates):
        s_data, s_path, s_nb = replicate_seeds(master_seed, r, 3)
        S = generate_dataset(gen, n, s_data)
        path = sample_path(P, T, seed=s_path)
        i, z = _sample_neighbor(gen, n, s_nb)
        dists[r] = twin_sgda(fam, S, NeighborSpec(i, z), path, sched, W=W, V=V)[2]
    m, se = mean_se(dists)
    return StabilityEstimate(m, se, replicates, "minimax", dists)


def _radius(domain) -> float:
    r = getattr(domain, "radius", domain)
    if r is None:
        raise InvalidArgument("minimax risks need ball domains")
    return float(r)


def pd_gap_sgda(fam: MinimaxFamily, S: SaddleDataset, trajectory, W, V) -> float:
    """Empirical duality gap ``max_v F_S(w_bar, v) - min_w F_S(w, v_bar)``."""
    w_bar, v_bar = trajectory.averaged if isinstance(trajectory, SaddleTrajectory) else trajectory
    return S.coefficients(fam.rho).pd_gap(np.asarray(w_bar, float), np.asarray(v_bar, float),
                                          _radius(W), _radius(V))


def _weak_pd(Aw, bw, c, Av, bv, cv, vsq, rho, R_w, R_v) -> float:
    """``max_v <Aw, v> + bw - <c, v> - rho/2 |v|^2  -  min_w <w, Av + bv> - cv + rho/2 vsq``.

    The first term is the averaged objective in ``v`` at the random output
    ``w_bar``; the second the averaged objective in ``w`` at ``v_bar``.
    """
    upper = _max_over_ball(Aw - c, bw, rho, R_v)[1]
    g = Av + bv
    lower = -R_w * float(np.linalg.norm(g)) - cv - 0.5 * rho * vsq
    return upper - lower


@dataclass
class _WeakPDStats:
    """Per-replicate sufficient statistics of the averaged objectives."""

    rows: list = field(default_factory=list)

    def add(self, coef: SaddleCoefficients, w, v):
        self.rows.append(np.concatenate([coef.A.T @ w, [coef.b @ w], coef.c, coef.A @ v, coef.b,
                                         [coef.c @ v], [v @ v]]))

    def delta(self, mean_row, d_w, d_v, rho, R_w, R_v) -> float:
        k = 0
        Aw = mean_row[k:k + d_v]; k += d_v
        bw = mean_row[k]; k += 1
        c = mean_row[k:k + d_v]; k += d_v
        Av = mean_row[k:k + d_w]; k += d_w
        bv = mean_row[k:k + d_w]; k += d_w
        cv = mean_row[k]; k += 1
        vsq = mean_row[k]
        return _weak_pd(Aw, bw, c, Av, bv, cv, vsq, rho, R_w, R_v)

    def estimate(self, d_w, d_v, rho, R_w, R_v) -> tuple[float, float, np.ndarray]:
        M = np.array(self.rows)
        R = M.shape[0]
        full = self.delta(M.mean(axis=0), d_w, d_v, rho, R_w, R_v)
        total = M.sum(axis=0)
        loo = np.array([self.delta((total - M[r]) / (R - 1), d_w, d_v, rho, R_w, R_v) for r in range(R)])
        return full, _jackknife_se(loo), loo


def _jackknife_se(loo: np.ndarray) -> float:
    R = loo.size
    return float(math.sqrt((R - 1) / R * np.sum((loo - loo.mean()) ** 2)))


def weak_pd_report(fam: MinimaxFamily, gen: SaddleGenerator, n: int, T: int, sched, W, V, chain="uniform",
                   replicates: int = 100, master_seed: int = 0) -> RiskReport:
    """Weak primal-dual population and empirical risks of averaged MC-SGDA.

    Both risks take the max/min of replicate-averaged objectives, which is
    exact for losses affine in the data coefficients.  ``gen_gap`` is the
    weak PD generalization error; standard errors are jackknife estimates.
    """
    if replicates < 2:
        raise InvalidArgument("replicates must be >= 2")
    R_w, R_v = _radius(W), _radius(V)
    P = chain_for(chain, n)
    pop_coef = gen.mean_coefficients()
    pop, emp = _WeakPDStats(), _WeakPDStats()
    for r in range(replicates):
        s_data, s_path = replicate_seeds(master_seed, r, 2)
        S = generate_dataset(gen, n, s_data)
        w, v = mc_sgda(fam, S, sample_path(P, T, seed=s_path), sched, W=W, V=V).averaged
        pop.add(pop_coef, w, v)
        emp.add(S.coefficients(fam.rho), w, v)
    args = (fam.d_w, fam.d_v, fam.rho, R_w, R_v)
    d_pop, se_pop, loo_pop = pop.estimate(*args)
    d_emp, se_emp, loo_emp = emp.estimate(*args)
    gap_se = _jackknife_se(loo_pop - loo_emp)
    return RiskReport(d_emp, se_emp, d_pop, se_pop, d_pop - d_emp, gap_se, replicates=replicates,
                      extra={"weak_pd_population": d_pop, "weak_pd_empirical": d_emp})


def weak_pd_of_outputs(coef: SaddleCoefficients, outputs, R_w: float, R_v: float) -> float:
    """Weak PD risk of a collection of output pairs under one objective."""
    stats = _WeakPDStats()
    for w, v in outputs:
        stats.add(coef, np.asarray(w, float), np.asarray(v, float))
    M = np.array(stats.rows).mean(axis=0)
    return stats.delta(M, coef.b.size, coef.c.size, coef.rho, R_w, R_v)


def primal_value(coef: SaddleCoefficients, w, R_v: float) -> float:
    """``R(w) = max_{|v| <= R_v} F(w, v)`` in closed form."""
    return coef.best_response_v(np.asarray(w, float), R_v)[1]


def primal_minimum(coef: SaddleCoefficients, R_w: float, R_v: float, budget: int = 20_000,
                   tol: float = 1e-13) -> tuple[np.ndarray, float]:
    """Minimize the primal function over the ``w`` ball by accelerated projected gradient."""
    if coef.rho <= 0:
        raise Unsupported("primal risk needs rho > 0")
    sigma = float(np.linalg.norm(coef.A, 2))
    L = max(sigma ** 2 / coef.rho, 1e-12)
    x = np.zeros(coef.b.size)
    y = x.copy()
    t = 1.0
    for _ in range(budget):
        v_plus = coef.best_response_v(y, R_v)[0]
        x_new = _project_ball(y - (coef.b + coef.A @ v_plus) / L, R_w)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        done = float(np.linalg.norm(x_new - x)) <= tol
        x, t = x_new, t_new
        if done:
            break
    return x, primal_value(coef, x, R_v)


def primal_report(fam: MinimaxFamily, gen: SaddleGenerator, n: int, T: int, sched, W, V, chain="uniform",
                  replicates: int = 100, master_seed: int = 0) -> RiskReport:
    """Primal population/empirical risk of the averaged ``w`` output and its excess."""
    if fam.rho <= 0:
        raise Unsupported("primal risk needs rho > 0")
    R_w, R_v = _radius(W), _radius(V)
    P = chain_for(chain, n)
    pop_coef = gen.mean_coefficients()
    r_min = primal_minimum(pop_coef, R_w, R_v)[1]
    emp, pop = np.empty(replicates), np.empty(replicates)
    for r in range(replicates):
        s_data, s_path = replicate_seeds(master_seed, r, 2)
        S = generate_dataset(gen, n, s_data)
        w, _ = mc_sgda(fam, S, sample_path(P, T, seed=s_path), sched, W=W, V=V).averaged
        emp[r] = primal_value(S.coefficients(fam.rho), w, R_v)
        pop[r] = primal_value(pop_coef, w, R_v)
    x, x_se = mean_se(pop - r_min)
    return _gap_report(emp, pop, excess=x, excess_se=x_se,
                       extra={"primal_population": float(pop.mean()), "primal_empirical": float(emp.mean()),
                              "primal_minimum": r_min})
