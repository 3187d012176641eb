"""Markov-chain driven SGD and SGDA with projection and weighted averaging."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chain import ChainPath
from .errors import InvalidArgument, InvalidConfiguration, Unsupported
from .losses import Dataset, LossFamily, MinimaxFamily, SaddleDataset

SCHEDULE_KINDS = ("constant", "inv_sqrt_tlogt", "t_pow_neg34", "inv_sqrtt_logt")
MAX_STORED = 1000


@dataclass(frozen=True)
class DomainSpec:
    """Centered ball of ``radius`` or, with ``radius=None``, the whole space."""

    radius: float | None = None

    def __post_init__(self):
        if self.radius is not None and not self.radius > 0:
            raise InvalidArgument("ball radius must be positive")

    @classmethod
    def ball(cls, R: float) -> "DomainSpec":
        return cls(float(R))

    @classmethod
    def unconstrained(cls) -> "DomainSpec":
        return cls(None)

    @property
    def kind(self) -> str:
        return "unconstrained" if self.radius is None else "ball"

    def contains(self, w, tol: float = 1e-12) -> bool:
        return self.radius is None or float(np.linalg.norm(w)) <= self.radius + tol

    def to_record(self) -> dict:
        return {"kind": self.kind, "radius": self.radius}


def project(domain: DomainSpec, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    R = domain.radius
    if R is None:
        return w
    nrm = float(np.linalg.norm(w))
    if nrm <= R:
        return w
    return w * (R / nrm)


@dataclass(frozen=True)
class StepSchedule:
    """A run-length dependent constant step size.

    ``inv_sqrt_tlogt`` gives ``(T log T)^(-1/2)``, ``t_pow_neg34`` gives
    ``T^(-3/4)`` and ``inv_sqrtt_logt`` gives ``1/(sqrt(T) log T)``.
    """

    kind: str = "constant"
    eta: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise InvalidArgument(f"unknown schedule {self.kind!r}")
        if self.kind == "constant" and (self.eta is None or not self.eta > 0):
            raise InvalidArgument("constant schedule needs eta > 0")
        if not self.scale > 0:
            raise InvalidArgument("schedule scale must be positive")

    def resolve(self, T: int) -> float:
        if self.kind == "constant":
            return float(self.eta)
        if T < 2 and self.kind in ("inv_sqrt_tlogt", "inv_sqrtt_logt"):
            raise InvalidArgument(f"{self.kind} needs T >= 2")
        if T < 1:
            raise InvalidArgument("T must be >= 1")
        if self.kind == "inv_sqrt_tlogt":
            return self.scale / math.sqrt(T * math.log(T))
        if self.kind == "inv_sqrtt_logt":
            return self.scale / (math.sqrt(T) * math.log(T))
        return self.scale * T ** -0.75

    def to_record(self) -> dict:
        rec = {"kind": self.kind}
        if self.kind == "constant":
            rec["eta"] = self.eta
        elif self.scale != 1.0:
            rec["scale"] = self.scale
        return rec


def check_schedule(fam, eta: float, T: int) -> None:
    """Reject step sizes outside the regime where the smooth bounds apply."""
    if not eta > 0:
        raise InvalidConfiguration("step size must be positive")
    if isinstance(fam, MinimaxFamily):
        if fam.L and T * eta ** 2 > 1.0 / (2.0 * fam.L ** 2):
            raise InvalidConfiguration(f"T*eta^2 = {T * eta ** 2:.4g} exceeds 1/(2L^2) = {1 / (2 * fam.L ** 2):.4g}")
    elif fam.smooth and eta > 2.0 / fam.L:
        raise InvalidConfiguration(f"eta = {eta:.4g} exceeds 2/L = {2 / fam.L:.4g}")


@dataclass(frozen=True)
class Trajectory:
    iterates: np.ndarray
    steps: np.ndarray
    averaged: np.ndarray
    eta: float
    T: int
    final: np.ndarray

    @property
    def last(self) -> np.ndarray:
        return self.final


@dataclass(frozen=True)
class SaddleTrajectory:
    iterates_w: np.ndarray
    iterates_v: np.ndarray
    steps: np.ndarray
    averaged_w: np.ndarray
    averaged_v: np.ndarray
    eta: float
    T: int
    final_w: np.ndarray
    final_v: np.ndarray

    @property
    def averaged(self) -> tuple[np.ndarray, np.ndarray]:
        return self.averaged_w, self.averaged_v


def _stride(T: int) -> int:
    return max(1, T // MAX_STORED)


def _check_path(path: ChainPath | Sequence[int], n: int) -> np.ndarray:
    idx = np.asarray(getattr(path, "indices", path), dtype=np.int64)
    if idx.ndim != 1:
        raise InvalidArgument("path must be one-dimensional")
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise InvalidArgument(f"path index outside [0, {n})")
    return idx


def _eta(sched, T: int) -> float:
    return float(sched) if isinstance(sched, (int, float)) else sched.resolve(T)


def mc_sgd(fam: LossFamily, S: Dataset, path, sched, w0=None, domain: DomainSpec | None = None,
           check: bool = True, record=None) -> Trajectory:
    """Projected SGD visiting the examples in the order given by ``path``.

    Parameters
    ----------
    record : callable, optional
        Called as ``record(t, w_t)`` after every step; used for per-step
        diagnostics without storing the full run.
    """
    domain = domain or DomainSpec()
    idx = _check_path(path, len(S))
    T = idx.size
    w = np.zeros(fam.d) if w0 is None else np.array(w0, dtype=float)
    if w.shape != (fam.d,) or S.d != fam.d:
        raise InvalidArgument(f"dimension mismatch: family d={fam.d}, w0 {w.shape}, data d={S.d}")
    eta = _eta(sched, max(T, 2))
    if check:
        check_schedule(fam, eta, T)
    stride = _stride(T)
    kept, steps = [w.copy()], [0]
    acc = np.zeros(fam.d)
    X, y = S.X, S.y
    dphi = fam._dphi
    R = domain.radius
    for t in range(1, T + 1):
        x = X[idx[t - 1]]
        g = float(dphi(float(x @ w), y[idx[t - 1]]))
        if g != 0.0:
            w = w - (eta * g) * x
            if R is not None:
                nrm = math.sqrt(float(w @ w))
                if nrm > R:
                    w = w * (R / nrm)
        acc += w
        if t % stride == 0 or t == T:
            kept.append(w.copy())
            steps.append(t)
        if record is not None:
            record(t, w)
    averaged = acc / T if T else w.copy()
    return Trajectory(np.array(kept), np.array(steps), averaged, eta, T, w.copy())


def mc_sgda(fam: MinimaxFamily, S: SaddleDataset, path, sched, w0=None, v0=None,
            W: DomainSpec | None = None, V: DomainSpec | None = None, check: bool = True,
            record=None) -> SaddleTrajectory:
    """Simultaneous projected descent-ascent along ``path``.

    Both partial gradients are taken at ``(w_{t-1}, v_{t-1})`` before either
    block moves.
    """
    W = W or DomainSpec()
    V = V or DomainSpec()
    idx = _check_path(path, len(S))
    T = idx.size
    w = np.zeros(fam.d_w) if w0 is None else np.array(w0, dtype=float)
    v = np.zeros(fam.d_v) if v0 is None else np.array(v0, dtype=float)
    if w.shape != (fam.d_w,) or v.shape != (fam.d_v,) or S.A.shape[1:] != (fam.d_w, fam.d_v):
        raise InvalidArgument("dimension mismatch between family, data and starting point")
    eta = _eta(sched, max(T, 2))
    if check:
        check_schedule(fam, eta, T)
    stride = _stride(T)
    kept_w, kept_v, steps = [w.copy()], [v.copy()], [0]
    acc_w, acc_v = np.zeros(fam.d_w), np.zeros(fam.d_v)
    A, b, c = S.A, S.b, S.c
    rho = fam.rho
    for t in range(1, T + 1):
        i = idx[t - 1]
        gw = A[i] @ v + b[i]
        gv = A[i].T @ w - c[i] - rho * v
        w = project(W, w - eta * gw)
        v = project(V, v + eta * gv)
        acc_w += w
        acc_v += v
        if t % stride == 0 or t == T:
            kept_w.append(w.copy())
            kept_v.append(v.copy())
            steps.append(t)
        if record is not None:
            record(t, w, v)
    aw = acc_w / T if T else w.copy()
    av = acc_v / T if T else v.copy()
    return SaddleTrajectory(np.array(kept_w), np.array(kept_v), np.array(steps), aw, av, eta, T,
                            w.copy(), v.copy())


def average_iterates(iterates, weights) -> np.ndarray:
    """Weighted mean ``sum_j eta_j w_j / sum_j eta_j`` of ``w_1..w_T``.

    ``weights`` may be a scalar (constant step) or one weight per iterate.
    """
    its = np.asarray(iterates, dtype=float)
    if its.shape[0] == 0:
        raise InvalidArgument("no iterates to average")
    wts = np.broadcast_to(np.asarray(weights, dtype=float), (its.shape[0],))
    if not np.all(wts > 0):
        raise InvalidArgument("weights must be positive")
    return np.tensordot(wts, its, axes=1) / wts.sum()


def nonexpansive_witness(fam: LossFamily, w, w_other, z, eta: float) -> tuple[float, float]:
    """``(|G(w) - G(w')|, |w - w'|)`` for the gradient map ``G(u) = u - eta*grad f(u; z)``."""
    if not fam.smooth or not fam.convex:
        raise Unsupported("non-expansiveness needs a smooth convex family")
    w = np.asarray(w, dtype=float)
    w_other = np.asarray(w_other, dtype=float)
    x = np.asarray(z.x, dtype=float)
    gw = float(fam._dphi(float(x @ w), z.y)) * x
    go = float(fam._dphi(float(x @ w_other), z.y)) * x
    lhs = float(np.linalg.norm((w - eta * gw) - (w_other - eta * go)))
    return lhs, float(np.linalg.norm(w - w_other))
