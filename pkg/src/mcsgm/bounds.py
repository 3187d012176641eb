"""Closed-form stability, generalization and optimization bounds.

All calculators assume a constant step ``eta`` over ``T`` iterations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .chain import ChainSpectrum, k_schedule
from .errors import InvalidConfiguration, UnsupportedMatrix

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class BoundInputs:
    G: float
    n: int
    T: int
    eta: float
    L: float | None = None
    rho: float = 0.0
    spectrum: ChainSpectrum | None = None
    D0: float = 0.0
    f0_sup: float = 0.0
    D_w: float = 0.0
    D_v: float = 0.0
    D: float | None = None
    F_S_w0: float = 0.0

    def with_(self, **kw) -> "BoundInputs":
        return replace(self, **kw)

    def to_record(self) -> dict:
        rec = {k: getattr(self, k) for k in ("G", "L", "rho", "n", "T", "eta", "D0", "f0_sup", "D_w", "D_v", "D", "F_S_w0")}
        if self.spectrum is not None:
            rec["lambda"] = self.spectrum.lam
            rec["c_eff"] = self.spectrum.c_eff
            rec["k_p"] = self.spectrum.k_p
        return rec


def _basic(b: BoundInputs):
    if b.eta < 0 or b.T < 0 or b.n < 1 or b.G < 0:
        raise InvalidConfiguration("need eta >= 0, T >= 0, n >= 1 and G >= 0")


def _need_L(b: BoundInputs) -> float:
    if b.L is None or not b.L > 0:
        raise InvalidConfiguration("smooth bound needs L > 0")
    return b.L


def sgd_stability_bound(b: BoundInputs, smooth: bool) -> float:
    """On-average argument stability of averaged SGD after ``T`` steps."""
    _basic(b)
    total = b.T * b.eta
    if smooth:
        if b.eta > 2.0 / _need_L(b):
            raise InvalidConfiguration("smooth stability bound needs eta <= 2/L")
        return 2.0 * b.G * total / b.n
    return 2.0 * b.G * math.sqrt(b.T * b.eta ** 2) + 4.0 * b.G * total / b.n


def sgd_gen_bound(b: BoundInputs, smooth: bool) -> float:
    if smooth:
        _need_L(b)
        _basic(b)
        if b.eta > 2.0 / b.L:
            raise InvalidConfiguration("smooth generalization bound needs eta <= 2/L")
        return 2.0 * b.G ** 2 * b.T * b.eta / b.n
    return b.G * sgd_stability_bound(b, smooth=False)


def sgda_stability_bound(b: BoundInputs, smooth: bool) -> float:
    """Stability (sum of the two block distances) of averaged SGDA."""
    _basic(b)
    sq = b.T * b.eta ** 2
    total = b.T * b.eta
    if smooth:
        L = _need_L(b)
        if sq > 1.0 / (2.0 * L ** 2):
            raise InvalidConfiguration("smooth SGDA bound needs T*eta^2 <= 1/(2L^2)")
        return 4.0 * b.G * math.sqrt(sq / b.n) + 8.0 * SQRT2 * b.G * total / b.n
    return 2.0 * b.G * math.sqrt(2.0 * sq) + 4.0 * SQRT2 * b.G * total / b.n


def sgda_gen_bounds(b: BoundInputs, smooth: bool) -> tuple[float, float]:
    """``(weak_pd, primal)`` generalization bounds; ``primal`` is nan when ``rho = 0``."""
    weak = b.G * sgda_stability_bound(b, smooth)
    if b.rho > 0:
        L = _need_L(b)
        return weak, (1.0 + L / b.rho) * weak
    return weak, math.nan


def _spectrum(b: BoundInputs) -> ChainSpectrum:
    spec = b.spectrum
    if spec is None:
        raise InvalidConfiguration("optimization bounds need a chain spectrum")
    if spec.c_p is None:
        raise UnsupportedMatrix("chain constant unavailable (matrix not diagonalizable)")
    return spec


def _harmonic_tail(start: int, T: int) -> float:
    """``sum_{j=start}^T 1/j``."""
    if start > T:
        return 0.0
    return float(np.sum(1.0 / np.arange(start, T + 1, dtype=float)))


def sgd_opt_bound(b: BoundInputs) -> float:
    """Expected empirical optimization gap of averaged MC-SGD (convex case).

    ``D0`` is the comparator norm and ``f0_sup`` bounds the loss at zero.
    """
    _basic(b)
    if b.eta <= 0 or b.T < 1:
        raise InvalidConfiguration("optimization bound needs eta > 0 and T >= 1")
    if b.L is not None and b.eta > 2.0 / b.L:
        raise InvalidConfiguration("optimization bound needs eta <= 2/L")
    spec = _spectrum(b)
    eta, T, G = b.eta, b.T, b.G
    D = math.sqrt((G ** 2 + 2.0 * b.f0_sup) * T * eta) + b.D0
    k = k_schedule(spec, D, b.n, T, j_power=1)
    K = spec.k_p
    burn = eta * max(K - 1, 0)
    numer = (b.D0 ** 2
             + 4.0 * G * D * burn
             + G ** 2 * float(np.sum(4.0 * eta * k * eta + eta ** 2))
             + G * eta * _harmonic_tail(max(K, 1), T))
    return numer / (2.0 * T * eta)


def sgda_opt_bound(b: BoundInputs) -> float:
    """Expected empirical duality gap of averaged MC-SGDA."""
    _basic(b)
    if b.eta <= 0 or b.T < 1:
        raise InvalidConfiguration("optimization bound needs eta > 0 and T >= 1")
    spec = _spectrum(b)
    eta, T, G = b.eta, b.T, b.G
    D = b.D_w + b.D_v
    if D <= 0:
        raise InvalidConfiguration("need positive domain diameters")
    k = k_schedule(spec, D, b.n, T, j_power=2)
    K = spec.k_p
    j = np.arange(max(K, 1), T + 1, dtype=float)
    tail = float(np.sum(1.0 / j ** 2))
    return G ** 2 * eta + D ** 2 / (2.0 * T * eta) + (2.0 * G * K * D + 12.0 * G ** 2 * eta * float(k.sum())
                                                      + G * tail) / T


def nonconvex_opt_bound(b: BoundInputs) -> float:
    """Bound on the smallest expected squared gradient norm along MC-SGD.

    ``D`` is the diameter of the domain and ``F_S_w0`` the empirical risk
    at the starting point.
    """
    _basic(b)
    if b.eta <= 0 or b.T < 1:
        raise InvalidConfiguration("non-convex bound needs eta > 0 and T >= 1")
    L = _need_L(b)
    if b.D is None or b.D <= 0:
        raise InvalidConfiguration("non-convex bound needs the domain diameter D")
    spec = _spectrum(b)
    eta, T, G = b.eta, b.T, b.G
    k = k_schedule(spec, b.D, b.n, T, j_power=1).astype(float)
    K = spec.k_p
    C = 2.0 * (b.F_S_w0 + 2.0 * G ** 2 * eta * max(K - 1, 0))
    first = (C + eta * _harmonic_tail(max(K, 1), T)) / (2.0 * T * eta)
    # inner sums over k = j - k_j, ..., j have k_j + 1 terms
    inner = eta ** 2 + k * (k + 1.0) * eta ** 2 + 6.0 * eta * (k + 1.0) * eta
    second = G ** 2 * L * float(inner.sum()) / (2.0 * T * eta)
    return first + second


BOUND_FUNCTIONS = {
    "sgd_stability_smooth": lambda b: sgd_stability_bound(b, True),
    "sgd_stability_nonsmooth": lambda b: sgd_stability_bound(b, False),
    "sgd_gen_smooth": lambda b: sgd_gen_bound(b, True),
    "sgd_gen_nonsmooth": lambda b: sgd_gen_bound(b, False),
    "sgda_stability_smooth": lambda b: sgda_stability_bound(b, True),
    "sgda_stability_nonsmooth": lambda b: sgda_stability_bound(b, False),
    "sgda_gen_weak_pd_smooth": lambda b: sgda_gen_bounds(b, True)[0],
    "sgda_gen_weak_pd_nonsmooth": lambda b: sgda_gen_bounds(b, False)[0],
    "sgda_gen_primal_smooth": lambda b: sgda_gen_bounds(b, True)[1],
    "sgd_opt": sgd_opt_bound,
    "sgda_opt": sgda_opt_bound,
    "nonconvex_opt": nonconvex_opt_bound,
}
