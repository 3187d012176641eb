"""Loss families, synthetic data and reference solvers.

Two kinds of objectives are provided:

* ERM losses ``f(w; z)`` of a linear predictor ``u = <w, x>``: logistic,
  hinge, absolute, least-squares and the non-convex sigmoid-squared loss.
* Saddle losses ``f(w, v; z) = <w, A v> + <b, w> - <c, v> - (rho/2)|v|^2``.

Lipschitz and smoothness constants are computed from the data bounds and
the domain ball, never hard-coded downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .errors import InvalidArgument, OracleNotConverged, Unsupported

LOSS_KINDS = ("logistic", "hinge", "absolute", "least-squares", "sigmoid-sq-nonconvex")
_ALIASES = {"sigmoid-sq": "sigmoid-sq-nonconvex"}
SADDLE_KINDS = ("bilinear-saddle", "sc-concave-saddle")

# sup_s |s (1 - s) (1 - 2 s)| over s in (0, 1)
_SIG_CURV3 = 1.0 / (6.0 * math.sqrt(3.0))


# --------------------------------------------------------------------------
# data


class Example(NamedTuple):
    x: np.ndarray
    y: float


@dataclass(frozen=True)
class DataGenerator:
    """Distribution over examples ``z = (x, y)``.

    kinds
        ``classification``: ``x`` uniform on the sphere of radius ``B_x``,
        ``y = sign(<w_true, x>)`` flipped with probability ``p_noise``.
        ``regression``: same ``x``, ``y = <w_true, x> + U(-noise, noise)``.
        ``point``: always emits ``(point_x, point_y)``.
    """

    kind: str = "classification"
    d: int = 5
    B_x: float = 1.0
    p_noise: float = 0.1
    w_true_seed: int = 0
    w_true: tuple | None = None
    noise: float = 0.0
    point_x: tuple | None = None
    point_y: float = 0.0

    def __post_init__(self):
        if self.kind not in ("classification", "regression", "point"):
            raise InvalidArgument(f"unknown generator kind {self.kind!r}")
        if self.d < 1 or self.B_x <= 0:
            raise InvalidArgument("generator needs d >= 1 and B_x > 0")
        if not 0.0 <= self.p_noise <= 1.0:
            raise InvalidArgument("p_noise must lie in [0, 1]")
        if self.kind == "point" and (self.point_x is None or len(self.point_x) != self.d):
            raise InvalidArgument("point generator needs point_x of length d")

    @property
    def generator_id(self) -> str:
        return f"{self.kind}-d{self.d}-Bx{self.B_x:g}-p{self.p_noise:g}-w{self.w_true_seed}"

    def true_direction(self) -> np.ndarray:
        if self.w_true is not None:
            w = np.asarray(self.w_true, dtype=float)
        else:
            w = np.random.default_rng(self.w_true_seed).standard_normal(self.d)
        return w / np.linalg.norm(w)

    @property
    def B_y(self) -> float:
        if self.kind == "classification":
            return 1.0
        if self.kind == "regression":
            return self.B_x + self.noise
        return abs(self.point_y)

    @property
    def B_x_eff(self) -> float:
        if self.kind == "point":
            return float(np.linalg.norm(self.point_x))
        return self.B_x

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "point":
            X = np.tile(np.asarray(self.point_x, dtype=float), (n, 1))
            return X, np.full(n, float(self.point_y))
        g = rng.standard_normal((n, self.d))
        X = self.B_x * g / np.linalg.norm(g, axis=1, keepdims=True)
        u = X @ self.true_direction()
        if self.kind == "classification":
            y = np.where(u >= 0, 1.0, -1.0)
            flip = rng.random(n) < self.p_noise
            y = np.where(flip, -y, y)
        else:
            y = u + rng.uniform(-self.noise, self.noise, size=n)
        return X, y

    def to_record(self) -> dict:
        rec = {"kind": self.kind, "d": self.d, "B_x": self.B_x, "p_noise": self.p_noise,
               "w_true_seed": self.w_true_seed}
        if self.w_true is not None:
            rec["w_true"] = list(self.w_true)
        if self.kind == "regression":
            rec["noise"] = self.noise
        if self.kind == "point":
            rec["point_x"] = list(self.point_x)
            rec["point_y"] = self.point_y
        return rec


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    generator_id: str = "explicit"
    seed: int | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if X.shape[0] != y.shape[0]:
            raise InvalidArgument("X and y must have the same number of rows")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def example(self, i: int) -> Example:
        return Example(self.X[i], float(self.y[i]))

    def replace(self, i: int, z: Example) -> "Dataset":
        """Neighbouring dataset with position ``i`` replaced by ``z``."""
        X = self.X.copy()
        y = self.y.copy()
        X[i] = z.x
        y[i] = z.y
        return Dataset(X, y, self.generator_id, self.seed)

    def to_text(self, delimiter: str = ",") -> str:
        lines = [delimiter.join(repr(float(v)) for v in (*row, label)) for row, label in zip(self.X, self.y)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, delimiter: str = ",") -> "Dataset":
        rows = np.array([[float(v) for v in line.split(delimiter)] for line in text.splitlines() if line.strip()])
        return cls(rows[:, :-1], rows[:, -1])


def generate_dataset(gen, n: int, seed: int):
    """Draw ``n`` i.i.d. examples; identical ``(gen, n, seed)`` give identical data."""
    if isinstance(gen, SaddleGenerator):
        return generate_saddle_dataset(gen, n, seed)
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    X, y = gen.sample(n, np.random.default_rng(seed))
    return Dataset(X, y, gen.generator_id, seed)


# --------------------------------------------------------------------------
# ERM losses


@dataclass(frozen=True)
class LossFamily:
    kind: str
    d: int
    G: float
    L: float | None
    convex: bool
    smooth: bool

    def __post_init__(self):
        object.__setattr__(self, "kind", _ALIASES.get(self.kind, self.kind))
        if self.kind not in LOSS_KINDS:
            raise InvalidArgument(f"unknown loss kind {self.kind!r}")

    # per-example value and derivative in the linear score u = <w, x>
    def _phi(self, u, y):
        k = self.kind
        if k == "logistic":
            return np.logaddexp(0.0, -y * u)
        if k == "hinge":
            return np.maximum(0.0, 1.0 - y * u)
        if k == "absolute":
            return np.abs(u - y)
        if k == "least-squares":
            return 0.5 * (u - y) ** 2
        return (expit(u) - y) ** 2

    def _dphi(self, u, y):
        k = self.kind
        if k == "logistic":
            return -y * expit(-y * u)
        if k == "hinge":
            # zero at the kink
            return np.where(y * u < 1.0, -y, 0.0)
        if k == "absolute":
            return np.sign(u - y)
        if k == "least-squares":
            return u - y
        s = expit(u)
        return 2.0 * (s - y) * s * (1.0 - s)

    def values(self, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._phi(X @ w, y)

    def gradients(self, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._dphi(X @ w, y)[:, None] * X

    def full_gradient(self, w: np.ndarray, S: Dataset) -> np.ndarray:
        return self._dphi(S.X @ w, S.y) @ S.X / len(S)


def make_loss_family(kind: str, d: int, B_x: float = 1.0, R: float | None = 1.0, B_y: float = 1.0) -> LossFamily:
    """Loss family with constants valid on ``|x| <= B_x``, ``|y| <= B_y``, ``|w| <= R``.

    ``R=None`` means an unconstrained domain; least-squares then has no
    finite Lipschitz constant (``G = inf``).
    """
    kind = _ALIASES.get(kind, kind)
    if kind == "logistic":
        return LossFamily(kind, d, G=B_x * B_y, L=B_x ** 2 * B_y ** 2 / 4.0, convex=True, smooth=True)
    if kind == "hinge":
        return LossFamily(kind, d, G=B_x * B_y, L=None, convex=True, smooth=False)
    if kind == "absolute":
        return LossFamily(kind, d, G=B_x, L=None, convex=True, smooth=False)
    if kind == "least-squares":
        G = math.inf if R is None else B_x * (B_x * R + B_y)
        return LossFamily(kind, d, G=G, L=B_x ** 2, convex=True, smooth=True)
    if kind == "sigmoid-sq-nonconvex":
        # |sigmoid - y| <= 1 + B_y and sigmoid' <= 1/4
        G = B_x * (1.0 + B_y) / 2.0
        L = B_x ** 2 * 2.0 * (1.0 / 16.0 + (1.0 + B_y) * _SIG_CURV3)
        return LossFamily(kind, d, G=G, L=L, convex=False, smooth=True)
    raise InvalidArgument(f"unknown loss kind {kind!r}")


def family_for(kind: str, gen: DataGenerator, R: float | None) -> LossFamily:
    return make_loss_family(kind, gen.d, B_x=gen.B_x_eff, R=R, B_y=gen.B_y)


def _check_dim(fam_d: int, w: np.ndarray):
    if w.shape != (fam_d,):
        raise InvalidArgument(f"expected a vector of dimension {fam_d}, got shape {w.shape}")


def loss_value(fam: LossFamily, w, z: Example) -> float:
    w = np.asarray(w, dtype=float)
    _check_dim(fam.d, w)
    x = np.asarray(z.x, dtype=float)
    _check_dim(fam.d, x)
    return float(fam._phi(float(x @ w), float(z.y)))


def subgradient(fam: LossFamily, w, z: Example) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    _check_dim(fam.d, w)
    x = np.asarray(z.x, dtype=float)
    _check_dim(fam.d, x)
    return float(fam._dphi(float(x @ w), float(z.y))) * x


def empirical_risk(fam: LossFamily, S: Dataset, w) -> float:
    """Mean loss over the dataset."""
    if len(S) == 0:
        raise InvalidArgument("empty dataset")
    w = np.asarray(w, dtype=float)
    _check_dim(fam.d, w)
    return float(np.mean(fam.values(w, S.X, S.y)))


def _mean_and_se(vals: np.ndarray) -> tuple[float, float]:
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(len(vals)))


def population_risk_mc(fam, gen, w, N: int = 100_000, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo population risk over ``N`` fresh draws, with its standard error.

    For saddle families pass ``w`` as a ``(w, v)`` pair.
    """
    if N < 2:
        raise InvalidArgument("N must be >= 2")
    rng = np.random.default_rng(seed)
    if isinstance(fam, MinimaxFamily):
        wv, vv = (np.asarray(a, dtype=float) for a in w)
        A, b, c = gen.sample(N, rng)
        vals = saddle_values(fam, A, b, c, wv, vv)
    else:
        X, y = gen.sample(N, rng)
        vals = fam.values(np.asarray(w, dtype=float), X, y)
    return _mean_and_se(vals)


# --------------------------------------------------------------------------
# domains and reference ERM solver


def _project_ball(w: np.ndarray, R: float | None) -> np.ndarray:
    if R is None:
        return w
    nrm = float(np.linalg.norm(w))
    return w if nrm <= R else w * (R / nrm)


def erm_oracle(fam: LossFamily, S: Dataset, domain=None, budget: int = 100_000, tol: float = 1e-12):
    """Reference empirical minimizer ``(w*, F_S(w*))`` over the domain.

    Smooth families use accelerated projected gradient with step ``1/L``;
    non-smooth ones use projected subgradient steps ``c/sqrt(t)`` with
    running averages.  The best candidate seen (including ``w = 0``) wins.
    """
    if not fam.convex:
        raise Unsupported("erm_oracle requires a convex family")
    R = getattr(domain, "radius", domain)
    zero = np.zeros(fam.d)
    best_w, best_val = zero, empirical_risk(fam, S, zero)

    def consider(w):
        nonlocal best_w, best_val
        val = empirical_risk(fam, S, w)
        if val < best_val:
            best_w, best_val = w.copy(), val

    if fam.smooth:
        step = 1.0 / fam.L
        x = zero.copy()
        yk = x.copy()
        t = 1.0
        for _ in range(budget):
            x_new = _project_ball(yk - step * fam.full_gradient(yk, S), R)
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            yk = x_new + ((t - 1.0) / t_new) * (x_new - x)
            moved = float(np.linalg.norm(x_new - x))
            x, t = x_new, t_new
            if moved <= tol * max(1.0, float(np.linalg.norm(x))):
                break
        consider(x)
    else:
        c = (R if R is not None else 1.0) / max(fam.G, 1e-12)
        w = zero.copy()
        acc = np.zeros(fam.d)
        wsum = 0.0
        for t in range(1, budget + 1):
            eta = c / math.sqrt(t)
            w = _project_ball(w - eta * fam.full_gradient(w, S), R)
            acc += eta * w
            wsum += eta
            if t % 1000 == 0 or t == budget:
                consider(acc / wsum)
                consider(w)
    return best_w, best_val


# --------------------------------------------------------------------------
# saddle losses


@dataclass(frozen=True)
class MinimaxFamily:
    kind: str
    d_w: int
    d_v: int
    G: float
    L: float
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in SADDLE_KINDS:
            raise InvalidArgument(f"unknown saddle kind {self.kind!r}")
        if self.kind == "sc-concave-saddle" and self.rho <= 0:
            raise InvalidArgument("sc-concave-saddle needs rho > 0")
        if self.kind == "bilinear-saddle" and self.rho != 0:
            raise InvalidArgument("bilinear-saddle has rho = 0")


@dataclass(frozen=True)
class SaddleDataset:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    generator_id: str = "explicit"
    seed: int | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if A.ndim != 3 or b.shape != A.shape[:2] or c.shape != (A.shape[0], A.shape[2]):
            raise InvalidArgument("saddle data must have shapes (n,dw,dv), (n,dw), (n,dv)")
        for a in (A, b, c):
            a.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    def __len__(self) -> int:
        return self.A.shape[0]

    def example(self, i: int):
        return (self.A[i], self.b[i], self.c[i])

    def replace(self, i: int, z) -> "SaddleDataset":
        A, b, c = self.A.copy(), self.b.copy(), self.c.copy()
        A[i], b[i], c[i] = z
        return SaddleDataset(A, b, c, self.generator_id, self.seed)

    def coefficients(self, rho: float) -> "SaddleCoefficients":
        return SaddleCoefficients(self.A.mean(axis=0), self.b.mean(axis=0), self.c.mean(axis=0), rho)

    def to_text(self, delimiter: str = ",") -> str:
        n = len(self)
        flat = np.hstack([self.A.reshape(n, -1), self.b, self.c])
        return "\n".join(delimiter.join(repr(float(v)) for v in row) for row in flat) + "\n"


@dataclass(frozen=True)
class SaddleGenerator:
    """Random saddle data with entries in ``[-1, 1]``, scaled to a target ``G``.

    Each entry is ``center + U(-1/2, 1/2)`` with a fixed ``center`` in
    ``[-1/2, 1/2]`` drawn from ``center_seed`` (or given explicitly as
    ``center = (A, b, c)``); the whole draw is then multiplied by ``scale``
    so that both partial gradients are bounded by ``G`` on ``|w| <= R_w``,
    ``|v| <= R_v``.
    """

    d_w: int = 3
    d_v: int = 3
    R_w: float = 1.0
    R_v: float = 1.0
    G: float = 1.0
    rho: float = 0.0
    center_seed: int = 0
    centered: bool = True
    zero: bool = False
    center: tuple | None = None

    def __post_init__(self):
        if self.G <= self.rho * self.R_v:
            raise InvalidArgument("need G > rho * R_v so the data scale is positive")
        if self.center is not None:
            cA, cb, cc = (np.asarray(a, dtype=float) for a in self.center)
            if cA.shape != (self.d_w, self.d_v) or cb.shape != (self.d_w,) or cc.shape != (self.d_v,):
                raise InvalidArgument("center shapes must be (d_w, d_v), (d_w,), (d_v,)")
            if max(np.abs(cA).max(), np.abs(cb).max(), np.abs(cc).max()) > 0.5:
                raise InvalidArgument("center entries must lie in [-1/2, 1/2]")

    @property
    def generator_id(self) -> str:
        return f"saddle-{self.d_w}x{self.d_v}-G{self.G:g}-rho{self.rho:g}-c{self.center_seed}"

    @property
    def scale(self) -> float:
        if self.zero:
            return 0.0
        fro = math.sqrt(self.d_w * self.d_v)
        s_w = self.G / (fro * self.R_v + math.sqrt(self.d_w))
        s_v = (self.G - self.rho * self.R_v) / (fro * self.R_w + math.sqrt(self.d_v))
        return min(s_w, s_v)

    def _centers(self):
        if self.center is not None:
            return tuple(np.asarray(a, dtype=float) for a in self.center)
        rng = np.random.default_rng(self.center_seed)
        if not self.centered:
            return (np.zeros((self.d_w, self.d_v)), np.zeros(self.d_w), np.zeros(self.d_v))
        return (rng.uniform(-0.5, 0.5, (self.d_w, self.d_v)), rng.uniform(-0.5, 0.5, self.d_w),
                rng.uniform(-0.5, 0.5, self.d_v))

    def sample(self, n: int, rng: np.random.Generator):
        cA, cb, cc = self._centers()
        s = self.scale
        A = s * (cA + rng.uniform(-0.5, 0.5, (n, self.d_w, self.d_v)))
        b = s * (cb + rng.uniform(-0.5, 0.5, (n, self.d_w)))
        c = s * (cc + rng.uniform(-0.5, 0.5, (n, self.d_v)))
        return A, b, c

    def mean_coefficients(self) -> "SaddleCoefficients":
        """Exact population coefficients ``E[A], E[b], E[c]``."""
        cA, cb, cc = self._centers()
        s = self.scale
        return SaddleCoefficients(s * cA, s * cb, s * cc, self.rho)

    def family(self) -> MinimaxFamily:
        sigma = self.scale * math.sqrt(self.d_w * self.d_v)
        L = 0.5 * (self.rho + math.sqrt(self.rho ** 2 + 4.0 * sigma ** 2))
        kind = "sc-concave-saddle" if self.rho > 0 else "bilinear-saddle"
        return MinimaxFamily(kind, self.d_w, self.d_v, G=self.G, L=L, rho=self.rho)

    def to_record(self) -> dict:
        rec = {"kind": "saddle", "d_w": self.d_w, "d_v": self.d_v, "R_w": self.R_w, "R_v": self.R_v,
               "G": self.G, "rho": self.rho, "center_seed": self.center_seed, "centered": self.centered}
        if self.center is not None:
            rec["center"] = [np.asarray(a, dtype=float).tolist() for a in self.center]
        return rec


def generate_saddle_dataset(gen: SaddleGenerator, n: int, seed: int) -> SaddleDataset:
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    A, b, c = gen.sample(n, np.random.default_rng(seed))
    return SaddleDataset(A, b, c, gen.generator_id, seed)


def _check_saddle(fam: MinimaxFamily, w, v):
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    if w.shape != (fam.d_w,) or v.shape != (fam.d_v,):
        raise InvalidArgument(f"expected w in R^{fam.d_w}, v in R^{fam.d_v}")
    return w, v


def _check_example(fam: MinimaxFamily, z):
    A, b, c = (np.asarray(a, dtype=float) for a in z)
    if A.shape != (fam.d_w, fam.d_v) or b.shape != (fam.d_w,) or c.shape != (fam.d_v,):
        raise InvalidArgument("saddle example has the wrong shape")
    return A, b, c


def minimax_value(fam: MinimaxFamily, w, v, z) -> float:
    w, v = _check_saddle(fam, w, v)
    A, b, c = _check_example(fam, z)
    return float(w @ A @ v + b @ w - c @ v - 0.5 * fam.rho * (v @ v))


def minimax_subgrad_w(fam: MinimaxFamily, w, v, z) -> np.ndarray:
    w, v = _check_saddle(fam, w, v)
    A, b, c = _check_example(fam, z)
    return A @ v + b


def minimax_subgrad_v(fam: MinimaxFamily, w, v, z) -> np.ndarray:
    w, v = _check_saddle(fam, w, v)
    A, b, c = _check_example(fam, z)
    return A.T @ w - c - fam.rho * v


def saddle_values(fam: MinimaxFamily, A, b, c, w, v) -> np.ndarray:
    return np.einsum("i,nij,j->n", w, A, v) + b @ w - c @ v - 0.5 * fam.rho * (v @ v)


def empirical_minimax_risk(fam: MinimaxFamily, S: SaddleDataset, w, v) -> float:
    if len(S) == 0:
        raise InvalidArgument("empty dataset")
    w, v = _check_saddle(fam, w, v)
    return float(np.mean(saddle_values(fam, S.A, S.b, S.c, w, v)))


@dataclass(frozen=True)
class SaddleCoefficients:
    """An averaged saddle ``F(w, v) = <w, A v> + <b, w> - <c, v> - (rho/2)|v|^2``.

    Empirical and population objectives of the saddle families are both of
    this form, because the loss is linear in ``(A, b, c)``.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    rho: float = 0.0

    def value(self, w, v) -> float:
        return float(w @ self.A @ v + self.b @ w - self.c @ v - 0.5 * self.rho * (v @ v))

    def grad_w(self, w, v) -> np.ndarray:
        return self.A @ v + self.b

    def grad_v(self, w, v) -> np.ndarray:
        return self.A.T @ w - self.c - self.rho * v

    def best_response_v(self, w, r: float) -> tuple[np.ndarray, float]:
        return _max_over_ball(self.A.T @ w - self.c, float(self.b @ w), self.rho, r)

    def best_response_w(self, v, r: float) -> tuple[np.ndarray, float]:
        g = self.A @ v + self.b
        const = float(-self.c @ v - 0.5 * self.rho * (v @ v))
        w = _min_linear_over_ball(g, r)
        return w, float(g @ w) + const

    def pd_gap(self, w, v, R_w: float, R_v: float) -> float:
        return self.best_response_v(w, R_v)[1] - self.best_response_w(v, R_w)[1]

    @property
    def lipschitz(self) -> float:
        sigma = float(np.linalg.norm(self.A, 2)) if self.A.size else 0.0
        return 0.5 * (self.rho + math.sqrt(self.rho ** 2 + 4.0 * sigma ** 2))


def _max_over_ball(g: np.ndarray, const: float, rho: float, r: float) -> tuple[np.ndarray, float]:
    """``max_{|v| <= r} <g, v> + const - (rho/2)|v|^2`` in closed form."""
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        v = np.zeros_like(g)
        return v, const
    radius = r if rho == 0 else min(gn / rho, r)
    v = (radius / gn) * g
    return v, float(g @ v) + const - 0.5 * rho * float(v @ v)


def _min_linear_over_ball(g: np.ndarray, r: float) -> np.ndarray:
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        return np.zeros_like(g)
    return (-r / gn) * g


def _radius(domain) -> float:
    r = getattr(domain, "radius", domain)
    if r is None:
        raise InvalidArgument("best responses need a centered ball domain")
    return float(r)


def best_response_v(fam: MinimaxFamily, S: SaddleDataset, w, V) -> tuple[np.ndarray, float]:
    """Closed-form ``argmax_{v in V} F_S(w, v)`` and its value on a centered ball."""
    w = np.asarray(w, dtype=float)
    return S.coefficients(fam.rho).best_response_v(w, _radius(V))


def best_response_w(fam: MinimaxFamily, S: SaddleDataset, v, W) -> tuple[np.ndarray, float]:
    """Closed-form ``argmin_{w in W} F_S(w, v)``; ``F_S`` is linear in ``w``."""
    v = np.asarray(v, dtype=float)
    return S.coefficients(fam.rho).best_response_w(v, _radius(W))


def solve_saddle(coef: SaddleCoefficients, R_w: float, R_v: float, budget: int = 100_000,
                 tol: float = 1e-4, check_every: int = 50):
    """Extragradient with averaging on a saddle over two centered balls.

    Returns ``(w, v, gap)`` for the best of the running average and the
    last iterate.
    """
    d_w, d_v = coef.b.shape[0], coef.c.shape[0]
    L = coef.lipschitz
    if L == 0.0:
        w, v = np.zeros(d_w), np.zeros(d_v)
        return w, v, coef.pd_gap(w, v, R_w, R_v)
    step = 0.5 / L
    w, v = np.zeros(d_w), np.zeros(d_v)
    sw, sv = np.zeros(d_w), np.zeros(d_v)
    best = (w.copy(), v.copy(), coef.pd_gap(w, v, R_w, R_v))
    for t in range(1, budget + 1):
        wh = _project_ball(w - step * coef.grad_w(w, v), R_w)
        vh = _project_ball(v + step * coef.grad_v(w, v), R_v)
        w = _project_ball(w - step * coef.grad_w(wh, vh), R_w)
        v = _project_ball(v + step * coef.grad_v(wh, vh), R_v)
        sw += wh
        sv += vh
        if t % check_every == 0 or t == budget:
            for cw, cv in ((sw / t, sv / t), (w, v)):
                gap = coef.pd_gap(cw, cv, R_w, R_v)
                if gap < best[2]:
                    best = (cw.copy(), cv.copy(), gap)
            if best[2] <= 0.01 * tol:
                break
    return best


def saddle_oracle(fam: MinimaxFamily, S: SaddleDataset, W, V, budget: int = 100_000, tol: float = 1e-4):
    """Reference empirical saddle ``(w*, v*, pd_gap)``.

    Raises
    ------
    OracleNotConverged
        If the duality gap is still above ``tol`` after ``budget`` iterations.
    """
    w, v, gap = solve_saddle(S.coefficients(fam.rho), _radius(W), _radius(V), budget=budget, tol=tol)
    if gap > tol:
        raise OracleNotConverged(f"saddle oracle stopped at gap {gap:.3e} > {tol:g}")
    return w, v, gap


def sup_loss_at_zero(fam: LossFamily, B_y: float = 1.0) -> float:
    """``sup_z f(0; z)`` for labels bounded by ``B_y``."""
    return {
        "logistic": math.log(2.0),
        "hinge": 1.0,
        "absolute": B_y,
        "least-squares": 0.5 * B_y ** 2,
        "sigmoid-sq-nonconvex": (0.5 + B_y) ** 2,
    }[fam.kind]
