"""Finite-state Markov chains over dataset indices.

Chains are used as index samplers for MC-SGD/MC-SGDA.  States are 0-based
(``0 .. n-1``) throughout the library; exported paths follow the same
convention.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ChainNotMixing, InvalidArgument, UnsupportedMatrix

ROW_TOL = 1e-12
COND_LIMIT = 1e10
MIXING_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic ``n x n`` matrix; row ``i`` is the law of the next state.

    ``description`` records how the matrix was built (``kind``, ``n``,
    ``alpha``, ``seed``) so it can be serialized compactly.
    """

    rows: np.ndarray
    description: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1] or rows.shape[0] == 0:
            raise InvalidArgument(f"transition matrix must be square and nonempty, got {rows.shape}")
        if not np.all(np.isfinite(rows)) or np.any(rows < 0):
            raise InvalidArgument("transition matrix entries must be finite and nonnegative")
        err = np.max(np.abs(rows.sum(axis=1) - 1.0))
        if err > ROW_TOL:
            raise InvalidArgument(f"rows must sum to 1 within {ROW_TOL:g} (max error {err:.3e})")
        object.__setattr__(self, "rows", _freeze(rows))
        if not self.description:
            object.__setattr__(self, "description", {"kind": "explicit", "n": rows.shape[0]})

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def to_record(self) -> dict:
        """Structured description; explicit matrices carry their rows row-major."""
        rec = dict(self.description)
        if rec.get("kind", "explicit") == "explicit":
            rec["kind"] = "explicit"
            rec["n"] = self.n
            rec["rows"] = self.rows.tolist()
        return rec


def _normalized(rows: np.ndarray) -> np.ndarray:
    # builders renormalize to absorb rounding
    return rows / rows.sum(axis=1, keepdims=True)


def build_uniform(n: int) -> TransitionMatrix:
    """The i.i.d. sampler: every entry equals ``1/n``."""
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    n = int(n)
    return TransitionMatrix(np.full((n, n), 1.0 / n), {"kind": "uniform", "n": n})


def build_lazy_cycle(n: int) -> TransitionMatrix:
    """Random walk on a cycle that moves to i-1, i or i+1 with probability 1/3 each."""
    if int(n) != n or n < 3:
        raise InvalidArgument(f"lazy cycle needs n >= 3, got {n!r}")
    n = int(n)
    rows = np.zeros((n, n))
    idx = np.arange(n)
    for off in (-1, 0, 1):
        rows[idx, (idx + off) % n] = 1.0 / 3.0
    return TransitionMatrix(_normalized(rows), {"kind": "lazy_cycle", "n": n})


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Fisher-Yates shuffle of ``0..n-1`` driven by ``rng``."""
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def build_random_symmetric(n: int, alpha: float, seed: int) -> TransitionMatrix:
    """Symmetric doubly-stochastic chain ``alpha*U + (1-alpha)*(Pi + Pi^T)/2``.

    ``U`` is the uniform matrix and ``Pi`` a seeded random permutation
    matrix.  For ``alpha > 0`` the chain is irreducible and aperiodic.
    """
    if int(n) != n or n < 2:
        raise InvalidArgument(f"n must be >= 2, got {n!r}")
    if not (0.0 < alpha <= 1.0):
        raise InvalidArgument(f"alpha must lie in (0, 1], got {alpha!r}")
    n = int(n)
    perm = random_permutation(n, np.random.default_rng(seed))
    return _symmetric_mixture(n, alpha, perm, {"kind": "random_symmetric", "n": n, "alpha": alpha, "seed": seed})


def _symmetric_mixture(n, alpha, perm, description):
    pmat = np.zeros((n, n))
    pmat[np.arange(n), perm] = 1.0
    rows = alpha * np.full((n, n), 1.0 / n) + (1.0 - alpha) * 0.5 * (pmat + pmat.T)
    rows = _normalized(rows)
    # renormalizing can break symmetry by an ulp; restore it exactly
    return TransitionMatrix(0.5 * (rows + rows.T), description)


def from_record(rec: Mapping[str, Any]) -> TransitionMatrix:
    """Inverse of :meth:`TransitionMatrix.to_record`."""
    kind = str(rec.get("kind")).replace("-", "_")
    if kind == "uniform":
        return build_uniform(rec["n"])
    if kind == "lazy_cycle":
        return build_lazy_cycle(rec["n"])
    if kind == "random_symmetric":
        return build_random_symmetric(rec["n"], float(rec["alpha"]), int(rec["seed"]))
    if kind == "explicit":
        return TransitionMatrix(np.asarray(rec["rows"], dtype=float))
    raise InvalidArgument(f"unknown chain kind {kind!r}")


@dataclass(frozen=True)
class ChainSpectrum:
    """Spectral summary of a transition matrix.

    ``lam`` is the contraction parameter ``(max(|l_2|, |l_n|) + 1) / 2`` and
    ``c_eff`` the constant used in the geometric mixing bound (``n**1.5`` for
    symmetric chains, ``c_p`` otherwise).
    """

    n: int
    eigenvalues: np.ndarray
    lam: float
    stationary: np.ndarray
    symmetric: bool
    c_p: float | None
    k_p: int = 0

    @property
    def c_eff(self) -> float:
        if self.symmetric:
            return float(self.n) ** 1.5
        if self.c_p is None:
            raise UnsupportedMatrix("C_P is not available for this chain")
        return self.c_p

    def to_record(self) -> dict:
        return {
            "lambda": self.lam,
            "k_p": self.k_p,
            "c_p": self.c_p,
            "stationary": self.stationary.tolist(),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
        }


def synthetic_spectrum(n: int, lam: float, symmetric: bool = True, c_p: float | None = None, k_p: int = 0) -> ChainSpectrum:
    """Spectrum record with a prescribed ``lam``, for sweeping bound calculators."""
    if not (0.5 <= lam < 1.0):
        raise InvalidArgument(f"lambda must lie in [1/2, 1), got {lam!r}")
    eig = np.zeros(n, dtype=complex)
    eig[0] = 1.0
    if n > 1:
        eig[1] = 2.0 * lam - 1.0
    return ChainSpectrum(n=n, eigenvalues=eig, lam=float(lam), stationary=np.full(n, 1.0 / n),
                         symmetric=symmetric, c_p=(float(n) ** 1.5 if symmetric and c_p is None else c_p), k_p=k_p)


def _ordered_extremes(eigs: np.ndarray) -> tuple[complex, complex]:
    # descending real part, ties broken by larger magnitude
    order = sorted(range(len(eigs)), key=lambda k: (-eigs[k].real, -abs(eigs[k])))
    return eigs[order[1]], eigs[order[-1]]


def stationary_distribution(rows: np.ndarray) -> np.ndarray:
    """Solve ``pi P = pi``, ``sum(pi) = 1`` in the least-squares sense."""
    n = rows.shape[0]
    a = np.vstack([rows.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def analyze(P: TransitionMatrix) -> ChainSpectrum:
    """Eigendecomposition and mixing constants of ``P``.

    Raises
    ------
    ChainNotMixing
        If ``lambda(P) >= 1 - 1e-12`` (reducible or periodic chain).
    UnsupportedMatrix
        If ``P`` is not symmetric and its eigenvector matrix has condition
        number above ``1e10``.
    """
    rows = P.rows
    n = P.n
    symmetric = bool(np.max(np.abs(rows - rows.T)) <= ROW_TOL)
    if symmetric:
        eigs = np.linalg.eigvalsh(0.5 * (rows + rows.T)).astype(complex)
    else:
        eigs, vecs = np.linalg.eig(rows)
    order = np.lexsort((-eigs.real, -np.abs(eigs)))
    eigs_sorted = eigs[order]

    if n == 1:
        lam = 0.5
    else:
        l2, ln = _ordered_extremes(eigs)
        lam = (max(abs(l2), abs(ln)) + 1.0) / 2.0
    if lam >= 1.0 - MIXING_TOL:
        raise ChainNotMixing(f"lambda(P) = {lam!r}: chain is reducible or periodic")

    if symmetric:
        stationary = np.full(n, 1.0 / n)
        c_p = float(n) ** 1.5
    else:
        if np.linalg.cond(vecs) > COND_LIMIT:
            raise UnsupportedMatrix("transition matrix is numerically defective")
        # all Jordan blocks have size 1, so the block-size factor is sqrt(n - 1)
        c_p = math.sqrt(n - 1) * np.linalg.norm(vecs, "fro") * np.linalg.norm(np.linalg.inv(vecs), "fro")
        stationary = stationary_distribution(rows)
    return ChainSpectrum(n=n, eigenvalues=eigs_sorted, lam=float(lam), stationary=_freeze(stationary),
                         symmetric=symmetric, c_p=float(c_p), k_p=0)


def deviation(P: TransitionMatrix, j: int) -> float:
    """Entrywise max of ``|1/n - [P^j]_{i,i'}|``."""
    if j < 0:
        raise InvalidArgument("j must be nonnegative")
    Pj = np.linalg.matrix_power(P.rows, int(j))
    return float(np.max(np.abs(Pj - 1.0 / P.n)))


def deviation_row_sum(P: TransitionMatrix, j: int) -> float:
    """Max-row-sum (operator infinity) norm of ``P^j - 1 1^T / n``."""
    if j < 0:
        raise InvalidArgument("j must be nonnegative")
    Pj = np.linalg.matrix_power(P.rows, int(j))
    return float(np.max(np.abs(Pj - 1.0 / P.n).sum(axis=1)))


def mixing_time_to(spec: ChainSpectrum, eps: float) -> int:
    """Smallest ``j >= 0`` with ``c_eff * lam**j <= eps``."""
    if eps <= 0:
        raise InvalidArgument("eps must be positive")
    c = spec.c_eff
    if c <= eps:
        return 0
    j = max(0, math.ceil(math.log(c / eps) / math.log(1.0 / spec.lam)))
    # guard against rounding in the closed form
    while j > 0 and c * spec.lam ** (j - 1) <= eps:
        j -= 1
    while c * spec.lam ** j > eps:
        j += 1
    return j


def k_schedule(spec: ChainSpectrum, D: float, n: int, T: int, j_power: int = 1) -> np.ndarray:
    """Look-back horizons ``k_j = min(max(ceil(log(2 C D n j^p) / log(1/lam)), K_P), j)``.

    ``j_power`` is 1 for the MC-SGD analysis and 2 for MC-SGDA.
    """
    if D <= 0:
        raise InvalidArgument("D must be positive")
    c = spec.c_eff
    j = np.arange(1, T + 1, dtype=float)
    raw = np.ceil(np.log(2.0 * c * D * n * j ** j_power) / math.log(1.0 / spec.lam))
    k = np.minimum(np.maximum(raw, spec.k_p), j)
    return k.astype(np.int64)


@dataclass(frozen=True)
class ChainPath:
    """A sampled index sequence, reproducible from (P, T, initial, seed)."""

    indices: np.ndarray
    seed: int
    initial_distribution: np.ndarray

    @property
    def T(self) -> int:
        return len(self.indices)


def _as_distribution(initial: Sequence[float] | np.ndarray | None, n: int) -> np.ndarray:
    if initial is None:
        return np.full(n, 1.0 / n)
    p = np.asarray(initial, dtype=float)
    if p.shape != (n,):
        raise InvalidArgument(f"initial distribution must have length {n}, got shape {p.shape}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > ROW_TOL * n or not np.all(np.isfinite(p)):
        raise InvalidArgument("initial distribution must be nonnegative and sum to 1")
    return p


def sample_path(P: TransitionMatrix, T: int, initial=None, seed: int = 0) -> ChainPath:
    """Sample ``T`` states by inverse-CDF, one uniform draw per step.

    ``initial`` defaults to the uniform distribution.
    """
    if T < 0:
        raise InvalidArgument("T must be nonnegative")
    init = _as_distribution(initial, P.n)
    rng = np.random.default_rng(seed)
    u = rng.random(T).tolist()
    cdfs = [row.tolist() for row in np.cumsum(P.rows, axis=1)]
    # a draw above a row's rounded total falls on its last reachable state
    lasts = [int(np.flatnonzero(row > 0)[-1]) for row in P.rows]
    init_cdf = np.cumsum(init).tolist()
    init_last = int(np.flatnonzero(init > 0)[-1])
    out = np.empty(T, dtype=np.int64)
    state = -1
    for t in range(T):
        if t == 0:
            state = min(bisect.bisect_right(init_cdf, u[t]), init_last)
        else:
            state = min(bisect.bisect_right(cdfs[state], u[t]), lasts[state])
        out[t] = state
    out.setflags(write=False)
    return ChainPath(indices=out, seed=int(seed), initial_distribution=_freeze(init))


def chain_for(chain, n: int) -> TransitionMatrix:
    """Resolve a chain description for ``n`` states.

    Accepts a :class:`TransitionMatrix`, a record as produced by
    ``to_record`` (``n`` is filled in when missing), a bare kind name or a
    callable ``n -> TransitionMatrix``.
    """
    if isinstance(chain, TransitionMatrix):
        P = chain
    elif isinstance(chain, str):
        P = from_record({"kind": chain, "n": n})
    elif isinstance(chain, Mapping):
        P = from_record({**chain, "n": chain.get("n", n)})
    elif callable(chain):
        P = chain(n)
    else:
        raise InvalidArgument(f"cannot build a chain from {chain!r}")
    if P.n != n:
        raise InvalidArgument(f"chain has {P.n} states but the dataset has {n} examples")
    return P
