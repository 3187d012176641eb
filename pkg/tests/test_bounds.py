import math

import numpy as np
import pytest

from mcsgm.bounds import (BOUND_FUNCTIONS, BoundInputs, nonconvex_opt_bound, sgd_gen_bound, sgd_opt_bound,
                          sgd_stability_bound, sgda_gen_bounds, sgda_opt_bound, sgda_stability_bound)
from mcsgm.chain import analyze, build_lazy_cycle, synthetic_spectrum
from mcsgm.errors import InvalidConfiguration, UnsupportedMatrix


# second implementation: per-step sums written out as loops over eta_j


def ref_lookback(lam, c, D, n, T, K, power):
    out = []
    for j in range(1, T + 1):
        k = math.ceil(math.log(2 * c * D * n * j ** power) / math.log(1 / lam))
        out.append(min(max(k, K), j))
    return out


def ref_sgd_stability(G, n, T, eta, smooth):
    steps = [eta] * T
    if smooth:
        return 2 * G / n * sum(steps)
    return 2 * G * math.sqrt(sum(s * s for s in steps)) + 4 * G / n * sum(steps)


def ref_sgda_stability(G, n, T, eta, smooth):
    steps = [eta] * T
    sq = sum(s * s for s in steps)
    if smooth:
        return 4 * G * math.sqrt(sq / n) + 8 * math.sqrt(2) * G / n * sum(steps)
    return 2 * G * math.sqrt(2 * sq) + 4 * math.sqrt(2) * G / n * sum(steps)


def ref_sgd_opt(G, n, T, eta, lam, c, K, D0, f0):
    steps = [eta] * (max(T, K) + 1)  # steps[j] for j >= 1; the burn-in may run past T
    D = math.sqrt((G * G + 2 * f0) * sum(steps[1:T + 1])) + D0
    ks = ref_lookback(lam, c, D, n, T, K, 1)
    total = D0 ** 2
    for j in range(1, K):
        total += 4 * G * D * steps[j]
    for j in range(max(K, 1), T + 1):
        total += G * steps[j] / j
    for j in range(1, T + 1):
        window = sum(steps[m] for m in range(j - ks[j - 1] + 1, j + 1))
        total += G * G * (4 * steps[j] * window + steps[j] ** 2)
    return total / (2 * sum(steps[1:T + 1]))


def ref_sgda_opt(G, n, T, eta, lam, c, K, D):
    ks = ref_lookback(lam, c, D, n, T, K, 2)
    tail = sum(1 / j ** 2 for j in range(max(K, 1), T + 1))
    return G * G * eta + D * D / (2 * T * eta) + (2 * G * K * D + 12 * G * G * eta * sum(ks) + G * tail) / T


def ref_nonconvex(G, L, n, T, eta, lam, c, K, D, F0):
    steps = [eta] * (max(T, K) + 1)
    ks = ref_lookback(lam, c, D, n, T, K, 1)
    C = 2 * (F0 + 2 * G * G * sum(steps[j] for j in range(1, K)))
    first = C + sum(steps[j] / j for j in range(max(K, 1), T + 1))
    second = 0.0
    for j in range(1, T + 1):
        window = range(j - ks[j - 1], j + 1)
        second += steps[j] ** 2 + ks[j - 1] * sum(steps[m] ** 2 for m in window) \
            + 6 * steps[j] * sum(steps[m] for m in window)
    total = sum(steps[1:T + 1])
    return first / (2 * total) + G * G * L * second / (2 * total)


def random_inputs(rng):
    n = int(rng.integers(2, 500))
    T = int(rng.integers(1, 400))
    G = float(rng.uniform(0.1, 5))
    L = float(rng.uniform(0.1, 5))
    eta = float(rng.uniform(1e-4, 1.0)) * min(2 / L, math.sqrt(0.5 / T) / L)
    lam = float(rng.uniform(0.5, 0.99))
    K = int(rng.integers(0, 5))
    symmetric = bool(rng.integers(2))
    c = None if symmetric else float(rng.uniform(1, 1e3))
    spec = synthetic_spectrum(n, lam, symmetric=symmetric, c_p=c, k_p=K)
    return BoundInputs(G=G, n=n, T=T, eta=eta, L=L, rho=float(rng.uniform(0.1, 2)), spectrum=spec,
                       D0=float(rng.uniform(0, 3)), f0_sup=float(rng.uniform(0, 2)), D_w=float(rng.uniform(0.1, 3)),
                       D_v=float(rng.uniform(0.1, 3)), D=float(rng.uniform(0.1, 5)), F_S_w0=float(rng.uniform(0, 2)))


class TestExamples:
    def test_sgd_stability_smooth(self):
        b = BoundInputs(G=1, n=100, T=100, eta=0.01, L=1)
        assert sgd_stability_bound(b, True) == pytest.approx(0.02)
        assert sgd_gen_bound(b, True) == pytest.approx(0.02)

    def test_sgd_stability_nonsmooth(self):
        # 2*G*sqrt(T*eta^2) + 4*G*T*eta/n with G=1, T=4, eta=0.5, n=2
        b = BoundInputs(G=1, n=2, T=4, eta=0.5)
        assert sgd_stability_bound(b, False) == pytest.approx(2.0 + 4.0)

    def test_zero_step(self):
        b = BoundInputs(G=2, n=10, T=50, eta=0.0, L=1, rho=0.5)
        for smooth in (True, False):
            assert sgd_stability_bound(b, smooth) == 0.0
            assert sgd_gen_bound(b, smooth) == 0.0
            assert sgda_stability_bound(b, smooth) == 0.0
            assert sgda_gen_bounds(b, smooth) == (0.0, 0.0)

    def test_compositions(self):
        b = BoundInputs(G=1.7, n=30, T=40, eta=0.01, L=2.0, rho=0.4)
        assert sgd_gen_bound(b, False) == pytest.approx(1.7 * sgd_stability_bound(b, False))
        for smooth in (True, False):
            weak, primal = sgda_gen_bounds(b, smooth)
            assert weak == pytest.approx(1.7 * sgda_stability_bound(b, smooth))
            assert primal / weak == pytest.approx(1 + 2.0 / 0.4)
        assert math.isnan(sgda_gen_bounds(b.with_(rho=0.0), False)[1])

    def test_preconditions(self):
        with pytest.raises(InvalidConfiguration):
            sgd_stability_bound(BoundInputs(G=1, n=10, T=10, eta=1.0, L=3.0), True)
        with pytest.raises(InvalidConfiguration):
            sgd_stability_bound(BoundInputs(G=1, n=10, T=10, eta=0.1), True)
        with pytest.raises(InvalidConfiguration):
            sgda_stability_bound(BoundInputs(G=1, n=10, T=100, eta=0.1, L=1.0), True)
        with pytest.raises(InvalidConfiguration):
            sgd_opt_bound(BoundInputs(G=1, n=10, T=10, eta=0.1))

    def test_unsupported_matrix(self):
        spec = synthetic_spectrum(5, 0.7, symmetric=False)
        with pytest.raises(UnsupportedMatrix):
            sgd_opt_bound(BoundInputs(G=1, n=5, T=10, eta=0.1, spectrum=spec))

    def test_sgd_opt_without_burn_in(self):
        spec = synthetic_spectrum(10, 0.6, k_p=0)
        b = BoundInputs(G=1, n=10, T=20, eta=0.05, spectrum=spec, D0=1.0, f0_sup=0.5)
        with_burn = b.with_(spectrum=synthetic_spectrum(10, 0.6, k_p=3))
        assert sgd_opt_bound(with_burn) > sgd_opt_bound(b)

    def test_sgda_opt_limits(self):
        spec = synthetic_spectrum(10, 0.6)
        b = BoundInputs(G=1, n=10, T=20, eta=0.05, spectrum=spec, D_w=1, D_v=1)
        assert sgda_opt_bound(b.with_(eta=1e-12)) > 1e10
        no_burn = sgda_opt_bound(b)
        ks = ref_lookback(0.6, 10 ** 1.5, 2.0, 10, 20, 0, 2)
        expected = 0.05 + 4 / (2 * 20 * 0.05) + (12 * 0.05 * sum(ks) + sum(1 / j ** 2 for j in range(1, 21))) / 20
        assert no_burn == pytest.approx(expected, rel=1e-12)

    def test_nonconvex_examples(self):
        spec = synthetic_spectrum(10, 0.6)
        b = BoundInputs(G=1, n=10, T=20, eta=0.05, L=2, spectrum=spec, D=2, F_S_w0=0.3)
        with pytest.raises(InvalidConfiguration):
            nonconvex_opt_bound(b.with_(eta=0.0))
        # K_P = 0: C = 2 F_S(w0); second group scales with G^2 L
        base = nonconvex_opt_bound(b)
        first = (2 * 0.3 + 0.05 * sum(1 / j for j in range(1, 21))) / (2 * 20 * 0.05)
        assert nonconvex_opt_bound(b.with_(L=4)) - first == pytest.approx(2 * (base - first), rel=1e-12)

    def test_real_chain(self):
        spec = analyze(build_lazy_cycle(6))
        b = BoundInputs(G=1, n=6, T=50, eta=0.02, spectrum=spec, D0=0.5, f0_sup=math.log(2), L=0.25)
        assert sgd_opt_bound(b) == pytest.approx(
            ref_sgd_opt(1, 6, 50, 0.02, spec.lam, spec.c_eff, spec.k_p, 0.5, math.log(2)), rel=1e-12)


class TestIndependentRederivation:
    def test_random_inputs(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            b = random_inputs(rng)
            spec = b.spectrum
            for smooth in (True, False):
                assert sgd_stability_bound(b, smooth) == pytest.approx(
                    ref_sgd_stability(b.G, b.n, b.T, b.eta, smooth), rel=1e-12)
                assert sgda_stability_bound(b, smooth) == pytest.approx(
                    ref_sgda_stability(b.G, b.n, b.T, b.eta, smooth), rel=1e-12)
            assert sgd_gen_bound(b, True) == pytest.approx(2 * b.G ** 2 * b.T * b.eta / b.n, rel=1e-12)
            c = spec.c_eff
            assert sgd_opt_bound(b) == pytest.approx(
                ref_sgd_opt(b.G, b.n, b.T, b.eta, spec.lam, c, spec.k_p, b.D0, b.f0_sup), rel=1e-12)
            assert sgda_opt_bound(b) == pytest.approx(
                ref_sgda_opt(b.G, b.n, b.T, b.eta, spec.lam, c, spec.k_p, b.D_w + b.D_v), rel=1e-12)
            assert nonconvex_opt_bound(b) == pytest.approx(
                ref_nonconvex(b.G, b.L, b.n, b.T, b.eta, spec.lam, c, spec.k_p, b.D, b.F_S_w0), rel=1e-12)


class TestMonotonicity:
    LAMS = [0.5, 0.6, 0.7, 0.8, 0.9]

    def base(self, lam=0.7, **kw):
        args = dict(G=1.0, n=50, T=500, eta=0.01, L=1.0, rho=0.5, spectrum=synthetic_spectrum(50, lam), D0=1.0,
                    f0_sup=0.7, D_w=2.0, D_v=2.0, D=2.0, F_S_w0=0.7)
        args.update(kw)
        return BoundInputs(**args)

    @pytest.mark.parametrize("name", sorted(BOUND_FUNCTIONS))
    def test_nondecreasing_in_G_and_lambda(self, name):
        f = BOUND_FUNCTIONS[name]
        vals = [f(self.base(G=g)) for g in (0.5, 1.0, 2.0)]
        assert vals == sorted(vals)
        vals = [f(self.base(lam=lam)) for lam in self.LAMS]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("name", [k for k in sorted(BOUND_FUNCTIONS) if "opt" not in k])
    def test_nondecreasing_in_T(self, name):
        f = BOUND_FUNCTIONS[name]
        vals = [f(self.base(T=T)) for T in (10, 100, 1000)]
        assert vals == sorted(vals)

    @pytest.mark.parametrize("name", ["sgd_opt", "sgda_opt"])
    def test_opt_strictly_increasing_in_lambda(self, name):
        vals = [BOUND_FUNCTIONS[name](self.base(lam=lam, T=5000)) for lam in self.LAMS]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_smooth_stability_inverse_in_n(self):
        b = self.base()
        assert sgd_stability_bound(b.with_(n=100), True) * 2 == pytest.approx(sgd_stability_bound(b, True),
                                                                              rel=1e-15)

    def test_sgd_opt_grows_with_n_through_lookback(self):
        # c_eff = n^1.5 enters k_j = ceil(log(2 c D n j)/log(1/lam)), so larger n means longer look-back
        vals = [sgd_opt_bound(self.base(n=n, T=20000, spectrum=synthetic_spectrum(n, 0.7)))
                for n in (10, 100, 1000)]
        assert vals[0] < vals[1] < vals[2]
