import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcsgm.chain import build_lazy_cycle, build_random_symmetric, build_uniform, sample_path
from mcsgm.errors import InvalidArgument, InvalidConfiguration, Unsupported
from mcsgm.losses import (DataGenerator, Dataset, Example, MinimaxFamily, SaddleDataset, SaddleGenerator,
                          family_for, generate_dataset, make_loss_family, subgradient)
from mcsgm.optim import (DomainSpec, StepSchedule, average_iterates, check_schedule, mc_sgd, mc_sgda,
                         nonexpansive_witness, project)


def bilinear_scalar(a=1.0, b=0.0, c=0.0, rho=0.0):
    kind = "sc-concave-saddle" if rho > 0 else "bilinear-saddle"
    fam = MinimaxFamily(kind, 1, 1, G=1.0, L=1.0, rho=rho)
    return fam, SaddleDataset(np.full((1, 1, 1), a), np.full((1, 1), b), np.full((1, 1), c))


class TestProject:
    def test_on_boundary(self):
        np.testing.assert_array_equal(project(DomainSpec.ball(5), [3.0, 4.0]), [3.0, 4.0])

    def test_radial_scaling(self):
        np.testing.assert_allclose(project(DomainSpec.ball(1), [3.0, 4.0]), [0.6, 0.8])

    def test_zero_and_unconstrained(self):
        np.testing.assert_array_equal(project(DomainSpec.ball(1), np.zeros(3)), np.zeros(3))
        np.testing.assert_array_equal(project(DomainSpec.unconstrained(), [30.0, 40.0]), [30.0, 40.0])

    def test_bad_radius(self):
        with pytest.raises(InvalidArgument):
            DomainSpec.ball(0.0)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=5), st.floats(0.01, 100))
    def test_idempotent_and_inside(self, w, R):
        dom = DomainSpec.ball(R)
        p = project(dom, w)
        assert dom.contains(p)
        np.testing.assert_allclose(project(dom, p), p)


class TestSchedules:
    def test_values(self):
        T = 1024
        assert StepSchedule("inv_sqrt_tlogt").resolve(T) == pytest.approx(1 / math.sqrt(T * math.log(T)))
        assert StepSchedule("t_pow_neg34").resolve(T) == pytest.approx(T ** -0.75)
        assert StepSchedule("inv_sqrtt_logt", scale=2.0).resolve(T) == pytest.approx(2 / (32 * math.log(T)))
        assert StepSchedule("constant", 0.3).resolve(T) == 0.3

    def test_errors(self):
        with pytest.raises(InvalidArgument):
            StepSchedule("cosine")
        with pytest.raises(InvalidArgument):
            StepSchedule("constant", 0.0)
        with pytest.raises(InvalidArgument):
            StepSchedule("inv_sqrt_tlogt").resolve(1)

    def test_smooth_step_limit(self):
        fam = make_loss_family("logistic", 2, B_x=2.0)
        check_schedule(fam, 2.0, 10)
        with pytest.raises(InvalidConfiguration):
            check_schedule(fam, 2.01, 10)
        check_schedule(make_loss_family("hinge", 2), 50.0, 10)

    def test_sgda_budget(self):
        fam = MinimaxFamily("bilinear-saddle", 1, 1, G=1, L=1)
        check_schedule(fam, math.sqrt(0.5 / 100), 100)
        with pytest.raises(InvalidConfiguration):
            check_schedule(fam, 0.1, 100)

    def test_mc_sgd_enforces_limit(self):
        fam = make_loss_family("least-squares", 1, R=1.0)
        with pytest.raises(InvalidConfiguration):
            mc_sgd(fam, Dataset([[1.0]], [1.0]), [0, 0], 3.0)


class TestMcSgd:
    def test_absolute_hand_simulation(self):
        fam = make_loss_family("absolute", 1)
        tr = mc_sgd(fam, Dataset([[1.0]], [0.0]), [0, 0], StepSchedule("constant", 0.5), w0=[2.0])
        np.testing.assert_allclose(tr.iterates[:, 0], [2.0, 1.5, 1.0])
        assert tr.averaged[0] == pytest.approx(1.25)

    def test_least_squares_hand_simulation(self):
        fam = make_loss_family("least-squares", 1, R=None)
        tr = mc_sgd(fam, Dataset([[1.0]], [1.0]), [0, 0], 1.0, w0=[0.0])
        np.testing.assert_allclose(tr.iterates[:, 0], [0.0, 1.0, 1.0])
        assert tr.averaged[0] == pytest.approx(1.0)

    def test_zero_step(self):
        fam = make_loss_family("hinge", 2)
        S = generate_dataset(DataGenerator(d=2), 5, 0)
        tr = mc_sgd(fam, S, [0, 1, 2, 3, 4], 0.0, w0=[0.1, -0.1], check=False)
        np.testing.assert_array_equal(tr.iterates, np.tile([0.1, -0.1], (6, 1)))

    def test_errors(self):
        fam = make_loss_family("hinge", 2)
        S = generate_dataset(DataGenerator(d=2), 5, 0)
        with pytest.raises(InvalidArgument):
            mc_sgd(fam, S, [0, 5], 0.1)
        with pytest.raises(InvalidArgument):
            mc_sgd(fam, S, [-1], 0.1)
        with pytest.raises(InvalidArgument):
            mc_sgd(fam, S, [0], 0.1, w0=np.zeros(3))

    def test_deterministic(self):
        gen = DataGenerator(d=3)
        fam = family_for("logistic", gen, None)
        S = generate_dataset(gen, 20, 0)
        path = sample_path(build_lazy_cycle(20), 300, seed=4)
        a, b = mc_sgd(fam, S, path, 0.2), mc_sgd(fam, S, path, 0.2)
        np.testing.assert_array_equal(a.iterates, b.iterates)
        np.testing.assert_array_equal(a.averaged, b.averaged)

    def test_thinning(self):
        fam = make_loss_family("hinge", 1)
        S = Dataset([[1.0], [-1.0]], [1.0, 1.0])
        tr = mc_sgd(fam, S, np.zeros(4500, dtype=int), 0.01)
        assert tr.steps[0] == 0 and tr.steps[-1] == 4500
        assert np.all(np.diff(tr.steps[:-1]) == 4)
        assert len(tr.iterates) == len(tr.steps)

    def test_uniform_chain_matches_iid_reference(self):
        gen = DataGenerator(d=4, p_noise=0.1)
        fam = family_for("hinge", gen, 1.0)
        S = generate_dataset(gen, 30, 1)
        path = sample_path(build_uniform(30), 500, seed=7)
        dom = DomainSpec.ball(1.0)
        tr = mc_sgd(fam, S, path, 0.05, domain=dom)
        # i.i.d. reference: plain projected SGD fed the same indices
        w = np.zeros(4)
        total = np.zeros(4)
        for i in path.indices:
            w = project(dom, w - 0.05 * subgradient(fam, w, S.example(i)))
            total += w
        np.testing.assert_array_equal(tr.final, w)
        np.testing.assert_allclose(tr.averaged, total / 500, rtol=0, atol=1e-15)

    @given(st.integers(0, 10 ** 6), st.floats(0.01, 1.0))
    @settings(max_examples=50, deadline=None)
    def test_least_squares_recurrence(self, seed, eta):
        rng = np.random.default_rng(seed)
        n = 6
        y = rng.uniform(-2, 2, n)
        S = Dataset(np.ones((n, 1)), y)
        fam = make_loss_family("least-squares", 1, R=None)
        path = sample_path(build_random_symmetric(n, 0.5, seed), 200, seed=seed)
        tr = mc_sgd(fam, S, path, eta, w0=[0.5])
        w, total = 0.5, 0.0
        for i in path.indices:
            w = (1 - eta) * w + eta * y[i]
            total += w
        assert tr.final[0] == pytest.approx(w, abs=1e-12)
        assert tr.averaged[0] == pytest.approx(total / 200, abs=1e-12)

    @given(st.integers(0, 10 ** 6), st.sampled_from(["logistic", "hinge", "absolute", "least-squares"]),
           st.floats(0.1, 3.0))
    @settings(max_examples=40, deadline=None)
    def test_domain_invariance(self, seed, kind, R):
        gen = DataGenerator("regression" if kind in ("absolute", "least-squares") else "classification", d=3,
                            B_x=2.0)
        fam = family_for(kind, gen, R)
        S = generate_dataset(gen, 10, seed)
        path = sample_path(build_uniform(10), 300, seed=seed)
        eta = 1.5 / fam.L if fam.smooth else 1.0
        tr = mc_sgd(fam, S, path, eta, w0=np.full(3, R / 2), domain=DomainSpec.ball(R))
        assert np.all(np.linalg.norm(tr.iterates, axis=1) <= R + 1e-12)
        assert np.linalg.norm(tr.averaged) <= R + 1e-12


class TestMcSgda:
    def test_simultaneous_hand_simulation(self):
        fam, S = bilinear_scalar()
        tr = mc_sgda(fam, S, [0, 0], 0.1, w0=[1.0], v0=[0.0], check=False)
        np.testing.assert_allclose(tr.iterates_w[:, 0], [1.0, 1.0, 0.99])
        np.testing.assert_allclose(tr.iterates_v[:, 0], [0.0, 0.1, 0.2])
        np.testing.assert_allclose(tr.averaged_w, [0.995])
        np.testing.assert_allclose(tr.averaged_v, [0.15])

    def test_zero_data_bilinear_constant(self):
        fam, S = bilinear_scalar(a=0.0)
        tr = mc_sgda(fam, S, [0] * 10, 0.1, w0=[0.3], v0=[-0.4])
        np.testing.assert_array_equal(tr.iterates_w[:, 0], 0.3)
        np.testing.assert_array_equal(tr.iterates_v[:, 0], -0.4)

    def test_zero_data_sc_concave_decays(self):
        fam, S = bilinear_scalar(a=0.0, rho=1.0)
        tr = mc_sgda(fam, S, [0] * 10, 0.1, w0=[0.3], v0=[-0.4], check=False)
        np.testing.assert_allclose(tr.iterates_v[:, 0], -0.4 * 0.9 ** np.arange(11))
        np.testing.assert_array_equal(tr.iterates_w[:, 0], 0.3)

    def test_deterministic_and_in_domain(self):
        gen = SaddleGenerator(d_w=3, d_v=2, R_w=0.5, R_v=0.5, center_seed=2)
        S = generate_dataset(gen, 25, 0)
        path = sample_path(build_lazy_cycle(25), 400, seed=1)
        W, V = DomainSpec.ball(0.5), DomainSpec.ball(0.5)
        a = mc_sgda(gen.family(), S, path, 0.02, W=W, V=V)
        b = mc_sgda(gen.family(), S, path, 0.02, W=W, V=V)
        np.testing.assert_array_equal(a.iterates_w, b.iterates_w)
        np.testing.assert_array_equal(a.iterates_v, b.iterates_v)
        assert np.all(np.linalg.norm(a.iterates_w, axis=1) <= 0.5 + 1e-12)
        assert np.all(np.linalg.norm(a.iterates_v, axis=1) <= 0.5 + 1e-12)

    def test_dimension_mismatch(self):
        fam, S = bilinear_scalar()
        with pytest.raises(InvalidArgument):
            mc_sgda(fam, S, [0], 0.1, w0=[0.0, 0.0])
        with pytest.raises(InvalidArgument):
            mc_sgda(fam, S, [1], 0.1)


class TestAverage:
    def test_plain_mean(self):
        assert average_iterates([[1.5], [1.0]], 0.5)[0] == pytest.approx(1.25)

    def test_single(self):
        np.testing.assert_array_equal(average_iterates([[2.0, 3.0]], 1.0), [2.0, 3.0])

    def test_weighted(self):
        assert average_iterates([[0.0], [4.0]], [1.0, 3.0])[0] == pytest.approx(3.0)

    def test_errors(self):
        with pytest.raises(InvalidArgument):
            average_iterates(np.zeros((0, 2)), 1.0)
        with pytest.raises(InvalidArgument):
            average_iterates([[1.0]], 0.0)


class TestNonexpansive:
    def test_examples(self):
        fam = make_loss_family("least-squares", 1, R=None)
        z = Example(np.array([1.0]), 0.0)
        assert nonexpansive_witness(fam, [0.7], [0.7], z, 0.5) == (0.0, 0.0)
        lhs, rhs = nonexpansive_witness(fam, [0.7], [-0.2], z, 0.0)
        assert lhs == pytest.approx(rhs)
        lhs, rhs = nonexpansive_witness(fam, [0.7], [-0.2], z, 1.0)
        assert lhs == 0.0 and rhs == pytest.approx(0.9)

    def test_nonsmooth_rejected(self):
        with pytest.raises(Unsupported):
            nonexpansive_witness(make_loss_family("hinge", 1), [0.0], [1.0], Example(np.ones(1), 1.0), 0.1)

    @pytest.mark.parametrize("kind", ["logistic", "least-squares"])
    def test_random_property(self, kind):
        gen = DataGenerator("regression" if kind == "least-squares" else "classification", d=3, B_x=1.7)
        fam = family_for(kind, gen, 2.0)
        rng = np.random.default_rng(0)
        X, y = gen.sample(1000, rng)
        for x, lab in zip(X, y):
            w, w2 = rng.uniform(-2, 2, (2, 3))
            eta = (2.0 / fam.L) * (1.0 - rng.random())
            lhs, rhs = nonexpansive_witness(fam, w, w2, Example(x, lab), eta)
            assert lhs <= rhs + 1e-12
