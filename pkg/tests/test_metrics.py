import numpy as np
import pytest

from prefbo import benchmarks as B
from prefbo import metrics as M
from prefbo import surrogate as S
from prefbo.preference import PreferenceDataset


class _UtilityView:
    """Wrap a callable as a utility surface on the unit cube."""

    def __init__(self, fn, dim):
        self.fn = fn
        self.dim = dim

    def eval(self, u):
        u = np.atleast_2d(u)
        return self.fn(u)


def mean_matching_model(utility, n=60, seed=0, negate=False):
    """GP whose posterior mean interpolates the (possibly negated) truth."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 2))
    y = utility.eval(X)
    if negate:
        y = -y
    ls = np.full(2, 0.4)
    K = S.kernel_matrix(X, X, S.KernelParams(ls)) + 1e-4 * np.eye(n)
    # posterior mean equals y at X and interpolates smoothly elsewhere
    return S.SurrogateModel(
        train_configs=X, lengthscales=ls, mean_const=0.0,
        m_u=y, chol_factor=1e-3 * np.linalg.cholesky(K), gamma=0.0,
    )


BRANIN = B.get_utility("branin")


class TestSimpleRegret:
    def test_optimizer_gives_zero(self):
        opt = BRANIN.base.to_unit(np.array([[-np.pi, 12.275]]))
        assert M.simple_regret(BRANIN, opt) == pytest.approx(0.0, abs=1e-9)

    def test_definition(self):
        produced = np.array([[0.9, 0.9]])
        u = BRANIN.eval(produced)[0]
        assert M.simple_regret(BRANIN, produced) == pytest.approx(1 - u, abs=1e-12)

    def test_monotone_in_additions(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(size=(20, 2))
        regrets = [M.simple_regret(BRANIN, pts[: k + 1]) for k in range(20)]
        assert all(a >= b - 1e-15 for a, b in zip(regrets, regrets[1:]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            M.simple_regret(BRANIN, np.zeros((0, 2)))


class TestRecommend:
    def test_flat_prior_returns_first_grid_point(self):
        model = S.SurrogateModel.prior(dim=2, mean_const=0.3)
        rec = M.recommend(model)
        first = B.sobol_points(2**14, 2)[0]
        assert np.allclose(rec, first)

    def test_recommendation_in_unit_cube(self):
        model = mean_matching_model(BRANIN)
        rec = M.recommend(model)
        assert np.all(rec >= 0) and np.all(rec <= 1)

    def test_finds_sharp_preferred_region(self):
        # synthetic 1-D-style surface peaked at (0.3, 0.7); dense grid verifies
        peak = _UtilityView(
            lambda u: np.exp(-30 * ((u[:, 0] - 0.3) ** 2 + (u[:, 1] - 0.7) ** 2)), 2
        )
        model = mean_matching_model(peak, n=80, seed=1)
        rec = M.recommend(model)
        grid = B.sobol_points(2**14, 2)
        dense_best = grid[int(np.argmax(model.posterior_mean(grid)))]
        assert np.linalg.norm(rec - dense_best) < 0.1
        assert model.posterior_mean(rec[None])[0] >= model.posterior_mean(dense_best[None])[0] - 1e-12

    def test_deterministic(self):
        model = mean_matching_model(BRANIN)
        assert np.array_equal(M.recommend(model), M.recommend(model))


class TestInferenceRegret:
    def test_perfect_recommendation(self):
        model = mean_matching_model(BRANIN, n=200, seed=2)
        r = M.inference_regret(BRANIN, model)
        assert 0 <= r < 0.2

    def test_flat_prior_composition(self):
        model = S.SurrogateModel.prior(dim=2)
        first = B.sobol_points(2**14, 2)[0]
        expected = 1 - BRANIN.eval(first[None])[0]
        assert M.inference_regret(BRANIN, model) == pytest.approx(expected, abs=1e-12)

    def test_in_unit_interval(self):
        model = mean_matching_model(BRANIN, negate=True)
        assert 0 - 1e-9 <= M.inference_regret(BRANIN, model) <= 1 + 1e-9


class TestOrdinalAccuracy:
    def test_perfect_model(self):
        model = mean_matching_model(BRANIN, n=400, seed=3)
        acc = M.ordinal_accuracy(model, BRANIN, 2000, np.random.default_rng(0))
        assert acc > 0.95

    def test_negated_model(self):
        model = mean_matching_model(BRANIN, n=400, seed=3, negate=True)
        acc = M.ordinal_accuracy(model, BRANIN, 2000, np.random.default_rng(0))
        assert acc < 0.05

    def test_invariant_under_monotone_warp(self):
        model = mean_matching_model(BRANIN, n=100, seed=4)
        rng_seed = 42

        def acc_for(m):
            return M.ordinal_accuracy(m, BRANIN, 1000, np.random.default_rng(rng_seed))

        base = acc_for(model)
        affine = S.SurrogateModel(
            model.train_configs, model.lengthscales, 3 * model.mean_const + 1,
            3 * model.m_u + 1, 3 * model.chol_factor, gamma=0.0,
        )
        assert acc_for(affine) == base
        cubed = S.SurrogateModel(
            model.train_configs, model.lengthscales, 0.0,
            model.m_u ** 3 + model.m_u, model.chol_factor, gamma=0.0,
        )
        # cubic-plus-identity warp of the variational means preserves order at configs
        mu_base = model.posterior_mean(model.train_configs)
        mu_warp = cubed.posterior_mean(cubed.train_configs)
        assert np.array_equal(np.argsort(mu_base), np.argsort(mu_warp))


class TestChoiceAccuracy:
    def test_perfect_model_matching_gamma(self):
        model = mean_matching_model(BRANIN, n=400, seed=5)
        model = S.SurrogateModel(
            model.train_configs, model.lengthscales, model.mean_const,
            model.m_u, model.chol_factor, gamma=0.04,
        )
        acc = M.choice_accuracy(model, BRANIN, 0.04, 0.04, 2000, np.random.default_rng(1))
        assert acc > 0.9

    def test_infinite_band_frozen_model_scores_zero(self):
        model = mean_matching_model(BRANIN, n=50, seed=6)  # gamma == 0
        acc = M.choice_accuracy(model, BRANIN, 10.0, 0.04, 500, np.random.default_rng(2))
        assert acc == 0.0

    def test_zero_gammas_match_ordinal(self):
        model = mean_matching_model(BRANIN, n=100, seed=7)
        seed = 11
        choice = M.choice_accuracy(model, BRANIN, 0.0, 0.04, 1000, np.random.default_rng(seed))
        ordinal = M.ordinal_accuracy(model, BRANIN, 1000, np.random.default_rng(seed))
        assert choice == ordinal


def test_metric_report_fields():
    model = mean_matching_model(BRANIN, n=50, seed=8)
    produced = np.random.default_rng(3).uniform(size=(10, 2))
    rep = M.metric_report(model, BRANIN, produced, 0.04, 0.04, n_pairs=200, pair_rng_seed=0)
    d = rep.to_dict()
    assert set(d) == {
        "simple_regret", "inference_regret", "ordinal_accuracy", "choice_accuracy", "recommendation",
    }
    assert d["simple_regret"] >= -1e-9 and d["inference_regret"] >= -1e-9
    assert 0 <= d["ordinal_accuracy"] <= 1 and 0 <= d["choice_accuracy"] <= 1
