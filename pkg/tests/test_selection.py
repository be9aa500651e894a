import numpy as np
import pytest

from ecgsleep.features.selection import RfeSelector, rfe_select


def informative_dataset(rng, n=500, informative=5, noise=25):
    X = rng.normal(0, 1, (n, informative + noise))
    logits = np.stack(
        [
            X[:, 0] + X[:, 1],
            X[:, 1] - X[:, 2],
            X[:, 2] + X[:, 3] - X[:, 0],
            X[:, 4] - X[:, 3],
        ],
        axis=1,
    )
    y = np.argmax(logits + 0.1 * rng.normal(size=logits.shape), axis=1)
    names = [f"info{i}" for i in range(informative)] + [f"noise{i}" for i in range(noise)]
    return X, y, tuple(names)


class TestRfe:
    def test_recovers_informative_features(self, rng):
        X, y, names = informative_dataset(rng)
        sel = rfe_select(X, y, names, target_k=5, seed=0)
        kept_informative = sum(1 for n in sel.kept_names if n.startswith("info"))
        assert kept_informative >= 4

    def test_single_round_single_drop(self, rng):
        X, y, names = informative_dataset(rng, n=60, informative=3, noise=7)
        sel = rfe_select(X, y, names, target_k=9, seed=0)
        assert len(sel.elimination_trace) == 1
        assert len(sel.elimination_trace[0][1]) == 1
        assert len(sel.kept_names) == 9

    def test_deterministic_given_seed(self, rng):
        X, y, names = informative_dataset(rng, n=120, informative=4, noise=16)
        a = rfe_select(X, y, names, target_k=6, seed=42)
        b = rfe_select(X, y, names, target_k=6, seed=42)
        assert a.kept_names == b.kept_names
        assert a.elimination_trace == b.elimination_trace

    def test_stops_at_exact_target(self, rng):
        X, y, names = informative_dataset(rng, n=100, informative=5, noise=45)
        sel = rfe_select(X, y, names, target_k=30, seed=1)
        assert len(sel.kept_names) == 30
        dropped = {n for _, ds, _ in sel.elimination_trace for n in ds}
        assert dropped | set(sel.kept_names) == set(names)
        assert not dropped & set(sel.kept_names)

    def test_target_must_be_below_count(self, rng):
        X, y, names = informative_dataset(rng, n=60, informative=3, noise=7)
        with pytest.raises(ValueError, match="below the feature count"):
            rfe_select(X, y, names, target_k=10, seed=0)

    def test_needs_fifty_vectors(self, rng):
        X, y, names = informative_dataset(rng, n=40, informative=3, noise=7)
        with pytest.raises(ValueError, match="at least 50"):
            rfe_select(X, y, names, target_k=5, seed=0)

    def test_rejects_nan(self, rng):
        X, y, names = informative_dataset(rng, n=60, informative=3, noise=7)
        X[3, 4] = np.nan
        with pytest.raises(ValueError, match="NaN"):
            rfe_select(X, y, names, target_k=5, seed=0)


class TestSelectorEstimator:
    def test_fit_transform_shapes(self, rng):
        X, y, names = informative_dataset(rng, n=80, informative=4, noise=12)
        selector = RfeSelector(target_k=6, seed=0, feature_names=names)
        Xt = selector.fit(X, y).transform(X)
        assert Xt.shape == (80, 6)
        assert selector.get_support().sum() == 6

    def test_sklearn_params_round_trip(self):
        selector = RfeSelector(target_k=7, seed=3)
        assert selector.get_params()["target_k"] == 7
        selector.set_params(target_k=5)
        assert selector.target_k == 5
