import math

import numpy as np
import pytest

from trendcast.errors import ShapeMismatch, TooFewSamples
from trendcast.lstm import (
    INPUT_SCALE,
    OUTPUT_SCALE,
    FeatureSet,
    LstmLayer,
    LstmNetwork,
    SupervisedSet,
    evaluate,
    forward,
    from_json,
    gradient_check,
    init_network,
    make_windows,
    split_70_30,
    to_json,
    train,
    training_loss,
    _param_arrays,
    _rebuild,
)
from trendcast.rng import CounterRng, derive_seed
from trendcast.series import RegionDataset, normalize_0_100

from conftest import days, make_series


def build_dataset(n=60, seed=0):
    rng = CounterRng(seed)
    cases = normalize_0_100(make_series(np.cumsum(rng.normal(n)), name="cases"))
    restaurant = normalize_0_100(
        make_series(np.cumsum(rng.normal(n)), name="restaurant")
    )
    bar = normalize_0_100(make_series(np.cumsum(rng.normal(n)), name="bar"))
    return RegionDataset("CA", cases, restaurant, bar)


class TestWindows:
    def test_sample_count(self):
        ds = build_dataset(n=10)
        sup = make_windows(ds, 7, FeatureSet.CASES_ONLY)
        assert len(sup) == 3

    def test_feature_shapes(self):
        ds = build_dataset()
        assert make_windows(ds, 7, FeatureSet.CASES_ONLY).inputs.shape[2] == 1
        assert make_windows(ds, 7, FeatureSet.CASES_PLUS_BAR).inputs.shape[2] == 2

    def test_first_target_is_day_after_window(self):
        ds = build_dataset()
        sup = make_windows(ds, 7, FeatureSet.CASES_ONLY)
        assert sup.targets[0] == ds.cases.values[7]
        assert sup.sample_dates[0] == ds.date_index[7]
        assert np.array_equal(sup.inputs[0][:, 0], ds.cases.values[:7])

    def test_windows_are_consecutive_days(self):
        ds = build_dataset()
        sup = make_windows(ds, 5, FeatureSet.CASES_PLUS_RESTAURANT)
        k = 13
        assert np.array_equal(sup.inputs[k][:, 0], ds.cases.values[k : k + 5])
        assert np.array_equal(sup.inputs[k][:, 1], ds.restaurant.values[k : k + 5])


class TestSplit:
    def test_ten_samples(self):
        ds = build_dataset(n=17)
        sup = make_windows(ds, 7, FeatureSet.CASES_ONLY)
        train_set, test_set = split_70_30(sup)
        assert len(train_set) == 7 and len(test_set) == 3

    def test_hundred_samples(self):
        ds = build_dataset(n=107)
        train_set, test_set = split_70_30(make_windows(ds, 7, FeatureSet.CASES_ONLY))
        assert len(train_set) == 70 and len(test_set) == 30

    def test_chronological_hygiene(self):
        ds = build_dataset(n=80)
        train_set, test_set = split_70_30(make_windows(ds, 7, FeatureSet.CASES_ONLY))
        assert max(train_set.sample_dates) < min(test_set.sample_dates)

    def test_too_few(self):
        ds = build_dataset(n=15)
        with pytest.raises(TooFewSamples):
            split_70_30(make_windows(ds, 7, FeatureSet.CASES_ONLY))


class TestInit:
    def test_seed_determinism(self):
        a = init_network([8, 8, 8], 7, 2, 0.2, seed=3)
        b = init_network([8, 8, 8], 7, 2, 0.2, seed=3)
        for x, y in zip(_param_arrays(a), _param_arrays(b)):
            assert np.array_equal(x, y)

    def test_forget_gate_bias(self):
        net = init_network([5, 4, 3], 7, 1, 0.0, seed=1)
        for layer in net.layers:
            h = layer.hidden
            assert np.all(layer.bias[h : 2 * h] == 1.0)
            assert np.all(layer.bias[:h] == 0.0)
            assert np.all(layer.bias[2 * h :] == 0.0)

    def test_parameter_count_formula(self):
        hidden = (32, 32, 32)
        net = init_network(hidden, 7, 2, 0.2, seed=0)
        expected = 0
        in_dim = 2
        for h in hidden:
            expected += 4 * (h * (in_dim + h) + h)
            in_dim = h
        expected += hidden[-1] + 1
        assert net.n_parameters() == expected == 21153

    def test_fan_in_scaling(self):
        net = init_network([16], 7, 4, 0.0, seed=5)
        assert np.abs(net.layers[0].w_in).max() <= 1 / math.sqrt(4)
        assert np.abs(net.layers[0].w_rec).max() <= 1 / math.sqrt(16)


class TestForward:
    def test_all_zero_parameters(self):
        net = init_network([4, 4], 3, 1, 0.0, seed=0)
        zeroed = _rebuild(net, [np.zeros_like(a) for a in _param_arrays(net)])
        pred, _ = forward(zeroed, np.full((3, 1), 50.0))
        assert pred == 0.0

    def test_eval_mode_deterministic(self):
        net = init_network([6, 6, 6], 5, 2, 0.4, seed=2)
        sample = np.linspace(0, 100, 10).reshape(5, 2)
        p1, _ = forward(net, sample, training=False)
        p2, _ = forward(net, sample, training=False)
        assert p1 == p2

    def test_hand_computed_single_step(self):
        # one layer, hidden 2, W=1: every gate evaluated by hand
        w_in = np.array([[0.2], [-0.4], [0.6], [0.1], [0.3], [-0.2], [0.5], [0.7]])
        w_rec = np.zeros((8, 2))
        bias = np.array([0.05, -0.1, 1.0, 0.2, 0.0, 0.3, -0.5, 0.25])
        dense_w = np.array([1.5, -2.0])
        net = LstmNetwork(
            layers=(LstmLayer(w_in=w_in, w_rec=w_rec, bias=bias),),
            dropout_rates=(0.0,),
            dense_w=dense_w,
            dense_b=0.125,
            window=1,
            features=1,
            hidden_sizes=(2,),
            seed=0,
        )
        x_raw = 80.0
        x = x_raw * INPUT_SCALE
        sig = lambda v: 1.0 / (1.0 + math.exp(-v))
        gi = [sig(0.2 * x + 0.05), sig(-0.4 * x - 0.1)]
        gf = [sig(0.6 * x + 1.0), sig(0.1 * x + 0.2)]
        gg = [math.tanh(0.3 * x + 0.0), math.tanh(-0.2 * x + 0.3)]
        go = [sig(0.5 * x - 0.5), sig(0.7 * x + 0.25)]
        c = [gi[j] * gg[j] for j in range(2)]  # c0 = 0
        h = [go[j] * math.tanh(c[j]) for j in range(2)]
        expected = (1.5 * h[0] - 2.0 * h[1] + 0.125) * OUTPUT_SCALE
        pred, _ = forward(net, np.array([[x_raw]]))
        assert pred == pytest.approx(expected, abs=1e-12)

    def test_shape_mismatch(self):
        net = init_network([4], 5, 2, 0.0, seed=0)
        with pytest.raises(ShapeMismatch):
            forward(net, np.zeros((5, 3)))

    def test_dropout_expectation_matches_eval(self):
        net = init_network([6], 4, 1, 0.3, seed=9)
        sample = np.linspace(10, 90, 4).reshape(4, 1)
        reference, _ = forward(net, sample, training=False)
        total = 0.0
        reps = 10_000
        for k in range(reps):
            rng = CounterRng(derive_seed(9, "mask", k))
            pred, _ = forward(net, sample, training=True, rng=rng)
            total += pred
        assert abs(total / reps - reference) / abs(reference) < 0.02


class TestTrain:
    def test_zero_learning_rate_no_op(self):
        ds = build_dataset()
        train_set, _ = split_70_30(make_windows(ds, 7, FeatureSet.CASES_ONLY))
        net = init_network([8, 8, 8], 7, 1, 0.2, seed=4)
        out = train(net, train_set, epochs=3, learning_rate=0.0)
        for x, y in zip(_param_arrays(net), _param_arrays(out)):
            assert np.array_equal(x, y)

    def test_seed_determinism(self):
        ds = build_dataset()
        train_set, _ = split_70_30(make_windows(ds, 7, FeatureSet.CASES_ONLY))
        net = init_network([8, 8, 8], 7, 1, 0.2, seed=4)
        a = train(net, train_set, epochs=10, learning_rate=1e-3)
        b = train(net, train_set, epochs=10, learning_rate=1e-3)
        for x, y in zip(_param_arrays(a), _param_arrays(b)):
            assert np.array_equal(x, y)

    def test_loss_decreases(self):
        ds = build_dataset(n=80, seed=2)
        train_set, _ = split_70_30(make_windows(ds, 7, FeatureSet.CASES_ONLY))
        net = init_network([16, 16, 16], 7, 1, 0.2, seed=6)
        fitted = train(net, train_set, epochs=60, learning_rate=1e-2)
        assert training_loss(fitted, train_set) <= training_loss(net, train_set)

    def test_parameters_stay_finite(self):
        ds = build_dataset(n=70, seed=5)
        train_set, _ = split_70_30(make_windows(ds, 7, FeatureSet.CASES_PLUS_BAR))
        net = init_network([8, 8, 8], 7, 2, 0.2, seed=7)
        fitted = train(net, train_set, epochs=40, learning_rate=1e-2)
        for arr in _param_arrays(fitted):
            assert np.all(np.isfinite(arr))


def zero_network(window: int, features: int) -> "LstmNetwork":
    net = init_network([4, 4], window, features, 0.0, seed=0)
    return _rebuild(net, [np.zeros_like(a) for a in _param_arrays(net)])


def supervised_with_targets(targets, window=3):
    targets = np.asarray(targets, dtype=np.float64)
    count = len(targets)
    return SupervisedSet(
        inputs=np.zeros((count, window, 1)),
        targets=targets,
        sample_dates=days(count),
        start_index=0,
    )


class TestEvaluate:
    def test_rmse_formula_via_zero_net(self):
        # the zero network predicts exactly 0, so actuals [3, 4] pin the formula
        ev = evaluate(zero_network(3, 1), supervised_with_targets([3.0, 4.0]))
        assert np.all(ev.predictions == 0.0)
        assert ev.rmse == pytest.approx(math.sqrt(12.5), abs=1e-12)

    def test_predictions_equal_actuals_gives_zero(self):
        ev = evaluate(zero_network(3, 1), supervised_with_targets([0.0, 0.0, 0.0]))
        assert ev.rmse == 0.0

    def test_rmse_recomputable(self):
        ds = build_dataset(n=70, seed=8)
        train_set, test_set = split_70_30(make_windows(ds, 7, FeatureSet.CASES_ONLY))
        net = init_network([8, 8, 8], 7, 1, 0.0, seed=9)
        fitted = train(net, train_set, epochs=20, learning_rate=1e-2)
        ev = evaluate(fitted, test_set)
        recomputed = math.sqrt(
            float(np.mean((ev.predictions - ev.actuals) ** 2))
        )
        assert abs(ev.rmse - recomputed) < 1e-12
        assert ev.n_test == len(ev.predictions) == len(ev.actuals)

    def test_empty_test_set_rejected(self):
        with pytest.raises(TooFewSamples):
            evaluate(zero_network(3, 1), supervised_with_targets([]))


class TestGradientCheck:
    def test_fixed_configuration(self):
        net = init_network([4, 4, 4], 5, 2, 0.0, seed=7)
        sample = np.linspace(0, 100, 10).reshape(5, 2)
        assert gradient_check(net, sample, target=40.0) < 1e-4

    def test_step_doubling_same_verdict(self):
        net = init_network([4, 4, 4], 5, 2, 0.0, seed=7)
        sample = np.linspace(0, 100, 10).reshape(5, 2)
        assert gradient_check(net, sample, target=40.0, step=2e-5) < 1e-4

    def test_stationary_point(self):
        net = init_network([4, 4], 4, 1, 0.0, seed=11)
        sample = np.linspace(20, 60, 4).reshape(4, 1)
        pred, cache = forward(net, sample)
        from trendcast.lstm import _backward_batch

        grads = _backward_batch(net, cache, np.array([2.0 * (pred - pred)]))
        assert max(float(np.abs(g).max()) for g in grads) == 0.0

    def test_rejects_dropout(self):
        net = init_network([4], 4, 1, 0.5, seed=0)
        with pytest.raises(ValueError):
            gradient_check(net, np.zeros((4, 1)), 0.0)


class TestSerialization:
    def test_round_trip_exact(self):
        net = init_network([5, 4, 3], 6, 2, 0.1, seed=21)
        clone = from_json(to_json(net))
        for x, y in zip(_param_arrays(net), _param_arrays(clone)):
            assert np.array_equal(x, y)
        assert clone.window == net.window
        assert clone.hidden_sizes == net.hidden_sizes
        assert clone.dropout_rates == net.dropout_rates

    def test_round_trip_preserves_predictions(self):
        net = init_network([6, 6, 6], 5, 1, 0.0, seed=13)
        sample = np.linspace(5, 95, 5).reshape(5, 1)
        clone = from_json(to_json(net))
        assert forward(net, sample)[0] == forward(clone, sample)[0]

    def test_format_guard(self):
        with pytest.raises(ValueError):
            from_json('{"format": "other"}')
