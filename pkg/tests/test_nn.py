"""
Tests for network specifications, builders, absorption and serialization.
"""

import numpy as np
import pytest

from shallowmimic.exceptions import (
    ContractError,
    DataError,
    SerializationError,
    ShapeError,
    SpecError,
)
from shallowmimic.nn import (
    Activation,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    LayerParams,
    MaxPool2D,
    Mode,
    Model,
    NetworkSpec,
    absorb_bottleneck,
    find_bottleneck,
    format_hidden_units,
    forward,
    hidden_unit_counts,
    init_params,
    load_model,
    mlp_spec,
    model_digest,
    model_from_bytes,
    model_to_bytes,
    param_count,
    predict_logits,
    save_model,
    shallow_spec,
)
from shallowmimic.numerics.rng import RngStream


class TestNetworkSpec:
    """Tests for NetworkSpec validation."""

    def test_layer_shapes(self):
        """Test that shapes chain through conv, pool and flatten."""
        spec = NetworkSpec(
            (1, 6, 6),
            (Conv2D(1, 2, 3, 3), MaxPool2D(2, 2), Flatten(), Dense(8, 3, Activation.IDENTITY)),
            3,
        )
        assert spec.layer_shapes() == [(2, 4, 4), (2, 2, 2), (8,), (3,)]
        assert spec.input_dim == 36

    def test_mismatched_widths(self):
        """Test that a non-chaining stack names the offending layer."""
        with pytest.raises(SpecError, match="Layer 1"):
            NetworkSpec((4,), (Dense(4, 5), Dense(6, 2, Activation.IDENTITY)), 2)

    def test_output_dim_mismatch(self):
        """Test that the final width must equal output_dim."""
        with pytest.raises(SpecError):
            NetworkSpec((4,), (Dense(4, 3, Activation.IDENTITY),), 2)

    def test_must_end_in_dense(self):
        """Test that a network without a final Dense layer is rejected."""
        with pytest.raises(SpecError):
            NetworkSpec((1, 4, 4), (Conv2D(1, 1, 4, 4), Flatten()), 1)

    @pytest.mark.parametrize("rate", [-0.1, 1.0])
    def test_dropout_rate_range(self, rate):
        """Test that dropout rates outside [0, 1) are rejected."""
        with pytest.raises(SpecError):
            NetworkSpec((2,), (Dense(2, 2), Dropout(rate), Dense(2, 2, Activation.IDENTITY)), 2)

    def test_kernel_larger_than_input(self):
        """Test that an oversized kernel is rejected."""
        with pytest.raises(SpecError):
            NetworkSpec((1, 2, 2), (Conv2D(1, 1, 3, 3), Flatten(), Dense(1, 1)), 1)

    def test_empty_network(self):
        """Test that a network needs at least one layer."""
        with pytest.raises(SpecError):
            NetworkSpec((2,), (), 2)


class TestParamCount:
    """Tests for param_count arithmetic."""

    def test_deep_baseline(self):
        """Test the 1845-2000-2000-2000-183 deep net count."""
        spec = mlp_spec(1845, (2000, 2000, 2000), 183, dropout=0.2)
        assert param_count(spec) == 12_062_183

    def test_biased_bottleneck(self):
        """Test the 1845-250L-400000-183 count with a biased bottleneck."""
        spec = shallow_spec((1845,), 400_000, 183, bottleneck=250, bottleneck_bias=True)
        assert param_count(spec) == 174_061_683

    def test_bias_free_bottleneck(self):
        """Test that the default bottleneck carries no bias."""
        spec = shallow_spec((1845,), 400_000, 183, bottleneck=250)
        assert param_count(spec) == 174_061_433

    def test_conv_layer(self):
        """Test that a conv layer counts kernel plus per-channel bias."""
        assert Conv2D(3, 4, 5, 5).param_count() == 4 * 3 * 25 + 4

    def test_bottleneck_saves_memory_below_threshold(self):
        """Test that k < DH / (D + H) gives fewer parameters than the full layer."""
        d, h, c = 100, 300, 10
        threshold = d * h / (d + h)
        full = param_count(shallow_spec((d,), h, c))
        below = param_count(shallow_spec((d,), h, c, bottleneck=int(threshold) - 1))
        above = param_count(shallow_spec((d,), h, c, bottleneck=int(threshold) + 2))
        assert below < full < above

    def test_matches_initialized_size(self):
        """Test that initialized models store exactly the declared count."""
        spec = shallow_spec((1, 6, 6), 7, 3, bottleneck=4, conv=(2, 3, 2), dropout=0.1)
        assert init_params(spec, RngStream(0)).size() == param_count(spec)


class TestBuilders:
    """Tests for mlp_spec, shallow_spec and hidden unit formatting."""

    def test_mlp_with_dropout(self):
        """Test that dropout follows every hidden layer."""
        spec = mlp_spec(4, (8, 8), 3, dropout=0.5)
        kinds = [type(layer).__name__ for layer in spec.layers]
        assert kinds == ["Dense", "Dropout", "Dense", "Dropout", "Dense"]
        assert spec.layers[-1].activation is Activation.IDENTITY

    def test_image_input_is_flattened(self):
        """Test that image input without conv gets a Flatten front end."""
        spec = mlp_spec((1, 4, 4), (5,), 2)
        assert isinstance(spec.layers[0], Flatten)
        assert spec.layers[1].in_features == 16

    def test_conv_front_end(self):
        """Test the conv + pool + flatten student front end."""
        spec = shallow_spec((1, 8, 8), 10, 3, conv=(4, 3, 2))
        assert isinstance(spec.layers[0], Conv2D)
        assert isinstance(spec.layers[1], MaxPool2D)
        assert spec.layers[3].in_features == 4 * 3 * 3

    def test_conv_needs_image_shape(self):
        """Test that conv on flat input raises SpecError."""
        with pytest.raises(SpecError):
            shallow_spec((16,), 10, 3, conv=(4, 3, 2))

    def test_bottleneck_layer(self):
        """Test that the bottleneck is a bias-free linear layer."""
        spec = shallow_spec((10,), 20, 3, bottleneck=4)
        assert spec.layers[0] == Dense(10, 4, Activation.IDENTITY, bias=False)
        assert find_bottleneck(spec) == 0

    @pytest.mark.parametrize(
        "bottleneck,expected",
        [
            (None, "20"),
            (4, "20+4L"),
        ],
    )
    def test_format_hidden_units(self, bottleneck, expected):
        """Test the H and H+kL renderings."""
        spec = shallow_spec((10,), 20, 3, bottleneck=bottleneck)
        assert format_hidden_units(spec) == expected

    def test_hidden_units_of_deep_net(self):
        """Test that the output layer is not counted."""
        assert hidden_unit_counts(mlp_spec(5, (3, 4), 2)) == (7, 0)


class TestForward:
    """Tests for eval-mode forward passes."""

    def test_identity_network(self, identity_model):
        """Test that W = I, b = 0 returns its input."""
        logits, _ = forward(identity_model, np.array([[3.0, 4.0]]))
        np.testing.assert_array_equal(logits, [[3.0, 4.0]])

    def test_relu_clamp(self):
        """Test that ReLU clamps negative pre-activations."""
        spec = NetworkSpec((2,), (Dense(2, 2, Activation.RELU),), 2)
        model = Model(spec, (LayerParams(np.eye(2), np.zeros(2)),))
        logits, _ = forward(model, np.array([[-1.0, 5.0]]))
        np.testing.assert_array_equal(logits, [[0.0, 5.0]])

    def test_wrong_width(self, small_model):
        """Test that a batch of the wrong width raises ShapeError."""
        with pytest.raises(ShapeError):
            forward(small_model, np.zeros((2, 3)))

    def test_predict_is_batch_invariant(self, rng):
        """Test that predictions do not depend on the prediction batch size."""
        model = init_params(shallow_spec((6,), 9, 4, bottleneck=3), RngStream(2))
        features = rng.standard_normal((50, 6))
        whole = predict_logits(model, features, batch_size=50)
        np.testing.assert_array_equal(predict_logits(model, features, batch_size=7), whole)
        np.testing.assert_array_equal(predict_logits(model, features[13:14], batch_size=1)[0], whole[13])

    def test_eval_mode_ignores_dropout(self, rng):
        """Test that eval mode applies no dropout and needs no stream."""
        model = init_params(mlp_spec(3, (4,), 2, dropout=0.5), RngStream(0))
        batch = rng.standard_normal((5, 3))
        first, _ = forward(model, batch)
        second, _ = forward(model, batch)
        np.testing.assert_array_equal(first, second)

    def test_dropout_matches_eval_in_expectation(self):
        """Test that the train-mode mean over many masks matches eval mode on a linear net."""
        spec = NetworkSpec(
            (4,),
            (Dense(4, 8, Activation.IDENTITY), Dropout(0.5), Dense(8, 2, Activation.IDENTITY)),
            2,
        )
        weights = RngStream(3)
        model = Model(
            spec,
            (
                LayerParams(weights.uniform(0.5, 1.5, (8, 4)), np.zeros(8)),
                None,
                LayerParams(weights.uniform(0.5, 1.5, (2, 8)), np.zeros(2)),
            ),
        )
        # every row draws its own mask
        batch = np.ones((20000, 4))

        train_logits, _ = forward(model, batch, Mode.TRAIN, RngStream(8))
        eval_logits, _ = forward(model, batch[:1])

        np.testing.assert_allclose(train_logits.mean(axis=0), eval_logits[0], rtol=0.02)

    def test_train_mode_dropout_needs_stream(self, rng):
        """Test that train-mode dropout without a stream is a contract error."""
        model = init_params(mlp_spec(3, (4,), 2, dropout=0.5), RngStream(0))
        with pytest.raises(ContractError):
            forward(model, rng.standard_normal((2, 3)), Mode.TRAIN)


class TestModel:
    """Tests for Model parameter validation."""

    def test_wrong_weight_shape(self, small_spec):
        """Test that mis-shaped weights raise ShapeError."""
        with pytest.raises(ShapeError):
            Model(small_spec, (LayerParams(np.zeros((4, 5)), np.zeros(5)), None))

    def test_missing_bias(self, small_spec):
        """Test that a biased layer needs its bias tensor."""
        params = (LayerParams(np.zeros((5, 4))), LayerParams(np.zeros((3, 5)), np.zeros(3)))
        with pytest.raises(ShapeError):
            Model(small_spec, params)

    def test_init_is_seeded(self, small_spec):
        """Test that the same stream gives the same weights."""
        a = init_params(small_spec, RngStream(3))
        b = init_params(small_spec, RngStream(3))
        np.testing.assert_array_equal(a.params[0].weight, b.params[0].weight)
        np.testing.assert_array_equal(a.params[1].bias, np.zeros(3))

    def test_glorot_scale(self):
        """Test that Dense(1000, 1000) weights have std sqrt(6 / 2000) / sqrt(3)."""
        spec = NetworkSpec((1000,), (Dense(1000, 1000, Activation.IDENTITY),), 1000)
        weight = init_params(spec, RngStream(7)).params[0].weight
        expected = np.sqrt(6.0 / 2000.0) / np.sqrt(3.0)
        assert abs(weight.std() - expected) < 0.1 * expected


class TestAbsorbBottleneck:
    """Tests for absorb_bottleneck."""

    def test_forward_equivalence(self, rng):
        """Test that absorption preserves outputs on 100 random inputs."""
        spec = shallow_spec((12,), 9, 4, bottleneck=3, bottleneck_bias=True)
        model = init_params(spec, RngStream(8))
        # nonzero biases so that the merged bias term is exercised
        params = list(model.params)
        params[0] = LayerParams(params[0].weight, rng.standard_normal(3))
        params[1] = LayerParams(params[1].weight, rng.standard_normal(9))
        model = model.with_params(params)

        merged = absorb_bottleneck(model)
        inputs = rng.standard_normal((100, 12))
        np.testing.assert_allclose(
            predict_logits(merged, inputs), predict_logits(model, inputs), atol=1e-10
        )
        assert find_bottleneck(merged.spec) is None

    def test_parameter_counts(self):
        """Test the 1845-250L-8000-183 absorption arithmetic."""
        spec = shallow_spec((1845,), 8000, 183, bottleneck=250)
        merged_spec = shallow_spec((1845,), 8000, 183)
        assert param_count(spec) == 3_933_433
        assert param_count(merged_spec) == 16_232_183

    def test_absorbed_spec(self):
        """Test that the merged layer replaces the linear pair."""
        model = init_params(shallow_spec((5,), 6, 2, bottleneck=3), RngStream(0))
        merged = absorb_bottleneck(model)
        assert merged.spec == shallow_spec((5,), 6, 2)

    def test_nothing_to_absorb(self, small_model):
        """Test that absorbing twice raises ContractError."""
        model = init_params(shallow_spec((5,), 6, 2, bottleneck=3), RngStream(0))
        with pytest.raises(ContractError):
            absorb_bottleneck(absorb_bottleneck(model))
        with pytest.raises(ContractError):
            absorb_bottleneck(small_model)


class TestSerialization:
    """Tests for the binary model format."""

    def test_save_and_load(self, tmp_path, rng):
        """Test that a reloaded model has the same spec and predictions."""
        spec = shallow_spec((1, 6, 6), 5, 3, bottleneck=4, conv=(2, 3, 2), dropout=0.25)
        model = init_params(spec, RngStream(4))
        path = save_model(model, tmp_path / "models" / "m.smim")

        loaded = load_model(path)
        assert loaded.spec == spec
        inputs = rng.standard_normal((4, 36))
        np.testing.assert_array_equal(predict_logits(loaded, inputs), predict_logits(model, inputs))
        assert model_to_bytes(loaded) == path.read_bytes()

    def test_digest_is_stable(self, small_model):
        """Test that equal models have equal digests."""
        assert model_digest(small_model) == model_digest(small_model.copy())
        assert len(model_digest(small_model)) == 64

    def test_bad_magic(self, small_model):
        """Test that a foreign file is rejected."""
        payload = b"XXXX" + model_to_bytes(small_model)[4:]
        with pytest.raises(SerializationError, match="magic"):
            model_from_bytes(payload)

    def test_unsupported_version(self, small_model):
        """Test that an unknown format version is rejected."""
        payload = bytearray(model_to_bytes(small_model))
        payload[4] = 99
        with pytest.raises(SerializationError):
            model_from_bytes(bytes(payload))

    def test_truncated(self, small_model):
        """Test that a truncated file is rejected."""
        with pytest.raises(SerializationError):
            model_from_bytes(model_to_bytes(small_model)[:-8])

    def test_trailing_bytes(self, small_model):
        """Test that trailing data is rejected."""
        with pytest.raises(SerializationError):
            model_from_bytes(model_to_bytes(small_model) + b"\x00")

    def test_missing_file(self, tmp_path):
        """Test that a missing model file raises DataError."""
        with pytest.raises(DataError):
            load_model(tmp_path / "absent.smim")
