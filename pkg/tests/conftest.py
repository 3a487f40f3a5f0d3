"""
Shared fixtures for the shallowmimic test suite.
"""

from typing import Callable, List, Optional

import numpy as np
import pytest

from shallowmimic.data.dataset import Dataset
from shallowmimic.data.synthetic import SyntheticSpec, make_synthetic
from shallowmimic.nn import Activation, Dense, LayerParams, Model, NetworkSpec, init_params
from shallowmimic.numerics.rng import RngStream


def numeric_param_grads(
    model: Model, objective: Callable[[Model], float], h: float = 1e-6
) -> List[Optional[LayerParams]]:
    """Central finite differences of ``objective`` for every weight and bias."""
    grads: List[Optional[LayerParams]] = []
    for index, params in enumerate(model.params):
        if params is None:
            grads.append(None)
            continue
        tensors = [params.weight] + ([params.bias] if params.bias is not None else [])
        estimates = []
        for which, tensor in enumerate(tensors):
            estimate = np.zeros_like(tensor)
            for position in np.ndindex(tensor.shape):
                values = []
                for step in (h, -h):
                    shifted = tensor.copy()
                    shifted[position] += step
                    layer = LayerParams(
                        shifted if which == 0 else params.weight,
                        shifted if which == 1 else params.bias,
                    )
                    new_params = list(model.params)
                    new_params[index] = layer
                    values.append(objective(model.with_params(new_params)))
                estimate[position] = (values[0] - values[1]) / (2 * h)
            estimates.append(estimate)
        grads.append(LayerParams(estimates[0], estimates[1] if len(estimates) > 1 else None))
    return grads


def assert_grads_close(analytic, numeric, rtol=1e-5, atol=1e-8):
    """Compare two gradient lists slot by slot."""
    assert len(analytic) == len(numeric)
    for a, n in zip(analytic, numeric):
        if n is None:
            assert a is None
            continue
        np.testing.assert_allclose(a.weight, n.weight, rtol=rtol, atol=atol)
        if n.bias is not None:
            np.testing.assert_allclose(a.bias, n.bias, rtol=rtol, atol=atol)


@pytest.fixture
def rng():
    """A fixed random stream."""
    return RngStream(1234)


@pytest.fixture
def identity_model():
    """Dense(2, 2, identity) with W = I and b = 0."""
    spec = NetworkSpec((2,), (Dense(2, 2, Activation.IDENTITY),), 2)
    return Model(spec, (LayerParams(np.eye(2), np.zeros(2)),))


@pytest.fixture
def small_spec():
    """A 4 -> 5 -> 3 ReLU network."""
    return NetworkSpec(
        (4,), (Dense(4, 5, Activation.RELU), Dense(5, 3, Activation.IDENTITY)), 3
    )


@pytest.fixture
def small_model(small_spec):
    """Glorot-initialized ``small_spec``."""
    return init_params(small_spec, RngStream(7))


@pytest.fixture
def separable_sets():
    """A linearly separable 2-class problem: 20 training and 20 dev points."""
    generator = np.random.default_rng(0)

    def make(count):
        labels = np.arange(count) % 2
        centers = np.where(labels[:, None] == 0, -2.0, 2.0)
        features = centers + 0.3 * generator.standard_normal((count, 2))
        return Dataset(features, 2, hard_labels=labels)

    return make(20), make(20)


@pytest.fixture
def tiny_benchmark():
    """A small synthetic benchmark for fast end-to-end tests."""
    spec = SyntheticSpec(
        classes=3,
        dims=8,
        clusters_per_class=2,
        separation=4.0,
        cluster_std=1.0,
        n_train=90,
        n_unlabeled=60,
        n_dev=45,
        n_test=45,
    )
    return make_synthetic(spec, seed=11)
