"""
Model serialization.

File layout (all little-endian):

    "SMIM"  magic
    u32     format version
    u32     input rank, then u32 per input dimension
    u32     output_dim
    u32     layer count, then per layer a u32 type tag and its fields:
              Dense     u32 in, u32 out, u32 activation, u32 has_bias
              Dropout   f64 rate
              Conv2D    u32 in_ch, u32 out_ch, u32 kh, u32 kw
              MaxPool2D u32 ph, u32 pw
              Flatten   (no fields)
    f64...  parameter tensors in layer order, weight then bias, row-major

Shapes of the parameter tensors follow from the spec, so none are stored.
"""

import logging
from pathlib import Path
from typing import List, Optional

from shallowmimic.binary_format import BinaryReader, BinaryWriter
from shallowmimic.exceptions import SerializationError, SpecError
from shallowmimic.nn.layers import (
    Activation,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    LayerSpec,
    MaxPool2D,
)
from shallowmimic.nn.network import LayerParams, Model, NetworkSpec, expected_param_shapes
from shallowmimic.utils.constants import ModelFormat
from shallowmimic.utils.security import calculate_bytes_hash
from shallowmimic.utils.validators import validate_file_exists

logger = logging.getLogger(__name__)

_ACTIVATION_TAGS = {Activation.IDENTITY: ModelFormat.ACT_IDENTITY, Activation.RELU: ModelFormat.ACT_RELU}
_TAG_ACTIVATIONS = {tag: act for act, tag in _ACTIVATION_TAGS.items()}


def _write_layer(writer: BinaryWriter, layer: LayerSpec) -> None:
    if isinstance(layer, Dense):
        writer.u32(ModelFormat.TAG_DENSE)
        writer.u32(layer.in_features)
        writer.u32(layer.out_features)
        writer.u32(_ACTIVATION_TAGS[layer.activation])
        writer.u32(int(layer.bias))
    elif isinstance(layer, Dropout):
        writer.u32(ModelFormat.TAG_DROPOUT)
        writer.f64(layer.rate)
    elif isinstance(layer, Conv2D):
        writer.u32(ModelFormat.TAG_CONV2D)
        for value in (layer.in_channels, layer.out_channels, layer.kernel_h, layer.kernel_w):
            writer.u32(value)
    elif isinstance(layer, MaxPool2D):
        writer.u32(ModelFormat.TAG_MAXPOOL2D)
        writer.u32(layer.pool_h)
        writer.u32(layer.pool_w)
    else:
        writer.u32(ModelFormat.TAG_FLATTEN)


def _read_layer(reader: BinaryReader, index: int) -> LayerSpec:
    tag = reader.u32()
    if tag == ModelFormat.TAG_DENSE:
        in_features, out_features, act_tag, has_bias = (reader.u32() for _ in range(4))
        if act_tag not in _TAG_ACTIVATIONS:
            raise SerializationError(f"Layer {index}: unknown activation tag {act_tag}")
        return Dense(in_features, out_features, _TAG_ACTIVATIONS[act_tag], bool(has_bias))
    if tag == ModelFormat.TAG_DROPOUT:
        return Dropout(reader.f64())
    if tag == ModelFormat.TAG_CONV2D:
        in_ch, out_ch, kh, kw = (reader.u32() for _ in range(4))
        return Conv2D(in_ch, out_ch, kh, kw)
    if tag == ModelFormat.TAG_MAXPOOL2D:
        return MaxPool2D(reader.u32(), reader.u32())
    if tag == ModelFormat.TAG_FLATTEN:
        return Flatten()
    raise SerializationError(f"Layer {index}: unknown layer tag {tag}")


def model_to_bytes(model: Model) -> bytes:
    """Serialize a model to the versioned binary format."""
    spec = model.spec
    writer = BinaryWriter(ModelFormat.MAGIC, ModelFormat.VERSION)
    writer.u32(len(spec.input_shape))
    for dim in spec.input_shape:
        writer.u32(dim)
    writer.u32(spec.output_dim)
    writer.u32(len(spec.layers))
    for layer in spec.layers:
        _write_layer(writer, layer)
    for params in model.params:
        if params is None:
            continue
        writer.array(params.weight)
        if params.bias is not None:
            writer.array(params.bias)
    return writer.getvalue()


def model_from_bytes(payload: bytes) -> Model:
    """
    Deserialize a model.

    Raises:
        SerializationError: On bad magic, unsupported version, truncated
            or trailing data, or an invalid stored spec.
    """
    reader = BinaryReader(payload, ModelFormat.MAGIC, ModelFormat.VERSION)
    rank = reader.u32()
    input_shape = tuple(reader.u32() for _ in range(rank))
    output_dim = reader.u32()
    layer_count = reader.u32()
    layers = tuple(_read_layer(reader, i) for i in range(layer_count))

    try:
        spec = NetworkSpec(input_shape, layers, output_dim)
    except SpecError as e:
        raise SerializationError(f"Stored network spec is invalid: {e}") from e

    params: List[Optional[LayerParams]] = []
    for layer in spec.layers:
        expected = expected_param_shapes(layer)
        if expected is None:
            params.append(None)
            continue
        weight_shape, bias_shape = expected
        weight = reader.array(weight_shape)
        bias = reader.array(bias_shape) if bias_shape is not None else None
        params.append(LayerParams(weight, bias))
    reader.expect_end()
    return Model(spec, tuple(params))


def save_model(model: Model, path: Path) -> Path:
    """Write a model file and return its path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(model_to_bytes(model))
    logger.info(f"Saved model ({model.size():,} parameters) to {path}")
    return path


def load_model(path: Path) -> Model:
    """
    Read a model file.

    Raises:
        DataError: If the file does not exist.
        SerializationError: If the file is malformed.
    """
    validate_file_exists(path)
    model = model_from_bytes(path.read_bytes())
    logger.debug(f"Loaded {model.spec} from {path}")
    return model


def model_digest(model: Model) -> str:
    """SHA-256 of the serialized model, used to fingerprint teachers."""
    return calculate_bytes_hash(model_to_bytes(model))
