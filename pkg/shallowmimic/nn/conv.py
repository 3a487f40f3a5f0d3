"""
Convolution and max pooling on NCHW buffers.

Convolution is valid-mode (no padding), stride 1, computed as an einsum
over ``sliding_window_view`` patches. Pooling uses non-overlapping windows
and truncates ragged right/bottom edges; the argmax of every window is kept
so the backward pass can route gradients to the winning position. Ties go
to the first position in row-major window order.
"""

import logging
from typing import Tuple

import numpy as np
import numpy.typing as npt
from numpy.lib.stride_tricks import sliding_window_view

from shallowmimic.exceptions import ShapeError
from shallowmimic.nn.layers import Conv2D, MaxPool2D
from shallowmimic.nn.network import LayerParams

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
IndexArray = npt.NDArray[np.int64]


def _check_image_batch(x: Array, what: str) -> None:
    if x.ndim != 4:
        raise ShapeError(f"{what} expects a 4-D (B, C, H, W) buffer. Got shape {x.shape}")


def conv2d_forward(layer: Conv2D, params: LayerParams, x: Array) -> Array:
    """
    Valid cross-correlation of a batch of images.

    Args:
        layer: Convolution hyperparameters.
        params: Kernel block [out_ch x in_ch x kh x kw] and bias [out_ch].
        x: Input of shape (B, in_ch, h, w).

    Returns:
        Output of shape (B, out_ch, h - kh + 1, w - kw + 1).

    Raises:
        ShapeError: If the input is not 4-D, has the wrong channel count,
            or is smaller than the kernel.
    """
    _check_image_batch(x, "conv2d_forward")
    _, channels, h, w = x.shape
    if channels != layer.in_channels:
        raise ShapeError(f"conv2d_forward expects {layer.in_channels} channels. Got {channels}")
    if h < layer.kernel_h or w < layer.kernel_w:
        raise ShapeError(
            f"Kernel {layer.kernel_h}x{layer.kernel_w} is larger than input {h}x{w}"
        )

    patches = sliding_window_view(x, (layer.kernel_h, layer.kernel_w), axis=(2, 3))
    out = np.einsum("bchwij,ocij->bohw", patches, params.weight, optimize=True)
    assert params.bias is not None
    return out + params.bias[None, :, None, None]


def conv2d_backward(
    layer: Conv2D, params: LayerParams, x: Array, d_out: Array
) -> Tuple[Array, LayerParams]:
    """
    Gradients of a valid convolution.

    Args:
        layer: Convolution hyperparameters.
        params: Parameters used in the forward pass.
        x: Forward input (B, in_ch, h, w).
        d_out: Upstream gradient (B, out_ch, h', w').

    Returns:
        Tuple of (gradient w.r.t. ``x``, parameter gradients).
    """
    kh, kw = layer.kernel_h, layer.kernel_w
    patches = sliding_window_view(x, (kh, kw), axis=(2, 3))
    d_weight = np.einsum("bohw,bchwij->ocij", d_out, patches, optimize=True)
    d_bias = d_out.sum(axis=(0, 2, 3))

    d_x = np.zeros_like(x)
    out_h, out_w = d_out.shape[2], d_out.shape[3]
    for i in range(kh):
        for j in range(kw):
            d_x[:, :, i : i + out_h, j : j + out_w] += np.einsum(
                "bohw,oc->bchw", d_out, params.weight[:, :, i, j], optimize=True
            )
    return d_x, LayerParams(d_weight, d_bias)


def maxpool_forward(layer: MaxPool2D, x: Array) -> Tuple[Array, IndexArray]:
    """
    Non-overlapping max pooling.

    Args:
        layer: Pool window size.
        x: Input of shape (B, C, h, w).

    Returns:
        Tuple of (pooled output (B, C, h // ph, w // pw), argmax indices
        into each flattened ph*pw window).

    Raises:
        ShapeError: If the window is larger than the input.
    """
    _check_image_batch(x, "maxpool_forward")
    batch, channels, h, w = x.shape
    ph, pw = layer.pool_h, layer.pool_w
    if h < ph or w < pw:
        raise ShapeError(f"Pool window {ph}x{pw} is larger than input {h}x{w}")

    out_h, out_w = h // ph, w // pw
    windows = _windows(x[:, :, : out_h * ph, : out_w * pw], ph, pw)
    argmax = windows.argmax(axis=-1)
    pooled = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
    return pooled, argmax.astype(np.int64)


def maxpool_backward(
    layer: MaxPool2D, input_shape: Tuple[int, ...], argmax: IndexArray, d_out: Array
) -> Array:
    """Route each pooled gradient to the argmax position of its window."""
    batch, channels, h, w = input_shape
    ph, pw = layer.pool_h, layer.pool_w
    out_h, out_w = d_out.shape[2], d_out.shape[3]

    d_windows = np.zeros((batch, channels, out_h, out_w, ph * pw), dtype=np.float64)
    np.put_along_axis(d_windows, argmax[..., None], d_out[..., None], axis=-1)

    d_x = np.zeros(input_shape, dtype=np.float64)
    d_x[:, :, : out_h * ph, : out_w * pw] = (
        d_windows.reshape(batch, channels, out_h, out_w, ph, pw)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(batch, channels, out_h * ph, out_w * pw)
    )
    return d_x


def _windows(x: Array, ph: int, pw: int) -> Array:
    """Reshape (B, C, H, W) into (B, C, H/ph, W/pw, ph*pw) windows."""
    batch, channels, h, w = x.shape
    return (
        x.reshape(batch, channels, h // ph, ph, w // pw, pw)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(batch, channels, h // ph, w // pw, ph * pw)
    )
