"""
shallowmimic - Shallow Mimic Networks

Trains deep teacher networks (or ensembles of them) with minibatch SGD,
then trains shallow single-hidden-layer students to regress the
teacher's logits on a transfer set, and compares them with shallow nets
trained directly on the hard labels.

Also includes:
- Linear bottleneck layers and their exact absorption after training
- Parameter-count and teacher-quality sweeps written as CSV
- GCN/ZCA preprocessing and a seeded synthetic benchmark

Version: 0.3.0
"""

__version__ = "0.3.0"

from shallowmimic.distill import build_transfer_set, fold_logit_scale
from shallowmimic.nn import absorb_bottleneck, load_model, mlp_spec, save_model, shallow_spec
from shallowmimic.optim import TrainConfig, evaluate, train

__all__ = [
    "absorb_bottleneck",
    "build_transfer_set",
    "evaluate",
    "fold_logit_scale",
    "load_model",
    "mlp_spec",
    "save_model",
    "shallow_spec",
    "train",
    "TrainConfig",
    "__version__",
]
