"""Small float64 numerical engine: dense/conv layers, exact gradients, optimizers."""

from cleas.nncore.functional import conv2d_backward, conv2d_forward, softmax_cross_entropy
from cleas.nncore.network import Conv, Dense, Flatten, backward, forward, init_params, loss_and_grad, predict
from cleas.nncore.optim import OptimizerState, make_optimizer, step
from cleas.nncore.params import ParamStore, from_bytes, load, save, to_bytes

__all__ = [
    "Conv",
    "Dense",
    "Flatten",
    "OptimizerState",
    "ParamStore",
    "backward",
    "conv2d_backward",
    "conv2d_forward",
    "forward",
    "from_bytes",
    "init_params",
    "load",
    "loss_and_grad",
    "make_optimizer",
    "predict",
    "save",
    "softmax_cross_entropy",
    "step",
    "to_bytes",
]
