from autograd.engine import (
    PRIMITIVES,
    GraphNode,
    add,
    add_n,
    apply_primitive,
    backward,
    concat,
    constant,
    dot,
    dropout,
    elementwise_multiply,
    leaf,
    matmul,
    prelu,
    release_graph,
    relu,
    scale,
    sigmoid,
    softmax,
    sum_of_squares,
    take,
    tanh,
    zero_gradients,
)
from autograd.gradcheck import gradient_check, relative_error

__all__ = [
    "PRIMITIVES", "GraphNode", "add", "add_n", "apply_primitive", "backward",
    "concat", "constant", "dot", "dropout", "elementwise_multiply", "leaf",
    "matmul", "prelu", "release_graph", "relu", "scale", "sigmoid", "softmax",
    "sum_of_squares", "take", "tanh", "zero_gradients", "gradient_check",
    "relative_error",
]
