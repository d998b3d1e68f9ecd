"""
Reverse-mode automatic differentiation over dense float64 arrays.

Every value in the model is a ``GraphNode`` wrapping an immutable numpy array.
Primitives are registered in ``PRIMITIVES`` as a forward rule plus a
vector-Jacobian rule; ``apply_primitive`` validates shapes, evaluates the
forward rule and records the parents so ``backward`` can replay the graph in
reverse topological order.

Broadcasting is limited to what the batched model needs: a row vector against
a matrix (biases) and a column against a matrix (per-row weights and masks).
Broadcast gradients are sum-reduced back to the operand shape by
``_unbroadcast``.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, softmax as _softmax

from errors import AutogradError, GraphError, NonFiniteValueError, ShapeError

logger = logging.getLogger(__name__)

Array = np.ndarray


class GraphNode:
    """A value in the computation graph together with its accumulated gradient."""

    __slots__ = ("value", "grad", "primitive", "parents", "attrs", "name",
                 "requires_grad", "released")

    def __init__(
        self,
        value: Array,
        primitive: str = "leaf",
        parents: Tuple["GraphNode", ...] = (),
        attrs: Optional[Dict[str, Any]] = None,
        name: Optional[str] = None,
        requires_grad: bool = True,
    ):
        value = np.asarray(value, dtype=np.float64)
        value.flags.writeable = False
        self.value = value
        self.grad = np.zeros_like(value)
        self.primitive = primitive
        self.parents = parents
        self.attrs = attrs or {}
        self.name = name
        self.requires_grad = requires_grad
        self.released = False

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def is_leaf(self) -> bool:
        return not self.parents

    def __repr__(self) -> str:
        label = f" '{self.name}'" if self.name else ""
        return f"GraphNode<{self.primitive}{label} shape={self.shape}>"

    # Operator sugar used by the layers
    def __add__(self, other: "GraphNode") -> "GraphNode":
        return add(self, other)

    def __mul__(self, other: "GraphNode") -> "GraphNode":
        return elementwise_multiply(self, other)

    def __matmul__(self, other: "GraphNode") -> "GraphNode":
        return matmul(self, other)

    def __neg__(self) -> "GraphNode":
        return scale(self, -1.0)

    def __sub__(self, other: "GraphNode") -> "GraphNode":
        return add(self, scale(other, -1.0))


def leaf(value: Any, name: Optional[str] = None, requires_grad: bool = True) -> GraphNode:
    """Create a parameter-like leaf; its gradient is reported by ``backward``."""
    return GraphNode(np.array(value, dtype=np.float64), name=name, requires_grad=requires_grad)


def constant(value: Any, name: Optional[str] = None) -> GraphNode:
    """Create an input leaf that never receives a gradient."""
    return GraphNode(np.array(value, dtype=np.float64), name=name, requires_grad=False)


# ============================================================================
# Primitive registry
# ============================================================================

ForwardRule = Callable[[List[Array], Dict[str, Any]], Array]
VJPRule = Callable[[Array, List[Array], Array, Dict[str, Any]], List[Optional[Array]]]


@dataclass(frozen=True)
class Primitive:
    name: str
    forward: ForwardRule
    vjp: VJPRule
    check: Optional[Callable[[List[Array], Dict[str, Any]], None]] = None


PRIMITIVES: Dict[str, Primitive] = {}


def register(name: str, forward: ForwardRule, vjp: VJPRule, check=None) -> None:
    PRIMITIVES[name] = Primitive(name, forward, vjp, check)


def _unbroadcast(grad: Array, shape: Tuple[int, ...]) -> Array:
    """Sum-reduce ``grad`` over the axes that were broadcast to reach it."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(primitive: str):
    def check(values: List[Array], attrs: Dict[str, Any]) -> None:
        a, b = values
        if a.ndim > 2 or b.ndim > 2:
            raise ShapeError(primitive, a.shape, b.shape)
        try:
            np.broadcast_shapes(a.shape, b.shape)
        except ValueError:
            raise ShapeError(primitive, a.shape, b.shape) from None
    return check


def _check_same_shape(primitive: str):
    def check(values: List[Array], attrs: Dict[str, Any]) -> None:
        a, b = values
        if a.shape != b.shape:
            raise ShapeError(primitive, a.shape, b.shape)
    return check


def _check_unary(primitive: str):
    def check(values: List[Array], attrs: Dict[str, Any]) -> None:
        if len(values) != 1:
            raise AutogradError(f"{primitive} takes exactly one input, got {len(values)}")
    return check


# --- matmul -----------------------------------------------------------------

def _matmul_operands(values: List[Array], attrs: Dict[str, Any]) -> Tuple[Array, Array]:
    a, b = values
    if attrs.get("transpose_b"):
        b = b.T
    return a, b


def _matmul_check(values: List[Array], attrs: Dict[str, Any]) -> None:
    a, b = _matmul_operands(values, attrs)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError("matmul", values[0].shape, values[1].shape)


def _matmul_forward(values: List[Array], attrs: Dict[str, Any]) -> Array:
    a, b = _matmul_operands(values, attrs)
    return a @ b


def _matmul_vjp(g: Array, values: List[Array], out: Array, attrs: Dict[str, Any]) -> List[Array]:
    a, b = _matmul_operands(values, attrs)
    a2 = a if a.ndim == 2 else a[None, :]
    b2 = b if b.ndim == 2 else b[:, None]
    g2 = g.reshape(a2.shape[0], b2.shape[1])
    ga = (g2 @ b2.T).reshape(a.shape)
    gb = (a2.T @ g2).reshape(b.shape)
    if attrs.get("transpose_b"):
        gb = gb.T
    return [ga, gb]


register("matmul", _matmul_forward, _matmul_vjp, _matmul_check)

# --- add / elementwise_multiply ---------------------------------------------

register(
    "add",
    lambda v, _: v[0] + v[1],
    lambda g, v, out, _: [_unbroadcast(g, v[0].shape), _unbroadcast(g, v[1].shape)],
    _check_broadcast("add"),
)

register(
    "elementwise_multiply",
    lambda v, _: v[0] * v[1],
    lambda g, v, out, _: [_unbroadcast(g * v[1], v[0].shape), _unbroadcast(g * v[0], v[1].shape)],
    _check_broadcast("elementwise_multiply"),
)

# --- concat / slice ---------------------------------------------------------


def _concat_check(values: List[Array], attrs: Dict[str, Any]) -> None:
    first = values[0]
    for other in values[1:]:
        if other.ndim != first.ndim or other.shape[:-1] != first.shape[:-1]:
            raise ShapeError("concat", first.shape, other.shape)


def _concat_vjp(g: Array, values: List[Array], out: Array, attrs: Dict[str, Any]) -> List[Array]:
    bounds = np.cumsum([v.shape[-1] for v in values])[:-1]
    return list(np.split(g, bounds, axis=-1))


register("concat", lambda v, _: np.concatenate(v, axis=-1), _concat_vjp, _concat_check)


def _slice_check(values: List[Array], attrs: Dict[str, Any]) -> None:
    x = values[0]
    start, stop = attrs["start"], attrs["stop"]
    if not 0 <= start < stop <= x.shape[-1]:
        raise ShapeError("slice", x.shape, (start, stop))


def _slice_vjp(g: Array, values: List[Array], out: Array, attrs: Dict[str, Any]) -> List[Array]:
    full = np.zeros_like(values[0])
    full[..., attrs["start"]:attrs["stop"]] = g
    return [full]


register("slice", lambda v, a: v[0][..., a["start"]:a["stop"]], _slice_vjp, _slice_check)

# --- pointwise nonlinearities -----------------------------------------------

register(
    "sigmoid",
    lambda v, _: expit(v[0]),
    lambda g, v, out, _: [g * out * (1.0 - out)],
    _check_unary("sigmoid"),
)

register(
    "tanh",
    lambda v, _: np.tanh(v[0]),
    lambda g, v, out, _: [g * (1.0 - out * out)],
    _check_unary("tanh"),
)

register(
    "relu",
    lambda v, _: np.maximum(v[0], 0.0),
    lambda g, v, out, _: [g * (v[0] > 0)],
    _check_unary("relu"),
)


def _prelu_check(values: List[Array], attrs: Dict[str, Any]) -> None:
    x, slope = values
    if slope.size != 1:
        raise ShapeError("prelu", x.shape, slope.shape)


def _prelu_vjp(g: Array, values: List[Array], out: Array, attrs: Dict[str, Any]) -> List[Array]:
    x, slope = values
    positive = x > 0
    gx = g * np.where(positive, 1.0, slope.reshape(()))
    gslope = np.sum(g * np.where(positive, 0.0, x)).reshape(slope.shape)
    return [gx, gslope]


register(
    "prelu",
    lambda v, _: np.where(v[0] > 0, v[0], v[1].reshape(()) * v[0]),
    _prelu_vjp,
    _prelu_check,
)

# --- softmax / dot / scale / sum_of_squares ---------------------------------


def _softmax_vjp(g: Array, values: List[Array], out: Array, attrs: Dict[str, Any]) -> List[Array]:
    return [out * (g - np.sum(g * out, axis=-1, keepdims=True))]


register("softmax", lambda v, _: _softmax(v[0], axis=-1), _softmax_vjp, _check_unary("softmax"))


def _dot_forward(values: List[Array], attrs: Dict[str, Any]) -> Array:
    a, b = values
    return np.sum(a * b, axis=-1, keepdims=a.ndim == 2)


def _dot_vjp(g: Array, values: List[Array], out: Array, attrs: Dict[str, Any]) -> List[Array]:
    a, b = values
    return [g * b, g * a]


# Row-wise for matrices: one inner product per row, returned as a column.
register("dot", _dot_forward, _dot_vjp, _check_same_shape("dot"))

register(
    "scale",
    lambda v, a: a["factor"] * v[0],
    lambda g, v, out, a: [a["factor"] * g],
    _check_unary("scale"),
)

register(
    "sum_of_squares",
    lambda v, _: np.sum(v[0] * v[0]),
    lambda g, v, out, _: [2.0 * g * v[0]],
    _check_unary("sum_of_squares"),
)


# ============================================================================
# Graph construction and backward
# ============================================================================

def apply_primitive(tag: str, inputs: Sequence[GraphNode], **attrs: Any) -> GraphNode:
    """Evaluate primitive ``tag`` on ``inputs`` and record it in the graph."""
    primitive = PRIMITIVES.get(tag)
    if primitive is None:
        raise AutogradError(f"Unknown primitive '{tag}'")
    values = [node.value for node in inputs]
    if primitive.check is not None:
        primitive.check(values, attrs)
    with np.errstate(over="ignore", invalid="ignore"):
        out = primitive.forward(values, attrs)
    if not np.all(np.isfinite(out)):
        raise NonFiniteValueError(tag)
    return GraphNode(
        out,
        primitive=tag,
        parents=tuple(inputs),
        attrs=attrs,
        requires_grad=any(node.requires_grad for node in inputs),
    )


def _topological_order(root: GraphNode) -> List[GraphNode]:
    order: List[GraphNode] = []
    visited = set()
    stack: List[Tuple[GraphNode, bool]] = [(root, False)]
    # Iterative DFS; the LSTM graphs are deeper than Python's recursion limit.
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in visited and parent.requires_grad:
                stack.append((parent, False))
    return order


def zero_gradients(root: GraphNode) -> None:
    """Reset the gradient of every node reachable from ``root``."""
    for node in _topological_order(root):
        node.grad = np.zeros_like(node.value)


def backward(root: GraphNode) -> Dict[GraphNode, Array]:
    """
    Accumulate d(root)/d(leaf) into every leaf that requires a gradient.

    Interior gradients are recomputed from scratch on each call while leaf
    gradients accumulate, so two calls on two losses sum their gradients and
    a call after ``zero_gradients`` reproduces the first result.

    Returns:
        Mapping from each reachable gradient-requiring leaf to its gradient.
    """
    if root.value.size != 1:
        raise GraphError(f"backward needs a scalar root, got shape {root.shape}")
    order = _topological_order(root)
    for node in order:
        if node.released:
            raise GraphError(f"Detached node reached during backward: {node!r}")
        if not node.is_leaf:
            node.grad = np.zeros_like(node.value)
    root.grad = root.grad + np.ones_like(root.value)

    for node in reversed(order):
        if node.is_leaf:
            continue
        primitive = PRIMITIVES[node.primitive]
        parent_grads = primitive.vjp(
            node.grad, [p.value for p in node.parents], node.value, node.attrs
        )
        for parent, grad in zip(node.parents, parent_grads):
            if parent.requires_grad and grad is not None:
                parent.grad = parent.grad + grad

    return {node: node.grad for node in order if node.is_leaf and node.requires_grad}


def release_graph(root: GraphNode) -> None:
    """Detach every interior node below ``root``; a later backward through them fails."""
    for node in _topological_order(root):
        if not node.is_leaf:
            node.released = True


# ============================================================================
# Primitive shorthands
# ============================================================================

def matmul(a: GraphNode, b: GraphNode, transpose_b: bool = False) -> GraphNode:
    return apply_primitive("matmul", (a, b), transpose_b=transpose_b)


def add(a: GraphNode, b: GraphNode) -> GraphNode:
    return apply_primitive("add", (a, b))


def add_n(nodes: Sequence[GraphNode]) -> GraphNode:
    total = nodes[0]
    for node in nodes[1:]:
        total = add(total, node)
    return total


def elementwise_multiply(a: GraphNode, b: GraphNode) -> GraphNode:
    return apply_primitive("elementwise_multiply", (a, b))


def concat(nodes: Sequence[GraphNode]) -> GraphNode:
    if len(nodes) == 1:
        return nodes[0]
    return apply_primitive("concat", tuple(nodes))


def take(x: GraphNode, start: int, stop: int) -> GraphNode:
    return apply_primitive("slice", (x,), start=start, stop=stop)


def sigmoid(x: GraphNode) -> GraphNode:
    return apply_primitive("sigmoid", (x,))


def tanh(x: GraphNode) -> GraphNode:
    return apply_primitive("tanh", (x,))


def relu(x: GraphNode) -> GraphNode:
    return apply_primitive("relu", (x,))


def prelu(x: GraphNode, slope: GraphNode) -> GraphNode:
    return apply_primitive("prelu", (x, slope))


def softmax(x: GraphNode) -> GraphNode:
    return apply_primitive("softmax", (x,))


def dot(a: GraphNode, b: GraphNode) -> GraphNode:
    return apply_primitive("dot", (a, b))


def scale(x: GraphNode, factor: float) -> GraphNode:
    return apply_primitive("scale", (x,), factor=float(factor))


def sum_of_squares(x: GraphNode) -> GraphNode:
    return apply_primitive("sum_of_squares", (x,))


def dropout(
    x: GraphNode,
    rate: float,
    mode: str,
    rng: Optional[np.random.Generator],
) -> GraphNode:
    """
    Inverted dropout: survivors are rescaled by 1/(1-rate) at train time so
    evaluation is the identity.
    """
    if not 0.0 <= rate < 1.0:
        raise AutogradError(f"dropout rate must lie in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise AutogradError(f"dropout mode must be 'train' or 'eval', got '{mode}'")
    if mode == "eval" or rate == 0.0:
        return x
    if rng is None:
        raise AutogradError("dropout in train mode needs a seeded generator")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return elementwise_multiply(x, constant(keep))
