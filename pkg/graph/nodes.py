"""
Layer operations of the DAPAMT network.

Each function builds part of the computation graph from bound parameter
leaves. Inputs may be single vectors (one student) or matrices whose rows
are students; weights are stored (out, in) and applied as ``x @ W.T``.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from autograd import (
    GraphNode,
    add,
    add_n,
    concat,
    constant,
    dot,
    elementwise_multiply,
    matmul,
    prelu,
    relu,
    scale,
    sigmoid,
    softmax,
    take,
    tanh,
)

logger = logging.getLogger(__name__)

Params = Mapping[str, GraphNode]
GATES = ("i", "f", "c", "o")


def scoped(params: Params, prefix: str) -> Dict[str, GraphNode]:
    """Parameters under ``prefix.`` keyed by their short names."""
    start = len(prefix) + 1
    return {name[start:]: node for name, node in params.items() if name.startswith(prefix + ".")}


def linear(x: GraphNode, weight: GraphNode, bias: Optional[GraphNode] = None) -> GraphNode:
    out = matmul(x, weight, transpose_b=True)
    return out if bias is None else add(out, bias)


def embed_profile(one_hot: GraphNode, params: Params) -> GraphNode:
    """Dense profile embedding W_D . one_hot (no bias)."""
    return matmul(one_hot, params["W_D"], transpose_b=True)


def plstm_step(
    behavior: GraphNode,
    h_prev: GraphNode,
    c_prev: GraphNode,
    profile_embedding: Optional[GraphNode],
    gates: Params,
) -> Tuple[GraphNode, GraphNode]:
    """
    One Profile-aware LSTM step.

    The input, forget and output gates see the profile embedding through
    W_iD, W_fD and W_oD; the cell candidate does not.
    """
    def gate(g: str) -> GraphNode:
        terms = [
            matmul(behavior, gates[f"W_{g}B"], transpose_b=True),
            matmul(h_prev, gates[f"W_{g}h"], transpose_b=True),
        ]
        if g != "c" and profile_embedding is not None and f"W_{g}D" in gates:
            terms.append(matmul(profile_embedding, gates[f"W_{g}D"], transpose_b=True))
        terms.append(gates[f"b_{g}"])
        return add_n(terms)

    i = sigmoid(gate("i"))
    f = sigmoid(gate("f"))
    o = sigmoid(gate("o"))
    candidate = tanh(gate("c"))
    c = add(elementwise_multiply(f, c_prev), elementwise_multiply(i, candidate))
    h = elementwise_multiply(o, tanh(c))
    return h, c


def lstm_step(
    x: GraphNode,
    h_prev: GraphNode,
    c_prev: GraphNode,
    gates: Params,
) -> Tuple[GraphNode, GraphNode]:
    """Standard LSTM step (the trend encoders); weights are W_{g}y, W_{g}h, b_{g}."""
    def gate(g: str) -> GraphNode:
        return add_n([
            matmul(x, gates[f"W_{g}y"], transpose_b=True),
            matmul(h_prev, gates[f"W_{g}h"], transpose_b=True),
            gates[f"b_{g}"],
        ])

    i = sigmoid(gate("i"))
    f = sigmoid(gate("f"))
    o = sigmoid(gate("o"))
    c = add(elementwise_multiply(f, c_prev), elementwise_multiply(i, tanh(gate("c"))))
    return elementwise_multiply(o, tanh(c)), c


def run_plstm(
    days: np.ndarray,
    profile_embedding: Optional[GraphNode],
    gates: Params,
) -> List[GraphNode]:
    """
    Run a Profile-aware LSTM over ``days`` of shape (X, d) or (batch, X, d)
    from the zero state and return the hidden state of every day.
    """
    hidden = gates["W_ih"].shape[0]
    batched = days.ndim == 3
    state_shape = (days.shape[0], hidden) if batched else (hidden,)
    h = constant(np.zeros(state_shape))
    c = constant(np.zeros(state_shape))
    states = []
    for x in range(days.shape[-2]):
        features = constant(days[:, x, :] if batched else days[x])
        h, c = plstm_step(features, h, c, profile_embedding, gates)
        states.append(h)
    return states


def soft_attention(
    hidden_states: Sequence[GraphNode],
    profile_embedding: Optional[GraphNode],
    params: Params,
) -> Tuple[GraphNode, GraphNode]:
    """
    Score each day with W_a0 tanh(W_a1 h_x + W_a2 D + b_a), normalize the
    scores over days and pool the day states with the resulting weights.

    Returns:
        (alpha of shape (..., X), pooled representation)
    """
    shared = params["b_a"]
    if profile_embedding is not None and "W_a2" in params:
        shared = add(matmul(profile_embedding, params["W_a2"], transpose_b=True), shared)
    scores = [
        matmul(tanh(add(matmul(h, params["W_a1"], transpose_b=True), shared)),
               params["W_a0"], transpose_b=True)
        for h in hidden_states
    ]
    alpha = softmax(concat(scores))
    pooled = add_n([
        elementwise_multiply(take(alpha, x, x + 1), h) for x, h in enumerate(hidden_states)
    ])
    return alpha, pooled


def mean_pooling(hidden_states: Sequence[GraphNode]) -> Tuple[GraphNode, GraphNode]:
    """Uniform average over days; alpha is the constant 1/X."""
    days = len(hidden_states)
    first = hidden_states[0].value
    alpha_shape = (first.shape[0], days) if first.ndim == 2 else (days,)
    return constant(np.full(alpha_shape, 1.0 / days)), scale(add_n(list(hidden_states)), 1.0 / days)


def trend_encode(
    history: np.ndarray,
    gates: Params,
    mask: Optional[np.ndarray] = None,
) -> GraphNode:
    """
    Last hidden state of a standard LSTM over a variable-length label history.

    ``history`` is (T,) for one student or (batch, T) left-aligned and padded,
    with ``mask`` marking real steps. A student stops updating after its own
    last step; an empty history yields the zero state.
    """
    hidden = gates["W_ih"].shape[0]
    history = np.asarray(history, dtype=np.float64)
    batched = history.ndim == 2
    state_shape = (history.shape[0], hidden) if batched else (hidden,)
    h = constant(np.zeros(state_shape))
    c = constant(np.zeros(state_shape))
    for t in range(history.shape[-1]):
        y = constant(history[:, t:t + 1] if batched else history[t:t + 1])
        h_new, c_new = lstm_step(y, h, c, gates)
        if mask is None or mask[:, t].all():
            h, c = h_new, c_new
            continue
        keep_new = constant(mask[:, t:t + 1])
        keep_old = constant(1.0 - mask[:, t:t + 1])
        h = add(elementwise_multiply(keep_new, h_new), elementwise_multiply(keep_old, h))
        c = add(elementwise_multiply(keep_new, c_new), elementwise_multiply(keep_old, c))
    return h


def build_task_inputs(
    shared: GraphNode,
    trends: Sequence[GraphNode],
    course_features: Sequence[Optional[GraphNode]],
) -> List[GraphNode]:
    """R_n = R + trend_n (+ v_n when the task has course features), concatenated."""
    inputs = []
    for trend, course in zip(trends, course_features):
        parts = [shared, trend] if course is None else [shared, trend, course]
        inputs.append(concat(parts))
    return inputs


def activate(x: GraphNode, activation: str, slope: Optional[GraphNode] = None) -> GraphNode:
    if activation == "prelu":
        return prelu(x, slope)
    if activation == "relu":
        return relu(x)
    return tanh(x)


def interaction_unit(
    inputs: Sequence[GraphNode],
    unit: Sequence[Params],
    activation: str = "prelu",
    isolate_task: Optional[int] = None,
) -> Tuple[List[GraphNode], Dict[Tuple[int, int], GraphNode]]:
    """
    One Multi-task Interaction Unit.

    Each task representation goes through its own FC layer to the common
    width; beta_ij = sigmoid(<R_i', R_j'>) is computed once per pair and the
    updated R_n is R_n' plus the beta-weighted FC outputs of the other tasks.
    With ``isolate_task`` set the other branches contribute zero vectors.
    """
    projected: List[GraphNode] = []
    for n, (x, layer) in enumerate(zip(inputs, unit)):
        if isolate_task is not None and n != isolate_task:
            projected.append(None)
            continue
        projected.append(activate(linear(x, layer["W"], layer["b"]), activation, layer.get("slope")))
    if isolate_task is not None:
        zeros = constant(np.zeros(projected[isolate_task].shape))
        projected = [zeros if p is None else p for p in projected]

    tasks = len(projected)
    betas = {
        (i, j): sigmoid(dot(projected[i], projected[j]))
        for i in range(tasks) for j in range(i + 1, tasks)
    }
    outputs = []
    for n in range(tasks):
        terms = [projected[n]]
        for m in range(tasks):
            if m != n:
                beta = betas[(min(n, m), max(n, m))]
                terms.append(elementwise_multiply(beta, projected[m]))
        outputs.append(add_n(terms))
    return outputs, betas


def output_head(representation: GraphNode, params: Params) -> GraphNode:
    """tanh(W_O R + b_O), one prediction per student."""
    return tanh(linear(representation, params["W"], params["b"]))
