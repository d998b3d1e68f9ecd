"""
Composes the DAPAMT layers into the full forward pass.

Profile embedding -> one Profile-aware LSTM per behavior kind -> pooling over
days -> trend LSTMs and task inputs -> stacked Multi-task Interaction Units
-> dropout -> one tanh head per task.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from autograd import GraphNode, concat, constant, dropout
from data.dataset import Dataset, TaskSample
from errors import ModelError
from graph.nodes import (
    GATES,
    build_task_inputs,
    embed_profile,
    interaction_unit,
    mean_pooling,
    output_head,
    run_plstm,
    scoped,
    soft_attention,
    trend_encode,
)
from graph.state import AttentionTrace, ParameterStore
from models import TASK_NAMES, ModelConfig

logger = logging.getLogger(__name__)


def behavior_names(config: ModelConfig) -> List[str]:
    if len(config.behavior_dims) == 2:
        return ["library", "dormitory"]
    return [f"behavior{m + 1}" for m in range(len(config.behavior_dims))]


def task_names(config: ModelConfig) -> List[str]:
    if config.task_count == len(TASK_NAMES):
        return list(TASK_NAMES)
    return [f"task{n + 1}" for n in range(config.task_count)]


def course_dims(config: ModelConfig) -> List[int]:
    return list(config.course_dims) if config.use_course_features else [0] * config.task_count


def resolve_model_config(config: ModelConfig, dataset: Dataset) -> ModelConfig:
    """Fill the input widths from the dataset so a checkpoint records them."""
    return config.model_copy(update={
        "profile_dim": dataset.profile_dim,
        "days": dataset.days,
        "behavior_dims": dataset.behavior_dims,
        "course_dims": dataset.course_dims,
    })


# ============================================================================
# Initialization
# ============================================================================

def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def init_parameters(config: ModelConfig, rng: np.random.Generator) -> ParameterStore:
    """
    Matrices are drawn from U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases start at
    zero and PReLU slopes at ``prelu_init``. Names and order are deterministic.
    """
    store = ParameterStore()
    tasks = task_names(config)

    def matrix(name: str, rows: int, cols: int, frozen: bool = False) -> None:
        values = np.zeros((rows, cols)) if frozen else _uniform(rng, (rows, cols), cols)
        store.add(name, values, frozen=frozen)

    hidden_total = sum(config.hidden_dims)
    shared_width = config.embed_dim + hidden_total

    if not config.history_only:
        matrix("embed.W_D", config.embed_dim, config.profile_dim)
        for kind, width, hidden in zip(behavior_names(config), config.behavior_dims, config.hidden_dims):
            for g in GATES:
                matrix(f"plstm.{kind}.W_{g}B", hidden, width)
                matrix(f"plstm.{kind}.W_{g}h", hidden, hidden)
                if g != "c":
                    matrix(f"plstm.{kind}.W_{g}D", hidden, config.embed_dim,
                           frozen=not config.profile_gates)
                store.add(f"plstm.{kind}.b_{g}", np.zeros(hidden))
        if config.pooling == "attention":
            attention_dim = config.attention_dim or hidden_total
            matrix("attention.W_a0", 1, attention_dim)
            matrix("attention.W_a1", attention_dim, hidden_total)
            matrix("attention.W_a2", attention_dim, config.embed_dim, frozen=not config.profile_gates)
            store.add("attention.b_a", np.zeros(attention_dim))

    for n, task in enumerate(tasks):
        inactive = config.isolate_task is not None and n != config.isolate_task
        for g in GATES:
            matrix(f"trend.{task}.W_{g}y", config.trend_hidden, 1)
            matrix(f"trend.{task}.W_{g}h", config.trend_hidden, config.trend_hidden)
            store.add(f"trend.{task}.b_{g}", np.zeros(config.trend_hidden))
        if inactive:
            for g in GATES:
                for suffix in (f"W_{g}y", f"W_{g}h", f"b_{g}"):
                    store.frozen.add(f"trend.{task}.{suffix}")

    head_width = config.trend_hidden if config.history_only else config.unit_fc_dim
    if not config.history_only:
        dims = course_dims(config)
        for layer in range(1, config.num_units + 1):
            for n, task in enumerate(tasks):
                inactive = config.isolate_task is not None and n != config.isolate_task
                fan_in = (shared_width + config.trend_hidden + dims[n]) if layer == 1 else config.unit_fc_dim
                matrix(f"unit{layer}.{task}.W", config.unit_fc_dim, fan_in)
                store.add(f"unit{layer}.{task}.b", np.zeros(config.unit_fc_dim))
                if config.fc_activation == "prelu":
                    store.add(f"unit{layer}.{task}.slope", np.array([config.prelu_init]))
                if inactive:
                    for suffix in ("W", "b", "slope"):
                        if f"unit{layer}.{task}.{suffix}" in store:
                            store.frozen.add(f"unit{layer}.{task}.{suffix}")

    for n, task in enumerate(tasks):
        matrix(f"head.{task}.W", 1, head_width)
        store.add(f"head.{task}.b", np.zeros(1))
        if config.isolate_task is not None and n != config.isolate_task:
            store.frozen.update({f"head.{task}.W", f"head.{task}.b"})

    logger.debug(
        f"Initialized {len(store)} parameter arrays ({store.size} values)",
        extra={"extra_data": {"frozen": sorted(store.frozen)}},
    )
    return store


# ============================================================================
# Batches
# ============================================================================

@dataclass
class Batch:
    student_ids: List[str]
    profiles: np.ndarray                          # (b, p)
    behaviors: List[np.ndarray]                   # per kind (b, X, d_m)
    histories: List[np.ndarray]                   # per task (b, T_max), left aligned
    history_masks: List[np.ndarray]               # per task (b, T_max)
    course_features: List[Optional[np.ndarray]]   # per task (b, c_n)
    labels: Optional[np.ndarray]                  # (b, N) scaled


def make_batch(samples: Sequence[TaskSample], config: ModelConfig) -> Batch:
    if not samples:
        raise ModelError("Cannot build a batch from zero samples")
    task_count = config.task_count
    dims = course_dims(config)
    for sample in samples:
        days = [b.shape[0] for b in sample.behaviors]
        if any(d != config.days for d in days):
            raise ModelError(
                f"Student {sample.student_id} has {days} behavior days, model expects {config.days}"
            )

    histories, masks = [], []
    for n in range(task_count):
        longest = max(s.histories[n].size for s in samples)
        padded = np.zeros((len(samples), longest))
        mask = np.zeros((len(samples), longest))
        for row, sample in enumerate(samples):
            length = sample.histories[n].size
            padded[row, :length] = sample.histories[n]
            mask[row, :length] = 1.0
        histories.append(padded)
        masks.append(mask)

    course_features = []
    for n in range(task_count):
        if dims[n] == 0:
            course_features.append(None)
            continue
        rows = [s.course_features[n] for s in samples]
        if any(r is None or r.size != dims[n] for r in rows):
            raise ModelError(f"Task {n + 1} expects {dims[n]} course features for every student")
        course_features.append(np.stack(rows))

    labels = None
    if all(s.labels is not None for s in samples):
        labels = np.stack([s.labels for s in samples])

    return Batch(
        student_ids=[s.student_id for s in samples],
        profiles=np.stack([s.profile for s in samples]),
        behaviors=[np.stack([s.behaviors[m] for s in samples]) for m in range(len(config.behavior_dims))],
        histories=histories,
        history_masks=masks,
        course_features=course_features,
        labels=labels,
    )


# ============================================================================
# Forward
# ============================================================================

@dataclass
class ForwardResult:
    predictions: GraphNode                        # (b, N), inside (-1, 1)
    trace: AttentionTrace
    shared: Optional[GraphNode] = None            # R = D + B, before the task branches
    pooled: Optional[GraphNode] = None            # pooled behavior representation B


def forward(
    samples: Union[Batch, Sequence[TaskSample]],
    params: Union[ParameterStore, Mapping[str, GraphNode]],
    config: ModelConfig,
    mode: str = "eval",
    rng: Optional[np.random.Generator] = None,
) -> ForwardResult:
    """Evaluate the network on a batch; rows of every array are students."""
    batch = samples if isinstance(samples, Batch) else make_batch(samples, config)
    nodes = params.bind() if isinstance(params, ParameterStore) else params
    tasks = task_names(config)
    size = len(batch.student_ids)

    trends = []
    for n, task in enumerate(tasks):
        if config.isolate_task is not None and n != config.isolate_task:
            trends.append(constant(np.zeros((size, config.trend_hidden))))
            continue
        trends.append(
            trend_encode(batch.histories[n], scoped(nodes, f"trend.{task}"), batch.history_masks[n])
        )

    if config.history_only:
        representations = trends
        alpha = np.full((size, config.days), 1.0 / config.days)
        betas: List[Dict] = []
        shared = pooled = None
    else:
        profile = embed_profile(constant(batch.profiles), scoped(nodes, "embed"))
        per_kind = [
            run_plstm(days, profile, scoped(nodes, f"plstm.{kind}"))
            for kind, days in zip(behavior_names(config), batch.behaviors)
        ]
        day_states = [concat([states[x] for states in per_kind]) for x in range(config.days)]
        if config.pooling == "attention":
            alpha_node, pooled = soft_attention(day_states, profile, scoped(nodes, "attention"))
        else:
            alpha_node, pooled = mean_pooling(day_states)
        alpha = alpha_node.value
        shared = concat([profile, pooled])

        courses = [None if v is None else constant(v) for v in batch.course_features]
        representations = build_task_inputs(shared, trends, courses)
        betas = []
        for layer in range(1, config.num_units + 1):
            unit = [scoped(nodes, f"unit{layer}.{task}") for task in tasks]
            representations, unit_betas = interaction_unit(
                representations, unit, config.fc_activation, config.isolate_task
            )
            betas.append({pair: node.value.reshape(size) for pair, node in unit_betas.items()})

    outputs = []
    for n, task in enumerate(tasks):
        if config.isolate_task is not None and n != config.isolate_task:
            outputs.append(constant(np.zeros((size, 1))))
            continue
        representation = dropout(representations[n], config.dropout_rate, mode, rng)
        outputs.append(output_head(representation, scoped(nodes, f"head.{task}")))

    trace = AttentionTrace(student_ids=list(batch.student_ids), alpha=np.array(alpha), betas=betas)
    return ForwardResult(predictions=concat(outputs), trace=trace, shared=shared, pooled=pooled)


def predict_scaled(
    params: ParameterStore,
    samples: Sequence[TaskSample],
    config: ModelConfig,
    batch_size: int = 256,
) -> np.ndarray:
    """Eval-mode predictions in scaled label space, one row per sample."""
    rows = []
    for start in range(0, len(samples), batch_size):
        result = forward(samples[start:start + batch_size], params, config, mode="eval")
        rows.append(result.predictions.value)
    return np.concatenate(rows) if rows else np.zeros((0, config.task_count))


def collect_traces(
    params: ParameterStore,
    samples: Sequence[TaskSample],
    config: ModelConfig,
    batch_size: int = 256,
) -> AttentionTrace:
    traces = [
        forward(samples[start:start + batch_size], params, config, mode="eval").trace
        for start in range(0, len(samples), batch_size)
    ]
    return AttentionTrace.concatenate(traces)
