"""
Checkpoint files: parameter values, the model configuration and the scalers
needed to de-scale predictions, in one JSON document.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict

import numpy as np
from pydantic import ValidationError

from config import Config
from data.dataset import Dataset
from data.scaling import Scaler
from errors import CheckpointError, ScalerError
from graph.state import ParameterStore
from graph.workflow import init_parameters, resolve_model_config
from models import ModelConfig
from utils.output_manager import atomic_write_text

logger = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    params: ParameterStore
    config: ModelConfig
    scalers: Dict[str, Scaler]


def checkpoint_payload(params: ParameterStore, config: ModelConfig, scalers: Dict[str, Scaler]) -> Dict:
    return {
        "format_version": Config.CHECKPOINT_FORMAT_VERSION,
        "model_config": config.model_dump(),
        "scalers": {name: scaler.to_dict() for name, scaler in scalers.items()},
        "frozen": sorted(params.frozen),
        "parameters": {
            name: {"shape": list(array.shape), "values": array.reshape(-1).tolist()}
            for name, array in params.items()
        },
    }


def save_checkpoint(path: Path, params: ParameterStore, config: ModelConfig,
                    scalers: Dict[str, Scaler]) -> Path:
    text = json.dumps(checkpoint_payload(params, config, scalers), indent=1)
    return atomic_write_text(Path(path), text)


def expected_shapes(config: ModelConfig) -> Dict[str, tuple]:
    return init_parameters(config, np.random.default_rng(0)).shapes()


def load_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint and reject it unless every parameter fits its config."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise CheckpointError(f"Checkpoint '{path}' not found.") from e
    except json.JSONDecodeError as e:
        raise CheckpointError(f"Checkpoint '{path}' is not valid JSON: {e}") from e

    if payload.get("format_version") != Config.CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint format version {payload.get('format_version')!r}")
    try:
        config = ModelConfig.model_validate(payload["model_config"])
        raw_params = payload["parameters"]
        scalers = {name: Scaler.from_dict(s) for name, s in payload.get("scalers", {}).items()}
    except (KeyError, ValidationError, ScalerError) as e:
        raise CheckpointError(f"Checkpoint '{path}' is malformed: {e}") from e

    expected = expected_shapes(config)
    if list(raw_params) != list(expected):
        missing = sorted(set(expected) - set(raw_params))
        extra = sorted(set(raw_params) - set(expected))
        raise CheckpointError(
            f"Checkpoint parameters do not match the model config (missing {missing[:5]}, unexpected {extra[:5]})"
        )

    params = ParameterStore()
    for name, entry in raw_params.items():
        shape = tuple(entry.get("shape", ()))
        values = np.asarray(entry.get("values", []), dtype=np.float64)
        if shape != expected[name] or values.size != int(np.prod(shape)):
            raise CheckpointError(
                f"Parameter '{name}' has shape {shape} with {values.size} values, "
                f"model expects {expected[name]}"
            )
        params.add(name, values.reshape(shape), frozen=name in set(payload.get("frozen", [])))

    logger.info(f"Loaded checkpoint {path} ({len(params)} arrays)")
    return Checkpoint(params=params, config=config, scalers=scalers)


def ensure_compatible(checkpoint: Checkpoint, dataset: Dataset) -> None:
    """
    Reject a dataset whose input widths or scalers differ from the checkpoint's.

    Inputs and labels of the dataset are already scaled, so they are only
    meaningful to a model trained under the same scalers.
    """
    resolved = resolve_model_config(checkpoint.config, dataset)
    for field in ("profile_dim", "days", "behavior_dims", "course_dims"):
        have, want = getattr(resolved, field), getattr(checkpoint.config, field)
        if have != want:
            raise CheckpointError(f"Dataset {field} is {have}, checkpoint expects {want}")
    differing = sorted(
        name for name in set(checkpoint.scalers) | set(dataset.scalers)
        if name not in checkpoint.scalers or name not in dataset.scalers
        or checkpoint.scalers[name].to_dict() != dataset.scalers[name].to_dict()
    )
    if differing:
        raise ScalerError(f"Dataset scalers differ from the checkpoint's: {', '.join(differing)}")
