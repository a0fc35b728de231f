import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from datetime import datetime
from pathlib import Path
from typing import Dict, Any, Optional

import numpy as np
from pydantic import ValidationError

from ..models import RunConfig, ProblemName, OPTIMIZER_DEFAULTS
from .errors import ConfigurationError

CONFIG_SECTIONS = ("run", "optimizer", "physics", "decision")

# Spawn order is part of the reproducibility contract; append new streams at the end only.
STREAM_NAMES = ("init", "updates", "boundary", "leader")


def setup_logging(log_level: str = "INFO") -> None:
    """Set up application logging with structured fields"""

    class StructuredFormatter(logging.Formatter):
        """Custom formatter that appends run context passed through `extra`"""

        context_fields = ("run_id", "problem", "seed", "generation", "objectives")

        def format(self, record):
            formatted = super().format(record)

            extras = []
            for field in self.context_fields:
                value = getattr(record, field, None)
                if value is not None:
                    extras.append(f"{field}={value}")

            if extras:
                formatted += f" [{', '.join(extras)}]"

            return formatted

    handler = logging.StreamHandler()
    formatter = StructuredFormatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level.upper()))
    root_logger.handlers.clear()
    root_logger.addHandler(handler)

    # Reduce noise from external libraries
    logging.getLogger("asyncio").setLevel(logging.WARNING)


def load_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Load a sectioned TOML run configuration, apply CLI overrides and validate it"""

    document: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            with open(path, "rb") as handle:
                document = tomllib.load(handle)
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"cannot parse {path}: {e}")

    for key, value in document.items():
        if key not in CONFIG_SECTIONS:
            raise ConfigurationError(f"unknown config section or key: {key}")
        if not isinstance(value, dict):
            raise ConfigurationError(f"config section [{key}] must be a table")

    data = dict(document.get("run", {}))
    for key in CONFIG_SECTIONS:
        if key in data:
            raise ConfigurationError(f"unknown config section or key: run.{key}")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value

    problem = data.get("problem")
    try:
        problem = ProblemName(problem)
    except ValueError:
        raise ConfigurationError(f"problem: expected one of {[p.value for p in ProblemName]}, got {problem!r}")

    data["optimizer"] = {**OPTIMIZER_DEFAULTS[problem], **document.get("optimizer", {})}
    data["physics"] = document.get("physics", {})
    data["decision"] = document.get("decision", {})

    try:
        config = RunConfig(**data)
    except ValidationError as e:
        raise ConfigurationError(describe_validation_error(e))

    validate_config(config)
    return config


def describe_validation_error(error: ValidationError) -> str:
    problems = []
    for item in error.errors():
        key = ".".join(str(part) for part in item["loc"]) or "config"
        problems.append(f"{key}: {item['msg']}")
    return "; ".join(problems)


def validate_config(config: RunConfig) -> bool:
    """Cross-field checks that need the resolved problem"""

    weights = config.resolved_weights().weights
    if config.problem.is_quantum and len(weights) != config.objectives:
        raise ConfigurationError(
            f"decision.topsis_weights: {len(weights)} weights for {config.objectives} objectives"
        )
    return True


class RandomStreams:
    """Named, independent random streams spawned from one root seed"""

    def __init__(self, seed: int):
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
        self._generators = {
            name: np.random.default_rng(child) for name, child in zip(STREAM_NAMES, children)
        }

    def stream(self, name: str) -> np.random.Generator:
        return self._generators[name]

    @property
    def init(self) -> np.random.Generator:
        return self.stream("init")

    @property
    def updates(self) -> np.random.Generator:
        return self.stream("updates")

    @property
    def boundary(self) -> np.random.Generator:
        return self.stream("boundary")

    @property
    def leader(self) -> np.random.Generator:
        return self.stream("leader")


def calculate_processing_time(start_time: datetime, end_time: Optional[datetime] = None) -> float:
    """Calculate processing time in seconds"""
    if end_time is None:
        end_time = datetime.now()

    return (end_time - start_time).total_seconds()


class ProcessingTimer:
    """Context manager for timing operations"""

    def __init__(self, operation_name: str, context: Optional[Dict[str, Any]] = None):
        self.operation_name = operation_name
        self.context = context or {}
        self.start_time = None
        self.end_time = None

    def __enter__(self):
        self.start_time = datetime.now()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.end_time = datetime.now()
        duration = calculate_processing_time(self.start_time, self.end_time)

        logger = logging.getLogger(__name__)
        if exc_type:
            logger.error(f"{self.operation_name} failed after {duration:.2f}s: {exc_val}", extra=self.context)
        else:
            logger.info(f"{self.operation_name} completed in {duration:.2f}s", extra=self.context)

    @property
    def duration(self) -> float:
        if self.start_time and self.end_time:
            return calculate_processing_time(self.start_time, self.end_time)
        return 0.0

