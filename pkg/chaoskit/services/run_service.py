"""
Config loading, experiment dispatch and persistence of run artifacts.
"""

import json
import logging
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from pydantic import ValidationError

from chaoskit import __version__
from chaoskit.config import get_settings
from chaoskit.core.exceptions import ConfigValidationError
from chaoskit.core.workers import resolve_threads
from chaoskit.models.model_spec import ModelSpec
from chaoskit.schemas.experiment import ExperimentConfig
from chaoskit.schemas.reports import RunRecord
from chaoskit.services.experiment_service import EXPERIMENTS, ExperimentOutcome
from chaoskit.services.model_service import load_model
from chaoskit.utils.helpers import file_digest, write_csv, write_json

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def field_message(error: ValidationError) -> str:
    first = error.errors()[0]
    loc = ".".join(str(part) for part in first.get("loc", ()))
    return f"{loc}: {first.get('msg', str(error))}" if loc else first.get("msg", str(error))


def read_document(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as e:
        raise ConfigValidationError(f"config: cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigValidationError(f"config: malformed JSON at line {e.lineno} column {e.colno}: {e.msg}")
    if not isinstance(document, dict):
        raise ConfigValidationError("config: top level must be a JSON object")
    return document


def parse_config(document: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Validate an experiment document; command-line overrides win over the file."""
    document = dict(document)
    for key, value in (overrides or {}).items():
        if value is not None:
            document[key] = value
    try:
        return ExperimentConfig(**document)
    except ValidationError as e:
        raise ConfigValidationError(field_message(e))


def resolve_model(cfg: ExperimentConfig, base_dir: Optional[Path] = None) -> Optional[ModelSpec]:
    """Model documents given as paths are resolved relative to the config file."""
    if cfg.model is None:
        return None
    if isinstance(cfg.model, str):
        path = Path(cfg.model)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return load_model(path)
    return load_model(cfg.model)


def output_dir(cfg: ExperimentConfig) -> Path:
    """The configured directory, else <OUTPUT_DIR>/<kind>-<seed>."""
    return Path(cfg.out) if cfg.out else Path(get_settings()["OUTPUT_DIR"]) / f"{cfg.kind}-{cfg.seed}"


def write_outputs(out_dir: Path, outcome: ExperimentOutcome) -> Dict[str, str]:
    """Write every table and report.json; returns sha256 digests keyed by file name."""
    written = []
    for name, (header, rows) in sorted(outcome.tables.items()):
        written.append(write_csv(out_dir / f"{name}.csv", header, rows))
    report = dict(outcome.report)
    report["passed"] = outcome.passed
    written.append(write_json(out_dir / "report.json", report))
    return {path.name: file_digest(path) for path in written}


def execute(
    cfg: ExperimentConfig,
    model: Optional[ModelSpec],
    out_dir: PathLike,
    threads: Optional[int] = None,
) -> Tuple[RunRecord, ExperimentOutcome]:
    """Run one validated experiment and persist its artifacts and run record."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigValidationError(f"out: cannot create output directory {out_dir}: {e}")
    workers = resolve_threads(threads)
    started_at = datetime.now(timezone.utc).isoformat()
    clock = time.perf_counter()
    logger.info(f"Running experiment kind={cfg.kind} seed={cfg.seed} threads={workers}")
    outcome = EXPERIMENTS[cfg.kind](model, cfg, threads=workers)
    digests = write_outputs(out_dir, outcome)
    record = RunRecord(
        kind=cfg.kind,
        config=cfg.model_dump(mode="json"),
        version=__version__,
        started_at=started_at,
        wall_clock_seconds=time.perf_counter() - clock,
        threads=workers,
        digests=digests,
        summary={key: value for key, value in outcome.report.items() if not isinstance(value, (dict, list))},
        passed=outcome.passed,
    )
    write_json(out_dir / "run_record.json", record.model_dump())
    verdict = "PASS" if outcome.passed else ("FAIL" if outcome.passed is False else "REPORT")
    logger.info(f"Experiment {cfg.kind} finished: {verdict} ({record.wall_clock_seconds:.1f}s)")
    return record, outcome


def run(
    cfg_path: PathLike,
    seed: Optional[int] = None,
    out: Optional[PathLike] = None,
    threads: Optional[int] = None,
    kind: Optional[str] = None,
) -> RunRecord:
    """Load, validate and execute the experiment described by a JSON config file."""
    cfg_path = Path(cfg_path)
    overrides = {"seed": seed, "out": str(out) if out is not None else None, "kind": kind}
    cfg = parse_config(read_document(cfg_path), overrides)
    model = resolve_model(cfg, cfg_path.parent)
    record, _ = execute(cfg, model, output_dir(cfg), threads)
    return record
