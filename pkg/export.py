"""
File formats and run manifests

Every numeric CSV cell is written with repr(), the shortest decimal string
that round-trips to the same double, so reruns with a fixed seed are
byte-identical.
"""

import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from analysis import PowerLawFit, RegVarDiag, TailCurve, TailSource
from config import TOOL_VERSION
from errors import ConfigurationError, DomainError
from schemas import (
    EXPONENTIAL_FIT_SCHEMA,
    FIT_REPORT_SCHEMA,
    LOSER_SIDECAR_SCHEMA,
    MANIFEST_SCHEMA,
    validate_payload,
)

logger = logging.getLogger(__name__)

SNAPSHOT_FIELDS = ["iteration", "agent", "count"]
COUNT_FIELDS = ["count"]
TAIL_FIELDS = ["omega", "tail_prob"]
LOSER_FIELDS = ["final_count"]
PMF_FIELDS = ["omega", "t", "p", "flag"]
PMF_APPROX_FIELDS = PMF_FIELDS + ["p_hat", "approx_flag"]
COEFFICIENT_FIELDS = ["omega", "i", "sign", "log_abs"]
REGVAR_FIELDS = ["omega", "d_omega"]


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def jsonable(value: Any) -> Any:
    """Convert numpy scalars and containers to plain JSON values; non-finite floats become strings"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_csv(path: str, fieldnames: Sequence[str], rows: Iterable[Dict[str, Any]]) -> str:
    _ensure_parent(path)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: format_value(row.get(key)) for key in fieldnames})
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def write_json(path: str, payload: Dict[str, Any]) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")
    logger.info(f"Wrote {path}")
    return path


def read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Could not read JSON from {path}: {e}")
        raise ConfigurationError(f"Could not read JSON from {path}: {e}") from e


def write_snapshots(path: str, snapshots: Sequence) -> str:
    rows = (
        {"iteration": iteration, "agent": agent, "count": count}
        for iteration, counts in snapshots
        for agent, count in enumerate(counts.tolist())
    )
    return write_csv(path, SNAPSHOT_FIELDS, rows)


def write_counts(path: str, counts: np.ndarray) -> str:
    """One checkpoint's counts, one agent per row, as fit input"""
    return write_csv(path, COUNT_FIELDS, ({"count": c} for c in counts.tolist()))


def write_tail(path: str, curve: TailCurve) -> str:
    rows = ({"omega": omega, "tail_prob": prob} for omega, prob in curve.points)
    return write_csv(path, TAIL_FIELDS, rows)


def read_tail(path: str, source: TailSource = TailSource.EMPIRICAL) -> TailCurve:
    """Load an omega,tail_prob CSV"""
    omegas, probs = [], []
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            for row in csv.DictReader(handle):
                omegas.append(float(row["omega"]))
                probs.append(float(row["tail_prob"]))
    except (OSError, KeyError, ValueError) as e:
        logger.error(f"Could not read tail CSV {path}: {e}")
        raise DomainError(f"Could not read tail CSV {path}: {e}") from e
    return TailCurve(omegas=np.array(omegas), probs=np.array(probs), source=source)


def read_samples(path: str, column: Optional[str] = None) -> np.ndarray:
    """Numeric values of one CSV column (the first one by default)"""
    values = []
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if not reader.fieldnames:
                raise DomainError(f"{path} has no header row")
            name = column or reader.fieldnames[0]
            if name not in reader.fieldnames:
                raise DomainError(f"{path} has no column '{name}'")
            for row in reader:
                values.append(float(row[name]))
    except DomainError:
        raise
    except (OSError, ValueError) as e:
        logger.error(f"Could not read samples from {path}: {e}")
        raise DomainError(f"Could not read samples from {path}: {e}") from e
    return np.array(values, dtype=np.float64)


def write_loser_sample(csv_path: str, json_path: str, sample) -> List[str]:
    """final_count CSV plus the JSON sidecar"""
    sidecar = sample.sidecar()
    validate_payload(jsonable(sidecar), LOSER_SIDECAR_SCHEMA, "loser sidecar")
    write_csv(csv_path, LOSER_FIELDS, ({"final_count": c} for c in sample.counts.tolist()))
    write_json(json_path, sidecar)
    return [csv_path, json_path]


def write_pmf(path: str, rows: Sequence[Dict[str, Any]], approx: bool = False) -> str:
    return write_csv(path, PMF_APPROX_FIELDS if approx else PMF_FIELDS, rows)


def write_coefficients(path: str, rows: Sequence[Dict[str, Any]]) -> str:
    return write_csv(path, COEFFICIENT_FIELDS, rows)


def write_fit(path: str, fit: PowerLawFit) -> str:
    payload = fit.to_dict()
    validate_payload(payload, FIT_REPORT_SCHEMA, "fit report")
    return write_json(path, payload)


def write_exponential_fit(path: str, rate: float, n: int) -> str:
    payload = {"rate": float(rate), "n": int(n)}
    validate_payload(payload, EXPONENTIAL_FIT_SCHEMA, "exponential fit")
    return write_json(path, payload)


def write_regvar(path: str, diag: RegVarDiag) -> str:
    rows = ({"omega": omega, "d_omega": d} for omega, d in diag.values)
    return write_csv(path, REGVAR_FIELDS, rows)


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    """What ran, with which parameters and seed, and what it wrote"""
    command: str
    parameters: Dict[str, Any]
    seed: Optional[int] = None
    tool_version: str = TOOL_VERSION
    started_at: str = field(default_factory=now_iso)
    finished_at: str = ""
    outputs: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.parameters = jsonable(self.parameters)

    def finish(self, outputs: Sequence[str]) -> "RunManifest":
        self.outputs = list(outputs)
        self.finished_at = now_iso()
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        validate_payload(data, MANIFEST_SCHEMA, "manifest")
        return cls(**data)

    def save(self, path: str) -> str:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str) -> "RunManifest":
        return cls.from_dict(read_json(path))
