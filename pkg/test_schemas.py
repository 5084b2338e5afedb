"""
Tests for JSON payload validation: manifests, sidecars, fit reports and figure configs
"""

import logging
import os
import tempfile

import pytest

from errors import ConfigurationError
from export import RunManifest, write_exponential_fit, write_json
from schemas import (
    EXPONENTIAL_FIT_SCHEMA,
    FIGURE_CONFIG_SCHEMA,
    FIT_REPORT_SCHEMA,
    LOSER_SIDECAR_SCHEMA,
    MANIFEST_SCHEMA,
    validate_payload,
)
from suite_runner import run_tests

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def _manifest(**changes):
    payload = {
        "command": "fit",
        "parameters": {"input": "losers.csv", "xmin": 10},
        "seed": None,
        "tool_version": "1.0.0",
        "started_at": "2026-01-01T00:00:00+00:00",
        "finished_at": "2026-01-01T00:00:01+00:00",
        "outputs": ["output/fit.json"],
        "notes": [],
    }
    payload.update(changes)
    return payload


def test_valid_manifest_passes():
    validate_payload(_manifest(), MANIFEST_SCHEMA, "manifest")
    validate_payload(_manifest(seed=42), MANIFEST_SCHEMA, "manifest")
    logger.info("✓ Well-formed manifest accepted")


def test_manifest_item_types_checked():
    with pytest.raises(ConfigurationError, match="outputs"):
        validate_payload(_manifest(outputs=[1, 2]), MANIFEST_SCHEMA, "manifest")
    with pytest.raises(ConfigurationError):
        validate_payload(_manifest(notes=["ok", None]), MANIFEST_SCHEMA, "manifest")
    with pytest.raises(ConfigurationError):
        validate_payload(_manifest(seed="42"), MANIFEST_SCHEMA, "manifest")
    with pytest.raises(ConfigurationError):
        validate_payload(_manifest(extra=True), MANIFEST_SCHEMA, "manifest")
    logger.info("✓ Array items, nullable seed and extra keys are checked")


def test_manifest_load_rejects_bad_outputs():
    with tempfile.TemporaryDirectory() as out:
        path = write_json(os.path.join(out, "bad.manifest.json"), _manifest(outputs=[1, 2]))
        with pytest.raises(ConfigurationError):
            RunManifest.load(path)
        path = write_json(os.path.join(out, "good.manifest.json"), _manifest())
        assert RunManifest.load(path).outputs == ["output/fit.json"]
    logger.info("✓ RunManifest.load validates before building")


def test_sidecar_types():
    sidecar = {"t_M": 1.0, "omega_M": None, "n_sims": 10, "n_losers": 9, "n_exploded": 1, "seed": 3}
    validate_payload(sidecar, LOSER_SIDECAR_SCHEMA, "sidecar")
    with pytest.raises(ConfigurationError, match="n_losers"):
        validate_payload(dict(sidecar, n_losers=True), LOSER_SIDECAR_SCHEMA, "sidecar")
    with pytest.raises(ConfigurationError):
        validate_payload(dict(sidecar, omega_M=10.5), LOSER_SIDECAR_SCHEMA, "sidecar")
    with pytest.raises(ConfigurationError):
        validate_payload({k: v for k, v in sidecar.items() if k != "t_M"}, LOSER_SIDECAR_SCHEMA, "sidecar")


def test_fit_reports():
    validate_payload({"beta": 2.5, "x_min": 10.0, "n_tail": 40, "std_err": 0.2}, FIT_REPORT_SCHEMA)
    with pytest.raises(ConfigurationError):
        validate_payload({"beta": 2.5, "x_min": 10.0, "n_tail": 40.5, "std_err": 0.2}, FIT_REPORT_SCHEMA)
    validate_payload({"rate": 0.5, "n": 100}, EXPONENTIAL_FIT_SCHEMA)
    with pytest.raises(ConfigurationError):
        validate_payload({"rate": 0.5}, EXPONENTIAL_FIT_SCHEMA)
    with tempfile.TemporaryDirectory() as out:
        assert os.path.exists(write_exponential_fit(os.path.join(out, "fit.json"), 0.5, 100))


def test_figure_config_nested_runs():
    good = {"runs": [{"command": "fit", "prefix": "a_", "parameters": {"input": "x.csv"}}]}
    validate_payload(good, FIGURE_CONFIG_SCHEMA, "figure")
    bad_key = {"runs": [{"command": "fit", "parameters": {}, "colour": "red"}]}
    with pytest.raises(ConfigurationError, match="runs"):
        validate_payload(bad_key, FIGURE_CONFIG_SCHEMA, "figure")
    bad_command = {"runs": [{"command": "plot", "parameters": {}}]}
    with pytest.raises(ConfigurationError):
        validate_payload(bad_command, FIGURE_CONFIG_SCHEMA, "figure")
    logger.info("✓ Figure config checks each run entry")


def main():
    """Run all tests"""
    tests = [
        ("Valid manifest", test_valid_manifest_passes),
        ("Manifest item types", test_manifest_item_types_checked),
        ("Manifest load", test_manifest_load_rejects_bad_outputs),
        ("Sidecar types", test_sidecar_types),
        ("Fit reports", test_fit_reports),
        ("Figure config runs", test_figure_config_nested_runs),
    ]
    return run_tests("Schema Validation", tests)


if __name__ == "__main__":
    exit(main())
