"""
JSON schemas for run manifests, sidecars, fit reports and figure configs
"""

from typing import Any, Dict

import jsonschema

from errors import ConfigurationError

# Written next to every output file; enough to rerun the command
MANIFEST_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {"type": "string", "description": "Subcommand name"},
        "parameters": {"type": "object", "description": "Full parameter set after config merge"},
        "seed": {"type": ["integer", "null"]},
        "tool_version": {"type": "string"},
        "started_at": {"type": "string", "description": "ISO 8601 wall time"},
        "finished_at": {"type": "string", "description": "ISO 8601 wall time"},
        "outputs": {"type": "array", "items": {"type": "string"}},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["command", "parameters", "seed", "tool_version", "started_at", "finished_at", "outputs"],
}

LOSER_SIDECAR_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "t_M": {"type": "number"},
        "omega_M": {"type": ["integer", "null"], "description": "null when uncapped"},
        "n_sims": {"type": "integer"},
        "n_losers": {"type": "integer"},
        "n_exploded": {"type": "integer"},
        "seed": {"type": ["integer", "null"]},
    },
    "required": ["t_M", "omega_M", "n_sims", "n_losers", "n_exploded", "seed"],
}

FIT_REPORT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "beta": {"type": "number", "description": "Density tail exponent"},
        "x_min": {"type": "number"},
        "n_tail": {"type": "integer"},
        "std_err": {"type": "number"},
    },
    "required": ["beta", "x_min", "n_tail", "std_err"],
}

EXPONENTIAL_FIT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "rate": {"type": "number"},
        "n": {"type": "integer"},
    },
    "required": ["rate", "n"],
}

# One entry of figures/figN.json
FIGURE_RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {
            "type": "string",
            "enum": ["simulate-discrete", "simulate-losers", "solve-master", "fit", "regvar", "compare-tails"],
        },
        "prefix": {"type": "string", "description": "Output file prefix for this run"},
        "parameters": {"type": "object"},
    },
    "required": ["command", "parameters"],
}

FIGURE_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "description": {"type": "string"},
        "runs": {"type": "array", "items": FIGURE_RUN_SCHEMA},
    },
    "required": ["runs"],
}


def validate_payload(payload: Any, schema: Dict[str, Any], name: str = "payload") -> None:
    """
    Validate a loaded JSON payload against one of the schemas above

    Raises:
        ConfigurationError: the payload does not match, with the failing path
    """
    try:
        jsonschema.validate(instance=payload, schema=schema)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path)
        location = f"{name}.{where}" if where else name
        raise ConfigurationError(f"{location}: {e.message}") from e
