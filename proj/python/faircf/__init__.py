"""Fair counterfactual action sets for tabular binary classifiers."""

import json
import os

from . import _core
from ._core import (
    ConfigError,
    DataError,
    Dataset,
    DivergenceError,
    FaircfError,
    LogisticRegression,
    Schema,
    apply_action,
    effectiveness,
    gower,
    train_classifier,
    write_synthetic,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "DivergenceError",
    "FaircfError",
    "LogisticRegression",
    "Schema",
    "apply_action",
    "audit",
    "effectiveness",
    "evaluate",
    "gower",
    "run",
    "train_classifier",
    "write_synthetic",
]


def evaluate(actions, rows, groups, classifier, schema, scenario="hybrid"):
    """Return (snapshot dict, reward, stopped) for an action set over a population."""
    snapshot, reward, stopped = _core.evaluate(actions, rows, groups, classifier, schema, scenario)
    return json.loads(snapshot), reward, stopped


def run(data, schema, out, config=None):
    """Run the full pipeline and write a report directory. Returns the report as a dict."""
    return json.loads(_core.run(json.dumps(config or {}), os.fspath(data), os.fspath(schema), os.fspath(out)))


def audit(data, schema, config=None):
    """Return (audit dict, warnings) for a classifier trained on the data."""
    result, warnings = _core.audit(json.dumps(config or {}), os.fspath(data), os.fspath(schema))
    return json.loads(result), warnings
