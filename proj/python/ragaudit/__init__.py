"""Exam-style membership auditing of RAG systems (Python front end to the C++ core)."""

from __future__ import annotations

import json
import os
from typing import Any, Mapping, Optional

from . import _core
from ._core import (
    DEFAULT_TAU,
    PUBLISHED_WEIGHTS,
    AuditError,
    UserError,
    aggregate,
    auc_pr,
    auc_roc,
    calibrate_threshold,
    decide,
    display_score,
    kl_divergence,
    normalize,
    tpr_at_fpr,
)

__version__ = _core.__version__

__all__ = [
    "DEFAULT_TAU",
    "PUBLISHED_WEIGHTS",
    "AuditError",
    "UserError",
    "aggregate",
    "auc_pr",
    "auc_roc",
    "calibrate_threshold",
    "config_hash",
    "decide",
    "display_score",
    "grade_item",
    "kl_divergence",
    "normalize",
    "run_campaign",
    "tpr_at_fpr",
]


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"unsupported override value {v!r}")


def _overrides_toml(overrides: Optional[Mapping[str, Any]]) -> str:
    """{"target.top_k": 5, "seed": 3} -> TOML text with dotted keys split into sections."""
    if not overrides:
        return ""
    root, sections = [], {}
    for key, value in overrides.items():
        sec, _, name = key.rpartition(".")
        line = f"{name} = {_toml_value(value)}"
        (sections.setdefault(sec, []) if sec else root).append(line)
    out = root[:]
    for sec, lines in sections.items():
        out.append(f"[{sec}]")
        out.extend(lines)
    return "\n".join(out) + "\n"


def config_hash(config: str | os.PathLike, overrides: Optional[Mapping[str, Any]] = None) -> str:
    return _core.config_hash(os.fspath(config), _overrides_toml(overrides))


def run_campaign(
    config: str | os.PathLike,
    overrides: Optional[Mapping[str, Any]] = None,
    output_dir: str | os.PathLike | None = None,
) -> dict:
    """Runs the campaign in `config`; returns {"metrics", "results", "queries"}.

    Nothing is written unless output_dir is given.
    """
    raw = _core._run_campaign(os.fspath(config), _overrides_toml(overrides), os.fspath(output_dir or ""))
    return json.loads(raw)


def grade_item(item: Mapping[str, Any], response: str, refused: bool = False) -> dict:
    """Grades one reply against an exam item given as its JSON object."""
    return json.loads(_core._grade_item(json.dumps(item), response, refused))

