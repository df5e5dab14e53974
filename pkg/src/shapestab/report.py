"""Plain report container shared by checks and verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


def jsonable(value):
    """Convert numpy scalars/arrays (recursively) to plain Python types."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


@dataclass
class Report:
    name: str
    passed: bool = True
    values: dict[str, Any] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def fail(self, message: str):
        self.passed = False
        self.failures.append(message)

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return jsonable({"name": self.name, "pass": self.passed,
                         **self.values, "failures": self.failures})
