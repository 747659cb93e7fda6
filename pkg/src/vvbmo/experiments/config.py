"""Study configuration and report containers, plus their serialization.

Floats are written with 17 significant digits so a report read back and
written again is byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

STUDIES = ("equivalence", "lacunary", "witness", "mobius", "moduli", "kernels", "cotype")


class ConfigError(ValueError):
    """Raised for an invalid study configuration."""


@dataclass
class StudyConfig:
    """Everything a study needs; unset grid fields fall back to study defaults.

    ``p`` and ``d`` describe the target space ``ℓ^p_d``; studies that sweep
    spaces or dimensions use ``spaces`` (list of ``[p, d]``) or ``dims``.
    ``q`` and ``p_exponents`` are exponent lists.  ``gates`` overrides the
    named acceptance thresholds of a study.
    """

    study: str
    p: float | str = 2.0
    d: int = 1
    spaces: list = field(default_factory=list)
    dims: list = field(default_factory=list)
    count: int = 50
    degrees: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    decays: list = field(default_factory=lambda: [0.0, 0.5, 1.0])
    seeds: list = field(default_factory=lambda: [0])
    q: list = field(default_factory=lambda: [2.0])
    p_exponents: list = field(default_factory=list)
    grid_j: int | None = None
    grid_m: int | None = None
    depth: int | None = None
    aperture: float = 2.0
    refine: int = 2
    gates: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> "StudyConfig":
        if self.study not in STUDIES:
            raise ConfigError(f"unknown study {self.study!r}; expected one of {STUDIES}")
        if not self.seeds:
            raise ConfigError("seed list must be nonempty")
        if self.count < 1:
            raise ConfigError("corpus count must be positive")
        for name in ("grid_j", "grid_m", "depth"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be positive, got {v}")
        if any(int(n) < 1 for n in self.degrees):
            raise ConfigError("degrees must be positive")
        if any(int(n) < 1 for n in self.dims):
            raise ConfigError("dimensions must be positive")
        if self.refine < 2:
            raise ConfigError("refine must be >= 2 (every report carries two resolutions)")
        if not self.aperture > 0:
            raise ConfigError("aperture must be positive")
        p = _parse_p(self.p)
        if not p >= 1:
            raise ConfigError(f"space exponent must be >= 1, got {self.p}")
        if self.d < 1:
            raise ConfigError("dimension must be positive")
        if any(float(x) < 1 for x in self.q):
            raise ConfigError("q exponents must be >= 1")
        return self

    @property
    def space_p(self) -> float:
        return _parse_p(self.p)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "StudyConfig":
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "study" not in doc:
            raise ConfigError("config needs a 'study' field")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "StudyConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "StudyConfig":
        return cls.from_json(Path(path).read_text())


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        return float(p)
    return float(p)


@dataclass
class Gate:
    name: str
    passed: bool
    value: float
    threshold: float
    comparison: str
    levels: list = field(default_factory=list)
    flagged: bool = False
    note: str = ""


@dataclass
class StudyReport:
    study: str
    rows: list
    summary: dict
    gates: list
    environment: dict
    config: dict

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)

    @property
    def failures(self) -> list:
        return [g.name for g in self.gates if not g.passed]

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "passed": self.passed,
            "failures": self.failures,
            "gates": [asdict(g) for g in self.gates],
            "summary": self.summary,
            "environment": self.environment,
            "config": self.config,
            "rows": self.rows,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def rows_csv(self) -> str:
        return rows_to_csv(self.rows)

    def write(self, path) -> tuple[Path, Path]:
        """Write ``<path>`` (JSON report) and the rows next to it as ``.csv``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")
        csv_path = path.with_suffix(".csv")
        csv_path.write_text(self.rows_csv())
        return path, csv_path


# ---------------------------------------------------------------------------
# serialization


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits."""
    return _encode(_plain(obj), indent, 0)


def rows_to_csv(rows: list) -> str:
    if not rows:
        return ""
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for r in rows:
        out = []
        for k in keys:
            v = _plain(r.get(k, ""))
            out.append(_fmt_float(v) if isinstance(v, float) else (json.dumps(v) if isinstance(v, (list, dict)) else v))
        w.writerow(out)
    return buf.getvalue()
