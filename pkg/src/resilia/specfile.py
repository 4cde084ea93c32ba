"""JSON system files.

A file describes ``x' = A x + B_bar u_bar`` with box inputs, the zero-based
indices of the actuators that stopped obeying the controller, an initial
state and solver options.  Validation errors carry a JSON pointer to the
offending entry.
"""

import json
import os
import tempfile
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import jsonschema
import numpy as np

from .errors import DimensionError, ParseError, SchemaError
from .system import LinearSystem

_NUM = {"type": "number"}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _NUM}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["n", "A", "B_bar", "lost_actuators", "x0"],
    "additionalProperties": False,
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "A": _MATRIX,
        "B_bar": _MATRIX,
        "half_widths": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "lost_actuators": {"type": "array", "items": {"type": "integer"}},
        "x0": {"type": "array", "items": _NUM},
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "time_tol": {"type": "number", "exclusiveMinimum": 0},
                "tol_eig": {"type": "number", "exclusiveMinimum": 0},
                "num_pairs": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "sphere_grid": {"type": "integer", "minimum": 2},
                "horizon_max": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

DEFAULT_NUM_PAIRS = 1000
DEFAULT_SEED = 42


@dataclass(frozen=True)
class Options:
    time_tol: Optional[float] = None
    tol_eig: Optional[float] = None
    num_pairs: int = DEFAULT_NUM_PAIRS
    seed: int = DEFAULT_SEED
    sphere_grid: Optional[int] = None
    horizon_max: Optional[float] = None


@dataclass(frozen=True, eq=False)
class SystemSpec:
    n: int
    A: np.ndarray
    B_bar: np.ndarray
    x0: np.ndarray
    lost_actuators: tuple = ()
    half_widths: Optional[np.ndarray] = None
    options: Options = field(default_factory=Options)

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "B_bar", np.asarray(self.B_bar, dtype=float))
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        hw = np.ones(self.B_bar.shape[1]) if self.half_widths is None else np.asarray(self.half_widths, float)
        object.__setattr__(self, "half_widths", hw)
        object.__setattr__(self, "lost_actuators", tuple(int(i) for i in self.lost_actuators))

    @classmethod
    def from_system(cls, sys: LinearSystem, x0, options: Options = Options()):
        return cls(sys.n, sys.A, sys.B_bar, np.asarray(x0, float), sys.lost, sys.half_widths, options)

    def to_system(self) -> LinearSystem:
        return LinearSystem(self.A, self.B_bar, self.half_widths, self.lost_actuators)

    def with_options(self, **kw):
        return replace(self, options=replace(self.options, **kw))

    def to_dict(self):
        opts = {k: v for k, v in asdict(self.options).items() if v is not None}
        return {
            "n": self.n,
            "A": self.A.tolist(),
            "B_bar": self.B_bar.tolist(),
            "half_widths": self.half_widths.tolist(),
            "lost_actuators": list(self.lost_actuators),
            "x0": self.x0.tolist(),
            "options": opts,
        }


def _pointer(path):
    return "".join(f"/{p}" for p in path)


def validate(doc) -> SystemSpec:
    """Check a decoded document against the schema and the dimension rules."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        raise SchemaError(err.message, _pointer(err.absolute_path))

    n = doc["n"]
    A, B = doc["A"], doc["B_bar"]
    if len(A) != n:
        raise DimensionError(f"expected {n} rows, got {len(A)}", "/A")
    for i, row in enumerate(A):
        if len(row) != n:
            raise DimensionError(f"expected {n} columns, got {len(row)}", f"/A/{i}")
    if len(B) != n:
        raise DimensionError(f"expected {n} rows, got {len(B)}", "/B_bar")
    k = len(B[0])
    for i, row in enumerate(B):
        if len(row) != k:
            raise DimensionError(f"expected {k} columns like the first row, got {len(row)}", f"/B_bar/{i}")
    hw = doc.get("half_widths")
    if hw is not None and len(hw) != k:
        raise DimensionError(f"expected {k} half-widths, got {len(hw)}", "/half_widths")
    if len(doc["x0"]) != n:
        raise DimensionError(f"expected {n} entries, got {len(doc['x0'])}", "/x0")
    lost = doc["lost_actuators"]
    seen = set()
    for j, idx in enumerate(lost):
        if not 0 <= idx < k:
            raise SchemaError(f"actuator index {idx} out of range 0..{k - 1}", f"/lost_actuators/{j}")
        if idx in seen:
            raise SchemaError(f"actuator index {idx} listed twice", f"/lost_actuators/{j}")
        seen.add(idx)
    if len(seen) == k:
        raise SchemaError("at least one actuator must remain under control", "/lost_actuators")
    for name in ("A", "B_bar"):
        if not np.all(np.isfinite(np.asarray(doc[name], dtype=float))):
            raise SchemaError("entries must be finite", f"/{name}")

    return SystemSpec(n=n, A=A, B_bar=B, x0=doc["x0"], lost_actuators=tuple(lost),
                      half_widths=hw, options=Options(**doc.get("options", {})))


def load_system(path) -> SystemSpec:
    """Read and validate a system file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return validate(doc)


def atomic_write_text(path, text):
    """Write through a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_system(spec: SystemSpec, path):
    atomic_write_text(path, json.dumps(spec.to_dict(), indent=2) + "\n")
