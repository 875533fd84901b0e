"""
app/commands/reports.py - Deterministic report rendering

Reports are plain dicts whose leaves may be numpy arrays, numpy scalars,
enums or complex numbers. They are rendered as sorted-key JSON with complex
entries as [re, im] pairs and floats in shortest round-trip form, so the
same invocation always produces the same bytes.
"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from app.core.rule_io import encode_complex


def _float(x: float) -> Any:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x) + 0.0


def to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return value.as_posix()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return to_jsonable(encode_complex(value))
    if isinstance(value, (complex, np.complexfloating)):
        return [_float(value.real), _float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return _float(float(value))
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return _float(value)
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    raise TypeError(f"cannot render {type(value).__name__} in a report")


def render_json(report: Any) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(_float(float(x)))
    return str(x)


def render_rows(header: Sequence[str], rows: Iterable[Sequence[Any]], delimiter: str = "\t") -> str:
    """Delimiter-separated table, one line per row, with a header line."""
    lines = [delimiter.join(header)]
    lines.extend(delimiter.join(_cell(x) for x in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_report(text: str, output: Optional[Path]) -> None:
    if output is None:
        print(text, end="")
        return
    path = Path(output)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
