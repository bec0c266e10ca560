"""Plain-text detection reports.

One ``key = value`` pair per line, keys always in the same order, reals
printed with six decimals.  Detections are rows of whitespace-separated
numbers under a ``detection_columns`` header line.  The format is meant to
diff cleanly and to be read back by :func:`parse_report`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .detector import STAGES, Detection, DetectorConfig, Stats, flat_field_types
from .errors import InvalidParameterError

HEADER = "# itcircles detection report v1"
DETECTION_COLUMNS = ("a", "b", "r", "votes", "n_sectors", "completeness", "support")


def fmt_real(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.6f}"


def fmt_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_real(v)
    return str(v)


@dataclass
class DetectionReport:
    source: str
    width: int
    height: int
    config: DetectorConfig
    detections: list[Detection]
    stats: Stats
    wall_time_ms: float | None = None
    extra: dict = field(default_factory=dict)

    def to_text(self, include_timing: bool = True) -> str:
        """Render the report.

        ``include_timing=False`` drops wall-clock fields so that reruns with
        the same image and configuration produce byte-identical text.
        """
        lines = [
            HEADER,
            f"source = {self.source}",
            f"width = {self.width}",
            f"height = {self.height}",
        ]
        for k, v in self.config.flat().items():
            lines.append(f"config.{k} = {fmt_value(v)}")
        for k, v in self.stats.counts().items():
            lines.append(f"stats.{k} = {fmt_value(v)}")
        lines.append(f"detections = {len(self.detections)}")
        lines.append("detection_columns = " + " ".join(DETECTION_COLUMNS))
        for d in self.detections:
            row = (
                fmt_real(d.circle.a),
                fmt_real(d.circle.b),
                fmt_real(d.circle.r),
                str(d.votes),
                str(d.n_sectors),
                fmt_real(d.completeness),
                str(d.support),
            )
            lines.append("detection = " + " ".join(row))
        if include_timing:
            if self.wall_time_ms is not None:
                lines.append(f"wall_time_ms = {fmt_real(self.wall_time_ms)}")
            for stage in STAGES:
                lines.append(f"timing.{stage}_ms = {fmt_real(1000.0 * self.stats.timings.get(stage, 0.0))}")
        return "\n".join(lines) + "\n"


def _parse_typed(text: str, type_name: str):
    if text == "none":
        return None
    base = type_name.replace(" | None", "").strip()
    if base == "int":
        return int(text)
    if base == "float":
        return float(text)
    if base == "bool":
        return text == "true"
    return text


def parse_report(text: str) -> dict:
    """Read a report back into plain Python values.

    Returns a dict with ``source``, ``width``, ``height``, ``config`` (a
    :class:`DetectorConfig`), ``stats`` (name -> int), ``detections`` (list of
    dicts keyed by column) and, when present, ``wall_time_ms``.
    """
    types = flat_field_types()
    config: dict = {}
    stats: dict = {}
    detections = []
    out: dict = {}
    columns = DETECTION_COLUMNS
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise InvalidParameterError(f"line {lineno}: expected 'key = value'")
        if key.startswith("config."):
            name = key[len("config."):]
            if name not in types:
                raise InvalidParameterError(f"line {lineno}: unknown config field {name!r}")
            config[name] = _parse_typed(value, str(types[name]))
        elif key.startswith("stats."):
            stats[key[len("stats."):]] = int(value)
        elif key == "detection_columns":
            columns = tuple(value.split())
        elif key == "detection":
            cells = value.split()
            row = {}
            for col, cell in zip(columns, cells):
                row[col] = int(cell) if col in ("votes", "n_sectors", "support") else float(cell)
            detections.append(row)
        elif key in ("width", "height", "detections"):
            out[key] = int(value)
        elif key == "wall_time_ms" or key.startswith("timing."):
            out[key] = float(value)
        else:
            out[key] = value
    if "detections" in out and out["detections"] != len(detections):
        raise InvalidParameterError("detection count does not match the listed rows")
    out["config"] = DetectorConfig.from_flat(config)
    out["stats"] = stats
    out["detections"] = detections
    return out
