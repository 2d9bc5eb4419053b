"""Report files. Nothing here depends on timing, so fixed inputs give identical bytes."""
import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Mapping, Sequence

from .gibbs_rp import BoundsReport, RPReport
from .trotter import ConvergenceRow

logger = logging.getLogger(__name__)

JSON_INDENT = 2


def _json_safe(value: Any) -> Any:
    """NaN and infinities have no JSON spelling; they become null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Mapping):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    return value


def format_json(payload: Any) -> str:
    return json.dumps(_json_safe(payload), indent=JSON_INDENT, allow_nan=False) + "\n"


def certify_payload(source: str, reports: Sequence[RPReport]) -> Mapping[str, Any]:
    return {"config": source, "runs": [report.to_dict() for report in reports]}


def bounds_payload(
    source: str, betas: Sequence[float], reports: Sequence[BoundsReport]
) -> Mapping[str, Any]:
    return {
        "config": source,
        "runs": [
            {"beta": beta, **report.to_dict()} for beta, report in zip(betas, reports)
        ],
    }


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def spectrum_csv(reports: Sequence[RPReport]) -> str:
    rows = [
        (repr(report.beta), position, repr(value))
        for report in reports
        for position, value in enumerate(report.spectrum)
    ]
    return _csv_text(("beta", "index", "eigenvalue"), rows)


def trotter_csv(rows: Sequence[ConvergenceRow]) -> str:
    return _csv_text(
        ("k", "error", "ratio"), [(row.k, repr(row.error), repr(row.ratio)) for row in rows]
    )


def bounds_csv(betas: Sequence[float], reports: Sequence[BoundsReport]) -> str:
    rows = []
    for beta, report in zip(betas, reports):
        rows.append((repr(beta), "partition", 0, repr(report.partition_slack)))
        for position, slack in enumerate(report.pair_slacks):
            rows.append((repr(beta), "minus_pair", position, repr(slack)))
        for position, slack in enumerate(report.plus_pair_slacks):
            rows.append((repr(beta), "plus_pair", position, repr(slack)))
    return _csv_text(("beta", "bound", "index", "slack"), rows)


def write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    logger.info("Wrote %s", path)
    return path
