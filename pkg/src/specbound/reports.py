"""Report serialization: JSON run reports and CSV curve tables.

Output is bitwise deterministic for a fixed config, seed and thread count:
keys are sorted, floats go through repr, and no timestamps are recorded.
"""

from __future__ import annotations

import csv
import json
import os

REPORT_SCHEMA = {
    "type": "object",
    "required": ["config", "bound", "oracle", "lemma", "regime"],
    "properties": {
        "config": {"type": "object"},
        "expected_verdict": {"type": ["string", "null"]},
        "regime": {"type": "string"},
        "verdict_match": {"type": ["boolean", "null"]},
        "bound": {
            "type": "object",
            "required": ["theorem", "growth", "curve", "best_r", "best_bound",
                         "verdict"],
            "properties": {
                "theorem": {"enum": ["infinite-volume", "finite-volume"]},
                "verdict": {"enum": ["zero", "finite", "unbounded",
                                     "inconclusive"]},
                "curve": {"type": "array",
                          "items": {"type": "array", "minItems": 4,
                                    "maxItems": 4}},
                "best_r": {"type": "number"},
                "best_bound": {"type": "number"},
                "growth": {"type": "object"},
                "oracles": {"type": "object"},
            },
        },
        "oracle": {"type": "object"},
        "lemma": {"type": "object"},
        "notes": {"type": "array"},
    },
}


def _json_safe(obj):
    """Map non-finite floats to strings so the report stays valid JSON."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float):
        if obj != obj:
            return "nan"
        if obj == float("inf"):
            return "inf"
        if obj == float("-inf"):
            return "-inf"
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        try:
            return _json_safe(obj.item())
        except (AttributeError, ValueError):
            return obj
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    return obj


def report_to_json_bytes(report_dict) -> bytes:
    payload = _json_safe(report_dict)
    try:
        import jsonschema
        jsonschema.validate(payload, REPORT_SCHEMA)
    except ImportError:
        pass
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()


def emit_report(report, outdir) -> dict:
    """Write report.json plus curve.csv (and ladder.csv when oracles ran).

    Returns the paths written.  Raises OSError on unwritable paths.
    """
    os.makedirs(outdir, exist_ok=True)
    report_dict = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    paths = {}

    json_path = os.path.join(outdir, "report.json")
    with open(json_path, "wb") as fh:
        fh.write(report_to_json_bytes(report_dict))
    paths["report"] = json_path

    curve_path = os.path.join(outdir, "curve.csv")
    with open(curve_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "M1", "M2", "bound"])
        for row in report_dict["bound"]["curve"]:
            writer.writerow([repr(float(v)) for v in row])
    paths["curve"] = curve_path

    ladder = report_dict.get("oracle", {}).get("persson_ladder")
    if ladder:
        ladder_path = os.path.join(outdir, "persson_ladder.csv")
        with open(ladder_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["R0", "lambda"])
            for r0, lam in ladder:
                writer.writerow([repr(float(r0)), repr(float(lam))])
        paths["ladder"] = ladder_path
    return paths
