"""Deterministic JSON and text rendering of verification reports."""

from __future__ import annotations

import io
import json
import math
import sys
from typing import Any, Iterable, TextIO

from .errors import SinkUnwritable
from .identities import VerificationReport, list_identities

SCHEMA_VERSION = 1


def _order() -> dict[str, int]:
    return {spec.id: i for i, spec in enumerate(list_identities())}


def sort_reports(reports: Iterable[VerificationReport]) -> list[VerificationReport]:
    order = _order()
    return sorted(reports, key=lambda r: (order.get(r.identity, len(order)), r.identity, r.manifold, r.t))


def cell(r: VerificationReport) -> dict[str, Any]:
    out = {
        "identity": r.identity,
        "manifold": r.manifold,
        "t": r.t,
        "samples": r.samples,
        "max_residual": r.max_residual,
        "mean_residual": r.mean_residual,
        "pass": r.passed,
        "citation": r.citation,
        "kind": r.kind,
        "tolerance": r.tolerance,
        "guard_residuals": dict(r.guard_residuals),
    }
    if r.skipped_reason is not None:
        out["skipped_reason"] = r.skipped_reason
    if r.error is not None:
        out["error"] = r.error
    return out


def document(reports: Iterable[VerificationReport], seed: int, mode: str) -> dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, "seed": seed, "mode": mode,
            "cells": [cell(r) for r in sort_reports(reports)]}


def _encode(obj: Any, out: list[str]) -> None:
    if obj is None or obj is True or obj is False or isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format(obj, ".17g") if math.isfinite(obj) else "null")
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key), ensure_ascii=False) + ": ")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """JSON with sorted keys and 17 significant digits for every float."""
    parts: list[str] = []
    _encode(obj, parts)
    return "".join(parts) + "\n"


def _fmt(x: float | None) -> str:
    return "-" if x is None else f"{x:.3e}"


def render_text(reports: Iterable[VerificationReport]) -> str:
    rows = [("identity", "manifold", "t", "status", "max_residual", "mean_residual", "note")]
    counts = {"pass": 0, "fail": 0, "skip": 0}
    for r in sort_reports(reports):
        if r.skipped:
            status, note = "skip", r.skipped_reason or ""
        elif r.passed:
            status, note = "pass", ""
        else:
            status, note = "FAIL", r.error or f"tol {r.tolerance:.0e}"
        counts["skip" if status == "skip" else status.lower()] += 1
        rows.append((r.identity, r.manifold, f"{r.t:g}", status, _fmt(r.max_residual), _fmt(r.mean_residual), note))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]) - 1)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row[:-1], widths)) + ("  " + row[-1] if row[-1] else "")
             for row in rows]
    lines.append(f"{counts['pass']} passed, {counts['fail']} failed, {counts['skip']} skipped")
    return "\n".join(line.rstrip() for line in lines) + "\n"


def write(text: str, sink: str | TextIO | None) -> None:
    if sink is None or sink == "-":
        sys.stdout.write(text)
        return
    if isinstance(sink, io.TextIOBase) or hasattr(sink, "write"):
        sink.write(text)
        return
    try:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise SinkUnwritable(f"cannot write report to {sink}: {exc}") from exc


def emit_report(reports: Iterable[VerificationReport], format: str = "text", sink: str | TextIO | None = None,
                seed: int = 42, mode: str = "forward_exact") -> None:
    reports = list(reports)
    if format == "json":
        text = dumps(document(reports, seed, mode))
    elif format == "text":
        text = render_text(reports)
    else:
        raise ValueError(f"unknown format {format!r}")
    write(text, sink)
