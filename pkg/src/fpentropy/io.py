"""Readers and writers for the line-oriented sample and report formats.

Sample files hold tab-separated records, one per line::

    surface_id<TAB>value_token
    surface_a<TAB>surface_b<TAB>value_a<TAB>value_b

Report streams are line-delimited JSON objects with ``client_id``,
``surface``, ``value``, ``site`` and ``timestamp``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Any, Iterable

from .estimation import JointDistribution, build_joint
from .simulator import ReportRecord


class RecordParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class SampleRecords:
    single: dict[str, list[str]] = field(default_factory=dict)
    joint: dict[tuple[str, str], list[tuple[str, str]]] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.single or self.joint)

    def joint_distribution(self, a: str, b: str) -> JointDistribution:
        rows = self.joint[(a, b)]
        return build_joint([r[0] for r in rows], [r[1] for r in rows])


def read_samples(lines: Iterable[str]) -> SampleRecords:
    out = SampleRecords()
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) == 2 and parts[0]:
            out.single.setdefault(parts[0], []).append(parts[1])
        elif len(parts) == 4 and parts[0] and parts[1]:
            a, b, va, vb = parts
            if a == b:
                raise RecordParseError(lineno, "joint record pairs a surface with itself")
            if b < a:
                a, b, va, vb = b, a, vb, va
            out.joint.setdefault((a, b), []).append((va, vb))
        else:
            raise RecordParseError(lineno, f"expected 2 or 4 tab-separated fields, got {len(parts)}")
    return out


def write_samples(fh: IO[str], records: SampleRecords) -> None:
    for s in sorted(records.single):
        for v in records.single[s]:
            fh.write(f"{s}\t{v}\n")
    for (a, b) in sorted(records.joint):
        for va, vb in records.joint[(a, b)]:
            fh.write(f"{a}\t{b}\t{va}\t{vb}\n")


def samples_from_reports(reports: Iterable[ReportRecord], pairs: Iterable[tuple[str, str]] | None = None) -> SampleRecords:
    """Per-client single samples and, for co-reporting clients, joint samples."""
    per_surface: dict[str, dict[int, str]] = {}
    for r in reports:
        per_surface.setdefault(r.surface, {}).setdefault(r.client_id, r.value)
    out = SampleRecords({s: [v for _, v in sorted(d.items())] for s, d in sorted(per_surface.items())})
    names = sorted(per_surface)
    if pairs is None:
        pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    for a, b in pairs:
        a, b = sorted((a, b))
        da, db = per_surface.get(a, {}), per_surface.get(b, {})
        common = sorted(set(da) & set(db))
        if common:
            out.joint[(a, b)] = [(da[c], db[c]) for c in common]
    return out


def write_reports(fh: IO[str], records: Iterable[Any]) -> None:
    for r in records:
        fh.write(json.dumps(r._asdict(), sort_keys=True) + "\n")


def read_reports(lines: Iterable[str]) -> list[ReportRecord]:
    out = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            out.append(
                ReportRecord(
                    int(rec["client_id"]), str(rec["surface"]), str(rec["value"]), str(rec.get("site", "")), int(rec.get("timestamp", 0))
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise RecordParseError(lineno, str(exc)) from exc
    return out


def dump_json(obj: Any, fh: IO[str]) -> None:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    json.dump(obj, fh, indent=2, sort_keys=True)
    fh.write("\n")
