"""Flat-file ingestion of election exports via declarative column maps.

Exports from different countries disagree on column order, naming, and
even on what "given ballots" means (some publish it directly, some as a
sum of invalid/empty/valid counts). A ColumnMapping describes how to
assemble the four canonical counts from the source columns; a
CountryProfile bundles a mapping with documentation. Rows are streamed
one at a time so national-scale files need bounded memory.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import ElectionDataset, StationRecord

__all__ = [
    "ColumnMapping",
    "CountryProfile",
    "IngestReport",
    "Discrepancy",
    "SchemaError",
    "PROFILES",
    "CANONICAL_FIELDS",
    "load_dataset",
    "verify_subtotals",
    "write_canonical_tsv",
]

CANONICAL_FIELDS = (
    "station_id",
    "region_code",
    "constituency_id",
    "registered",
    "given",
    "cast",
    "leader",
)
COUNT_FIELDS = ("registered", "given", "cast", "leader")

# How many row-level error messages to keep verbatim; counts are always
# complete even when messages are truncated.
MAX_RECORDED_ERRORS = 50


class SchemaError(ValueError):
    """The file's columns cannot satisfy the mapping."""


@dataclass(frozen=True)
class ColumnMapping:
    """Declarative recipe mapping source columns to canonical fields.

    columns maps a canonical field to a source column, by header name
    (when has_header) or by zero-based index. derived maps a count
    field to a tuple of source columns whose integer values are summed,
    for exports that publish components instead of totals. A field may
    appear in columns or derived, not both. station_id and the four
    counts must be resolvable; region_code and constituency_id are
    optional and default to "ALL" and "".
    """

    delimiter: str = "\t"
    has_header: bool = True
    columns: Mapping[str, str | int] = field(default_factory=dict)
    derived: Mapping[str, tuple[str | int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in list(self.columns) + list(self.derived):
            if name not in CANONICAL_FIELDS:
                raise SchemaError(f"unknown canonical field {name!r} in mapping")
        both = set(self.columns) & set(self.derived)
        if both:
            raise SchemaError(f"fields mapped twice: {sorted(both)}")
        for name in ("station_id", *COUNT_FIELDS):
            if name not in self.columns and name not in self.derived:
                raise SchemaError(f"mapping does not resolve required field {name!r}")
        if "station_id" in self.derived:
            raise SchemaError("station_id cannot be a derived sum")


@dataclass(frozen=True)
class CountryProfile:
    name: str
    mapping: ColumnMapping
    notes: str = ""


def _canonical_mapping() -> ColumnMapping:
    return ColumnMapping(
        delimiter="\t",
        has_header=True,
        columns={name: name for name in CANONICAL_FIELDS},
    )


# Built-in profiles. The canonical profile is this package's own TSV
# format; the other three are editable templates whose column names
# follow the typical published exports. Semantics per country:
# given = all ballots handed out, cast = ballots in the box that count
# toward the result denominator.
PROFILES: dict[str, CountryProfile] = {
    "canonical": CountryProfile(
        name="canonical",
        mapping=_canonical_mapping(),
        notes="Native TSV: station_id, region_code, constituency_id, "
        "registered, given, cast, leader.",
    ),
    "ru": CountryProfile(
        name="ru",
        mapping=_canonical_mapping(),
        notes="Russian federal exports flattened to the canonical layout; "
        "given = ballots issued anywhere (early, at home, at station), "
        "cast = ballots found in boxes, leader = winner's votes.",
    ),
    "es": CountryProfile(
        name="es",
        mapping=ColumnMapping(
            delimiter="\t",
            has_header=True,
            columns={
                "station_id": "mesa_id",
                "region_code": "provincia",
                "registered": "censo",
                "leader": "votos_lider",
            },
            derived={
                # given = invalid + empty + valid; cast = empty + valid
                "given": ("votos_nulos", "votos_blanco", "votos_validos"),
                "cast": ("votos_blanco", "votos_validos"),
            },
        ),
        notes="Spanish congressional exports publish invalid/blank/valid "
        "components; totals are assembled by summation.",
    ),
    "de": CountryProfile(
        name="de",
        mapping=ColumnMapping(
            delimiter="\t",
            has_header=True,
            columns={
                "station_id": "bezirk_id",
                "region_code": "land",
                "registered": "wahlberechtigte",
                "leader": "stimmen_sieger",
            },
            derived={
                # given = invalid + valid; cast = valid (second votes)
                "given": ("ungueltige", "gueltige"),
                "cast": ("gueltige",),
            },
        ),
        notes="German federal exports; districts lacking the registered "
        "count (mail-only districts) fail integer parsing and are "
        "skipped as invalid rows.",
    ),
    "pl": CountryProfile(
        name="pl",
        mapping=ColumnMapping(
            delimiter="\t",
            has_header=True,
            columns={
                "station_id": "obwod_id",
                "region_code": "wojewodztwo",
                "registered": "uprawnieni",
                "given": "karty_wydane",
                "leader": "glosy_lider",
            },
            derived={
                "cast": ("glosy_wazne",),
            },
        ),
        notes="Polish exports publish given ballots directly; the result "
        "denominator is the valid-vote count.",
    ),
}


@dataclass
class IngestReport:
    """Row accounting for one load: parsed + skipped = total data rows."""

    path: str
    profile: str
    parsed: int = 0
    skipped: int = 0
    invalid: int = 0
    errors: list[str] = field(default_factory=list)

    def record_error(self, line_no: int, message: str) -> None:
        self.invalid += 1
        self.skipped += 1
        if len(self.errors) < MAX_RECORDED_ERRORS:
            self.errors.append(f"line {line_no}: {message}")

    def to_json(self) -> str:
        payload = {
            "path": self.path,
            "profile": self.profile,
            "parsed": self.parsed,
            "skipped": self.skipped,
            "invalid": self.invalid,
            "errors": self.errors,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _resolve_indices(
    mapping: ColumnMapping, header: Sequence[str] | None, width: int
) -> dict[str, tuple[int, ...]]:
    """Map each canonical field to the source column indices feeding it."""

    def locate(col: str | int, for_field: str) -> int:
        if isinstance(col, int):
            if col >= width or col < 0:
                raise SchemaError(
                    f"field {for_field!r}: column index {col} outside "
                    f"0..{width - 1}"
                )
            return col
        if header is None:
            raise SchemaError(
                f"field {for_field!r}: named column {col!r} requires a header row"
            )
        try:
            return header.index(col)
        except ValueError:
            raise SchemaError(
                f"field {for_field!r}: column {col!r} not in header {header}"
            ) from None

    out: dict[str, tuple[int, ...]] = {}
    for name, col in mapping.columns.items():
        out[name] = (locate(col, name),)
    for name, cols in mapping.derived.items():
        out[name] = tuple(locate(c, name) for c in cols)
    return out


def _parse_count(cell: str) -> int:
    s = cell.strip()
    # ASCII digits only: no signs, no separators, no locale surprises
    if not (s.isascii() and s.isdigit()):
        raise ValueError(f"not a plain integer: {cell!r}")
    return int(s)


def load_dataset(
    path: str | Path,
    profile: CountryProfile | str = "canonical",
    label: str | None = None,
) -> tuple[ElectionDataset, IngestReport]:
    """Parse one delimited export into an ElectionDataset.

    Malformed rows (missing cells, non-integer counts, duplicate
    station ids) are skipped and tallied in the IngestReport; schema
    problems (missing columns) raise SchemaError instead, because no
    row could ever parse.
    """
    if isinstance(profile, str):
        try:
            profile = PROFILES[profile]
        except KeyError:
            raise SchemaError(
                f"unknown profile {profile!r}; built-ins: {sorted(PROFILES)}"
            ) from None
    mapping = profile.mapping
    path = Path(path)
    report = IngestReport(path=str(path), profile=profile.name)

    ids: list[str] = []
    regions: list[str] = []
    constituencies: list[str] = []
    counts: dict[str, list[int]] = {name: [] for name in COUNT_FIELDS}
    seen: set[str] = set()

    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter=mapping.delimiter)
        indices: dict[str, tuple[int, ...]] | None = None
        for line_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if indices is None:
                if mapping.has_header:
                    header = [cell.strip() for cell in row]
                    indices = _resolve_indices(mapping, header, len(header))
                    continue
                indices = _resolve_indices(mapping, None, len(row))
            needed = max(i for cols in indices.values() for i in cols)
            if len(row) <= needed:
                report.record_error(
                    line_no, f"expected at least {needed + 1} columns, got {len(row)}"
                )
                continue
            try:
                values = {
                    name: sum(_parse_count(row[i]) for i in cols)
                    for name, cols in indices.items()
                    if name in COUNT_FIELDS
                }
            except ValueError as exc:
                report.record_error(line_no, str(exc))
                continue
            sid_cols = indices.get("station_id")
            sid = row[sid_cols[0]].strip()
            if not sid:
                report.record_error(line_no, "empty station_id")
                continue
            if sid in seen:
                report.record_error(line_no, f"duplicate station_id {sid!r}")
                continue
            seen.add(sid)
            region = "ALL"
            if "region_code" in indices:
                region = row[indices["region_code"][0]].strip() or "ALL"
            constituency = ""
            if "constituency_id" in indices:
                constituency = row[indices["constituency_id"][0]].strip()
            ids.append(sid)
            regions.append(region)
            constituencies.append(constituency)
            for name in COUNT_FIELDS:
                counts[name].append(values[name])
            report.parsed += 1
        if indices is None and mapping.has_header:
            raise SchemaError(f"{path}: no header row found")

    dataset = ElectionDataset(
        label=label if label is not None else path.stem,
        station_ids=tuple(ids),
        region_codes=tuple(regions),
        constituency_ids=tuple(constituencies),
        registered=np.array(counts["registered"], dtype=np.int64),
        given=np.array(counts["given"], dtype=np.int64),
        cast=np.array(counts["cast"], dtype=np.int64),
        leader=np.array(counts["leader"], dtype=np.int64),
    )
    return dataset, report


@dataclass(frozen=True)
class Discrepancy:
    """One mismatch between a dataset and reference subtotals.

    actual is None when the reference names a region absent from the
    dataset (the unmatched case).
    """

    region_code: str
    field: str
    expected: int
    actual: int | None

    @property
    def difference(self) -> int | None:
        if self.actual is None:
            return None
        return self.actual - self.expected


def verify_subtotals(
    dataset: ElectionDataset,
    reference: Mapping[str, Mapping[str, int]],
) -> list[Discrepancy]:
    """Compare per-region count sums against published reference totals.

    reference maps region_code to {field: expected_sum} for any subset
    of the four count fields. Returns one Discrepancy per disagreement;
    an empty list means exact agreement.
    """
    codes, idx = dataset.region_partition()
    sums: dict[str, dict[str, int]] = {}
    for name in COUNT_FIELDS:
        col = getattr(dataset, name)
        per_region = np.zeros(len(codes), dtype=np.int64)
        np.add.at(per_region, idx, col)
        for code, total in zip(codes, per_region):
            sums.setdefault(code, {})[name] = int(total)

    out: list[Discrepancy] = []
    for code in sorted(reference):
        expected_fields = reference[code]
        for name in COUNT_FIELDS:
            if name not in expected_fields:
                continue
            expected = int(expected_fields[name])
            if code not in sums:
                out.append(Discrepancy(code, name, expected, None))
                continue
            actual = sums[code][name]
            if actual != expected:
                out.append(Discrepancy(code, name, expected, actual))
    return out


def write_canonical_tsv(dataset: ElectionDataset, path: str | Path) -> None:
    """Write the canonical TSV: UTF-8, LF endings, no trailing delimiter."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\t".join(CANONICAL_FIELDS) + "\n")
        for i in range(len(dataset)):
            handle.write(
                "\t".join(
                    (
                        dataset.station_ids[i],
                        dataset.region_codes[i],
                        dataset.constituency_ids[i],
                        str(int(dataset.registered[i])),
                        str(int(dataset.given[i])),
                        str(int(dataset.cast[i])),
                        str(int(dataset.leader[i])),
                    )
                )
                + "\n"
            )
