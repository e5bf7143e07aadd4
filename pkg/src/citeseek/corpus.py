"""Query instances and their candidate document pools.

Dataset files are UTF-8 JSON Lines, one record per line:

    {"query_id": "q1",
     "paragraph": "...",
     "candidates": [{"id": "c1", "title": "...", "abstract": "..."}, ...],
     "gold": ["c2", "c7"]}

``title`` is optional per candidate; ``gold`` is optional when running pure
inference. Field names are normative. Validation is strict by default: every
gold id must appear in the candidate pool. A loaded Dataset is immutable and
safe to share across parallel workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

ERROR = "error"
WARNING = "warning"


class DatasetError(Exception):
    """Raised for malformed or invariant-violating dataset records."""

    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(message)
        self.lineno = lineno


@dataclass(frozen=True)
class Document:
    """A candidate abstract with a unique id; the retrieval unit."""

    id: str
    abstract: str
    title: str | None = None

    def text(self) -> str:
        """Retrieval text: title and abstract when the title is present."""
        return f"{self.title} {self.abstract}" if self.title else self.abstract


@dataclass(frozen=True)
class QueryInstance:
    """A query paragraph, its candidate pool, and the gold cited-id set."""

    query_id: str
    paragraph: str
    candidates: tuple[Document, ...]
    gold_ids: frozenset[str] = frozenset()
    lineno: int | None = field(default=None, compare=False, repr=False)

    def candidate_ids(self) -> tuple[str, ...]:
        return tuple(doc.id for doc in self.candidates)


@dataclass(frozen=True)
class Dataset:
    instances: tuple[QueryInstance, ...]

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[QueryInstance]:
        return iter(self.instances)

    def by_id(self, query_id: str) -> QueryInstance:
        for instance in self.instances:
            if instance.query_id == query_id:
                return instance
        raise KeyError(query_id)


@dataclass(frozen=True)
class ValidationIssue:
    severity: str
    message: str


def validate_instance(
    instance: QueryInstance,
    strict: bool = True,
    *,
    require_gold: bool = False,
) -> list[ValidationIssue]:
    """Check one instance against its invariants; pure, never raises.

    Returns an empty list iff all invariants hold. With ``strict`` off, a
    gold id missing from the pool is reported as a warning instead of an
    error. ``require_gold`` additionally demands a non-empty gold set, as
    evaluation needs.
    """
    issues: list[ValidationIssue] = []
    if not instance.query_id.strip():
        issues.append(ValidationIssue(ERROR, "query_id is empty"))
    if not instance.paragraph.strip():
        issues.append(ValidationIssue(ERROR, "paragraph is empty"))
    if not instance.candidates:
        issues.append(ValidationIssue(ERROR, "candidate pool is empty"))
    seen: set[str] = set()
    flagged: set[str] = set()
    for doc in instance.candidates:
        if not doc.id.strip():
            issues.append(ValidationIssue(ERROR, "candidate with empty id"))
        if not doc.abstract.strip():
            issues.append(
                ValidationIssue(ERROR, f"candidate {doc.id!r} has an empty abstract")
            )
        if doc.id in seen and doc.id not in flagged:
            issues.append(
                ValidationIssue(ERROR, f"duplicate candidate id {doc.id!r}")
            )
            flagged.add(doc.id)
        seen.add(doc.id)
    pool_ids = {doc.id for doc in instance.candidates}
    for gold_id in sorted(instance.gold_ids):
        if gold_id not in pool_ids:
            severity = ERROR if strict else WARNING
            issues.append(
                ValidationIssue(
                    severity, f"gold id {gold_id!r} not in the candidate pool"
                )
            )
    if require_gold and not instance.gold_ids:
        issues.append(ValidationIssue(ERROR, "gold set is empty"))
    return issues


def _require_str(record: dict, key: str, lineno: int) -> str:
    value = record.get(key)
    if not isinstance(value, str):
        raise DatasetError(f"line {lineno}: field {key!r} must be a string", lineno)
    return value


def _instance_from_line(lineno: int, line: str) -> QueryInstance:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"line {lineno}: invalid record: {exc}", lineno) from exc
    if not isinstance(record, dict):
        raise DatasetError(f"line {lineno}: record must be an object", lineno)
    query_id = _require_str(record, "query_id", lineno)
    paragraph = _require_str(record, "paragraph", lineno)
    raw_candidates = record.get("candidates")
    if not isinstance(raw_candidates, list):
        raise DatasetError(
            f"line {lineno}: field 'candidates' must be an array", lineno
        )
    candidates = []
    for position, raw in enumerate(raw_candidates):
        if not isinstance(raw, dict):
            raise DatasetError(
                f"line {lineno}: candidates[{position}] must be an object", lineno
            )
        doc_id = raw.get("id")
        abstract = raw.get("abstract")
        title = raw.get("title")
        if not isinstance(doc_id, str):
            raise DatasetError(
                f"line {lineno}: candidates[{position}].id must be a string", lineno
            )
        if not isinstance(abstract, str):
            raise DatasetError(
                f"line {lineno}: candidates[{position}].abstract must be a string",
                lineno,
            )
        if title is not None and not isinstance(title, str):
            raise DatasetError(
                f"line {lineno}: candidates[{position}].title must be a string",
                lineno,
            )
        candidates.append(Document(id=doc_id, abstract=abstract, title=title))
    raw_gold = record.get("gold", [])
    if not isinstance(raw_gold, list) or any(
        not isinstance(g, str) for g in raw_gold
    ):
        raise DatasetError(
            f"line {lineno}: field 'gold' must be an array of strings", lineno
        )
    return QueryInstance(
        query_id=query_id,
        paragraph=paragraph,
        candidates=tuple(candidates),
        gold_ids=frozenset(raw_gold),
        lineno=lineno,
    )


def _iter_lines(path: str | Path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if line.strip():
                yield lineno, line


def load_dataset(
    path: str | Path,
    *,
    strict: bool = True,
    require_gold: bool = False,
) -> Dataset:
    """Load and validate a JSONL dataset, raising on the first bad line.

    Never drops instances silently: every non-blank line either becomes an
    instance or aborts the load with a DatasetError naming the line.
    """
    instances: list[QueryInstance] = []
    seen: dict[str, int] = {}
    for lineno, line in _iter_lines(path):
        instance = _instance_from_line(lineno, line)
        issues = validate_instance(instance, strict=strict, require_gold=require_gold)
        errors = [issue.message for issue in issues if issue.severity == ERROR]
        if errors:
            raise DatasetError(
                f"line {lineno}, query {instance.query_id!r}: " + "; ".join(errors),
                lineno,
            )
        previous = seen.get(instance.query_id)
        if previous is not None:
            raise DatasetError(
                f"line {lineno}: duplicate query_id {instance.query_id!r}"
                f" (first seen on line {previous})",
                lineno,
            )
        seen[instance.query_id] = lineno
        instances.append(instance)
    return Dataset(instances=tuple(instances))


def validate_dataset_file(
    path: str | Path,
    *,
    strict: bool = True,
    require_gold: bool = False,
) -> tuple[int, list[tuple[int | None, ValidationIssue]]]:
    """Scan a whole dataset file, collecting every issue instead of raising.

    Returns (number of parseable instances, list of (lineno, issue)).
    """
    count = 0
    issues: list[tuple[int | None, ValidationIssue]] = []
    seen: dict[str, int] = {}
    for lineno, line in _iter_lines(path):
        try:
            instance = _instance_from_line(lineno, line)
        except DatasetError as exc:
            issues.append((lineno, ValidationIssue(ERROR, str(exc))))
            continue
        count += 1
        for issue in validate_instance(
            instance, strict=strict, require_gold=require_gold
        ):
            issues.append((lineno, issue))
        previous = seen.get(instance.query_id)
        if previous is not None:
            issues.append(
                (
                    lineno,
                    ValidationIssue(
                        ERROR,
                        f"duplicate query_id {instance.query_id!r}"
                        f" (first seen on line {previous})",
                    ),
                )
            )
        else:
            seen[instance.query_id] = lineno
    return count, issues


def write_dataset(dataset: Dataset | Sequence[QueryInstance], path: str | Path) -> None:
    """Write instances as JSONL; load_dataset(write_dataset(D)) reproduces D."""
    instances = dataset.instances if isinstance(dataset, Dataset) else dataset
    with open(path, "w", encoding="utf-8") as handle:
        for instance in instances:
            candidates = []
            for doc in instance.candidates:
                entry: dict = {"id": doc.id, "abstract": doc.abstract}
                if doc.title is not None:
                    entry["title"] = doc.title
                candidates.append(entry)
            record = {
                "query_id": instance.query_id,
                "paragraph": instance.paragraph,
                "candidates": candidates,
                "gold": sorted(instance.gold_ids),
            }
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")
