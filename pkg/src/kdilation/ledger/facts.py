"""Encoded filtration facts for small homotopy groups of spheres."""

import json
import logging
from functools import lru_cache
from importlib import resources

from pydantic import TypeAdapter

from .models import (
    FactRecord,
    FiltrationCertificate,
    FiltrationSummary,
    GroupFact,
    HomotopyClassDescriptor,
    Verdict,
)
from .rules import LedgerError, LedgerMissError, certificate_check

logger = logging.getLogger(__name__)

FACTS_FILE = "facts.jsonl"

FactLine = FactRecord | GroupFact
_line_adapter: TypeAdapter[FactLine] = TypeAdapter(FactLine)


def load_fact_lines(text: str) -> list[FactLine]:
    """Parse the line-oriented fact table; blank lines are not allowed."""
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            records.append(_line_adapter.validate_python(json.loads(line)))
        except ValueError as e:
            raise LedgerError(f"fact table line {lineno} is malformed: {e}") from e
    return records


def dump_fact_lines(records: list[FactLine]) -> str:
    """Serialize records so that `dump_fact_lines(load_fact_lines(t)) == t`."""
    return "".join(json.dumps(r.model_dump(mode="json")) + "\n" for r in records)


def read_fact_text() -> str:
    """Raw text of the fact table shipped with the package."""
    return resources.files(__package__).joinpath(FACTS_FILE).read_text(encoding="ascii")


def build_certificates(records: list[FactLine]) -> list[FiltrationCertificate]:
    """Turn certificate records into certificates; a premise must appear before its first use."""
    by_id: dict[str, FiltrationCertificate] = {}
    for record in records:
        if not isinstance(record, FactRecord):
            continue
        if record.id in by_id:
            raise LedgerError(f"duplicate fact id {record.id!r}")
        try:
            premises = tuple(by_id[pid] for pid in record.premises)
        except KeyError as e:
            raise LedgerError(f"fact {record.id!r} cites unknown or later premise {e.args[0]!r}") from e
        by_id[record.id] = FiltrationCertificate(
            id=record.id,
            homotopy_class=HomotopyClassDescriptor(
                m=record.m,
                n=record.n,
                p=record.p,
                label=record.label,
                torsion_order=record.torsion_order,
                hopf_invariant=record.hopf_invariant,
                degree=record.degree,
            ),
            k=record.k,
            verdict=record.verdict,
            rule=record.rule,
            premises=premises,
            note=record.citation,
        )
    return list(by_id.values())


def build_group_facts(records: list[FactLine]) -> dict[tuple[int, int], GroupFact]:
    """Group types keyed by (m, n); one line per group."""
    groups: dict[tuple[int, int], GroupFact] = {}
    for record in records:
        if isinstance(record, GroupFact):
            if (record.m, record.n) in groups:
                raise LedgerError(f"pi_{record.m}(S^{record.n}) has two group lines")
            groups[(record.m, record.n)] = record
    return groups


@lru_cache(maxsize=1)
def _shipped_certificates() -> tuple[FiltrationCertificate, ...]:
    certificates = build_certificates(load_fact_lines(read_fact_text()))
    for c in certificates:
        if not certificate_check(c):
            # a shipped fact failing its own rule is a packaging bug
            raise LedgerError(f"shipped fact {c.id!r} does not satisfy rule {c.rule.value}")
    logger.debug("loaded %d filtration facts", len(certificates))
    return tuple(certificates)


@lru_cache(maxsize=1)
def group_structure() -> dict[tuple[int, int], GroupFact]:
    """π_m(S^n) for every group the fact table covers."""
    return build_group_facts(load_fact_lines(read_fact_text()))


def filtration_table(m: int, n: int) -> list[FiltrationCertificate]:
    """Certificates known for V_k π_m(S^n), ordered by k then table order."""
    if (m, n) not in group_structure():
        raise LedgerMissError(f"no encoded facts for pi_{m}(S^{n})")
    rows = [
        c
        for c in _shipped_certificates()
        if c.homotopy_class.total_m == m and c.homotopy_class.total_n == n
    ]
    if not rows:
        raise LedgerMissError(f"no encoded facts for pi_{m}(S^{n})")
    return sorted(rows, key=lambda c: c.k)


def describe_certificate(c: FiltrationCertificate) -> str:
    """One-line human reading of a certificate."""
    cls = c.homotopy_class
    name = cls.label or f"class in pi_{cls.total_m}(S^{cls.total_n})"
    if cls.torsion_order is not None:
        name += f" (order {cls.torsion_order})"
    if c.verdict is Verdict.UNKNOWN:
        return f"?? {name}: open [{c.rule.value}]"
    relation = "in" if c.verdict is Verdict.MEMBER else "not in"
    return f"{name} {relation} V_{c.k} [{c.rule.value}]"


def filtration_summary(m: int, n: int) -> FiltrationSummary:
    """Group type with its citation and the per-k reading of every certificate for π_m(S^n)."""
    certificates = filtration_table(m, n)
    levels: dict[int, list[str]] = {}
    for c in certificates:
        levels.setdefault(c.k, []).append(describe_certificate(c))
    group = group_structure()[(m, n)]
    return FiltrationSummary(
        m=m, n=n, group=group.group, group_citation=group.citation, levels=levels, certificates=certificates
    )
