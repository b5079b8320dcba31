"""Exact filtration ledger for homotopy groups of spheres."""

from .facts import (
    FactLine,
    dump_fact_lines,
    filtration_summary,
    filtration_table,
    group_structure,
    load_fact_lines,
    read_fact_text,
)
from .models import (
    ClosureOperation,
    FactRecord,
    FiltrationCertificate,
    FiltrationSummary,
    GroupFact,
    HomotopyClassDescriptor,
    Rule,
    Verdict,
)
from .rules import (
    CyclicPremiseError,
    LedgerError,
    LedgerMissError,
    certificate_check,
    epsilon_exponent,
    explain_certificate,
    min_k_for_suspension,
    suspension_threshold,
    target_dim_rank_certificate,
    theorem1_certificates,
    theorem1_targets,
)

__all__ = [
    "ClosureOperation",
    "CyclicPremiseError",
    "FactLine",
    "FactRecord",
    "FiltrationCertificate",
    "FiltrationSummary",
    "GroupFact",
    "HomotopyClassDescriptor",
    "LedgerError",
    "LedgerMissError",
    "Rule",
    "Verdict",
    "certificate_check",
    "dump_fact_lines",
    "epsilon_exponent",
    "explain_certificate",
    "filtration_summary",
    "filtration_table",
    "group_structure",
    "load_fact_lines",
    "min_k_for_suspension",
    "read_fact_text",
    "suspension_threshold",
    "target_dim_rank_certificate",
    "theorem1_certificates",
    "theorem1_targets",
]
