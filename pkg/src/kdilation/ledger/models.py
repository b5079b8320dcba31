"""Ledger records: homotopy class descriptors and filtration certificates."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Verdict(str, Enum):
    """Outcome of a filtration certificate."""

    MEMBER = "member"
    NON_MEMBER = "non-member"
    UNKNOWN = "unknown"


class Rule(str, Enum):
    """Justification a certificate cites."""

    PROP1_SUSPENSION = "prop1-suspension"
    TARGET_DIM_RANK = "target-dim-rank"
    HOPF_OBSTRUCTION = "hopf-obstruction"
    DEGREE_OBSTRUCTION = "degree-obstruction"
    TSUI_WANG = "tsui-wang"
    SUBGROUP_CLOSURE = "subgroup-closure"
    NESTING = "nesting"
    AXIOM_FACT = "axiom-fact"


class ClosureOperation(str, Enum):
    """Group operation a subgroup-closure certificate applies to its premises."""

    SUM = "sum"
    INVERSE = "inverse"


class HomotopyClassDescriptor(BaseModel):
    """A class Σᵖa where a lies in π_m(S^n)."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)  # domain sphere of the base class
    n: int = Field(ge=1)  # target sphere of the base class
    p: int = Field(default=0, ge=0)  # suspension count
    label: str = ""
    torsion_order: int | None = Field(default=None, ge=1)
    hopf_invariant: int | None = None
    degree: int | None = None
    trivial: bool = False

    @model_validator(mode="after")
    def _check_dims(self) -> "HomotopyClassDescriptor":
        if self.m < self.n:
            raise ValueError(f"base class needs m >= n, got m={self.m}, n={self.n}")
        return self

    @property
    def total_m(self) -> int:
        """Domain sphere dimension of the suspended class."""
        return self.m + self.p

    @property
    def total_n(self) -> int:
        """Target sphere dimension of the suspended class."""
        return self.n + self.p

    def same_group(self, other: "HomotopyClassDescriptor") -> bool:
        """Whether both classes live in the same π_M(S^N)."""
        return self.total_m == other.total_m and self.total_n == other.total_n

    def same_class(self, other: "HomotopyClassDescriptor") -> bool:
        """Whether both descriptors name the same element."""
        return self.same_group(other) and self.label == other.label


class FiltrationCertificate(BaseModel):
    """Justification that a class lies in (or outside) V_k π_M(S^N)."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    id: str
    homotopy_class: HomotopyClassDescriptor = Field(alias="class")
    k: int = Field(ge=1)
    verdict: Verdict
    rule: Rule
    premises: tuple["FiltrationCertificate", ...] = ()
    closure: ClosureOperation | None = None
    note: str = ""


class FactRecord(BaseModel):
    """One certificate line of the shipped fact table."""

    model_config = ConfigDict(extra="forbid")

    id: str
    m: int
    n: int
    p: int
    label: str
    torsion_order: int | None
    hopf_invariant: int | None
    degree: int | None
    k: int
    verdict: Verdict
    rule: Rule
    premises: list[str]
    citation: str


class GroupFact(BaseModel):
    """Isomorphism type of π_m(S^n), an axiom line of the fact table."""

    model_config = ConfigDict(extra="forbid")

    id: str
    m: int
    n: int
    group: str
    rule: Rule = Rule.AXIOM_FACT
    citation: str

    @model_validator(mode="after")
    def _check_axiom(self) -> "GroupFact":
        if self.rule is not Rule.AXIOM_FACT:
            raise ValueError(f"group types are axiom facts, got rule {self.rule.value}")
        if not self.citation.strip():
            raise ValueError("axiom facts must carry a citation")
        return self


class FiltrationSummary(BaseModel):
    """Group type plus a per-k reading of the certificates."""

    m: int
    n: int
    group: str
    group_citation: str
    levels: dict[int, list[str]]
    certificates: list[FiltrationCertificate]
