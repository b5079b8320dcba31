"""Exact decision procedures for the suspension criterion and certificate rules."""

import logging
from fractions import Fraction

from ..errors import KDilationError
from .models import (
    ClosureOperation,
    FiltrationCertificate,
    HomotopyClassDescriptor,
    Rule,
    Verdict,
)

logger = logging.getLogger(__name__)

TSUI_WANG_CITATION = "Tsui-Wang: a map S^m -> S^n (m >= 2) with 2-dilation < 1 is nullhomotopic"
ADAMS_CITATION = "Adams: the stable J-homomorphism is injective on pi_i(SO) = Z2 for i = 8j+1"


class LedgerError(KDilationError, ValueError):
    """Invalid ledger query."""


class LedgerMissError(LedgerError):
    """No encoded facts for the requested group."""


class CyclicPremiseError(LedgerError):
    """A certificate lists itself among its own premises."""


def suspension_threshold(m: int, n: int, p: int) -> Fraction:
    """Return n + (n/m)·p exactly."""
    return n + Fraction(n, m) * p


def min_k_for_suspension(m: int, n: int, p: int) -> int:
    """Smallest integer k with k > n + (n/m)·p."""
    if n < 1 or m < n:
        raise LedgerError(f"need m >= n >= 1, got m={m}, n={n}")
    if p < 1:
        raise LedgerError(f"suspension count must be positive, got p={p}")
    threshold = suspension_threshold(m, n, p)
    # floor(t) + 1 is strictly above t, also when t is an integer
    return threshold.numerator // threshold.denominator + 1


def epsilon_exponent(m: int, n: int, p: int, k: int) -> Fraction:
    """Power of ε in the k-dilation bound of the construction: (m/p)(k − n − (n/m)p)."""
    if p < 1:
        raise LedgerError(f"suspension count must be positive, got p={p}")
    return Fraction(m, p) * (k - suspension_threshold(m, n, p))


def _theorem1_indices(N: int, count: int) -> list[int]:
    if N < 3:
        raise LedgerError(f"target enumeration needs N >= 3, got N={N}")
    if count < 1:
        raise LedgerError(f"count must be positive, got {count}")
    j = 0
    indices: list[int] = []
    while len(indices) < count:
        i = 8 * j + 1
        if i > 2 * N - 6:
            indices.append(i)
        j += 1
    return indices


def theorem1_targets(N: int, count: int) -> list[int]:
    """First `count` domain dimensions M with a nontrivial class in V_3 π_M(S^N)."""
    return [N + i for i in _theorem1_indices(N, count)]


def theorem1_certificates(N: int, count: int) -> list[FiltrationCertificate]:
    """Member certificates at k = 3 for Σ^{N−2} a_i, one per target M."""
    certificates = []
    for i in _theorem1_indices(N, count):
        descriptor = HomotopyClassDescriptor(m=i + 2, n=2, p=N - 2, label=f"a_{i}", torsion_order=2)
        nontrivial = FiltrationCertificate(
            id=f"thm1-N{N}-i{i}-exists",
            homotopy_class=descriptor,
            k=descriptor.total_m + 1,
            verdict=Verdict.MEMBER,
            rule=Rule.AXIOM_FACT,
            note=ADAMS_CITATION + "; its image desuspends to pi_{i+2}(S^2)",
        )
        certificates.append(
            FiltrationCertificate(
                id=f"thm1-N{N}-M{N + i}",
                homotopy_class=descriptor,
                k=3,
                verdict=Verdict.MEMBER,
                rule=Rule.PROP1_SUSPENSION,
                premises=(nontrivial,),
                note=f"3 > 2 + (2/{i + 2})·{N - 2}",
            )
        )
    return certificates


def target_dim_rank_certificate(m: int = 3, n: int = 2, k: int = 3) -> FiltrationCertificate:
    """Whole-group membership because Λᵏ vanishes into an n-sphere with k > n."""
    descriptor = HomotopyClassDescriptor(m=m, n=n, label=f"pi_{m}(S^{n})")
    return FiltrationCertificate(
        id=f"pi{m}s{n}-v{k}-rank",
        homotopy_class=descriptor,
        k=k,
        verdict=Verdict.MEMBER,
        rule=Rule.TARGET_DIM_RANK,
        note=f"every map S^{m} -> S^{n} has {k}-dilation zero",
    )


def _side_conditions(c: FiltrationCertificate) -> list[str]:
    """Violated side conditions of the certificate's own rule (premises not recursed)."""
    cls = c.homotopy_class
    violations: list[str] = []

    if c.verdict is Verdict.UNKNOWN and c.rule is not Rule.AXIOM_FACT:
        violations.append("verdict=unknown is only recorded as an axiom fact")

    match c.rule:
        case Rule.PROP1_SUSPENSION:
            if c.verdict is not Verdict.MEMBER:
                violations.append("prop1-suspension only proves membership")
            if cls.p < 1:
                violations.append("prop1-suspension needs p >= 1")
            elif not c.k > suspension_threshold(cls.m, cls.n, cls.p):
                violations.append(f"k={c.k} is not > n + (n/m)p = {suspension_threshold(cls.m, cls.n, cls.p)}")
        case Rule.TARGET_DIM_RANK:
            if c.verdict is not Verdict.MEMBER:
                violations.append("target-dim-rank only proves membership")
            if not c.k > cls.total_n:
                violations.append(f"k={c.k} is not > target dimension {cls.total_n}")
        case Rule.HOPF_OBSTRUCTION:
            if c.verdict is not Verdict.NON_MEMBER:
                violations.append("hopf-obstruction only proves non-membership")
            if cls.total_n % 2 or cls.total_m != 2 * cls.total_n - 1:
                violations.append(f"pi_{cls.total_m}(S^{cls.total_n}) is not of the form pi_(4n-1)(S^2n)")
            if not cls.hopf_invariant:
                violations.append("class has no nonzero recorded Hopf invariant")
            if c.k > cls.total_n:
                violations.append(f"k={c.k} exceeds 2n'={cls.total_n}")
        case Rule.DEGREE_OBSTRUCTION:
            if c.verdict is not Verdict.NON_MEMBER:
                violations.append("degree-obstruction only proves non-membership")
            if cls.total_m != cls.total_n:
                violations.append("degree-obstruction needs equal sphere dimensions")
            if not cls.degree:
                violations.append("class has no nonzero recorded degree")
            if c.k > cls.total_n:
                violations.append(f"k={c.k} exceeds {cls.total_n}")
        case Rule.TSUI_WANG:
            if c.verdict is not Verdict.NON_MEMBER:
                violations.append("tsui-wang only proves non-membership")
            if cls.trivial:
                violations.append("tsui-wang says nothing about the trivial class")
            if cls.total_m < 2:
                violations.append("tsui-wang needs m >= 2")
            if c.k > 2:
                violations.append(f"tsui-wang covers k <= 2, got k={c.k}")
        case Rule.NESTING:
            if c.verdict is Verdict.MEMBER:
                usable = [q for q in c.premises if q.verdict is Verdict.MEMBER and q.k <= c.k]
                direction = "member premise with k' <= k"
            else:
                usable = [q for q in c.premises if q.verdict is Verdict.NON_MEMBER and q.k >= c.k]
                direction = "non-member premise with k' >= k"
            if not any(q.homotopy_class.same_class(cls) for q in usable):
                violations.append(f"nesting needs a {direction} for the same class")
        case Rule.SUBGROUP_CLOSURE:
            if c.verdict is not Verdict.MEMBER:
                violations.append("subgroup-closure only proves membership")
            usable = [
                q
                for q in c.premises
                if q.verdict is Verdict.MEMBER and q.k <= c.k and q.homotopy_class.same_group(cls)
            ]
            if c.closure is ClosureOperation.SUM and len(usable) < 2:
                violations.append("a sum needs two member premises in the same group")
            elif c.closure is ClosureOperation.INVERSE and not usable:
                violations.append("an inverse needs a member premise in the same group")
            elif c.closure is None:
                violations.append("subgroup-closure must name its operation")
        case Rule.AXIOM_FACT:
            if not c.note.strip():
                violations.append("axiom facts must carry a citation")
    return violations


def explain_certificate(c: FiltrationCertificate) -> list[str]:
    """All violated conditions of a certificate and, recursively, of its premises."""
    violations: list[str] = []

    def visit(node: FiltrationCertificate, path: tuple[str, ...]) -> None:
        if node.id in path:
            raise CyclicPremiseError(f"premise cycle: {' -> '.join((*path, node.id))}")
        violations.extend(f"{node.id}: {v}" for v in _side_conditions(node))
        for premise in node.premises:
            visit(premise, (*path, node.id))

    visit(c, ())
    return violations


def certificate_check(c: FiltrationCertificate) -> bool:
    """Whether the certificate and all its premises satisfy their rules exactly."""
    violations = explain_certificate(c)
    for violation in violations:
        logger.debug("certificate %s rejected: %s", c.id, violation)
    return not violations
