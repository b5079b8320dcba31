"""Core kdilation application."""

import asyncio
import json
import logging
import os
import tempfile
import time
from fractions import Fraction
from pathlib import Path
from typing import Any

import pandas as pd

from . import __version__
from .config import KDilationConfig
from .dilation import chart_audit, check_epsilon_grid, fit_sweep, kdilation, sweep_point
from .hopf import HopfComputation, calibrate_fitted_c, compute_hopf, gromov_check
from .ledger import (
    LedgerError,
    LedgerMissError,
    filtration_summary,
    target_dim_rank_certificate,
    theorem1_certificates,
    theorem1_targets,
)
from .ledger.facts import describe_certificate
from .maps import Compose, DegreeWrap, Hopf, MapExpr, dump_expr, named_construction, parse_map_spec
from .models import OutputFormat, Report, RunConfig

logger = logging.getLogger(__name__)

AUDIT_DEGREES = (1, 2, 3)
FLOAT_FORMAT = "%.17g"


def _json(model: Any) -> Any:
    """Plain JSON data of a pydantic model, aliases applied, non-finite floats as null."""
    return json.loads(model.model_dump_json(by_alias=True))


def _map_json(expr: MapExpr) -> Any:
    return json.loads(dump_expr(expr, indent=None))


def _atomic_write(path: Path, text: str) -> None:
    """Write to a temporary file next to `path`, then rename over it."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _hopf_summary(hopf: HopfComputation) -> dict[str, Any]:
    data = _json(hopf)
    data.pop("traces")
    data["fibers"] = [
        {
            "regular_value": list(trace.regular_value),
            "components": len(trace.components),
            "vertices": [len(c) for c in trace.components],
            "closure_gap": trace.closure_gap,
        }
        for trace in hopf.traces
    ]
    return data


def _trace_rows(hopf: HopfComputation) -> list[dict[str, Any]]:
    """Fiber vertices as plot data."""
    rows = []
    for fiber, trace in enumerate(hopf.traces):
        for component, points in enumerate(trace.components):
            for index, (x0, x1, x2, x3) in enumerate(points):
                rows.append(
                    {"fiber": fiber, "component": component, "index": index, "x0": x0, "x1": x1, "x2": x2, "x3": x3}
                )
    return rows


class KDilationApp:
    """Main kdilation application: one command per run, reports written under the output directory."""

    def __init__(self, config: KDilationConfig, run: RunConfig):
        """Initialize kdilation application."""
        self.config = config
        self.run = run
        self.options = config.dilation.options()

    def _config_echo(self) -> dict[str, Any]:
        """Everything the numbers depend on."""
        return {
            "run": self.run.model_dump(mode="json"),
            "dilation": self.config.dilation.model_dump(mode="json"),
            "chart": self.config.chart.model_dump(mode="json"),
            "hopf": self.config.hopf.model_dump(mode="json"),
        }

    def _report(
        self,
        command: str,
        source: str,
        payload: dict[str, Any],
        table: list[dict[str, Any]] | None = None,
        passed: bool | None = None,
    ) -> Report:
        return Report(
            command=command,
            tool_version=__version__,
            source=source,
            config=self._config_echo(),
            payload=payload,
            table=table or [],
            passed=passed,
        )

    async def filtration(self, m: int, n: int, k: int | None = None) -> Report:
        """Certificates for V_k π_m(S^n), optionally a single k."""
        summary = filtration_summary(m, n)
        certificates = [c for c in summary.certificates if k is None or c.k == k]
        if not certificates:
            raise LedgerMissError(f"no certificate for pi_{m}(S^{n}) at k={k}")
        rows = [
            {
                "id": c.id,
                "k": c.k,
                "verdict": c.verdict.value,
                "rule": c.rule.value,
                "reading": describe_certificate(c),
            }
            for c in certificates
        ]
        for row in rows:
            marker = "❓" if row["verdict"] == "unknown" else "📜"
            print(f"{marker} k={row['k']}: {row['reading']}")
        payload = {
            "m": m,
            "n": n,
            "group": summary.group,
            "group_citation": summary.group_citation,
            "levels": {str(level): lines for level, lines in summary.levels.items() if k is None or level == k},
            "certificates": [_json(c) for c in certificates],
        }
        return self._report("filtration", "homotopy-ledger", payload, rows)

    async def targets(self, N: int, count: int | None = None) -> Report:
        """Domain dimensions M where suspended J-image classes sit in V_3, or the rank fact for S^2."""
        if N < 2:
            raise LedgerError(f"targets need N >= 2, got N={N}")
        count = count or self.config.ledger.target_count
        if N == 2:
            certificate = target_dim_rank_certificate()
            print(f"📜 {describe_certificate(certificate)}")
            payload = {"N": N, "targets": [], "certificates": [_json(certificate)]}
            return self._report("targets", "homotopy-ledger", payload, [{"M": 3, "id": certificate.id}])
        targets = theorem1_targets(N, count)
        certificates = theorem1_certificates(N, count)
        print(f"🎯 N={N}: M = {', '.join(map(str, targets))}")
        payload = {"N": N, "targets": targets, "certificates": [_json(c) for c in certificates]}
        rows = [{"M": M, "id": c.id} for M, c in zip(targets, certificates, strict=True)]
        return self._report("targets", "homotopy-ledger", payload, rows)

    async def construct(self, epsilon: Fraction | None = None) -> Report:
        """The configured construction at one ε, its declared constants and a chart audit."""
        spec = self.run.construction
        eps = float(epsilon if epsilon is not None else self.run.epsilons[0])
        node = named_construction(
            spec.name,
            spec.p,
            eps,
            m=spec.m,
            max_rows=self.config.chart.max_rows,
            max_extent=self.config.chart.max_extent,
        )
        audit = await asyncio.to_thread(chart_audit, node.chart, seed=self.run.seed)
        k = self.run.k
        payload = {
            "map": _map_json(node),
            "epsilon": eps,
            "factor_lipschitz": node.factor_lipschitz,
            "quasi_isometry_constant": node.quasi_isometry_constant,
            "smash_lipschitz": node.smash_lipschitz,
            "k": k,
            "construction_bound": node.construction_bound(k),
            "predicted_bound": node.predicted_bound(k),
            "chart_audit": {**_json(audit), "passed": audit.passed, "source": "dilation-engine"},
        }
        print(f"🧱 {spec.name} construction at eps={eps:g}: Q={node.quasi_isometry_constant:.4g}")
        if not audit.passed:
            print(f"⚠️  chart audit measured Q {audit.measured_q:.4g} > declared {audit.declared_q:.4g}")
        return self._report("construct", "map-forge", payload, passed=audit.passed)

    async def dilation(self, map_spec: str, k: int | None = None) -> Report:
        """Sampled k-dilation of one map."""
        expr = parse_map_spec(map_spec)
        k = k or self.run.k
        report = await asyncio.to_thread(kdilation, expr, k, self.run.budget, self.run.seed, self.options)
        print(f"📐 k={k} dilation of {map_spec}: {report.estimate:.6g} ({report.skipped} skipped)")
        payload = {
            "map_spec": map_spec,
            "map": _map_json(expr),
            "report": {**_json(report), "within_predicted_bound": report.within_predicted_bound},
        }
        return self._report("dilation", "dilation-engine", payload)

    async def sweep(self) -> Report:
        """Scaling sweep over the ε grid; the fitted slope against the predicted exponent."""
        spec = self.run.construction
        chart = self.config.chart
        check_epsilon_grid(spec.class_m, spec.p, self.run.epsilons, chart.max_rows, chart.max_extent)
        template = named_construction(
            spec.name,
            spec.p,
            float(self.run.epsilons[0]),
            m=spec.m,
            max_rows=chart.max_rows,
            max_extent=chart.max_extent,
        )
        descriptor = template.descriptor
        print(f"📈 Sweeping {len(self.run.epsilons)} eps values at k={self.run.k}...")
        points = await asyncio.gather(
            *(
                asyncio.to_thread(
                    sweep_point,
                    descriptor,
                    template.f1,
                    template.f2,
                    self.run.k,
                    float(eps),
                    self.run.budget,
                    self.run.seed,
                    chart.max_rows,
                    chart.max_extent,
                    self.options,
                )
                for eps in self.run.epsilons
            )
        )
        result = fit_sweep(descriptor, self.run.k, list(points), self.config.dilation.slope_tolerance)
        rows = [
            {
                "epsilon": pt.epsilon,
                "estimate": pt.estimate,
                "budget": pt.budget,
                "ascent_steps": pt.ascent_steps,
                "predicted_bound": pt.predicted_bound,
            }
            for pt in result.points
        ]
        payload = {
            **_json(result),
            "predicted": result.predicted,
            "growth": result.growth,
            "passed": result.passed,
            "source": "dilation-engine",
        }
        if result.vanishing:
            print(f"📉 k={self.run.k} dilation vanishes identically; predicted exponent {result.predicted_exponent}")
        else:
            flag = " (growth)" if result.growth else ""
            print(f"📉 slope {result.slope:.4f} vs predicted {result.predicted_exponent}{flag}")
        return self._report("sweep", "dilation-engine", payload, rows, passed=result.passed)

    async def _hopf_and_dilation(self, expr: MapExpr) -> tuple[HopfComputation, Any]:
        hopf_config = self.config.hopf
        return await asyncio.gather(
            asyncio.to_thread(
                compute_hopf,
                expr,
                step=hopf_config.step,
                seed=self.run.seed,
                max_halvings=hopf_config.max_halvings,
                max_attempts=hopf_config.regular_value_attempts,
                mode=self.options.mode,
                h=self.options.h,
                tol_pre=hopf_config.tol_pre,
            ),
            asyncio.to_thread(kdilation, expr, 2, self.run.budget, self.run.seed, self.options),
        )

    async def _fitted_c(self) -> float:
        return await asyncio.to_thread(calibrate_fitted_c, self.run.budget, self.run.seed, self.options)

    async def hopf(self, map_spec: str) -> Report:
        """H by fiber linking, D = 2-dilation and the |H| ≤ fitted_C·D² check."""
        expr = parse_map_spec(map_spec)
        hopf, dilation2 = await self._hopf_and_dilation(expr)
        audit = gromov_check(hopf, dilation2, await self._fitted_c())
        print(f"🔗 H({map_spec}) = {audit.hopf_invariant}, D = {dilation2.estimate:.6g}, ratio {audit.ratio:.4g}")
        payload = {"map_spec": map_spec, "hopf": _hopf_summary(hopf), "audit": _json(audit)}
        table = _trace_rows(hopf) if self.run.format is OutputFormat.CSV else None
        return self._report("hopf", "hopf-meter", payload, table, passed=audit.passed)

    async def audit(self, degrees: tuple[int, ...] = AUDIT_DEGREES) -> Report:
        """|H| ≤ fitted_C·D² across hopf ∘ wrap(d)."""
        fitted_c = await self._fitted_c()
        rows, audits = [], []
        for d in degrees:
            expr = Compose(outer=Hopf(), inner=DegreeWrap(degree=d))
            hopf, dilation2 = await self._hopf_and_dilation(expr)
            result = gromov_check(hopf, dilation2, fitted_c)
            audits.append(_json(result))
            rows.append(
                {
                    "degree": d,
                    "hopf_invariant": result.hopf_invariant,
                    "dilation2": dilation2.estimate,
                    "ratio": result.ratio,
                    "fitted_C": fitted_c,
                    "pass": result.passed,
                }
            )
            print(f"{'✅' if result.passed else '❌'} d={d}: H={result.hopf_invariant}, D={dilation2.estimate:.6g}")
        passed = all(row["pass"] for row in rows)
        payload = {"degrees": list(degrees), "fitted_C": fitted_c, "audits": audits, "passed": passed}
        return self._report("audit", "hopf-meter", payload, rows, passed=passed)

    async def execute(self, command: str, **arguments: Any) -> Report:
        """Run one command and log how long it took."""
        handler = getattr(self, command)
        started = time.perf_counter()
        report: Report = await handler(**arguments)
        logger.info("%s finished in %.2fs", command, time.perf_counter() - started)
        return report

    def write(self, report: Report) -> list[Path]:
        """JSON report, plus the table as CSV for sweeps or when CSV output is requested."""
        directory = Path(self.run.output_dir)
        summary = json.dumps(_json(report), sort_keys=True, indent=2) + "\n"
        json_path = directory / f"{report.command}.json"
        _atomic_write(json_path, summary)
        written = [json_path]
        if report.table and (report.command == "sweep" or self.run.format is OutputFormat.CSV):
            csv_path = directory / f"{report.command}.csv"
            frame = pd.DataFrame(report.table)
            _atomic_write(csv_path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))
            written.append(csv_path)
        for path in written:
            print(f"💾 Wrote {path}")
        return written

