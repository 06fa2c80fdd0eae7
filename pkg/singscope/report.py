"""Analysis report assembly and persistence.

Reports are plain JSON. Rationals are written as ``"p/q"`` strings and every number carries a
provenance marker, so a report read back compares equal to the one written.
"""

import csv
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import scipy
import sympy

from singscope import __version__
from singscope.classify import ClassificationReport, Interval
from singscope.exponents import Summability
from singscope.legendre import LegendreData
from singscope.newton import NewtonPolyhedron
from singscope.puiseux import Resolution, ResolutionStep, TransitionCheck
from singscope.verify import FitResult, Verdict

SCHEMA = "singscope/1"

Section = dict[str, Any]


def exact(value: Fraction | int | None) -> Section | None:
    if value is None:
        return None
    return {"value": str(Fraction(value)), "provenance": "exact"}


def fitted(value: float | None) -> Section | None:
    if value is None:
        return None
    return {"value": float(value), "provenance": "fitted"}


def interval(value: Fraction | Interval) -> Section:
    if isinstance(value, Interval):
        return {"lower": exact(value.lower), "upper": exact(value.upper)}
    return {"value": str(value), "provenance": "exact"}


def read_exact(entry: Section) -> Fraction:
    """
    Raises:
        ValueError: If the entry is not an exact value
    """
    if entry.get("provenance") != "exact":
        raise ValueError(f"Expected an exact value, got {entry}")
    return Fraction(entry["value"])


def _points(polyhedron: NewtonPolyhedron) -> list[list[str]]:
    return [[str(b), str(a)] for b, a in polyhedron.vertices]


def classification_section(report: ClassificationReport) -> Section:
    nf = report.normal_form
    section: Section = {
        "class": str(report.singularity_class),
        "n": report.n,
        "m": report.m,
        "psi": nf.psi.to_text(),
        "b0": nf.b0.to_text(),
        "h": exact(report.h),
        "p_c": interval(report.p_c),
        "n_e_x": exact(report.n_e_x),
        "n_e": exact(report.n_e),
        "p_e": exact(report.p_e),
        "kappa_e": None if report.kappa_e is None else [str(report.kappa_e.k1), str(report.kappa_e.k2)],
        "d_input": exact(report.d_input),
        "adapted_input": report.adapted_input,
        "exceptional_condition": report.exceptional_condition,
        "necessary_exponents": {key: exact(value) for key, value in report.necessary_exponents.items()},
        "flags": sorted(report.flags),
    }
    if report.adaptation is not None:
        section["alpha"] = report.adaptation.alpha.to_text()
    if report.conjectured_pc is not None:
        section["conjectured_pc"] = {"value": str(report.conjectured_pc), "provenance": "conjecture"}
    return section


def legendre_section(data: LegendreData) -> Section:
    return {
        "route": str(data.route),
        "x2c": data.x2c.to_text(),
        "w0": data.w0.to_text(),
        "B": data.B.to_text(),
        "B0": exact(data.B.coefficient(0, 0)),
        "phi1": data.phi1.to_text(),
        "alpha_tilde": None if data.alpha_tilde is None else data.alpha_tilde.to_text(),
    }


def _step(step: ResolutionStep) -> Section:
    return {
        "step": step.step_index,
        "jet": str(step.jet),
        "case": str(step.case),
        "multiplicity": step.multiplicity,
        "stopped": step.stopped,
        "polyhedron": _points(step.polyhedron),
        "a1_at_least_one": step.a1_at_least_one,
        "lemma_branch": None if step.lemma_branch is None else str(step.lemma_branch),
    }


def resolution_section(phase: str, resolution: Resolution, cluster_tree: str | None) -> Section:
    return {
        "Phi": phase,
        "polyhedron": _points(resolution.polyhedron),
        "slopes": [str(a) for a in resolution.polyhedron.slopes],
        "a1_at_least_one": resolution.a1_at_least_one,
        "lemma_branch": None if resolution.lemma_branch is None else str(resolution.lemma_branch),
        "max_step": resolution.max_step,
        "steps": [_step(step) for step in resolution.steps],
        "cluster_tree": cluster_tree,
    }


def summability_section(summability: Summability, classified: Fraction | Interval) -> Section:
    binding = summability.binding
    return {
        "predicted_pc": exact(summability.p_c),
        "agrees_with_classification": summability.p_c == classified,
        "binding": None if binding is None else binding.label,
        "check_p": exact(summability.check_p),
        "budgets": [
            {
                "label": entry.label,
                "variant": str(entry.variant),
                "threshold": exact(entry.threshold),
                "margins": [
                    {"name": m.name, "coef_u": exact(m.coef_u), "const": exact(m.const)} for m in entry.margins
                ],
            }
            for entry in summability.entries
        ],
        "margins_at_check": [
            {"budget": label, "name": name, "value": exact(value)}
            for label, name, value in summability.margins_at_check
        ],
    }


def fit_entry(fit: FitResult) -> Section:
    return {
        "kind": fit.kind,
        "exponent_hat": fitted(fit.exponent_hat),
        "stderr": fitted(fit.stderr),
        "predicted": exact(fit.predicted),
        "mode": str(fit.mode),
        "tolerance": fit.tolerance,
        "x_range": [fit.x_range[0], fit.x_range[1]],
        "points": [[x, y] for x, y in fit.points],
        "threshold": fitted(fit.threshold),
        "threshold_predicted": exact(fit.threshold_predicted),
        "notes": list(fit.notes),
        "verdict": str(fit.verdict),
    }


def transition_entry(check: TransitionCheck, M: int) -> Section:
    return {
        "kind": "transition",
        "vertex": [str(check.vertex[0]), str(check.vertex[1])],
        "M": M,
        "samples": check.samples,
        "ratio_min": fitted(check.ratio_min),
        "ratio_max": fitted(check.ratio_max),
        "value_min": fitted(check.value_min),
        "value_max": fitted(check.value_max),
        "verdict": str(Verdict.PASS if check.passed else Verdict.FAIL),
    }


def meta_section(config: Any, order: int) -> Section:
    return {
        "schema": SCHEMA,
        "version": __version__,
        "libraries": {"numpy": np.__version__, "scipy": scipy.__version__, "sympy": sympy.__version__},
        "order": order,
        "depth": config.depth,
        "max_steps": config.max_steps,
        "seed": config.seed,
        "grid": config.grid,
        "points": config.points,
    }


@dataclass
class AnalysisReport:
    """JSON-ready report of one analysis; sections left out are ``None``."""

    input: Section
    meta: Section
    classification: Section | None = None
    legendre: Section | None = None
    resolution: Section | None = None
    summability: Section | None = None
    verification: list[Section] = field(default_factory=lambda: list[Section]())

    @property
    def verdicts(self) -> list[Verdict]:
        return [Verdict(entry["verdict"]) for entry in self.verification]

    def to_dict(self) -> Section:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: Section) -> "AnalysisReport":
        """
        Raises:
            ValueError: If the schema marker is missing or unknown
        """
        schema = data.get("meta", {}).get("schema")
        if schema != SCHEMA:
            raise ValueError(f"Unsupported report schema {schema!r}, expected {SCHEMA!r}")
        return cls(**data)

    def save(self, path: Path) -> None:
        path.write_text(self.to_json())

    @classmethod
    def load(cls, path: Path) -> "AnalysisReport":
        """
        Raises:
            ValueError: If the file is not a singscope report
        """
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ValueError(f"Failed to load report from {path}: {e}") from e
        return cls.from_dict(data)

    def write_csv(self, path: Path) -> None:
        """Write every fitted (log2 x, log2 value) point, one row per point."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["kind", "log2_x", "log2_value"])
            for entry in self.verification:
                for x, y in entry.get("points", []):
                    writer.writerow([entry["kind"], repr(x), repr(y)])

    def summary(self) -> str:
        lines = [f"input: {self.input['expression']}  (order {self.meta['order']})"]
        if self.classification is not None:
            c = self.classification
            lines.append(f"class: {c['class']}  n={c['n']}  m={c['m']}")
            p_c = c["p_c"]
            shown = p_c["value"] if "value" in p_c else f"[{p_c['lower']['value']}, {p_c['upper']['value']}]"
            lines.append(f"h = {c['h']['value']}  p_c = {shown}")
            if c["n_e"] is not None:
                lines.append(f"n_e = {c['n_e']['value']}  p_e = {c['p_e']['value']}")
            if "conjectured_pc" in c:
                lines.append(f"conjectured p_c = {c['conjectured_pc']['value']}")
            if c["flags"]:
                lines.append(f"flags: {', '.join(c['flags'])}")
        if self.resolution is not None:
            r = self.resolution
            lines.append(f"N(Phi): {' -- '.join(f'({b}, {a})' for b, a in r['polyhedron'])}")
            lines.append(f"resolution: {len(r['steps'])} steps, max step {r['max_step']}")
        if self.summability is not None:
            s = self.summability
            lines.append(f"predicted p_c = {s['predicted_pc']['value']} (binding: {s['binding']})")
        for entry in self.verification:
            if "exponent_hat" in entry:
                lines.append(
                    f"{entry['kind']}: {entry['exponent_hat']['value']:.4f} +- {entry['stderr']['value']:.4f}"
                    f" (predicted {entry['predicted']['value']}, {entry['mode']}) {entry['verdict']}"
                )
            else:
                lines.append(
                    f"{entry['kind']}: ratio in [{entry['ratio_min']['value']:.4g}, {entry['ratio_max']['value']:.4g}]"
                    f" {entry['verdict']}"
                )
        return "\n".join(lines)
