"""Tolerance checks that turn a VerificationReport into pass/fail."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from heavytail.lab.verification import VerificationReport


@dataclass
class CheckOutcome:
    """Result of one check against its tolerance."""

    passed: bool
    value: Optional[float]
    threshold: Any

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "value": self.value, "threshold": self.threshold}


class ToleranceCheck(ABC):
    """Abstract interface for individual verification checks."""

    name: str = "check"

    def applies(self, report: VerificationReport) -> bool:
        return True

    @abstractmethod
    def evaluate(self, report: VerificationReport) -> CheckOutcome:
        pass


class KsLargestCheck(ToleranceCheck):
    """Normalized largest eigenvalue against the Frechet limit."""

    name = "ks_largest"

    def evaluate(self, report: VerificationReport) -> CheckOutcome:
        tol = report.tolerances["ks"]
        return CheckOutcome(report.ks_largest <= tol, report.ks_largest, tol)


class KsSpacingCheck(ToleranceCheck):
    name = "ks_uniform_spacing"

    def applies(self, report: VerificationReport) -> bool:
        return report.ks_uniform_spacing is not None

    def evaluate(self, report: VerificationReport) -> CheckOutcome:
        tol = report.tolerances["ks"]
        return CheckOutcome(report.ks_uniform_spacing <= tol, report.ks_uniform_spacing, tol)


class MaxEntryRatioCheck(ToleranceCheck):
    """Median lambda_(1) / max X_it^2 inside the ratio band; only when p > n."""

    name = "ratio_max_entry"

    def applies(self, report: VerificationReport) -> bool:
        return report.p > report.n

    def evaluate(self, report: VerificationReport) -> CheckOutcome:
        low, high = report.tolerances["ratio_low"], report.tolerances["ratio_high"]
        median = report.ratio_max_entry.median
        return CheckOutcome(low <= median <= high, median, [low, high])


class DiagonalGapCheck(ToleranceCheck):
    """Median |lambda_(1) / D_(1) - 1|; enabled by setting tolerances.diag_gap."""

    name = "diagonal_gap"

    def applies(self, report: VerificationReport) -> bool:
        return report.tolerances.get("diag_gap") is not None

    def evaluate(self, report: VerificationReport) -> CheckOutcome:
        tol = report.tolerances["diag_gap"]
        gap = report.ratio_max_diag.median_gap
        return CheckOutcome(gap <= tol, gap, tol)


class SandwichCheck(ToleranceCheck):
    """max row sum of squares <= lambda_max <= ||X||_inf ||X||_1 in every replication."""

    name = "sandwich"

    def evaluate(self, report: VerificationReport) -> CheckOutcome:
        return CheckOutcome(report.sandwich_violations == 0, float(report.sandwich_violations), 0)


DEFAULT_CHECKS = (KsLargestCheck, KsSpacingCheck, MaxEntryRatioCheck, DiagonalGapCheck, SandwichCheck)


class CheckSuite:
    """Runs every applicable check and stores the outcomes on the report."""

    def __init__(self, checks: Optional[Sequence[ToleranceCheck]] = None):
        self.checks: List[ToleranceCheck] = list(checks) if checks is not None else [c() for c in DEFAULT_CHECKS]

    def evaluate(self, report: VerificationReport) -> bool:
        for check in self.checks:
            if not check.applies(report):
                logging.debug(f"[CheckSuite] {check.name} skipped")
                continue
            outcome = check.evaluate(report)
            report.checks[check.name] = outcome.to_dict()
            level = logging.INFO if outcome.passed else logging.WARNING
            logging.log(level, f"[CheckSuite] {check.name}: value={outcome.value} threshold={outcome.threshold} passed={outcome.passed}")
        return report.passed
