"""Module containing the base property check."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import zlib
from abc import ABC
from abc import abstractmethod
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from decoding_dynamics.util import DEFAULT_SEED
from decoding_dynamics.util import derive_seed
from decoding_dynamics.util import violation_msg_formatter


@dataclass
class CheckResult:
    """The outcome of a property check.

    ``message`` is ``False`` when the property holds and a violation report otherwise.
    """

    name: str
    family: str
    n_cases: int
    message: object
    summary: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.message is False

    def to_dict(self):
        """A JSON-ready representation."""
        return {
            "name": self.name,
            "family": self.family,
            "passed": self.passed,
            "n_cases": self.n_cases,
            "message": self.message or None,
            "summary": self.summary,
        }


class BaseCheck(ABC):
    """Base property check class.

    A check draws random cases, evaluates the property on each of them and reports the cases
    where it does not hold.
    """

    name = None
    family = None
    default_n_cases = 100

    def __init__(
        self,
        default_generate_kwargs=None,
        default_evaluate_kwargs=None,
        default_filter_kwargs=None,
        default_report_kwargs=None,
    ):
        self._default_generate_kwargs = default_generate_kwargs or {}
        self._default_evaluate_kwargs = default_evaluate_kwargs or {}
        self._default_filter_kwargs = default_filter_kwargs or {}
        self._default_report_kwargs = default_report_kwargs or {}

        self.current_state = {}

    def case_seed(self, seed):
        """The seed of the case generator, derived from the root seed and the check name."""
        return derive_seed(seed, zlib.crc32(self.name.encode("utf-8")))

    @abstractmethod
    def generate(self, rng, n_cases, **kwargs):
        """Generate the cases.

        .. note::
            This function must return an iterable of cases; the number of cases may differ from
            ``n_cases`` for checks with a fixed set of instances.
        """

    @abstractmethod
    def evaluate(self, case, **kwargs):
        """Evaluate the property on one case.

        .. note::
            This function must return a ``dict`` with an ``ok`` entry: ``True`` if the property
            holds, ``False`` if it is violated and ``None`` if its preconditions are not met
            (the case is then counted as skipped).
        """

    def filter(self, records, **kwargs):
        """Keep the records that violate the property."""
        return [r for r in records if r["ok"] is False]

    def batch_violations(self, records, **kwargs):
        """Return the violations of the properties defined over all the cases."""
        return []

    def format_violation(self, record, **kwargs):
        """Format one violation."""
        details = ", ".join(f"{k}={v}" for k, v in sorted(record.items()) if k != "ok")
        return f"Case violating the property: {details}"

    def sort(self, violations, **kwargs):
        """Sort the formatted violations."""
        return sorted(violations)

    def concatenate(self, violations, **kwargs):
        """Concatenate the formatted violations."""
        return "\n".join(violations)

    def summarize(self, records):
        """Compute the statistics reported with the result."""
        return {
            "evaluated": sum(1 for r in records if r["ok"] is not None),
            "skipped": sum(1 for r in records if r["ok"] is None),
            "violations": sum(1 for r in records if r["ok"] is False),
        }

    def report(self, formatted_violations, n_cases, generate_kwargs, evaluate_kwargs, **kwargs):
        """Create a report from the formatted violations."""
        return violation_msg_formatter(
            self.name,
            formatted_violations,
            n_cases=n_cases,
            generate_kwargs=generate_kwargs,
            evaluate_kwargs=evaluate_kwargs,
            report_kwargs=kwargs,
        )

    def __call__(
        self,
        seed=DEFAULT_SEED,
        n_cases=None,
        return_raw_records=False,
        generate_kwargs=None,
        evaluate_kwargs=None,
        filter_kwargs=None,
        report_kwargs=None,
    ):
        """Run the check.

        .. note::
            The workflow is the following:

            * call :meth:`generate` with a generator seeded from ``seed`` and the check name.
            * call :meth:`evaluate` on each case.
            * if ``return_raw_records``, the records are returned at this step.
            * the violations are selected by :meth:`filter`, completed by
              :meth:`batch_violations`, formatted by :meth:`format_violation`, sorted by
              :meth:`sort` and concatenated by :meth:`concatenate`.
            * a report is generated by calling :meth:`report`.
        """
        if generate_kwargs is None:
            generate_kwargs = self._default_generate_kwargs
        if evaluate_kwargs is None:
            evaluate_kwargs = self._default_evaluate_kwargs
        if filter_kwargs is None:
            filter_kwargs = self._default_filter_kwargs
        if report_kwargs is None:
            report_kwargs = self._default_report_kwargs
        if n_cases is None:
            n_cases = self.default_n_cases

        # Reset current state
        self.current_state = {}

        rng = np.random.default_rng(self.case_seed(seed))
        cases = list(self.generate(rng, n_cases, **generate_kwargs))
        records = [self.evaluate(case, **evaluate_kwargs) for case in cases]

        if return_raw_records:
            return records

        violations = [self.format_violation(r) for r in self.filter(records, **filter_kwargs)]
        violations.extend(self.batch_violations(records, **filter_kwargs))
        formatted = self.concatenate(self.sort(violations)) if violations else False

        return CheckResult(
            name=self.name,
            family=self.family,
            n_cases=len(cases),
            message=self.report(
                formatted, len(cases), generate_kwargs, evaluate_kwargs, **report_kwargs
            ),
            summary=self.summarize(records),
        )

    def __eq__(self, other):
        """Compare 2 :class:`BaseCheck` instances."""
        if type(self) is not type(other) or self.__dict__.keys() != other.__dict__.keys():
            return False

        for k, v in self.__dict__.items():
            if other.__dict__[k] != v:
                return False

        return True
