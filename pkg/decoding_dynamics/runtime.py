"""Runtime trade-off between parallel decoding and editing rounds.

With ``m`` stages per round, editing needs ``K`` rounds to reach the tolerance ``delta`` from an
initial distance ``d0`` when every round contracts by ``alpha(m)``::

    K = ceil(ln(d0 / delta) / ln(1 / alpha(m)))

Editing is not slower than a baseline with ``m0`` stages when ``K * t_step(m) <= m0 * t_step(m0)``.

Spec files contain one entry per line::

    t_step <m> <value>
    alpha <m> <value or 'unavailable'>
    m0 <value>
    d0 <value>

Empty lines and lines starting with ``#`` are ignored.
"""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import math
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from pathlib import Path
from typing import Optional

from decoding_dynamics.editing_chain import mixing_bound
from decoding_dynamics.exceptions import DomainError
from decoding_dynamics.exceptions import UnsupportedConfigurationError
from decoding_dynamics.util import LOGGER

UNAVAILABLE = "unavailable"


@dataclass(frozen=True)
class AlphaEntry:
    """A contraction coefficient with the configuration it was measured on."""

    value: float
    provenance: Optional[str] = None


def _domain_error(msg):
    return DomainError(msg, module="runtime-model")


@dataclass(frozen=True)
class RuntimeSpec:
    """Inputs of the runtime model.

    Args:
        t_step (dict): Stage count ``m`` -> wall time of one stage; non-increasing in ``m``.
        m0 (int): Stage count of the baseline; it must appear in ``t_step``.
        alpha_of_m (dict): Stage count -> :class:`AlphaEntry`, float or ``None`` if unavailable.
        d0 (float): Initial total variation distance.
    """

    t_step: dict
    m0: int
    alpha_of_m: dict = field(default_factory=dict)
    d0: float = 1.0

    def __post_init__(self):
        t_step = {int(m): float(t) for m, t in self.t_step.items()}
        if not t_step:
            raise _domain_error("The runtime spec needs at least one t_step entry")
        for m, t in t_step.items():
            if m < 1:
                raise _domain_error(f"Stage counts must be >= 1 (got {m})")
            if not t > 0:
                raise _domain_error(f"t_step({m}) must be positive (got {t})")
        ordered = sorted(t_step.items())
        for (m_low, t_low), (m_high, t_high) in zip(ordered, ordered[1:]):
            if t_high > t_low:
                raise _domain_error(
                    f"t_step must be non-increasing in m: t_step({m_high}) = {t_high} > "
                    f"t_step({m_low}) = {t_low}"
                )
        if int(self.m0) not in t_step:
            raise _domain_error(f"The baseline stage count m0 = {self.m0} has no t_step entry")
        if not 0 < self.d0 <= 1:
            raise _domain_error(f"d0 must be in (0, 1] (got {self.d0})")

        alpha_of_m = {}
        for m, entry in self.alpha_of_m.items():
            if entry is None or entry == UNAVAILABLE:
                alpha_of_m[int(m)] = None
                continue
            if not isinstance(entry, AlphaEntry):
                entry = AlphaEntry(float(entry))
            if not 0 <= entry.value < 1:
                raise UnsupportedConfigurationError(
                    f"alpha({m}) = {entry.value} is outside [0, 1)"
                )
            alpha_of_m[int(m)] = entry

        object.__setattr__(self, "t_step", t_step)
        object.__setattr__(self, "m0", int(self.m0))
        object.__setattr__(self, "alpha_of_m", alpha_of_m)
        object.__setattr__(self, "d0", float(self.d0))

    def alpha(self, m):
        """The contraction coefficient of ``m`` stages.

        Raises:
            UnsupportedConfigurationError: if it is unavailable.
        """
        entry = self.alpha_of_m.get(int(m))
        if entry is None:
            raise UnsupportedConfigurationError(f"alpha({m}) is unavailable")
        return entry.value

    def step_time(self, m):
        """The wall time of one stage with ``m`` stages."""
        try:
            return self.t_step[int(m)]
        except KeyError as exc:
            raise _domain_error(f"No t_step entry for m = {m}") from exc

    def with_alpha(self, m, entry):
        """Return a copy of the spec with ``alpha(m)`` set to ``entry``."""
        return replace(self, alpha_of_m={**self.alpha_of_m, int(m): entry})


@dataclass(frozen=True)
class TradeoffReport:
    """Evaluation of the no-slowdown condition for one stage count."""

    m: int
    m0: int
    delta: float
    alpha: float
    k_rounds: int
    t_step_m: float
    t_edit: float
    t_base: float
    no_slowdown: bool
    binding_inequality: str
    asymptotic_t_edit: float
    alpha_provenance: Optional[str] = None


def edit_rounds(spec, m, delta):
    """Number of editing rounds needed to reach ``delta`` with ``m`` stages."""
    if not delta > 0:
        raise _domain_error(f"delta must be positive (got {delta})")
    alpha = spec.alpha(m)
    if alpha >= 1:
        raise UnsupportedConfigurationError(f"alpha({m}) = {alpha} is not < 1")
    return mixing_bound(alpha, spec.d0, delta)


def no_slowdown(spec, m, delta):
    """Compare the editing time ``K * t_step(m)`` with the baseline time ``m0 * t_step(m0)``."""
    k_rounds = edit_rounds(spec, m, delta)
    alpha = spec.alpha(m)
    t_step_m = spec.step_time(m)
    t_step_m0 = spec.step_time(spec.m0)
    t_edit = k_rounds * t_step_m
    t_base = spec.m0 * t_step_m0
    verdict = t_edit <= t_base
    binding = (
        f"{k_rounds} x {t_step_m:g} = {t_edit:g} {'<=' if verdict else '>'} "
        f"{spec.m0} x {t_step_m0:g} = {t_base:g}"
    )
    asymptotic = math.log(1 / delta) / (1 - alpha) * t_step_m
    LOGGER.debug("No-slowdown for m=%s, delta=%s: %s", m, delta, binding)
    return TradeoffReport(
        m=int(m),
        m0=spec.m0,
        delta=float(delta),
        alpha=alpha,
        k_rounds=k_rounds,
        t_step_m=t_step_m,
        t_edit=t_edit,
        t_base=t_base,
        no_slowdown=verdict,
        binding_inequality=binding,
        asymptotic_t_edit=asymptotic,
        alpha_provenance=spec.alpha_of_m[int(m)].provenance,
    )


def tradeoff_table(spec, delta):
    """Evaluate :func:`no_slowdown` for every stage count with an available alpha.

    Returns:
        tuple(list(TradeoffReport), list(int)): The reports and the skipped stage counts.
    """
    reports = []
    skipped = []
    for m in sorted(spec.t_step):
        if spec.alpha_of_m.get(m) is None:
            skipped.append(m)
            continue
        reports.append(no_slowdown(spec, m, delta))
    if skipped:
        LOGGER.info("No alpha available for m in %s", skipped)
    return reports, skipped


def measured_alpha_bridge(report, config_id=None):
    """Turn a measured Dobrushin report into an ``alpha_of_m`` entry."""
    if not report.alpha < 1:
        raise UnsupportedConfigurationError(
            f"The measured alpha {report.alpha} is not < 1 and can not be used"
        )
    return AlphaEntry(value=float(report.alpha), provenance=config_id)


def parse_runtime_spec(text):
    """Parse the line format of a runtime spec."""
    t_step = {}
    alpha_of_m = {}
    m0 = None
    d0 = 1.0
    for line_number, line in enumerate(text.splitlines(), start=1):
        items = line.split()
        if not items or items[0].startswith("#"):
            continue
        try:
            if items[0] == "t_step" and len(items) == 3:
                t_step[int(items[1])] = float(items[2])
            elif items[0] == "alpha" and len(items) == 3:
                alpha_of_m[int(items[1])] = (
                    None if items[2] == UNAVAILABLE else float(items[2])
                )
            elif items[0] == "m0" and len(items) == 2:
                m0 = int(items[1])
            elif items[0] == "d0" and len(items) == 2:
                d0 = float(items[1])
            else:
                raise ValueError(f"unknown entry '{line.strip()}'")
        except ValueError as exc:
            raise _domain_error(f"Line {line_number}: {exc}") from exc
    if m0 is None:
        raise _domain_error("The runtime spec has no 'm0' entry")
    return RuntimeSpec(t_step=t_step, m0=m0, alpha_of_m=alpha_of_m, d0=d0)


def load_runtime_spec(path):
    """Load a runtime spec file."""
    return parse_runtime_spec(Path(path).read_text(encoding="utf-8"))
