"""The thresholded editing Markov chain of masked-diffusion decoding.

At every step the predictor outputs one distribution per site given the current sequence. The
selection policy turns the per-site confidences into an edit set; edited sites are redrawn from
their predicted distributions while the other sites stay frozen. Everything is computed by exact
enumeration of the ``V**L`` sequences, which are indexed in lexicographic order.
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
from enum import Enum
from functools import reduce
from typing import Optional

import numpy as np

from decoding_dynamics.distributions import JointTable
from decoding_dynamics.distributions import check_state_space
from decoding_dynamics.distributions import total_variation
from decoding_dynamics.exceptions import ConvergenceError
from decoding_dynamics.exceptions import DomainError
from decoding_dynamics.exceptions import ResourceLimitError
from decoding_dynamics.util import DEFAULT_SEED
from decoding_dynamics.util import LOGGER

MAX_KERNEL_STATES = 4096
DEFAULT_TOLERANCE = 1e-12
DEFAULT_MAX_ITERATIONS = 100_000
ROW_TOLERANCE = 1e-10
CONTRACTION_SLACK = 1e-9


def all_states(vocab_size, length):
    """All the sequences of the state space in lexicographic order, with shape ``(V**L, L)``."""
    check_state_space(vocab_size, length)
    return np.indices((vocab_size,) * length).reshape(length, -1).T


def state_index(sequence, vocab_size):
    """The lexicographic index of a sequence."""
    return int(np.ravel_multi_index(tuple(sequence), (vocab_size,) * len(sequence)))


def _normalize_rows(table):
    sums = table.sum(axis=-1, keepdims=True)
    return table / sums


class Predictor:
    """A deterministic per-site predictor with a precomputed table of shape ``(V**L, L, V)``.

    Use the class methods to build one from a recipe.
    """

    def __init__(self, table, recipe, context_id=None):
        table = np.array(table, dtype=float)
        if table.ndim != 3 or table.shape[0] != table.shape[2] ** table.shape[1]:
            raise DomainError(
                f"Invalid predictor table shape {table.shape}", module="editing-chain"
            )
        if np.any(table < 0) or np.any(np.abs(table.sum(axis=-1) - 1) > 1e-12):
            raise DomainError("Predictor distributions must sum to 1", module="editing-chain")
        table.setflags(write=False)
        self.table = table
        self.recipe = recipe
        self.context_id = context_id

    @property
    def vocab_size(self):
        """The vocabulary size ``V``."""
        return self.table.shape[2]

    @property
    def length(self):
        """The number of sites ``L``."""
        return self.table.shape[1]

    @property
    def name(self):
        """The recipe name."""
        return self.recipe["name"]

    def __repr__(self):
        return f"Predictor({self.recipe}, context_id={self.context_id!r})"

    def distributions(self, sequence):
        """The ``(L, V)`` predicted distributions for the current sequence."""
        return self.table[state_index(sequence, self.vocab_size)]

    @classmethod
    def full_conditional(cls, joint):
        """Predict each site from its exact conditional given all the other sites.

        Where the other sites have zero probability the uniform distribution is used.
        """
        V, L = joint.vocab_size, joint.length
        probs = joint.probs
        table = np.empty((V**L, L, V))
        for i in range(L):
            denominator = probs.sum(axis=i, keepdims=True)
            with np.errstate(invalid="ignore", divide="ignore"):
                cond = np.where(denominator > 0, probs / denominator, 1.0 / V)
            # cond[..., y_i=v, ...] is q_i(v | y without i); broadcast it over the value of y_i
            per_value = np.expand_dims(np.moveaxis(cond, i, -1), axis=i)
            per_value = np.broadcast_to(per_value, (V,) * L + (V,))
            table[:, i, :] = per_value.reshape(V**L, V)
        return cls(
            _normalize_rows(table), {"name": "full_conditional"}, context_id=joint.context_id
        )

    @classmethod
    def mean_field(cls, joint):
        """Predict each site from its true marginal, ignoring the current sequence."""
        V, L = joint.vocab_size, joint.length
        axes = range(L)
        marginals = np.stack(
            [joint.probs.sum(axis=tuple(a for a in axes if a != i)) for i in axes]
        )
        table = np.broadcast_to(marginals, (V**L, L, V))
        return cls(_normalize_rows(table), {"name": "mean_field"}, context_id=joint.context_id)

    @classmethod
    def perturbed(cls, base, seed, magnitude):
        """Mix every distribution of ``base`` with a Dirichlet draw of weight ``magnitude``."""
        if not 0 <= magnitude <= 1:
            raise DomainError(
                f"The magnitude must be in [0, 1] (got {magnitude})", module="editing-chain"
            )
        rng = np.random.default_rng(seed)
        noise = rng.dirichlet(np.ones(base.vocab_size), size=base.table.shape[:2])
        table = (1 - magnitude) * base.table + magnitude * noise
        recipe = {"name": "perturbed", "base": base.recipe, "seed": seed, "magnitude": magnitude}
        return cls(_normalize_rows(table), recipe, context_id=base.context_id)

    @classmethod
    def constant(cls, distributions, context_id=None):
        """Predict the same distributions whatever the current sequence."""
        distributions = np.array(distributions, dtype=float)
        if distributions.ndim != 2:
            raise DomainError(
                "A constant predictor needs one distribution per site", module="editing-chain"
            )
        L, V = distributions.shape
        check_state_space(V, L)
        table = np.broadcast_to(distributions, (V**L, L, V))
        return cls(table, {"name": "constant"}, context_id=context_id)


class PolicyKind(str, Enum):
    """The available selection policies."""

    THRESHOLD = "threshold"
    TOP1 = "top1"
    FULL = "full"
    FIXED = "fixed"
    RANDOM_SCAN_SINGLETON = "random_scan_singleton"


@dataclass(frozen=True)
class SelectionPolicy:
    """How the edit set is chosen from the confidences.

    ``THRESHOLD`` edits the sites with ``s_i >= tau``; the other kinds are extensions: ``TOP1``
    edits the most confident site, ``FULL`` all sites, ``FIXED`` a given set and
    ``RANDOM_SCAN_SINGLETON`` one uniformly drawn site.
    """

    kind: PolicyKind
    tau: Optional[float] = None
    sites: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.kind is PolicyKind.THRESHOLD:
            if self.tau is None or not math.isfinite(self.tau):
                raise DomainError("A threshold policy needs a finite tau", module="editing-chain")
            object.__setattr__(self, "tau", float(self.tau))
        if self.kind is PolicyKind.FIXED:
            if self.sites is None:
                raise DomainError("A fixed policy needs a site set", module="editing-chain")
            object.__setattr__(self, "sites", frozenset(int(i) for i in self.sites))

    @classmethod
    def threshold(cls, tau):
        return cls(PolicyKind.THRESHOLD, tau=tau)

    @classmethod
    def top1(cls):
        return cls(PolicyKind.TOP1)

    @classmethod
    def full(cls):
        return cls(PolicyKind.FULL)

    @classmethod
    def fixed(cls, sites):
        return cls(PolicyKind.FIXED, sites=sites)

    @classmethod
    def random_scan_singleton(cls):
        return cls(PolicyKind.RANDOM_SCAN_SINGLETON)

    @property
    def is_randomized(self):
        """True if the policy draws its edit set at random."""
        return self.kind is PolicyKind.RANDOM_SCAN_SINGLETON

    @property
    def name(self):
        """A short description used in reports."""
        if self.kind is PolicyKind.THRESHOLD:
            return f"threshold({self.tau:g})"
        if self.kind is PolicyKind.FIXED:
            return f"fixed({','.join(str(i) for i in sorted(self.sites))})"
        return self.kind.value


def confidence(predictor, sequence, context_id=None):
    """The confidence ``s_i = max_v q_i(v | y)`` of every site."""
    if context_id is not None and predictor.context_id not in (None, context_id):
        LOGGER.debug("Predictor bound to %s used for %s", predictor.context_id, context_id)
    return [float(s) for s in predictor.distributions(sequence).max(axis=1)]


def edit_set_distribution(confidences, policy):
    """The distribution of the edit set as a tuple of ``(frozenset, weight)`` pairs."""
    L = len(confidences)
    if policy.kind is PolicyKind.THRESHOLD:
        return ((frozenset(i for i, s in enumerate(confidences) if s >= policy.tau), 1.0),)
    if policy.kind is PolicyKind.TOP1:
        return ((frozenset([int(np.argmax(confidences))]), 1.0),)
    if policy.kind is PolicyKind.FULL:
        return ((frozenset(range(L)), 1.0),)
    if policy.kind is PolicyKind.FIXED:
        if any(i < 0 or i >= L for i in policy.sites):
            raise DomainError(
                f"The fixed sites {sorted(policy.sites)} are not all in 0..{L - 1}",
                module="editing-chain",
            )
        return ((policy.sites, 1.0),)
    return tuple((frozenset([i]), 1.0 / L) for i in range(L))


def edit_set(confidences, policy):
    """The edit set of a deterministic policy, or the distribution of a randomized one."""
    distribution = edit_set_distribution(confidences, policy)
    if policy.is_randomized:
        return distribution
    return distribution[0][0]


@dataclass(frozen=True, eq=False)
class EditKernel:
    """Row-stochastic transition matrix of the editing chain."""

    matrix: np.ndarray
    predictor: Predictor
    policy: SelectionPolicy
    context_id: Optional[str] = None

    def __post_init__(self):
        errors = np.abs(self.matrix.sum(axis=1) - 1)
        if errors.max() > ROW_TOLERANCE:
            raise DomainError(
                f"A kernel row sums to 1 +/- {errors.max():.3g}", module="editing-chain"
            )
        self.matrix.setflags(write=False)

    @property
    def vocab_size(self):
        return self.predictor.vocab_size

    @property
    def length(self):
        return self.predictor.length

    @property
    def n_states(self):
        return self.matrix.shape[0]

    @property
    def config_id(self):
        """Identifier of the generating configuration."""
        return f"{self.predictor.name}|{self.policy.name}|{self.context_id}"

    def step(self, distribution):
        """Apply one transition to a flat distribution."""
        return np.asarray(distribution, dtype=float) @ self.matrix

    def as_joint(self, distribution):
        """Wrap a flat distribution into a :class:`JointTable`."""
        distribution = np.clip(np.asarray(distribution, dtype=float), 0, None)
        return JointTable(
            distribution / distribution.sum(),
            context_id=self.context_id,
            vocab_size=self.vocab_size,
        )


def _check_kernel_size(vocab_size, length):
    n_states = check_state_space(vocab_size, length)
    if n_states > MAX_KERNEL_STATES:
        raise ResourceLimitError(
            f"A dense kernel over {n_states} states exceeds the cap of {MAX_KERNEL_STATES} states",
            module="editing-chain",
        )
    return n_states


def _site_laws(distributions, sequence, sites):
    laws = np.zeros_like(distributions)
    for i, value in enumerate(sequence):
        if i in sites:
            laws[i] = distributions[i]
        else:
            laws[i, value] = 1.0
    return laws


def marginal_update_laws(predictor, policy):
    """The per-site law ``mu_i(. | y)`` of the next value of every site from every state.

    Sites outside the edit set keep their value; randomized policies average over edit sets.

    Returns:
        numpy.ndarray: Array of shape ``(V**L, L, V)``.
    """
    states = all_states(predictor.vocab_size, predictor.length)
    laws = np.zeros(predictor.table.shape)
    for index, sequence in enumerate(states):
        distributions = predictor.table[index]
        for sites, weight in edit_set_distribution(distributions.max(axis=1), policy):
            laws[index] += weight * _site_laws(distributions, sequence, sites)
    return laws


def build_kernel(predictor, policy, context_id=None):
    """Build the dense transition kernel of the editing chain.

    The row of state ``y`` gives ``prod_{i in S} q_i(y'_i | y)`` to the states ``y'`` equal to
    ``y`` outside of the edit set ``S``. Randomized policies give the mixture over edit sets.
    """
    V, L = predictor.vocab_size, predictor.length
    n_states = _check_kernel_size(V, L)
    states = all_states(V, L)
    matrix = np.zeros((n_states, n_states))
    for index, sequence in enumerate(states):
        distributions = predictor.table[index]
        for sites, weight in edit_set_distribution(distributions.max(axis=1), policy):
            laws = _site_laws(distributions, sequence, sites)
            matrix[index] += weight * reduce(np.multiply.outer, laws).reshape(-1)
    LOGGER.debug("Built the %s kernel over %s states", policy.name, n_states)
    return EditKernel(
        matrix, predictor, policy, context_id=context_id or predictor.context_id
    )


@dataclass(frozen=True, eq=False)
class DobrushinReport:
    """Influence matrix ``A`` (zero diagonal) and interdependence ``alpha``."""

    A: np.ndarray
    alpha: float


def dobrushin(predictor, policy, context_id=None):
    """Compute the Dobrushin influence coefficients of the editing chain.

    ``A_ij`` is the largest total variation between the laws ``mu_i`` of two states that only
    differ at site ``j``; ``alpha`` is the largest row sum of ``A``.
    """
    V, L = predictor.vocab_size, predictor.length
    check_state_space(V, L)
    laws = marginal_update_laws(predictor, policy).reshape((V,) * L + (L, V))
    A = np.zeros((L, L))
    for j in range(L):
        by_value = np.moveaxis(laws, j, 0)
        for a in range(V):
            for b in range(a + 1, V):
                tv = 0.5 * np.abs(by_value[a] - by_value[b]).sum(axis=-1)
                A[:, j] = np.maximum(A[:, j], tv.reshape(-1, L).max(axis=0))
    np.fill_diagonal(A, 0)
    A = np.clip(A, 0, 1)
    alpha = float(A.sum(axis=1).max()) if L > 1 else 0.0
    LOGGER.debug("Dobrushin alpha of %s on %s: %s", policy.name, context_id, alpha)
    return DobrushinReport(A=A, alpha=alpha)


def ergodic_coefficient(kernel):
    """The largest total variation between two rows of the kernel."""
    matrix = kernel.matrix
    worst = 0.0
    for i in range(matrix.shape[0] - 1):
        distances = 0.5 * np.abs(matrix[i + 1 :] - matrix[i]).sum(axis=1)
        worst = max(worst, float(distances.max()))
    return worst


@dataclass(frozen=True, eq=False)
class StationaryResult:
    """A stationary distribution with its uniqueness diagnostic."""

    distribution: JointTable
    iterations: int
    dual_start_gap: float
    warning: Optional[str] = None

    @property
    def unique(self):
        """True if both starts reached the same fixed point."""
        return self.warning is None


def _power_iteration(kernel, start, tolerance, max_iterations):
    current = start
    previous_gap = None
    gap = math.inf
    for iteration in range(1, max_iterations + 1):
        following = kernel.step(current)
        following /= following.sum()
        gap = total_variation(following, current)
        current = following
        if gap == 0 or gap < tolerance * 1e-3:
            return current, iteration
        if previous_gap is not None and previous_gap > 0:
            rate = gap / previous_gap
            if rate < 1 and gap / (1 - rate) < tolerance:
                return current, iteration
        previous_gap = gap
    raise ConvergenceError(
        f"The power iteration did not converge in {max_iterations} iterations "
        f"(last total variation gap: {gap:.3g})",
        last_gap=gap,
        iterations=max_iterations,
    )


def stationary(
    kernel, tolerance=DEFAULT_TOLERANCE, max_iterations=DEFAULT_MAX_ITERATIONS, seed=DEFAULT_SEED
):
    """Find a stationary distribution by power iteration.

    The iteration starts from the uniform distribution and stops once the estimated distance to
    the fixed point (successive gap over one minus the observed rate) is below ``tolerance``.
    A second run from a random distribution must agree within ``10 * tolerance``, otherwise a
    non-uniqueness warning is attached to the result.
    """
    n_states = kernel.n_states
    uniform = np.full(n_states, 1.0 / n_states)
    fixed_point, iterations = _power_iteration(kernel, uniform, tolerance, max_iterations)
    random_start = np.random.default_rng(seed).dirichlet(np.ones(n_states))
    other, _ = _power_iteration(kernel, random_start, tolerance, max_iterations)
    gap = total_variation(fixed_point, other)
    warning = None
    if gap > 10 * tolerance:
        warning = (
            f"The stationary distribution of {kernel.config_id} is not unique: two starts "
            f"differ by {gap:.3g} in total variation"
        )
        LOGGER.warning(warning)
    return StationaryResult(
        distribution=kernel.as_joint(fixed_point),
        iterations=iterations,
        dual_start_gap=gap,
        warning=warning,
    )


@dataclass(frozen=True)
class ContractionReport:
    """Outcome of :func:`contraction_check`; ``status`` is passed, failed or skipped."""

    status: str
    alpha: Optional[float]
    k_max: int
    worst_ratio: Optional[float] = None
    violations: int = 0
    checked: int = 0

    @property
    def passed(self):
        return self.status == "passed"


def _flat(distribution):
    if isinstance(distribution, JointTable):
        return distribution.flat
    return np.asarray(distribution, dtype=float)


def _limit(kernel, reference):
    if reference is None:
        return stationary(kernel).distribution.flat
    return _flat(reference)


def contraction_check(kernel, alpha, initials, k_max=50, reference=None):
    """Check ``TV(Q_k, Q_inf) <= alpha**k TV(Q_0, Q_inf)`` for each initial distribution.

    Args:
        kernel (EditKernel): The chain.
        alpha (float): The contraction factor to check; ``None`` or ``>= 1`` skips the check.
        initials (list): Initial distributions (flat arrays or :class:`JointTable`).
        k_max (int): The number of steps checked.
        reference (JointTable): (Optional) The limit distribution; computed if not given.
    """
    if alpha is None or alpha >= 1:
        return ContractionReport(status="skipped", alpha=alpha, k_max=k_max)
    limit = _limit(kernel, reference)
    worst_ratio = 0.0
    violations = 0
    checked = 0
    for initial in initials:
        current = _flat(initial)
        d0 = total_variation(current, limit)
        for k in range(1, k_max + 1):
            current = kernel.step(current)
            distance = total_variation(current, limit)
            allowed = alpha**k * d0
            checked += 1
            if distance > allowed + CONTRACTION_SLACK:
                violations += 1
            if allowed > 0:
                worst_ratio = max(worst_ratio, distance / allowed)
            elif distance > CONTRACTION_SLACK:
                worst_ratio = math.inf
    status = "failed" if violations else "passed"
    if violations:
        LOGGER.debug(
            "Contraction with alpha=%s violated %s times for %s",
            alpha,
            violations,
            kernel.config_id,
        )
    return ContractionReport(
        status=status,
        alpha=alpha,
        k_max=k_max,
        worst_ratio=worst_ratio,
        violations=violations,
        checked=checked,
    )


def mixing_bound(alpha, d0, delta):
    """Smallest ``k`` with ``alpha**k * d0 <= delta``."""
    if d0 <= delta:
        return 0
    if alpha == 0:
        return 1
    k = max(1, math.ceil(math.log(d0 / delta) / math.log(1 / alpha)))
    while k > 1 and alpha ** (k - 1) * d0 <= delta:
        k -= 1
    while alpha**k * d0 > delta:
        k += 1
    return k


@dataclass(frozen=True)
class MixingReport:
    """Empirical mixing time against the geometric bound (``None`` when not available)."""

    delta: float
    empirical: int
    bound: Optional[int]
    d0: float
    alpha: Optional[float]
    status: str

    @property
    def within_bound(self):
        """``None`` when the bound is not available."""
        if self.bound is None:
            return None
        return self.empirical <= self.bound


def mixing_time(kernel, delta, alpha=None, reference=None, max_steps=DEFAULT_MAX_ITERATIONS):
    """Worst-case number of steps to reach ``delta`` from a point mass, and its bound.

    The bound is ``ceil(ln(D0 / delta) / ln(1 / alpha))`` where ``D0`` is the largest initial
    distance; it is only computed when ``0 <= alpha < 1`` (status ``skipped`` otherwise).
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must be in (0, 1) (got {delta})", module="editing-chain")
    limit = _limit(kernel, reference)
    d0 = float((1 - limit).max())
    rows = np.eye(kernel.n_states)
    empirical = 0
    worst = d0
    while worst > delta:
        if empirical >= max_steps:
            raise ConvergenceError(
                f"The chain did not mix within {max_steps} steps (worst distance: {worst:.3g})",
                last_gap=worst,
                iterations=max_steps,
            )
        rows = rows @ kernel.matrix
        empirical += 1
        worst = float(0.5 * np.abs(rows - limit).sum(axis=1).max())
    if alpha is None or alpha >= 1:
        return MixingReport(delta, empirical, None, d0, alpha, "skipped")
    bound = mixing_bound(alpha, d0, delta)
    status = "passed" if empirical <= bound else "failed"
    return MixingReport(delta, empirical, bound, d0, alpha, status)


def invariance_check(kernel, candidate):
    """The total variation between ``candidate`` and ``candidate`` moved by one step."""
    flat = _flat(candidate)
    if flat.size != kernel.n_states:
        raise DomainError(
            f"The candidate has {flat.size} states instead of {kernel.n_states}",
            module="editing-chain",
        )
    return total_variation(kernel.step(flat), flat)


def verification_report(
    kernel, alpha=None, candidate=None, deltas=(1e-3,), k_max=50, tolerance=DEFAULT_TOLERANCE
):
    """Run the chain diagnostics of one configuration and gather them in a JSON-ready dict."""
    if alpha is None:
        alpha = dobrushin(kernel.predictor, kernel.policy, kernel.context_id).alpha
    fixed_point = stationary(kernel, tolerance=tolerance)
    limit = fixed_point.distribution
    initials = [np.eye(kernel.n_states)[i] for i in range(kernel.n_states)]
    delta_k = ergodic_coefficient(kernel)
    contraction = contraction_check(kernel, alpha, initials, k_max=k_max, reference=limit)
    mixing = [mixing_time(kernel, delta, alpha=alpha, reference=limit) for delta in deltas]
    report = {
        "config_id": kernel.config_id,
        "predictor": kernel.predictor.recipe,
        "policy": kernel.policy.name,
        "vocab_size": kernel.vocab_size,
        "length": kernel.length,
        "alpha": alpha,
        "ergodic_coefficient": delta_k,
        "certified": alpha < 1 and delta_k <= alpha + CONTRACTION_SLACK,
        "unique_stationary": fixed_point.unique,
        "stationary_warning": fixed_point.warning,
        "contraction_status": contraction.status,
        "worst_contraction_ratio": contraction.worst_ratio,
        "empirical_mixing": {str(m.delta): m.empirical for m in mixing},
        "bound_mixing": {str(m.delta): m.bound for m in mixing},
        "invariance_defect": None,
    }
    if candidate is not None:
        report["invariance_defect"] = invariance_check(kernel, candidate)
        report["recovery_tv"] = total_variation(limit, candidate)
    return report
