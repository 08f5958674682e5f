"""Exact discrete distributions over short token sequences.

A :class:`JointTable` stores the full probability table of ``L`` tokens over a vocabulary of ``V``
symbols as a numpy array of shape ``(V,) * L``. The conditioning context is frozen into an opaque
``context_id``. All entropies are in nats.

Text format of a joint table::

    V L
    p(0...0) p(0...1) ... p((V-1)...(V-1))

the ``V**L`` values being given in lexicographic order and separated by any whitespace.
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
from functools import reduce
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import entr
from scipy.special import rel_entr

from decoding_dynamics.exceptions import DomainError
from decoding_dynamics.exceptions import ResourceLimitError
from decoding_dynamics.util import LOGGER

MAX_STATES = 200_000
NORMALIZATION_TOLERANCE = 1e-12
INFINITE_DIVERGENCE = math.inf


def check_state_space(vocab_size, length, max_states=MAX_STATES):
    """Raise a :class:`ResourceLimitError` if ``V**L`` exceeds the enumeration cap."""
    if vocab_size < 2:
        raise DomainError(f"The vocabulary size must be >= 2 (got {vocab_size})", module="dist-lab")
    if length < 1:
        raise DomainError(f"The length must be >= 1 (got {length})", module="dist-lab")
    n_states = vocab_size**length
    if n_states > max_states:
        raise ResourceLimitError(
            f"The state space V**L = {vocab_size}**{length} = {n_states} exceeds the cap of "
            f"{max_states} states"
        )
    return n_states


def _check_distribution(probs, what):
    if not np.all(np.isfinite(probs)):
        raise DomainError(f"The {what} contains non-finite values", module="dist-lab")
    if np.any(probs < 0):
        raise DomainError(f"The {what} contains negative values", module="dist-lab")
    total = float(probs.sum())
    if abs(total - 1) > NORMALIZATION_TOLERANCE:
        raise DomainError(f"The {what} sums to {total!r} instead of 1", module="dist-lab")


@dataclass(frozen=True, eq=False)
class JointTable:
    """A probability table over ``V**L`` sequences.

    Args:
        probs (numpy.ndarray): The probabilities, either with shape ``(V,) * L`` or flat in
            lexicographic order together with ``vocab_size``.
        context_id (str): (Optional) The tag of the conditioning context.
        vocab_size (int): (Optional) Required when ``probs`` is flat.
    """

    probs: np.ndarray
    context_id: Optional[str] = None
    vocab_size: Optional[int] = None

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if self.vocab_size is not None and probs.ndim == 1:
            vocab_size = int(self.vocab_size)
            length = round(math.log(probs.size, vocab_size)) if probs.size > 1 else 0
            if length < 1 or vocab_size**length != probs.size:
                raise DomainError(
                    f"{probs.size} values do not form a table over V = {vocab_size}",
                    module="dist-lab",
                )
            probs = probs.reshape((vocab_size,) * length)
        if probs.ndim < 1 or len(set(probs.shape)) != 1:
            raise DomainError(
                f"A joint table must have shape (V,) * L (got {probs.shape})", module="dist-lab"
            )
        check_state_space(probs.shape[0], probs.ndim)
        _check_distribution(probs, "joint table")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "vocab_size", probs.shape[0])

    @property
    def length(self):
        """The number of sites ``L``."""
        return self.probs.ndim

    @property
    def n_states(self):
        """The number of sequences ``V**L``."""
        return self.probs.size

    @property
    def flat(self):
        """The probabilities in lexicographic order."""
        return self.probs.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, JointTable):
            return NotImplemented
        return self.context_id == other.context_id and np.array_equal(self.probs, other.probs)

    def __repr__(self):
        return (
            f"JointTable(V={self.vocab_size}, L={self.length}, context_id={self.context_id!r})"
        )

    def prob(self, sequence):
        """Return the probability of one sequence."""
        return float(self.probs[tuple(sequence)])


@dataclass(frozen=True, eq=False)
class ProductFamily:
    """Independent per-site distributions ``q_i``, one per site."""

    marginals: tuple

    def __post_init__(self):
        marginals = tuple(np.array(q, dtype=float) for q in self.marginals)
        if not marginals:
            raise DomainError("A product family needs at least one site", module="dist-lab")
        sizes = {q.shape for q in marginals}
        if len(sizes) != 1 or marginals[0].ndim != 1:
            raise DomainError(
                "All the sites of a product family must share the same vocabulary",
                module="dist-lab",
            )
        for i, q in enumerate(marginals):
            _check_distribution(q, f"distribution of site {i}")
            q.setflags(write=False)
        object.__setattr__(self, "marginals", marginals)

    @property
    def vocab_size(self):
        """The vocabulary size ``V``."""
        return self.marginals[0].size

    @property
    def length(self):
        """The number of sites."""
        return len(self.marginals)

    @classmethod
    def from_joint(cls, joint):
        """The family of the true single-site marginals of a joint table."""
        return cls(tuple(marginal(joint, [i]).probs for i in range(joint.length)))

    @classmethod
    def uniform(cls, vocab_size, length):
        """The family of uniform distributions."""
        return cls(tuple(np.full(vocab_size, 1 / vocab_size) for _ in range(length)))

    def argmax(self):
        """The most likely value of every site (lowest value on ties)."""
        return tuple(int(np.argmax(q)) for q in self.marginals)

    def perturbed(self, rng, magnitude):
        """Mix every site distribution with a Dirichlet draw: ``(1 - m) q_i + m noise_i``."""
        if not 0 <= magnitude <= 1:
            raise DomainError(f"The magnitude must be in [0, 1] (got {magnitude})")
        noise = rng.dirichlet(np.ones(self.vocab_size), size=self.length)
        return ProductFamily(
            tuple((1 - magnitude) * q + magnitude * n for q, n in zip(self.marginals, noise))
        )


@dataclass(frozen=True)
class GapReport:
    """The terms of the factorization-gap decomposition ``KL = TC + sum_i KL_i``."""

    kl_joint: float
    tc: float
    marginal_kl_sum: float
    residual: float

    @property
    def supports_compatible(self):
        """False when one of the divergences is infinite."""
        return math.isfinite(self.kl_joint) and math.isfinite(self.marginal_kl_sum)


def _as_probs(dist):
    if isinstance(dist, JointTable):
        return dist.probs
    return np.asarray(dist, dtype=float)


def marginal(joint, site_set):
    """Sum a joint table over the sites that are not in ``site_set``.

    The sites of the result keep their increasing order.
    """
    sites = sorted(set(int(i) for i in site_set))
    if not sites:
        raise DomainError("The site set of a marginal must not be empty", module="dist-lab")
    if sites[0] < 0 or sites[-1] >= joint.length:
        raise DomainError(
            f"The sites {sites} are not all in 0..{joint.length - 1}", module="dist-lab"
        )
    others = tuple(i for i in range(joint.length) if i not in sites)
    probs = joint.probs.sum(axis=others) if others else joint.probs
    return JointTable(probs, context_id=joint.context_id)


def entropy(dist):
    """Shannon entropy in nats, with ``0 log 0 = 0``."""
    return float(entr(_as_probs(dist)).sum())


def total_correlation(joint):
    """Sum of the single-site entropies minus the joint entropy."""
    if joint.length < 2:
        raise DomainError("The total correlation needs at least 2 sites", module="dist-lab")
    site_entropies = sum(entropy(marginal(joint, [i])) for i in range(joint.length))
    return max(site_entropies - entropy(joint), 0.0)


def kl(p, q):
    """Kullback-Leibler divergence ``KL(p || q)`` in nats.

    Returns:
        float: ``INFINITE_DIVERGENCE`` when ``q`` vanishes somewhere ``p`` does not.
    """
    p = _as_probs(p)
    q = _as_probs(q)
    if p.shape != q.shape:
        raise DomainError(
            f"Can not compare distributions of shapes {p.shape} and {q.shape}", module="dist-lab"
        )
    if np.any((p > 0) & (q <= 0)):
        return INFINITE_DIVERGENCE
    return max(float(rel_entr(p, q).sum()), 0.0)


def total_variation(p, q):
    """Total variation distance ``0.5 * sum |p - q|``."""
    p = _as_probs(p)
    q = _as_probs(q)
    if p.shape != q.shape:
        raise DomainError(
            f"Can not compare distributions of shapes {p.shape} and {q.shape}", module="dist-lab"
        )
    return 0.5 * float(np.abs(p - q).sum())


def product_joint(family, context_id=None):
    """The joint table of independent sites distributed according to ``family``."""
    check_state_space(family.vocab_size, family.length)
    probs = reduce(np.multiply.outer, family.marginals)
    probs = probs / probs.sum()
    return JointTable(probs, context_id=context_id)


def factorization_gap(true_joint, family):
    """Decompose the divergence of a product family from a joint table.

    Returns:
        GapReport: The direct divergence, the total correlation, the sum of the single-site
        divergences and the residual of the decomposition.
    """
    if family.length != true_joint.length or family.vocab_size != true_joint.vocab_size:
        raise DomainError(
            f"The product family ({family.vocab_size}, {family.length}) does not cover the joint "
            f"table ({true_joint.vocab_size}, {true_joint.length})",
            module="dist-lab",
        )
    kl_joint = kl(true_joint, product_joint(family))
    tc = total_correlation(true_joint) if true_joint.length >= 2 else 0.0
    marginal_kl_sum = sum(
        kl(marginal(true_joint, [i]), q) for i, q in enumerate(family.marginals)
    )
    if math.isfinite(kl_joint) and math.isfinite(marginal_kl_sum):
        residual = kl_joint - tc - marginal_kl_sum
    else:
        LOGGER.debug("Incompatible supports in the factorization gap of %s", true_joint)
        residual = math.nan
    return GapReport(
        kl_joint=kl_joint, tc=tc, marginal_kl_sum=float(marginal_kl_sum), residual=residual
    )


def random_joint(rng, vocab_size, length, concentration=1.0, context_id=None):
    """Draw a joint table from a symmetric Dirichlet distribution."""
    n_states = check_state_space(vocab_size, length)
    probs = rng.dirichlet(np.full(n_states, concentration))
    return JointTable(probs / probs.sum(), context_id=context_id, vocab_size=vocab_size)


def independent_joint(rng, vocab_size, length, context_id=None):
    """Draw a product of random single-site distributions."""
    family = ProductFamily(tuple(rng.dirichlet(np.ones(vocab_size)) for _ in range(length)))
    return product_joint(family, context_id=context_id)


def correlated_bits(p_same=0.9, context_id=None):
    """Two fair bits equal with probability ``p_same``."""
    if not 0 <= p_same <= 1:
        raise DomainError(f"p_same must be in [0, 1] (got {p_same})", module="dist-lab")
    same = p_same / 2
    diff = (1 - p_same) / 2
    return JointTable([[same, diff], [diff, same]], context_id=context_id)


def _format_values(values):
    return " ".join(repr(float(v)) for v in values)


def parse_joint(text, context_id=None):
    """Parse the text format of a joint table."""
    tokens = text.split()
    if len(tokens) < 2:
        raise DomainError("A joint table needs a 'V L' header", module="dist-lab")
    try:
        vocab_size, length = int(tokens[0]), int(tokens[1])
        values = [float(v) for v in tokens[2:]]
    except ValueError as exc:
        raise DomainError(f"Could not parse the joint table: {exc}", module="dist-lab") from exc
    n_states = check_state_space(vocab_size, length)
    if len(values) != n_states:
        raise DomainError(
            f"Expected {n_states} probabilities for V={vocab_size}, L={length} "
            f"(got {len(values)})",
            module="dist-lab",
        )
    return JointTable(values, context_id=context_id, vocab_size=vocab_size)


def format_joint(joint):
    """Format a joint table with the text format."""
    return f"{joint.vocab_size} {joint.length}\n{_format_values(joint.flat)}\n"


def load_joint(path, context_id=None):
    """Load a joint table from a file; the context defaults to the file stem."""
    path = Path(path)
    return parse_joint(path.read_text(encoding="utf-8"), context_id=context_id or path.stem)


def save_joint(joint, path):
    """Write a joint table with the text format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_joint(joint), encoding="utf-8")
    return path


def save_matrix(matrix, path):
    """Write a matrix as a ``rows R C`` header followed by one line per row."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"rows {matrix.shape[0]} {matrix.shape[1]}"]
    lines.extend(_format_values(row) for row in matrix)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_matrix(path):
    """Read a matrix written by :func:`save_matrix`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split() if lines else []
    if len(header) != 3 or header[0] != "rows":
        raise DomainError(f"The file {path} does not start with a 'rows R C' header")
    n_rows, n_cols = int(header[1]), int(header[2])
    matrix = np.array([[float(v) for v in line.split()] for line in lines[1 : 1 + n_rows]])
    if matrix.shape != (n_rows, n_cols):
        raise DomainError(f"The matrix in {path} does not have the shape ({n_rows}, {n_cols})")
    return matrix
