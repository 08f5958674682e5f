"""Test the distribution lab of the ``decoding-dynamics`` package."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

# pylint: disable=missing-function-docstring
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from decoding_dynamics.distributions import INFINITE_DIVERGENCE
from decoding_dynamics.distributions import JointTable
from decoding_dynamics.distributions import ProductFamily
from decoding_dynamics.distributions import correlated_bits
from decoding_dynamics.distributions import entropy
from decoding_dynamics.distributions import factorization_gap
from decoding_dynamics.distributions import independent_joint
from decoding_dynamics.distributions import kl
from decoding_dynamics.distributions import load_joint
from decoding_dynamics.distributions import load_matrix
from decoding_dynamics.distributions import marginal
from decoding_dynamics.distributions import product_joint
from decoding_dynamics.distributions import random_joint
from decoding_dynamics.distributions import save_joint
from decoding_dynamics.distributions import save_matrix
from decoding_dynamics.distributions import total_correlation
from decoding_dynamics.distributions import total_variation
from decoding_dynamics.exceptions import DomainError
from decoding_dynamics.exceptions import ResourceLimitError

shapes = st.tuples(st.integers(min_value=2, max_value=4), st.integers(min_value=2, max_value=3))


class TestJointTable:
    """Tests of the joint tables."""

    def test_flat_input(self):
        joint = JointTable([0.1, 0.2, 0.3, 0.4], vocab_size=2)
        assert joint.length == 2
        assert joint.n_states == 4
        assert joint.prob((1, 0)) == pytest.approx(0.3)

    def test_not_normalized(self):
        with pytest.raises(DomainError, match="sums to"):
            JointTable([[0.5, 0.5], [0.5, 0.5]])

    def test_negative(self):
        with pytest.raises(DomainError, match="negative"):
            JointTable([1.5, -0.5])

    def test_bad_shape(self):
        with pytest.raises(DomainError):
            JointTable(np.full((2, 3), 1 / 6))

    def test_state_cap(self):
        with pytest.raises(ResourceLimitError, match="exceeds the cap"):
            random_joint(np.random.default_rng(0), 10, 6)

    def test_read_only(self, correlated_joint):
        with pytest.raises(ValueError):
            correlated_joint.probs[0, 0] = 1

    def test_file_format(self, correlated_joint, tmp_path):
        path = save_joint(correlated_joint, tmp_path / "bits.txt")
        assert path.read_text(encoding="utf-8").splitlines()[0] == "2 2"
        assert load_joint(path) == correlated_joint

    def test_wrong_count_in_file(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2\n0.5 0.5\n", encoding="utf-8")
        with pytest.raises(DomainError, match="Expected 4 probabilities"):
            load_joint(path)

    def test_matrix_file(self, tmp_path):
        matrix = np.array([[0.2, 0.8], [0.6, 0.4], [1.0, 0.0]])
        path = save_matrix(matrix, tmp_path / "kernel.txt")
        assert path.read_text(encoding="utf-8").startswith("rows 3 2\n")
        np.testing.assert_array_equal(load_matrix(path), matrix)


class TestMarginal:
    """Tests of the marginals."""

    def test_uniform(self):
        joint = JointTable(np.full((2, 2), 0.25))
        np.testing.assert_allclose(marginal(joint, [0]).probs, [0.5, 0.5])

    def test_perfect_correlation(self):
        joint = correlated_bits(1.0)
        np.testing.assert_allclose(marginal(joint, {1}).probs, [0.5, 0.5])

    def test_all_sites(self, rng):
        joint = random_joint(rng, 3, 3)
        np.testing.assert_array_equal(marginal(joint, [2, 0, 1]).probs, joint.probs)

    def test_empty_site_set(self, correlated_joint):
        with pytest.raises(DomainError, match="must not be empty"):
            marginal(correlated_joint, [])

    def test_out_of_range(self, correlated_joint):
        with pytest.raises(DomainError):
            marginal(correlated_joint, [2])


class TestInformation:
    """Tests of the entropies and divergences."""

    @pytest.mark.parametrize(
        "probs, expected",
        [
            [[0.25] * 4, math.log(4)],
            [[1.0, 0.0], 0.0],
            [[0.9, 0.1], 0.3251],
        ],
    )
    def test_entropy(self, probs, expected):
        assert entropy(probs) == pytest.approx(expected, abs=1e-4)

    def test_total_correlation(self, correlated_joint, rng):
        assert total_correlation(correlated_joint) == pytest.approx(0.3680, abs=1e-4)
        assert total_correlation(correlated_bits(1.0)) == pytest.approx(math.log(2))
        assert total_correlation(independent_joint(rng, 3, 3)) == pytest.approx(0, abs=1e-12)

    def test_total_correlation_one_site(self):
        with pytest.raises(DomainError, match="at least 2 sites"):
            total_correlation(JointTable([0.3, 0.7]))

    def test_kl(self):
        assert kl([0.3, 0.7], [0.3, 0.7]) == 0
        assert kl([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))
        assert kl([0.5, 0.5], [1.0, 0.0]) == INFINITE_DIVERGENCE

    def test_kl_shapes(self):
        with pytest.raises(DomainError, match="shapes"):
            kl([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_total_variation(self):
        assert total_variation([1.0, 0.0], [0.0, 1.0]) == 1.0
        assert total_variation([0.5, 0.5], [0.25, 0.75]) == 0.25


class TestFactorizationGap:
    """Tests of the factorization-gap decomposition."""

    def test_true_marginals(self, correlated_joint):
        report = factorization_gap(correlated_joint, ProductFamily.from_joint(correlated_joint))
        assert report.kl_joint == pytest.approx(0.3680, abs=1e-4)
        assert report.kl_joint == pytest.approx(report.tc, abs=1e-12)
        assert report.marginal_kl_sum == pytest.approx(0, abs=1e-12)

    def test_independent_joint(self, rng):
        joint = independent_joint(rng, 3, 2)
        report = factorization_gap(joint, ProductFamily.from_joint(joint))
        assert report.kl_joint == pytest.approx(0, abs=1e-12)
        assert report.tc == pytest.approx(0, abs=1e-12)

        perturbed = ProductFamily.from_joint(joint).perturbed(rng, 0.5)
        report = factorization_gap(joint, perturbed)
        assert report.tc == pytest.approx(0, abs=1e-12)
        assert report.kl_joint == pytest.approx(report.marginal_kl_sum, abs=1e-10)

    def test_incompatible_supports(self, correlated_joint):
        family = ProductFamily(([1.0, 0.0], [0.5, 0.5]))
        report = factorization_gap(correlated_joint, family)
        assert report.kl_joint == INFINITE_DIVERGENCE
        assert not report.supports_compatible
        assert math.isnan(report.residual)

    def test_family_mismatch(self, correlated_joint):
        with pytest.raises(DomainError, match="does not cover"):
            factorization_gap(correlated_joint, ProductFamily.uniform(3, 2))

    @settings(max_examples=50, deadline=None)
    @given(shapes, st.integers(min_value=0, max_value=2**32 - 1))
    def test_decomposition(self, shape, seed):
        rng = np.random.default_rng(seed)
        vocab_size, length = shape
        joint = random_joint(rng, vocab_size, length)
        family = ProductFamily.uniform(vocab_size, length).perturbed(rng, 0.9)
        report = factorization_gap(joint, family)
        assert abs(report.residual) <= 1e-10
        assert report.kl_joint >= report.tc - 1e-12


class TestProductFamily:
    """Tests of the product families."""

    def test_argmax(self):
        family = ProductFamily(([0.2, 0.8], [0.5, 0.5], [0.6, 0.4]))
        assert family.argmax() == (1, 0, 0)

    def test_product_joint(self):
        family = ProductFamily(([0.2, 0.8], [0.5, 0.5]))
        np.testing.assert_allclose(product_joint(family).probs, [[0.1, 0.1], [0.4, 0.4]])

    def test_mismatched_vocabularies(self):
        with pytest.raises(DomainError, match="same vocabulary"):
            ProductFamily(([0.5, 0.5], [0.2, 0.3, 0.5]))
