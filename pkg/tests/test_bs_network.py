"""
Tests for the beam-splitter network
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utils.bs_network import bit_parity, evolve_layer, layer_sets, pad_inputs, propagate, transfer_matrix, user_columns
from utils.errors import ParameterError


class TestLayerSets:
    """Test the pairing of ports within a layer"""

    def test_first_layer_of_two(self):
        """Test r=0, s=2 pairs (0,1) and (2,3)"""
        assert layer_sets(0, 2) == ([0, 2], [1, 3])

    def test_second_layer_of_two(self):
        """Test r=1, s=2 pairs (0,2) and (1,3)"""
        assert layer_sets(1, 2) == ([0, 1], [2, 3])

    def test_single_layer(self):
        """Test s=1"""
        assert layer_sets(0, 1) == ([0], [1])

    def test_layer_out_of_range(self):
        """Test that r >= s raises error"""
        with pytest.raises(ParameterError):
            layer_sets(2, 2)

    @given(st.integers(min_value=1, max_value=6).flatmap(lambda s: st.tuples(st.just(s), st.integers(0, s - 1))))
    def test_partition(self, sr):
        """Test that the two sets partition the ports into equal halves"""
        s, r = sr
        upper, lower = layer_sets(r, s)
        assert len(upper) == len(lower) == 2 ** (s - 1)
        assert sorted(upper + lower) == list(range(2 ** s))
        assert all(i + 2 ** r in lower for i in upper)


class TestEvolution:
    """Test amplitude propagation"""

    def test_single_splitter(self):
        """Test one 50:50 splitter on port 0"""
        out = evolve_layer([1.0, 0.0], 0, 1)
        np.testing.assert_allclose(out, [1 / math.sqrt(2), 1 / math.sqrt(2)])

    def test_lower_port_sign(self):
        """Test the minus sign on the lower port"""
        out = evolve_layer([0.0, 1.0], 0, 1)
        np.testing.assert_allclose(out, [1 / math.sqrt(2), -1 / math.sqrt(2)])

    def test_wrong_length(self):
        """Test that a wrong number of amplitudes raises error"""
        with pytest.raises(ParameterError):
            evolve_layer([1.0, 0.0, 0.0], 0, 2)

    def test_four_user_constructive(self):
        """Test that equal inputs all reach detector 0"""
        out = propagate([1.0, 1.0, 1.0, 1.0], 2)
        np.testing.assert_allclose(np.abs(out) ** 2, [4.0, 0.0, 0.0, 0.0], atol=1e-12)

    @settings(max_examples=30)
    @given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=2 ** 31 - 1))
    def test_norm_preserved(self, s, seed):
        """Test that propagation preserves the total intensity"""
        rng = np.random.default_rng(seed)
        amps = rng.normal(size=2 ** s) + 1j * rng.normal(size=2 ** s)
        assert np.linalg.norm(propagate(amps, s)) == pytest.approx(np.linalg.norm(amps))


class TestTransferMatrix:
    """Test the composed network matrix"""

    def test_parity(self):
        """Test the bitwise dot-product parity"""
        assert bit_parity(3, 1) == 1
        assert bit_parity(3, 3) == 0
        assert bit_parity(2, 1) == 0

    @pytest.mark.parametrize("s", [1, 2, 3, 4])
    def test_orthogonal(self, s):
        """Test U U^T = I"""
        u = transfer_matrix(s).entries
        np.testing.assert_allclose(u @ u.T, np.eye(2 ** s), atol=1e-12)

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_matches_layer_composition(self, s):
        """Test that the closed form equals layer-by-layer propagation"""
        u = transfer_matrix(s).entries
        for i in range(2 ** s):
            np.testing.assert_allclose(propagate(np.eye(2 ** s)[i], s), u[:, i], atol=1e-12)

    def test_entries(self):
        """Test (-1)^(j.i) / sqrt(N_D)"""
        u = transfer_matrix(2).entries
        assert u[3, 3] == pytest.approx(0.5)
        assert u[1, 3] == pytest.approx(-0.5)

    def test_user_columns_and_padding(self):
        """Test the occupied columns and vacuum padding"""
        assert user_columns(2, 3).shape == (4, 3)
        np.testing.assert_allclose(pad_inputs([1.0, 2.0], 2), [1.0, 2.0, 0.0, 0.0])
        with pytest.raises(ParameterError):
            user_columns(1, 3)
