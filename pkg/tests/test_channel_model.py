"""
Tests for the channel and detector model
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models import ChannelConfig, OutputSignal, SliceCombination
from utils.bs_network import transfer_matrix
from utils.channel_model import (
    detector_amplitudes,
    exact_kg_observables,
    fock_yields,
    kg_observables,
    pr_omega_given_kg,
    prob_single_click,
    qber_from_observables,
    qber_pair,
    single_click_probs,
    yield_tensor,
)
from utils.errors import ParameterError, UndefinedObservableError
from utils.fock_oracle import brute_force_yield, permanent


class TestDetectorAmplitudes:
    """Test coherent amplitudes at the detectors"""

    def test_vacuum(self):
        """Test that no light gives zero amplitudes"""
        cfg = ChannelConfig.uniform(0.0, n_users=4, s=2)
        signals = [OutputSignal(intensity=0.0, phase=0.0)] * 4
        np.testing.assert_allclose(detector_amplitudes(signals, cfg), 0.0)

    def test_single_user_spreads(self):
        """Test |beta_j|^2 = u / N_D from one user"""
        cfg = ChannelConfig.uniform(0.0, n_users=4, s=2)
        signals = [OutputSignal(intensity=0.8, phase=0.3)] + [OutputSignal(intensity=0.0, phase=0.0)] * 3
        np.testing.assert_allclose(np.abs(detector_amplitudes(signals, cfg)) ** 2, 0.2)

    def test_constructive(self):
        """Test that aligned equal signals all reach detector 0"""
        cfg = ChannelConfig.uniform(0.0, n_users=4, s=2)
        signals = [OutputSignal(intensity=0.1, phase=0.0)] * 4
        power = np.abs(detector_amplitudes(signals, cfg)) ** 2
        np.testing.assert_allclose(power, [0.4, 0.0, 0.0, 0.0], atol=1e-15)

    def test_loss_attenuates(self):
        """Test the sqrt(eta) attenuation"""
        cfg = ChannelConfig.uniform(10.0, n_users=2, s=1)
        signals = [OutputSignal(intensity=1.0, phase=0.0), OutputSignal(intensity=0.0, phase=0.0)]
        np.testing.assert_allclose(np.abs(detector_amplitudes(signals, cfg)) ** 2, 0.05)

    def test_wrong_signal_count(self):
        """Test that one signal per user is required"""
        with pytest.raises(ParameterError):
            detector_amplitudes([OutputSignal(intensity=0.0, phase=0.0)], ChannelConfig.uniform(0.0))


class TestSingleClick:
    """Test threshold detection with dark counts"""

    def test_dark_only(self):
        """Test p (1-p)^(N_D-1) without light"""
        p = 1e-3
        assert prob_single_click(0, np.zeros(4), p) == pytest.approx(p * (1 - p) ** 3)

    def test_no_light_no_darks(self):
        """Test zero clicks without light or dark counts"""
        assert prob_single_click(2, np.zeros(4), 0.0) == 0.0

    def test_poisson(self):
        """Test 1 - e^-1 for unit mean photon number"""
        assert prob_single_click(0, [1.0, 0.0, 0.0, 0.0], 0.0) == pytest.approx(1 - math.exp(-1))

    def test_detector_range(self):
        """Test that an invalid detector raises error"""
        with pytest.raises(ParameterError):
            prob_single_click(4, np.zeros(4), 0.0)

    @settings(max_examples=50)
    @given(
        st.lists(st.floats(min_value=0.0, max_value=3.0), min_size=4, max_size=4),
        st.floats(min_value=0.0, max_value=0.5),
    )
    def test_total_at_most_one(self, magnitudes, p):
        """Test sum_j Pr(single click at j) <= 1"""
        assert single_click_probs(np.array(magnitudes), p).sum() <= 1.0 + 1e-12

    @given(st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.0, max_value=2.0))
    def test_monotone_in_other_detectors(self, low, extra):
        """Test that light on another detector never raises Pr(only j clicks)"""
        base = prob_single_click(0, [0.5, math.sqrt(low), 0.0, 0.0], 1e-3)
        more = prob_single_click(0, [0.5, math.sqrt(low + extra), 0.0, 0.0], 1e-3)
        assert more <= base + 1e-15

    def test_monotone_in_dark_counts(self):
        """Test that without light more dark counts mean more single clicks"""
        values = [prob_single_click(0, np.zeros(4), p) for p in (0.0, 1e-4, 1e-3, 1e-2)]
        assert values == sorted(values)


class TestKGObservables:
    """Test slice-averaged KG-round observables"""

    def test_no_signal(self):
        """Test that u_max = 0 leaves only dark counts"""
        p = 1e-4
        cfg = ChannelConfig.uniform(0.0, n_users=2, s=1, u_max=0.0, slices=4, p_dark=p)
        assert pr_omega_given_kg(0, SliceCombination.canonical(2), cfg) == pytest.approx(p * (1 - p))

    def test_dark_limit_qber(self):
        """Test QBER -> 1/2 when clicks carry no information"""
        cfg = ChannelConfig.uniform(80.0, n_users=2, s=1, u_max=0.01, slices=4, p_dark=1e-3)
        assert qber_pair(0, 1, cfg) == pytest.approx(0.5, abs=1e-3)

    def test_undefined_without_clicks(self):
        """Test that QBER is undefined when detector j never fires"""
        cfg = ChannelConfig.uniform(0.0, n_users=2, s=1, u_max=0.0, slices=4, p_dark=0.0)
        with pytest.raises(UndefinedObservableError):
            qber_pair(0, 1, cfg)

    def test_qber_in_unit_interval(self, four_user_cfg):
        """Test 0 <= QBER <= 1"""
        obs = kg_observables(four_user_cfg, SliceCombination(k=(1, 2, 1, 8, 2, 2, 1, 1)))
        column = obs.click_probs
        assert np.all(column >= 0.0) and np.all(column <= 1.0)
        for j in range(4):
            for i in range(1, 4):
                assert 0.0 <= qber_from_observables(obs, j, i) <= 1.0

    def test_detector_parity_symmetry(self, two_user_cfg):
        """Test that the parity-corrected QBER agrees between the two detectors"""
        combo = SliceCombination(k=(1, 2, 4, 1))
        assert qber_pair(0, 1, two_user_cfg, combo) == pytest.approx(qber_pair(1, 1, two_user_cfg, combo), rel=1e-6)

    def test_canonical_below_half(self, two_user_cfg):
        """Test that aligned canonical slices give a low QBER"""
        assert qber_pair(0, 1, two_user_cfg) < 0.25

    def test_rotation_invariance(self, two_user_cfg):
        """Test that rotating every slice leaves the observables unchanged"""
        combo = SliceCombination(k=(1, 2, 4, 1))
        a = kg_observables(two_user_cfg, combo).click_probs
        b = kg_observables(two_user_cfg, combo.rotated(1, 4)).click_probs
        np.testing.assert_allclose(a, b, rtol=1e-3)

    def test_offset_of_one_slice(self, two_user_cfg):
        """Test that a one-slice misalignment equals moving that user's slices down by one"""
        width = 2 * math.pi / 4
        misaligned = two_user_cfg.model_copy(update={"phase_offsets": [0.0, width]})
        a = kg_observables(misaligned, SliceCombination(k=(1, 1, 1, 1))).click_probs
        b = kg_observables(two_user_cfg, SliceCombination(k=(1, 1, 4, 4))).click_probs
        np.testing.assert_allclose(a, b, rtol=1e-3)

    def test_offset_raises_qber(self, two_user_cfg):
        """Test that misalignment degrades the canonical pattern"""
        misaligned = two_user_cfg.model_copy(update={"phase_offsets": [0.0, 0.6]})
        assert qber_pair(0, 1, misaligned) > qber_pair(0, 1, two_user_cfg)

    def test_exact_limit(self, two_user_cfg):
        """Test the exact +-sqrt(u) observables against a direct evaluation"""
        obs = exact_kg_observables(two_user_cfg)
        eta = two_user_cfg.eta[0]
        amp = math.sqrt(two_user_cfg.source.u_max * eta / 2)
        # bits (0, 0): everything at detector 0
        expected = single_click_probs(np.array([2 * amp, 0.0]), two_user_cfg.p_dark)
        np.testing.assert_allclose(obs.click_probs[0], expected)


class TestFockYields:
    """Test infinite-decoy yields"""

    def test_vacuum(self):
        """Test the dark-count yield"""
        cfg = ChannelConfig.uniform(5.0, n_users=4, s=2, p_dark=1e-3)
        assert fock_yields([0, 0, 0, 0], 1, cfg) == pytest.approx(1e-3 * (1 - 1e-3) ** 3)

    def test_single_photon_lossless(self):
        """Test Y = 1/N_D for one photon without loss or darks"""
        cfg = ChannelConfig.uniform(0.0, n_users=4, s=2, p_dark=0.0)
        for j in range(4):
            assert fock_yields([1, 0, 0, 0], j, cfg) == pytest.approx(0.25)

    def test_against_permanent_oracle(self):
        """Test two photons from two users against the permanent expansion"""
        cfg = ChannelConfig.uniform(0.0, n_users=4, s=2, p_dark=0.0)
        network = transfer_matrix(2).entries
        for j in range(4):
            expected = brute_force_yield([1, 1, 0, 0], j, network, cfg.eta, 0.0)
            assert fock_yields([1, 1, 0, 0], j, cfg) == pytest.approx(expected, abs=1e-12)

    def test_lossy_against_permanent_oracle(self):
        """Test lossy inputs with dark counts against the permanent expansion"""
        cfg = ChannelConfig(
            loss_db=[1.0, 3.0, 6.0],
            p_dark=1e-2,
            topology={"s": 2, "n_users": 3},
            source={"u_max": 0.1},
        )
        network = transfer_matrix(2).entries
        for n_vec in itertools.product(range(3), repeat=3):
            if sum(n_vec) > 3:
                continue
            for j in range(4):
                expected = brute_force_yield(n_vec, j, network, cfg.eta, cfg.p_dark)
                assert fock_yields(n_vec, j, cfg) == pytest.approx(expected, abs=1e-12)

    def test_tensor_matches_pointwise(self):
        """Test that the dense tensor agrees with single evaluations"""
        cfg = ChannelConfig.uniform(4.0, n_users=2, s=1, p_dark=1e-5)
        tensor = yield_tensor(cfg, 3)
        for n0, n1 in itertools.product(range(4), repeat=2):
            assert tensor.values[1, n0, n1] == pytest.approx(fock_yields([n0, n1], 1, cfg), rel=1e-12)

    def test_phase_convention_irrelevant(self):
        """Test that misalignment offsets do not change Fock yields"""
        base = ChannelConfig.uniform(2.0, n_users=2, s=1, p_dark=1e-4)
        rotated = ChannelConfig.uniform(2.0, n_users=2, s=1, p_dark=1e-4, phase_offsets=[0.4, 2.1])
        assert fock_yields([2, 1], 0, base) == pytest.approx(fock_yields([2, 1], 0, rotated), abs=1e-12)

    def test_photon_total_limit(self):
        """Test that absurd photon totals raise error"""
        cfg = ChannelConfig.uniform(0.0, n_users=2, s=1)
        with pytest.raises(ParameterError):
            fock_yields([100, 100], 0, cfg)

    def test_range(self):
        """Test 0 <= Y <= 1 across the tensor"""
        tensor = yield_tensor(ChannelConfig.uniform(0.0, n_users=4, s=2, p_dark=1e-8), 4)
        assert np.all(tensor.values >= 0.0) and np.all(tensor.values <= 1.0)


class TestPermanent:
    """Test the permanent used by the multimode oracle"""

    def test_all_ones(self):
        for size in range(5):
            assert permanent(np.ones((size, size))) == pytest.approx(math.factorial(size))

    def test_against_permutation_sum(self):
        rng = np.random.default_rng(4)
        matrix = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        expected = sum(
            np.prod([matrix[i, p] for i, p in enumerate(perm)]) for perm in itertools.permutations(range(4))
        )
        assert permanent(matrix) == pytest.approx(expected, rel=1e-12)
