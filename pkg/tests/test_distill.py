"""Assisted fidelities, rates, and convex-roof bounds."""

import math

import numpy as np
import pytest

from cohdist.distill import (
    assisted_fidelity_bound,
    assisted_fidelity_sdp,
    coherence_of_assistance,
    logfloor,
    min_diag_over_ball,
    one_shot_rate,
    theta_upper,
    zero_error_rate,
)
from cohdist.dnorm import mnorm
from cohdist.ensembles import MaxAvgPureFidelity, ensemble_search
from cohdist.errors import BadM
from cohdist.hermat import (
    maximally_coherent,
    random_density,
    random_statevector,
    shannon_entropy,
    tensor_power,
)


def m2_closed_form(q):
    return 1.0 if q <= 0.5 else 0.5 + np.sqrt(q * (1.0 - q))


class TestFidelityBound:
    def test_maximally_mixed_qubit(self):
        assert assisted_fidelity_bound(np.eye(2, dtype=complex) / 2, 2) == 1.0

    def test_m2_closed_form(self, rng):
        for _ in range(30):
            d = int(rng.integers(2, 7))
            rho = random_density(d, rng)
            q = float(np.max(np.diag(rho).real))
            assert abs(assisted_fidelity_bound(rho, 2) - m2_closed_form(q)) <= 1e-9

    def test_qutrit_m3_value(self):
        rho = np.diag([0.5, 0.25, 0.25]).astype(complex)
        got = assisted_fidelity_bound(rho, 3)
        assert abs(got - 0.9714045207910317) < 1e-12
        assert abs(got - (np.sqrt(0.5) + 1.0) ** 2 / 3.0) < 1e-12

    def test_offdiagonals_do_not_matter(self, rng):
        rho = random_density(3, rng)
        diag = np.diag(np.diag(rho))
        for m in (2, 3):
            assert abs(assisted_fidelity_bound(rho, m)
                       - assisted_fidelity_bound(diag, m)) < 1e-12

    def test_rejects_non_integer_m(self, rng):
        with pytest.raises(BadM):
            assisted_fidelity_bound(random_density(2, rng), 1.5)

    def test_tensor_power_consistency(self, rng):
        # the bound of a tensor power can be computed from the Kronecker
        # power of the base diagonal-root vector without materializing it
        from cohdist.hermat import delta_vector

        for _ in range(5):
            d = int(rng.integers(2, 4))
            sigma = random_density(d, rng)
            delta = delta_vector(sigma)
            for n in (2, 3):
                big = tensor_power(sigma, n)
                direct = assisted_fidelity_bound(big, 2)
                delta_n = delta
                for _ in range(n - 1):
                    delta_n = np.kron(delta_n, delta)
                via_delta = mnorm(delta_n, 2).value ** 2 / 2
                via_delta = 1.0 if abs(via_delta - 1.0) <= 1e-12 else via_delta
                assert abs(direct - via_delta) <= 1e-9


class TestFidelitySdp:
    def test_member_state(self, rng):
        rho = random_density(4, rng)
        m = 1.0 / float(np.max(np.diag(rho).real))
        m_int = int(m)  # any integer m below keeps rho feasible
        if m_int >= 2:
            assert assisted_fidelity_sdp(rho, m_int) >= 1.0 - 1e-6

    def test_matches_bound_low_dim(self, rng):
        for trial in range(10):
            d = 2 if trial % 2 == 0 else 3
            rho = random_density(d, rng)
            for m in range(2, d + 1):
                gap = abs(assisted_fidelity_sdp(rho, m) - assisted_fidelity_bound(rho, m))
                assert gap <= 1e-6

    def test_bound_chain_dim_four(self, rng):
        # search lower bound <= SDP value <= closed-form norm bound
        for trial in range(3):
            rho = random_density(4, rng)
            m = 2
            f_sdp = assisted_fidelity_sdp(rho, m)
            f_bound = assisted_fidelity_bound(rho, m)
            _, f_search = ensemble_search(rho, MaxAvgPureFidelity(m), atoms_cap=5,
                                          seed=trial, restarts=3, max_evals=800)
            assert f_search <= f_sdp + 1e-5
            assert f_sdp <= f_bound + 1e-6


class TestRates:
    def test_maximally_coherent_qutrit(self):
        psi = maximally_coherent(3)
        rep = one_shot_rate(np.outer(psi, psi.conj()), 0.0)
        assert rep.m_requested == 3
        assert abs(rep.one_shot_rate_bits - math.log2(3)) < 1e-12
        assert rep.exact_flag

    def test_qubit_anchor(self):
        rho = np.diag([0.6, 0.4]).astype(complex)
        rep = one_shot_rate(rho, 0.0)
        assert rep.m_requested == 1
        assert rep.one_shot_rate_bits == 0.0
        assert rep.zero_error_bits == 0.0

    def test_three_copies(self):
        rho = tensor_power(np.diag([0.6, 0.4]).astype(complex), 3)
        rep = one_shot_rate(rho, 0.0, declared_base_dim=2)
        assert rep.m_requested == 4
        assert rep.one_shot_rate_bits == 2.0
        assert rep.exact_flag
        rep_undeclared = one_shot_rate(rho, 0.0)
        assert not rep_undeclared.exact_flag
        assert rep_undeclared.relaxed_rate_bits == 2.0

    def test_rates_are_logfloor_values(self, rng):
        for _ in range(5):
            d = int(rng.integers(2, 5))
            rho = random_density(d, rng)
            eps = float(rng.uniform(0.0, 0.2))
            rep = one_shot_rate(rho, eps)
            for bits in (rep.one_shot_rate_bits, rep.relaxed_rate_bits, rep.zero_error_bits):
                assert abs(2.0 ** bits - round(2.0 ** bits)) < 1e-9
            assert rep.one_shot_rate_bits <= rep.relaxed_rate_bits

    def test_monotone_in_eps(self, rng):
        rho = random_density(3, rng)
        rates = [one_shot_rate(rho, eps).relaxed_rate_bits for eps in (0.0, 0.03, 0.06, 0.1)]
        assert all(b >= a - 1e-12 for a, b in zip(rates, rates[1:]))

    def test_zero_error_examples(self):
        z = zero_error_rate(np.outer(maximally_coherent(2), maximally_coherent(2)))
        assert z.one_shot_bits == 1.0
        assert abs(z.asymptotic_bits_per_copy - 1.0) < 1e-12
        assert z.exact
        z = zero_error_rate(np.diag([0.6, 0.4]).astype(complex))
        assert z.one_shot_bits == 0.0
        assert abs(z.asymptotic_bits_per_copy - 0.7369655941662062) < 1e-9
        z = zero_error_rate(np.diag([0.5, 0.25, 0.25]).astype(complex))
        assert (z.one_shot_bits, z.asymptotic_bits_per_copy, z.exact) == (1.0, 1.0, True)

    def test_ball_minimum_anchor(self, rng):
        rho = random_density(3, rng)
        got = min_diag_over_ball(rho, 0.0)
        assert abs(got - np.max(np.diag(rho).real)) <= 1e-7

    def test_logfloor(self):
        assert logfloor(math.log2(3)) == math.log2(3)
        assert logfloor(1.9) == math.log2(3)  # 2^1.9 ~ 3.73 floors to 3
        assert logfloor(0.3) == 0.0
        assert logfloor(2.0) == 2.0


class TestThetaUpper:
    def test_pure_state(self, rng):
        psi = random_statevector(3, rng)
        t = theta_upper(np.outer(psi, psi.conj()))
        assert t.exact
        assert abs(t.value - np.max(np.abs(psi) ** 2)) < 1e-12

    def test_qubit_equals_max_diagonal(self, rng):
        rho = random_density(2, rng)
        t = theta_upper(rho)
        assert t.exact
        assert t.value == np.max(np.diag(rho).real)

    def test_dim_four_is_relaxation_upper_bound(self, rng):
        rho = random_density(4, rng)
        t = theta_upper(rho, restarts=3, max_evals=800, seed=0)
        assert not t.exact
        assert t.value >= t.diag_lower - 1e-12
        assert t.diag_lower == np.max(np.diag(rho).real)


class TestCoherenceOfAssistance:
    def test_uniform_qubit(self):
        ca = coherence_of_assistance(np.eye(2, dtype=complex) / 2)
        assert ca.exact and ca.value_bits == 1.0

    def test_pure_state(self, rng):
        psi = random_statevector(3, rng)
        ca = coherence_of_assistance(np.outer(psi, psi.conj()))
        assert abs(ca.value_bits - shannon_entropy(np.abs(psi) ** 2)) < 1e-9

    def test_qutrit_with_offdiagonals(self, rng):
        # diagonal (1/2, 1/4, 1/4) plus generic coherences: still 1.5 bits
        rho = random_density(3, rng)
        d = np.diag([0.5, 0.25, 0.25])
        scale = np.sqrt(np.outer(np.diag(d), np.diag(d)) / np.outer(np.diag(rho).real, np.diag(rho).real))
        rho = 0.5 * (rho * scale + (rho * scale).conj().T)
        assert np.allclose(np.diag(rho).real, [0.5, 0.25, 0.25], atol=1e-12)
        w = np.linalg.eigvalsh(rho)
        if w[0] < 0:  # rescaling can break positivity; mix toward the diagonal
            t = float(-w[0] / (-w[0] + np.min([0.5, 0.25, 0.25])))
            rho = (1 - t) * rho + t * d.astype(complex)
        ca = coherence_of_assistance(rho)
        assert ca.exact
        assert abs(ca.value_bits - 1.5) < 1e-12

    def test_dim_four_bracket(self, rng):
        rho = random_density(4, rng)
        ca = coherence_of_assistance(rho, restarts=3, max_evals=800)
        assert not ca.exact
        assert ca.value_bits <= ca.diag_entropy_bits + 1e-12
        assert ca.value_bits >= 0.0
