"""SDP solver certificates and the two problem builders."""

import numpy as np
import pytest

from cohdist.dnorm import mnorm
from cohdist.errors import BadM, CapExceeded, IllPosed
from cohdist.hermat import delta_vector, fidelity, maximally_coherent, random_density
from cohdist.sdpsolve import (
    SdpProblem,
    build_fidelity,
    build_fidelity_over_Mm,
    build_min_diag_over_ball,
    solve,
)


def one():
    return np.ones((1, 1), dtype=complex)


class TestSolver:
    def test_pure_state_optimum(self):
        prob = SdpProblem(
            block_dims=[2],
            objective=[np.diag([1.0, 0.0]).astype(complex)],
            constraints=[{0: np.eye(2, dtype=complex)}],
            rhs=np.array([1.0]),
        )
        sol = solve(prob)
        assert sol.status == "optimal"
        assert abs(sol.primal_value - 1.0) < 1e-7

    def test_certificates(self, rng):
        for _ in range(10):
            d = int(rng.integers(2, 4))
            prob = build_fidelity(random_density(d, rng), random_density(d, rng))
            sol = solve(prob)
            assert sol.status == "optimal"
            assert sol.gap <= 1e-7 * (1.0 + abs(sol.primal_value))
            assert sol.primal_residual <= 1e-8 * (1.0 + np.max(np.abs(prob.rhs)))
            for blk in sol.primal_blocks:
                assert np.min(np.linalg.eigvalsh(blk)) >= -1e-9
            # weak duality in max form: dual >= primal
            assert sol.dual_value >= sol.primal_value - 1e-9

    def test_fidelity_sdp_self(self, rng):
        rho = random_density(3, rng)
        sol = solve(build_fidelity(rho, rho))
        assert abs(sol.primal_value ** 2 - 1.0) < 1e-6

    def test_fidelity_sdp_vs_eig_route(self, rng):
        for _ in range(50):
            d = 2 if rng.random() < 0.5 else 3
            r, s = random_density(d, rng), random_density(d, rng)
            sol = solve(build_fidelity(r, s))
            assert sol.status == "optimal"
            assert abs(sol.primal_value ** 2 - fidelity(r, s)) <= 1e-6

    def test_ill_posed_duplicate_constraint(self):
        con = {0: np.eye(2, dtype=complex)}
        prob = SdpProblem(
            block_dims=[2],
            objective=[np.eye(2, dtype=complex)],
            constraints=[con, {0: con[0].copy()}],
            rhs=np.array([1.0, 1.0]),
        )
        with pytest.raises(IllPosed):
            solve(prob)

    def test_infeasible_certificate(self):
        prob = SdpProblem(
            block_dims=[1],
            objective=[None],
            constraints=[{0: one()}],
            rhs=np.array([-1.0]),
        )
        assert solve(prob).status == "infeasible"

    def test_block_cap(self):
        with pytest.raises(CapExceeded):
            solve(SdpProblem(block_dims=[300], objective=[None], constraints=[], rhs=np.array([])))

    def test_problem_rejects_non_hermitian_data(self):
        from cohdist.errors import NonHermitian

        skew = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        with pytest.raises(NonHermitian):
            SdpProblem(block_dims=[2], objective=[skew],
                       constraints=[{0: np.eye(2, dtype=complex)}], rhs=np.array([1.0]))
        with pytest.raises(NonHermitian):
            SdpProblem(block_dims=[2], objective=[None],
                       constraints=[{0: skew}], rhs=np.array([1.0]))


class TestFidelityOverMm:
    def test_member_state_scores_one(self, rng):
        # any state with max diagonal <= 1/m is itself feasible
        rho = random_density(4, rng)
        m = 1.0 / np.max(np.diag(rho).real) - 1e-6
        assert m > 1
        sol = solve(build_fidelity_over_Mm(rho, m))
        assert abs(sol.primal_value ** 2 - 1.0) < 1e-6

    def test_qubit_closed_form(self):
        sol = solve(build_fidelity_over_Mm(np.diag([0.75, 0.25]).astype(complex), 2))
        assert abs(sol.primal_value ** 2 - (2 + np.sqrt(3)) / 4) < 1e-7

    def test_qutrit_m3_closed_form(self, rng):
        for _ in range(5):
            rho = random_density(3, rng)
            sol = solve(build_fidelity_over_Mm(rho, 3))
            expect = float(np.sum(np.sqrt(np.diag(rho).real)) ** 2) / 3.0
            assert abs(sol.primal_value ** 2 - expect) < 1e-6

    def test_low_dim_equals_norm_bound(self, rng):
        for _ in range(10):
            d = int(rng.integers(2, 4))
            rho = random_density(d, rng)
            for m in range(2, d + 1):
                sol = solve(build_fidelity_over_Mm(rho, m))
                bound = mnorm(delta_vector(rho), m).value ** 2 / m
                assert abs(sol.primal_value ** 2 - bound) < 1e-6

    def test_continuous_m(self, rng):
        rho = random_density(3, rng)
        vals = []
        for m in (1.0, 1.5, 2.0, 2.5, 3.0):
            sol = solve(build_fidelity_over_Mm(rho, m))
            assert sol.status == "optimal"
            vals.append(sol.primal_value)
        assert all(b <= a + 1e-7 for a, b in zip(vals, vals[1:]))

    def test_bad_m(self, rng):
        rho = random_density(3, rng)
        with pytest.raises(BadM):
            build_fidelity_over_Mm(rho, 0.5)
        with pytest.raises(BadM):
            build_fidelity_over_Mm(rho, 3.5)


class TestMinDiagOverBall:
    def test_eps_zero_anchor(self, rng):
        for _ in range(5):
            d = int(rng.integers(2, 5))
            rho = random_density(d, rng)
            sol = solve(build_min_diag_over_ball(rho, 0.0))
            assert abs(sol.primal_value - np.max(np.diag(rho).real)) < 1e-7

    def test_maximally_coherent_half(self):
        psi = maximally_coherent(2)
        sol = solve(build_min_diag_over_ball(np.outer(psi, psi.conj()), 0.0))
        assert abs(sol.primal_value - 0.5) < 1e-9

    def test_qubit_grid_oracle(self):
        # diag(0.6, 0.4); qubit fidelity closed form tr(rho sigma) + 2 sqrt(det det)
        rho = np.diag([0.6, 0.4]).astype(complex)
        eps = 0.02

        def best_fid(t):
            return 0.6 * t + 0.4 * (1 - t) + 2 * np.sqrt(0.24 * t * (1 - t))

        ts = np.linspace(0.0, 1.0, 400001)
        feas = best_fid(ts) >= 1 - eps
        oracle = float(np.min(np.maximum(ts[feas], 1 - ts[feas])))
        sol = solve(build_min_diag_over_ball(rho, eps))
        assert sol.status == "optimal"
        assert 0.4 <= sol.primal_value < 0.6
        assert abs(sol.primal_value - oracle) < 1e-5

    def test_monotone_in_eps(self, rng):
        for _ in range(3):
            d = int(rng.integers(2, 5))
            rho = random_density(d, rng)
            vals = []
            for eps in (0.0, 0.02, 0.05, 0.1):
                sol = solve(build_min_diag_over_ball(rho, eps))
                assert sol.status == "optimal"
                vals.append(sol.primal_value)
            assert all(b <= a + 1e-7 for a, b in zip(vals, vals[1:]))

    def test_rejects_bad_eps(self, rng):
        rho = random_density(2, rng)
        with pytest.raises(ValueError):
            build_min_diag_over_ball(rho, 1.0)
        with pytest.raises(ValueError):
            build_min_diag_over_ball(rho, -0.1)
