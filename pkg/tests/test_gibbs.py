import math

import numpy as np
import pytest

from qsep.entropy import mutual_information, von_neumann_entropy
from qsep.gibbs import (
    BoundParams,
    check_asymptotic_condition,
    class_membership_check,
    fcb_bound,
    max_entropy,
    max_entropy_multi,
    solve_beta,
    squared_hamiltonian_check,
)
from qsep.qmat import DensityOp, DimSig, random_density
from qsep.spectra import HamiltonianSpec

QUBIT = HamiltonianSpec.explicit([0.0, 1.0])
LINEAR = HamiltonianSpec.linear(1.0)


def scalar_root_oracle(target):
    """Bisection on e^-b/(1+e^-b) = target, independent of the solver."""
    lo, hi = 0.0, 50.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if math.exp(-mid) / (1 + math.exp(-mid)) > target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class TestSolveBeta:
    def test_qubit_quarter_energy(self):
        sol = solve_beta(QUBIT, 0.25)
        assert abs(sol.beta - scalar_root_oracle(0.25)) < 1e-8
        assert abs(sol.beta - math.log(3)) < 1e-8
        assert abs(sol.mean_energy - 0.25) < 1e-8

    def test_qubit_clamps_at_half(self):
        sol = solve_beta(QUBIT, 0.5)
        assert sol.beta == 0.0
        assert np.allclose(sol.weights, [0.5, 0.5])
        assert np.allclose(np.diag(sol.state.mat).real, [0.5, 0.5])

    def test_linear_geometric_series_oracle(self):
        # mean x/(1-x) = 1 at x = 1/2, i.e. beta = ln 2
        sol = solve_beta(LINEAR, 1.0)
        assert abs(sol.beta - math.log(2)) < 1e-8

    def test_infeasible_energy(self):
        with pytest.raises(ValueError, match="infeasible"):
            solve_beta(QUBIT, -0.2)

    def test_clamped_state_is_maximally_mixed_on_truncation(self):
        sol = solve_beta(LINEAR, 1e9, dim=128)
        assert sol.beta == 0.0
        assert np.allclose(sol.weights, np.full(128, 1 / 128))


class TestMaxEntropy:
    def test_qubit_saturates(self):
        assert abs(max_entropy(QUBIT, 0.7) - math.log(2)) < 1e-12

    def test_linear_unit_energy(self):
        # Gibbs weights 2^-i; entropy oracle sum 2^-i * i * ln 2 = 2 ln 2
        oracle = sum(2.0**-i * i * math.log(2) for i in range(1, 200))
        assert abs(oracle - 2 * math.log(2)) < 1e-12
        assert abs(max_entropy(LINEAR, 1.0) - oracle) < 1e-8

    def test_ground_energy_zero_entropy(self):
        assert abs(max_entropy(QUBIT, 0.0)) < 1e-12

    @pytest.mark.parametrize(
        "ham,dim",
        [(QUBIT, None), (LINEAR, 256), (HamiltonianSpec.logpow(4, 2), 256)],
    )
    def test_monotone_and_concave_on_grid(self, ham, dim):
        ground = ham.ground()
        grid = np.linspace(ground + 0.05, ground + 3.0, 12)
        vals = [max_entropy(ham, float(e), dim) for e in grid]
        diffs = np.diff(vals)
        assert (diffs >= -1e-8).all()
        assert (np.diff(diffs) <= 1e-8).all()


class TestMaxEntropyMulti:
    def test_single_reduces(self):
        assert abs(max_entropy_multi([LINEAR], 1.0) - max_entropy(LINEAR, 1.0)) < 1e-10

    def test_two_qubits_split_evenly(self):
        assert abs(max_entropy_multi([QUBIT, QUBIT], 1.0) - 2 * math.log(2)) < 1e-10

    def test_both_ground(self):
        assert abs(max_entropy_multi([QUBIT, QUBIT], 0.0)) < 1e-12

    def test_additivity_with_identical_hamiltonians(self):
        for e in (0.1, 0.3, 0.45):
            lhs = max_entropy_multi([QUBIT, QUBIT, QUBIT], 3 * e)
            assert abs(lhs - 3 * max_entropy(QUBIT, e)) < 1e-8

    def test_infeasible(self):
        with pytest.raises(ValueError, match="infeasible"):
            max_entropy_multi([QUBIT, QUBIT], -0.5)


class TestAsymptoticTrends:
    def test_linear_sublinear_ceiling(self):
        res = check_asymptotic_condition(LINEAR, "o(E)", [1, 10, 100], dim=2048)
        assert res["verdict"] == "decreasing"

    def test_ln_separates_the_two_conditions(self):
        h = HamiltonianSpec.logpow(1, 1)
        res_e = check_asymptotic_condition(h, "o(E)", [1, 2, 4, 6], dim=4096)
        res_s = check_asymptotic_condition(h, "o(sqrtE)", [1, 2, 4, 6], dim=4096)
        assert res_e["verdict"] == "decreasing"
        assert res_s["verdict"] == "increasing"

    def test_4ln2_sqrt_ceiling(self):
        res = check_asymptotic_condition(
            HamiltonianSpec.logpow(4, 2), "o(sqrtE)", [1, 4, 16, 64], dim=4096
        )
        assert res["verdict"] == "decreasing"

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            check_asymptotic_condition(LINEAR, "o(E^2)", [1, 2])
        with pytest.raises(ValueError):
            check_asymptotic_condition(LINEAR, "o(E)", [2, 1])


class TestSquaredHamiltonian:
    def test_projector_hamiltonian_equality(self):
        rows = squared_hamiltonian_check(QUBIT, [0.5, 1.0, 4.0])
        for row in rows:
            assert abs(row["F_squared"] - row["F_at_sqrt"]) < 1e-10

    def test_log_and_linear_families(self):
        rows = squared_hamiltonian_check(HamiltonianSpec.logpow(1, 1), [4.0], dim=2048)
        assert rows[0]["ok"]
        rows = squared_hamiltonian_check(LINEAR, [9.0], dim=1024)
        assert rows[0]["ok"]

    def test_grid_sweep_no_violations(self):
        for ham, dim in ((QUBIT, None), (LINEAR, 512), (HamiltonianSpec.logpow(1, 1), 1024)):
            e0 = ham.ground()
            grid = np.linspace(e0 * e0 + 0.3, e0 * e0 + 6.0, 10)
            rows = squared_hamiltonian_check(ham, grid, dim=dim)
            assert all(r["ok"] for r in rows)


class TestContinuityBound:
    def test_pure_g_term(self):
        p = BoundParams(C=0.0, D=1.0, m=1, E=1.0, hams=(QUBIT,))
        assert abs(fcb_bound(p, 1.0) - 2 * math.log(2)) < 1e-12

    def test_qubit_ceiling_saturation(self):
        p = BoundParams(C=1.0, D=0.0, m=1, E=1.0, hams=(QUBIT,))
        for eps in (0.2, 0.5, 0.9):
            x = eps * (2 - eps)
            assert 2 * p.E / x >= 0.5
            assert abs(fcb_bound(p, eps) - math.sqrt(x) * math.log(2)) < 1e-12

    def test_faithfulness_limit(self):
        p = BoundParams(C=1.0, D=1.0, m=1, E=2.0, hams=(HamiltonianSpec.logpow(4, 2),))
        assert fcb_bound(p, 0.0) == 0.0
        grid = [1.0, 0.5, 0.1, 0.01, 1e-3, 1e-5]
        vals = [fcb_bound(p, e) for e in grid]
        assert all(b <= a + 1e-10 for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.1

    def test_domain_errors(self):
        p = BoundParams(C=1.0, D=1.0, m=1, E=1.0, hams=(QUBIT,))
        with pytest.raises(ValueError):
            fcb_bound(p, -0.1)
        with pytest.raises(ValueError):
            fcb_bound(p, 1.1)

    def test_bound_params_validation(self):
        with pytest.raises(ValueError):
            BoundParams(C=1.0, D=1.0, m=2, E=1.0, hams=(QUBIT,))
        with pytest.raises(ValueError):
            BoundParams(C=-1.0, D=1.0, m=1, E=1.0, hams=(QUBIT,))


class TestSandwichChecks:
    def _samples(self, count=15):
        rng = np.random.default_rng(17)
        out = []
        for i in range(count):
            out.append(
                (
                    random_density((2, 2), 4, seed=400 + i),
                    random_density((2, 2), 4, seed=500 + i),
                    float(rng.uniform(0.15, 0.85)),
                )
            )
        return out

    def test_entropy_on_first_marginal(self):
        f = lambda rho: von_neumann_entropy(rho)
        samples = [
            (random_density((2,), 2, seed=i), random_density((2,), 2, seed=50 + i), 0.4)
            for i in range(10)
        ]
        rep = class_membership_check(f, 0, 1, 0, 1, m=1, samples=samples)
        assert rep.ok

    def test_negated_entropy_mirror(self):
        f = lambda rho: -von_neumann_entropy(rho)
        samples = [
            (random_density((2,), 2, seed=i), random_density((2,), 2, seed=90 + i), 0.6)
            for i in range(10)
        ]
        rep = class_membership_check(f, 1, 0, 1, 0, m=1, samples=samples)
        assert rep.ok

    def test_qmi_with_valid_split(self):
        # the list pins only the sums (C, D) = (2, n); the split (0,2,1,n-1)
        # follows from the chain identity and holds on samples
        rep = class_membership_check(
            mutual_information, 0, 2, 1, 1, m=1, samples=self._samples()
        )
        assert rep.ok

    def test_checker_reports_real_violations(self):
        # mixing the two Bell states halves the mutual information, so a
        # zero lower mixing coefficient must be flagged
        v1 = np.zeros(4)
        v1[0] = v1[3] = 1 / np.sqrt(2)
        v2 = np.zeros(4)
        v2[0], v2[3] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        phip = DensityOp(DimSig((2, 2)), np.outer(v1, v1))
        phim = DensityOp(DimSig((2, 2)), np.outer(v2, v2))
        rep = class_membership_check(
            mutual_information, 0, 2, 0, 2, m=1, samples=[(phip, phim, 0.5)]
        )
        assert len(rep.mixing_violations) == 1
