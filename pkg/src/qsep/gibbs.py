"""Gibbs states, maximum-entropy ceilings, and the continuity-bound evaluator.

All solvers work on truncated diagonal level sequences. For symbolic
Hamiltonians the truncation dimension is chosen adaptively so that the
dropped partition-function terms are negligible at the solved inverse
temperature (term criterion 1e-14 of the partial sum, floor 64).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .entropy import binary_entropy, g_entropy, von_neumann_entropy
from .qmat import DensityOp, DimSig, partial_trace
from .spectra import HamiltonianSpec

ENERGY_TOL = 1e-10
DIM_FLOOR = 64
DIM_CAP = 1 << 21
TERM_CRIT = 1e-14


@lru_cache(maxsize=128)
def _spec_levels(h: HamiltonianSpec, dim: int) -> np.ndarray:
    arr = h.values(dim)
    arr.setflags(write=False)
    return arr


def _levels_of(h, dim: int | None) -> np.ndarray:
    """Materialize a level sequence from a HamiltonianSpec, witness, or array."""
    if isinstance(h, HamiltonianSpec):
        d = dim if dim is not None else (h.finite_dim or DIM_FLOOR)
        return _spec_levels(h, d)
    if hasattr(h, "g_values"):
        return np.asarray(h.g_values(dim if dim is not None else DIM_FLOOR), dtype=float)
    arr = np.asarray(h, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("level sequence must be a nonempty 1-D array")
    return arr


def _can_grow(h) -> bool:
    if isinstance(h, HamiltonianSpec):
        return h.finite_dim is None
    return hasattr(h, "g_values")


def _stable_weights(levels: np.ndarray, beta: float) -> np.ndarray:
    w = np.exp(-beta * (levels - levels[0]))
    return w / w.sum()


def _mean_at(levels: np.ndarray, beta: float) -> float:
    return float((_stable_weights(levels, beta) * levels).sum())


def _entropy_of_weights(w: np.ndarray) -> float:
    w = w[w > 0]
    return float(-(w * np.log(w)).sum())


@dataclass(frozen=True)
class GibbsSolution:
    """Result of a mean-energy-constrained entropy maximization on a truncation."""

    beta: float
    levels: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    mean_energy: float
    entropy: float

    @property
    def dim(self) -> int:
        return int(self.levels.size)

    @property
    def state(self) -> DensityOp:
        """Diagonal density operator; materialize only at desk dimensions."""
        if self.dim > 4096:
            raise ValueError(f"refusing to materialize a {self.dim}-dimensional dense state")
        return DensityOp(DimSig((self.dim,)), np.diag(self.weights).astype(complex))


def _solve_on_levels(levels: np.ndarray, e_target: float) -> tuple[float, np.ndarray]:
    """Find beta >= 0 with mean energy e_target; clamp to 0 when unconstrained."""
    ground = float(levels[0])
    if e_target < ground - 1e-12:
        raise ValueError(f"infeasible energy {e_target} below ground level {ground}")
    mean0 = float(levels.mean())
    if e_target >= mean0:
        return 0.0, np.full(levels.size, 1.0 / levels.size)
    if e_target <= ground + 1e-14 * max(1.0, abs(ground)):
        w = np.zeros(levels.size)
        degenerate = np.abs(levels - ground) <= 1e-12 * max(1.0, abs(ground))
        w[degenerate] = 1.0 / degenerate.sum()
        return math.inf, w
    beta_lo, beta_hi = 0.0, 1.0
    while _mean_at(levels, beta_hi) > e_target:
        beta_lo = beta_hi
        beta_hi *= 2.0
        if beta_hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (beta_lo + beta_hi)
        m = _mean_at(levels, mid)
        if abs(m - e_target) <= ENERGY_TOL or beta_hi - beta_lo < 1e-14 * max(1.0, beta_hi):
            beta_lo = beta_hi = mid
            break
        if m > e_target:
            beta_lo = mid
        else:
            beta_hi = mid
    beta = 0.5 * (beta_lo + beta_hi)
    return beta, _stable_weights(levels, beta)


def _adequate_dim(h, e_target: float, dim: int | None) -> np.ndarray:
    """Grow the truncation until the last kept term is negligible at the solution."""
    if dim is not None or not _can_grow(h):
        return _levels_of(h, dim)
    d = DIM_FLOOR
    levels = _levels_of(h, d)
    # cheap phase: make the beta = 0 mean reach the target (or hit the cap)
    while float(levels.mean()) < e_target and d < DIM_CAP:
        d *= 2
        levels = _levels_of(h, d)
    for _ in range(5):
        beta, w = _solve_on_levels(levels, min(e_target, float(levels.mean())))
        if math.isinf(beta) or beta == 0.0 or d >= DIM_CAP:
            return levels
        z_partial = float(np.exp(-beta * (levels - levels[0])).sum())
        if math.exp(-beta * (levels[-1] - levels[0])) < TERM_CRIT * z_partial:
            return levels
        d *= 2
        levels = _levels_of(h, d)
    return levels


def solve_beta(h, E: float, dim: int | None = None) -> GibbsSolution:
    """Gibbs solution with mean energy E on a (possibly adaptive) truncation.

    `h` may be a HamiltonianSpec, a witness with g_values, or a raw level
    array. If E is at or above the truncated-space mean at beta = 0 the
    constraint is inactive and beta clamps to 0.
    """
    levels = _adequate_dim(h, E, dim)
    beta, w = _solve_on_levels(levels, E)
    return GibbsSolution(
        beta=beta,
        levels=levels,
        weights=w,
        mean_energy=float((w * levels).sum()),
        entropy=_entropy_of_weights(w),
    )


def max_entropy(h, E: float, dim: int | None = None) -> float:
    """Largest entropy among truncated states with mean energy at most E."""
    return solve_beta(h, E, dim).entropy


@dataclass(frozen=True)
class MultiGibbsSolution:
    beta: float
    entropies: tuple[float, ...]
    means: tuple[float, ...]

    @property
    def entropy(self) -> float:
        return float(sum(self.entropies))

    @property
    def mean_energy(self) -> float:
        return float(sum(self.means))


def solve_beta_multi(hams: list, E: float, dims: list[int] | None = None) -> MultiGibbsSolution:
    """Common-beta product Gibbs solution with summed mean energy E.

    The entropy maximizer under a joint linear energy constraint is a
    product of Gibbs states sharing one inverse temperature, so a single
    scalar root-find on the summed mean-energy curve suffices.
    """
    if dims is None:
        dims = [None] * len(hams)
    if len(dims) != len(hams):
        raise ValueError("dims must align with hams")
    levels_list = []
    for h, d in zip(hams, dims):
        if d is None and _can_grow(h):
            levels_list.append(_adequate_dim(h, E, None))
        else:
            levels_list.append(_levels_of(h, d))
    grounds = sum(float(lv[0]) for lv in levels_list)
    if E < grounds - 1e-12:
        raise ValueError(f"infeasible energy {E} below summed ground level {grounds}")
    mean0 = sum(float(lv.mean()) for lv in levels_list)

    def total_mean(beta: float) -> float:
        return sum(_mean_at(lv, beta) for lv in levels_list)

    if E >= mean0:
        beta = 0.0
    elif E <= grounds + 1e-14 * max(1.0, abs(grounds)):
        beta = math.inf
    else:
        beta_lo, beta_hi = 0.0, 1.0
        while total_mean(beta_hi) > E:
            beta_lo = beta_hi
            beta_hi *= 2.0
            if beta_hi > 1e12:
                break
        for _ in range(200):
            mid = 0.5 * (beta_lo + beta_hi)
            m = total_mean(mid)
            if abs(m - E) <= ENERGY_TOL or beta_hi - beta_lo < 1e-14 * max(1.0, beta_hi):
                beta_lo = beta_hi = mid
                break
            if m > E:
                beta_lo = mid
            else:
                beta_hi = mid
        beta = 0.5 * (beta_lo + beta_hi)
    ents, means = [], []
    for lv in levels_list:
        if math.isinf(beta):
            w = np.zeros(lv.size)
            degenerate = np.abs(lv - lv[0]) <= 1e-12 * max(1.0, abs(lv[0]))
            w[degenerate] = 1.0 / degenerate.sum()
        else:
            w = _stable_weights(lv, beta)
        ents.append(_entropy_of_weights(w))
        means.append(float((w * lv).sum()))
    return MultiGibbsSolution(beta=beta, entropies=tuple(ents), means=tuple(means))


def max_entropy_multi(hams: list, E: float, dims: list[int] | None = None) -> float:
    """Largest total entropy under a summed mean-energy budget E."""
    return solve_beta_multi(hams, E, dims).entropy


def check_asymptotic_condition(h, which: str, e_grid, dim: int | None = None) -> dict:
    """Report F(E)/E or F(E)/sqrt(E) along a grid with a monotone-trend verdict.

    This is a finite-truncation trend report; it makes no asymptotic claim.
    """
    if which not in ("o(E)", "o(sqrtE)"):
        raise ValueError(f"which must be 'o(E)' or 'o(sqrtE)', got {which!r}")
    e_grid = [float(e) for e in e_grid]
    if any(b <= a for a, b in zip(e_grid, e_grid[1:])):
        raise ValueError("energy grid must be strictly increasing")
    ratios = []
    for e in e_grid:
        f = max_entropy(h, e, dim)
        ratios.append(f / e if which == "o(E)" else f / math.sqrt(e))
    diffs = np.diff(ratios)
    if (diffs <= 1e-12).all():
        verdict = "decreasing"
    elif (diffs >= -1e-12).all():
        verdict = "increasing"
    else:
        verdict = "mixed"
    return {"energies": e_grid, "ratios": ratios, "verdict": verdict}


def squared_hamiltonian_check(h, e_grid, dim: int | None = None) -> list[dict]:
    """Compare the ceilings of H^2 at E with those of H at sqrt(E) per grid point.

    The truncated ceilings satisfy F_{H^2}(E) <= F_H(sqrt(E)) exactly, so
    rows carry the margin for callers to assert.
    """
    levels = _levels_of(h, dim) if dim is not None or not _can_grow(h) else None
    rows = []
    for e in e_grid:
        e = float(e)
        if levels is None:
            lv = _adequate_dim(h, math.sqrt(e), None)
        else:
            lv = levels
        f_sq = solve_beta(lv**2, e).entropy
        f_lin = solve_beta(lv, math.sqrt(e)).entropy
        rows.append(
            {
                "E": e,
                "F_squared": f_sq,
                "F_at_sqrt": f_lin,
                "margin": f_lin - f_sq,
                "ok": f_sq <= f_lin + 1e-8,
            }
        )
    return rows


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the common continuity bound: coefficients, arity, energy, Hamiltonians."""

    C: float
    D: float
    m: int
    E: float
    hams: tuple
    trunc_dim: int | None = None

    def __post_init__(self):
        if self.C < 0 or self.D < 0:
            raise ValueError("bound coefficients must be nonnegative")
        if self.m < 1 or len(self.hams) != self.m:
            raise ValueError(f"need m >= 1 Hamiltonians, got m={self.m}, {len(self.hams)} hams")
        grounds = sum(float(_levels_of(h, 1)[0]) for h in self.hams)
        if self.m * self.E < grounds - 1e-12:
            raise ValueError(
                f"total energy {self.m * self.E} below summed ground energy {grounds}"
            )


def fcb_bound(p: BoundParams, eps: float) -> float:
    """Continuity-bound value C sqrt(e(2-e)) F[2mE/(e(2-e))] + D g(sqrt(e(2-e))).

    Defined as 0 at eps = 0 (the faithfulness limit); errors outside [0, 1].
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    if eps == 0.0:
        return 0.0
    x = eps * (2.0 - eps)
    rx = math.sqrt(x)
    term = 0.0
    if p.C > 0:
        arg = 2.0 * p.m * p.E / x
        dims = None if p.trunc_dim is None else [p.trunc_dim] * p.m
        term = p.C * rx * max_entropy_multi(list(p.hams), arg, dims)
    return term + p.D * g_entropy(rx)


@dataclass(frozen=True)
class SandwichReport:
    """Evidence report for the two function-class sandwich conditions."""

    checked: int
    bound_violations: list
    mixing_violations: list

    @property
    def ok(self) -> bool:
        return not self.bound_violations and not self.mixing_violations


def class_membership_check(
    f,
    c_minus: float,
    c_plus: float,
    d_minus: float,
    d_plus: float,
    m: int,
    samples: list,
    slack: float = 1e-8,
) -> SandwichReport:
    """Check the entropy-sandwich and mixing-sandwich conditions on samples.

    Each sample is a (rho, sigma, p) triple. Sampling is one-sided
    evidence: an empty violation list never claims class membership.
    """
    bound_viol, mixing_viol = [], []
    for idx, (rho, sigma, pr) in enumerate(samples):
        if not 0.0 < pr < 1.0:
            raise ValueError(f"sample {idx}: mixing weight must lie in (0, 1), got {pr}")
        for tag, state in (("rho", rho), ("sigma", sigma)):
            cm = sum(von_neumann_entropy(partial_trace(state, [s])) for s in range(m))
            val = f(state)
            if not (-c_minus * cm - slack <= val <= c_plus * cm + slack):
                bound_viol.append(
                    {"sample": idx, "state": tag, "value": val, "C_m": cm}
                )
        mix = DensityOp(rho.sig, pr * rho.mat + (1.0 - pr) * sigma.mat)
        delta = f(mix) - pr * f(rho) - (1.0 - pr) * f(sigma)
        h2 = binary_entropy(pr)
        if not (-d_minus * h2 - slack <= delta <= d_plus * h2 + slack):
            mixing_viol.append({"sample": idx, "delta": delta, "h2": h2})
    return SandwichReport(
        checked=len(samples), bound_violations=bound_viol, mixing_violations=mixing_viol
    )
