"""Relative entropy of entanglement across a partition, by conditional-gradient
descent over finite mixtures of product pure states.

The objective sigma -> D(rho || sigma) is convex on the separable set, and
every candidate direction is a product pure state (an atom), found by an
alternating minimal-eigenvector heuristic. Each outer step adds one atom
via exact line search, then a corrective pass re-balances the weights of
the atoms collected so far, which in practice restores fast convergence
on separable inputs. The reported gap is a true suboptimality certificate
only when the atom oracle is exact; it is labeled heuristic everywhere.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass

import numpy as np

from .entropy import binary_entropy, relative_entropy, von_neumann_entropy
from .qmat import (
    DensityOp,
    DimSig,
    hermitian_part,
    partial_trace,
    trace_distance,
)
from .spectra import HamiltonianSpec

LOG_FLOOR = 1e-14
PRUNE_TOL = 1e-10
_LETTERS = string.ascii_letters


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty groups of subsystem indices covering 0..n-1."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        canon = tuple(tuple(sorted(int(s) for s in g)) for g in self.groups)
        if not canon or any(not g for g in canon):
            raise ValueError("partition groups must be nonempty")
        canon = tuple(sorted(canon, key=lambda g: g[0]))
        seen: set[int] = set()
        for g in canon:
            if seen & set(g):
                raise ValueError(f"partition groups overlap: {canon}")
            seen |= set(g)
        if seen != set(range(len(seen))):
            raise ValueError(f"partition {canon} must cover 0..n-1 contiguously")
        object.__setattr__(self, "groups", canon)

    @staticmethod
    def finest(n: int) -> "Partition":
        return Partition(tuple((s,) for s in range(n)))

    @property
    def nsys(self) -> int:
        return sum(len(g) for g in self.groups)


@dataclass(frozen=True)
class SepAtom:
    """One unit vector per partition group; their product is a separable atom."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        fs = tuple(np.asarray(f, dtype=complex) for f in self.factors)
        for f in fs:
            if abs(np.linalg.norm(f) - 1.0) > 1e-10:
                raise ValueError("atom factors must be unit vectors")
        object.__setattr__(self, "factors", fs)


def atom_vector(atom: SepAtom, sig: DimSig, partition: Partition) -> np.ndarray:
    """Full-space vector of a product atom, respecting subsystem ordering."""
    dims = sig.dims
    subs, ops = [], []
    for g, f in zip(partition.groups, atom.factors):
        ops.append(f.reshape([dims[s] for s in g]))
        subs.append("".join(_LETTERS[s] for s in g))
    out = "".join(_LETTERS[s] for s in range(len(dims)))
    return np.einsum(",".join(subs) + "->" + out, *ops).reshape(-1)


@dataclass(frozen=True)
class LmoResult:
    atom: SepAtom
    vector: np.ndarray
    value: float
    spread: float


def _group_views(g_mat: np.ndarray, dims: tuple[int, ...], groups) -> list:
    """Per-group reshapes of G with the group axes leading: (dg, drest, dg, drest)."""
    n = len(dims)
    gt = g_mat.reshape(dims + dims)
    views = []
    for g in groups:
        others = [s for s in range(n) if s not in g]
        perm = list(g) + others
        permuted = np.transpose(gt, perm + [n + s for s in perm])
        dg = int(np.prod([dims[s] for s in g]))
        dr = int(np.prod([dims[s] for s in others])) if others else 1
        views.append((np.ascontiguousarray(permuted).reshape(dg, dr, dg, dr), others))
    return views


def _others_batch(partition: Partition, factors, dims, others: list[int], skip: int) -> np.ndarray:
    """Stacked product vectors over all groups except `skip`, shape (R, d_rest)."""
    n_restarts = factors[0].shape[0]
    if not others:
        return np.ones((n_restarts, 1), dtype=complex)
    pos = {s: i for i, s in enumerate(others)}
    subs, ops = [], []
    for j, (g, f) in enumerate(zip(partition.groups, factors)):
        if j == skip:
            continue
        ops.append(f.reshape([n_restarts] + [dims[s] for s in g]))
        subs.append("Z" + "".join(_LETTERS[pos[s]] for s in g))
    out = "Z" + "".join(_LETTERS[i] for i in range(len(others)))
    return np.einsum(",".join(subs) + "->" + out, *ops).reshape(n_restarts, -1)


def product_lmo(
    g_mat: np.ndarray,
    sig: DimSig,
    partition: Partition,
    restarts: int = 8,
    max_sweeps: int = 50,
    rng: np.random.Generator | int | None = 0,
) -> LmoResult:
    """Approximate minimizer of <psi|G|psi> over product unit vectors.

    Alternating updates: with all factors but one fixed, the optimal
    remaining factor is the minimal eigenvector of the contracted
    operator. All restarts sweep in lockstep (batched eigensolves); the
    best attained value wins, ties keeping the earliest restart. The
    restart spread (max - min attained value) is a quality diagnostic for
    this NP-hard subproblem.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    dims = sig.dims
    groups = partition.groups
    views = _group_views(g_mat, dims, groups)
    gdims = [int(np.prod([dims[s] for s in g])) for g in groups]
    n_r = max(1, restarts)
    factors = []
    for dg in gdims:
        v = rng.standard_normal((n_r, dg)) + 1j * rng.standard_normal((n_r, dg))
        factors.append(v / np.linalg.norm(v, axis=1, keepdims=True))
    vals = np.full(n_r, math.inf)
    for _ in range(max_sweeps):
        prev = vals.copy()
        for j in range(len(groups)):
            view, others = views[j]
            if len(groups) == 2:
                o = factors[1 - j]
            else:
                o = _others_batch(partition, factors, dims, others, skip=j)
            dg, dr = view.shape[0], view.shape[1]
            t = np.tensordot(o.conj(), view, axes=([1], [1]))  # (Z, dg, dg, dr)
            eff = np.matmul(t.reshape(n_r, dg * dg, dr), o[:, :, None]).reshape(n_r, dg, dg)
            eff = (eff + eff.conj().transpose(0, 2, 1)) / 2
            w, v = np.linalg.eigh(eff)
            factors[j] = np.ascontiguousarray(v[:, :, 0])
            vals = w[:, 0]
        if np.abs(prev - vals).max() <= 1e-13 * max(1.0, float(np.abs(vals).max())):
            break
    best = int(np.argmin(vals))
    atom = SepAtom(tuple(f[best] for f in factors))
    vec = atom_vector(atom, sig, partition)
    value = float(np.real(vec.conj() @ g_mat @ vec))
    return LmoResult(
        atom=atom, vector=vec, value=value, spread=float(vals.max() - vals.min())
    )


# ---------------------------------------------------------------------------
# The conditional-gradient engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverOpts:
    max_iters: int = 300
    tol: float = 1e-7
    restarts: int = 8
    sweeps: int = 50
    seed: int = 0
    polish_iters: int = 60
    prune_tol: float = PRUNE_TOL
    line_iters: int = 48
    stall_window: int = 20
    stall_tol: float = 1e-11


@dataclass(frozen=True)
class EnergyConstraint:
    """Sum-of-local-terms Hamiltonian (diagonal per subsystem) and a mean-energy cap."""

    hams: tuple
    E: float

    def diagonal(self, sig: DimSig) -> np.ndarray:
        if len(self.hams) != sig.nsys:
            raise ValueError(f"need one local Hamiltonian per subsystem ({sig.nsys})")
        total = np.zeros(sig.total)
        for s, h in enumerate(self.hams):
            vals = h.values(sig.dims[s]) if isinstance(h, HamiltonianSpec) else np.asarray(h, float)
            if vals.size != sig.dims[s]:
                raise ValueError(f"local Hamiltonian {s} has {vals.size} levels, need {sig.dims[s]}")
            before = int(np.prod(sig.dims[:s])) if s else 1
            after = int(np.prod(sig.dims[s + 1 :])) if s + 1 < sig.nsys else 1
            total += np.kron(np.kron(np.ones(before), vals), np.ones(after))
        return total

    def ground_energy(self, sig: DimSig) -> float:
        return float(self.diagonal(sig).min())


@dataclass(frozen=True)
class ERSolution:
    """Upper estimate of the entanglement relative entropy with its decomposition.

    `gap` is the last conditional-gradient gap; with a heuristic atom
    oracle it is a diagnostic, not a proven suboptimality bound.
    """

    value: float
    gap: float
    sigma: DensityOp
    atoms: list
    iterations: int
    converged: bool
    lmo_spread: float = 0.0

    def weights(self) -> np.ndarray:
        return np.asarray([w for w, _ in self.atoms])


def _objective(rho_mat: np.ndarray, sigma_mat: np.ndarray, tr_rho_ln_rho: float) -> float:
    ws, vs = np.linalg.eigh(hermitian_part(sigma_mat))
    ws = np.clip(ws, LOG_FLOOR, None)
    weights = np.real((vs.conj() * (rho_mat @ vs)).sum(axis=0))
    return tr_rho_ln_rho - float((weights * np.log(ws)).sum())


def _obj_and_grad(rho_mat: np.ndarray, sigma_mat: np.ndarray, tr_rho_ln_rho: float):
    """Objective and its divided-difference gradient from one eigendecomposition.

    The derivative of sigma -> -Tr rho ln sigma in sigma's eigenbasis has
    entries -rho_ij phi(mu_i, mu_j) with phi the logarithm's difference
    quotient (1/mu on the diagonal)."""
    ws, vs = np.linalg.eigh(hermitian_part(sigma_mat))
    ws = np.clip(ws, LOG_FLOOR, None)
    rt = vs.conj().T @ rho_mat @ vs
    obj = tr_rho_ln_rho - float((np.real(np.diag(rt)) * np.log(ws)).sum())
    lw = np.log(ws)
    den = ws[:, None] - ws[None, :]
    near = np.abs(den) <= 1e-12 * np.maximum(ws[:, None], ws[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(
            near, 2.0 / (ws[:, None] + ws[None, :]), (lw[:, None] - lw[None, :]) / np.where(near, 1.0, den)
        )
    g = vs @ (-rt * phi) @ vs.conj().T
    return obj, hermitian_part(g)


def _gradient(rho_mat: np.ndarray, sigma_mat: np.ndarray) -> np.ndarray:
    wr = np.linalg.eigvalsh(rho_mat)
    wr = wr[wr > 0]
    t = float((wr * np.log(wr)).sum()) if wr.size else 0.0
    return _obj_and_grad(rho_mat, sigma_mat, t)[1]


def _quad_forms(arr: np.ndarray, g_mat: np.ndarray) -> np.ndarray:
    """<psi_k|G|psi_k> for the stacked rows of arr."""
    x = arr.conj() @ g_mat
    return np.real((x * arr).sum(axis=1))


def _golden(h, lo: float, hi: float, iters: int = 48) -> float:
    """Golden-section minimizer of a convex scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = h(c), h(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = h(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = h(d)
    return 0.5 * (a + b)


class _AtomSet:
    """Weights, vectors and factor tuples of the current separable mixture."""

    def __init__(self, dim: int):
        self.dim = dim
        self.weights: list[float] = []
        self.vectors: list[np.ndarray] = []
        self.atoms: list[SepAtom] = []

    def add(self, weight: float, vector: np.ndarray, atom: SepAtom) -> None:
        self.weights.append(float(weight))
        self.vectors.append(vector)
        self.atoms.append(atom)

    def scale(self, factor: float) -> None:
        self.weights = [w * factor for w in self.weights]

    def sigma(self) -> np.ndarray:
        if not self.weights:
            return np.zeros((self.dim, self.dim), dtype=complex)
        arr = np.stack(self.vectors)
        w = np.asarray(self.weights)
        return hermitian_part((arr.T * w) @ arr.conj())

    def prune(self, tol: float) -> None:
        keep = [i for i, w in enumerate(self.weights) if w > tol]
        w = np.asarray([self.weights[i] for i in keep])
        w = w / w.sum()
        self.weights = list(w)
        self.vectors = [self.vectors[i] for i in keep]
        self.atoms = [self.atoms[i] for i in keep]

    def energies(self, h_diag: np.ndarray) -> np.ndarray:
        return np.asarray([float((np.abs(v) ** 2 * h_diag).sum()) for v in self.vectors])


def _basis_atoms(sig: DimSig, partition: Partition):
    """Computational product basis as atoms (they span the maximally mixed state)."""
    dims = sig.dims
    out = []
    for idx in range(sig.total):
        rem, coords = idx, []
        for d in reversed(dims):
            coords.append(rem % d)
            rem //= d
        coords.reverse()
        factors = []
        for g in partition.groups:
            dg = int(np.prod([dims[s] for s in g]))
            pos = 0
            for s in g:
                pos = pos * dims[s] + coords[s]
            f = np.zeros(dg, dtype=complex)
            f[pos] = 1.0
            factors.append(f)
        atom = SepAtom(tuple(factors))
        vec = np.zeros(sig.total, dtype=complex)
        vec[idx] = 1.0
        out.append((atom, vec))
    return out


def relative_entropy_entanglement(
    rho: DensityOp,
    partition: Partition | None = None,
    opts: SolverOpts | None = None,
    initial_atoms: list[tuple[float, SepAtom]] | None = None,
    constraint: EnergyConstraint | None = None,
) -> ERSolution:
    """Minimize D(rho || sigma) over finite product-atom mixtures.

    With `constraint`, every iterate keeps Tr H sigma <= E: candidate
    atoms come from a multiplier sweep on G + mu H and line searches are
    clipped to the feasible segment (feasibility, not per-step optimality,
    is guaranteed). Non-convergence returns the best iterate with
    converged=False rather than raising.
    """
    if partition is None:
        partition = Partition.finest(rho.sig.nsys)
    if partition.nsys != rho.sig.nsys:
        raise ValueError("partition does not match the state's subsystem count")
    opts = opts or SolverOpts()
    rng = np.random.default_rng(opts.seed)
    dim = rho.sig.total
    rho_mat = rho.mat
    wr = np.linalg.eigvalsh(rho_mat)
    wr = wr[wr > 0]
    tr_rho_ln_rho = float((wr * np.log(wr)).sum()) if wr.size else 0.0

    h_diag = None
    e_cap = math.inf
    if constraint is not None:
        h_diag = constraint.diagonal(rho.sig)
        e_cap = float(constraint.E)
        if e_cap < h_diag.min() - 1e-12:
            raise ValueError(
                f"infeasible energy bound {e_cap}: ground product energy is {h_diag.min()}"
            )

    atomset = _AtomSet(dim)
    basis = _basis_atoms(rho.sig, partition)
    mix_w = 1e-8 if initial_atoms else 0.5
    if h_diag is not None:
        # lower the mixed component until the start respects the energy cap
        ground, mean = float(h_diag.min()), float(h_diag.mean())
        if mean > e_cap:
            mix_w = min(mix_w, max(0.0, 0.9 * (e_cap - ground) / (mean - ground)))
    if initial_atoms:
        for w, atom in initial_atoms:
            atomset.add(w, atom_vector(atom, rho.sig, partition), atom)
        atomset.scale((1.0 - mix_w) / sum(atomset.weights))
    else:
        # best single product atom for rho anchors the start
        best = product_lmo(-rho_mat, rho.sig, partition, opts.restarts, opts.sweeps, rng)
        if h_diag is None or float((np.abs(best.vector) ** 2 * h_diag).sum()) <= e_cap:
            atomset.add(1.0 - mix_w, best.vector, best.atom)
        else:
            gatom, gvec = basis[int(np.argmin(h_diag))]
            atomset.add(1.0 - mix_w, gvec, gatom)
    # the uniform mixture keeps full support; express it through basis atoms
    if mix_w > 0:
        for atom, vec in basis:
            atomset.add(mix_w / dim, vec, atom)
    if not atomset.weights:
        gatom, gvec = basis[int(np.argmin(h_diag)) if h_diag is not None else 0]
        atomset.add(1.0, gvec, gatom)

    sigma = atomset.sigma()
    obj = _objective(rho_mat, sigma, tr_rho_ln_rho)
    gap = math.inf
    spread = 0.0
    converged = False
    mu_grid = [0.0] + list(np.logspace(-3, 3, 25)) if constraint is not None else [0.0]
    iterations = 0
    obj_history: list[float] = []
    best_lower = -math.inf

    for iterations in range(1, opts.max_iters + 1):
        obj, g_mat = _obj_and_grad(rho_mat, sigma, tr_rho_ln_rho)
        base_val = float(np.real(np.trace(g_mat @ sigma)))
        # candidate atoms (one per multiplier when constrained)
        candidates = []
        for mu in mu_grid:
            objective_mat = g_mat if mu == 0.0 else g_mat + mu * np.diag(h_diag)
            res = product_lmo(objective_mat, rho.sig, partition, opts.restarts, opts.sweeps, rng)
            candidates.append(res)
            if constraint is None:
                break
        plain = candidates[0]
        gap = base_val - float(np.real(plain.vector.conj() @ g_mat @ plain.vector))
        spread = max(spread, plain.spread)
        best_lower = max(best_lower, obj - gap)
        if gap <= opts.tol:
            converged = True
            break
        e_sigma = float((np.abs(np.diag(sigma)) * h_diag).sum()) if h_diag is not None else 0.0
        best_step = None
        for res in candidates:
            vec = res.vector
            if h_diag is not None:
                e_atom = float((np.abs(vec) ** 2 * h_diag).sum())
                if e_atom <= e_cap + 1e-12:
                    t_max = 1.0
                elif e_atom > e_sigma:
                    t_max = max(0.0, (e_cap - e_sigma) / (e_atom - e_sigma))
                else:
                    t_max = 1.0
            else:
                t_max = 1.0
            if t_max <= 0.0:
                continue
            direction = np.outer(vec, vec.conj())

            def h_line(t, direction=direction):
                return _objective(rho_mat, (1.0 - t) * sigma + t * direction, tr_rho_ln_rho)

            t_star = _golden(h_line, 0.0, t_max, iters=opts.line_iters)
            val = h_line(t_star)
            if best_step is None or val < best_step[0]:
                best_step = (val, t_star, res)
        if best_step is None or best_step[0] >= obj - 1e-15:
            t_star = 0.0
            res = plain
        else:
            _, t_star, res = best_step
        if t_star > 0.0:
            atomset.scale(1.0 - t_star)
            duplicate = next(
                (
                    i
                    for i, v in enumerate(atomset.vectors)
                    if abs(np.vdot(v, res.vector)) ** 2 > 1.0 - 1e-12
                ),
                None,
            )
            if duplicate is None:
                atomset.add(t_star, res.vector, res.atom)
            else:
                atomset.weights[duplicate] += t_star
            sigma = atomset.sigma()
        # corrective pass: multiplicative weight rebalancing over the atoms.
        # The update w_a <- w_a <psi_a|(-G)|psi_a> preserves normalization
        # (Tr(-G sigma) = 1) and fixes the inner simplex KKT conditions;
        # it is accepted only while the objective keeps descending.
        arr = np.stack(atomset.vectors)
        warr = np.asarray(atomset.weights)
        cur_obj, g_pol = _obj_and_grad(rho_mat, sigma, tr_rho_ln_rho)
        atom_energies = atomset.energies(h_diag) if h_diag is not None else None
        for _ in range(opts.polish_iters):
            m = np.clip(-_quad_forms(arr, g_pol), 0.0, None)
            pol_gap = float(m.max() - warr @ m)
            if pol_gap <= max(opts.tol * 0.1, 1e-13):
                break
            neww = warr * m
            s = neww.sum()
            if s <= 0:
                break
            neww /= s
            if atom_energies is not None:
                e_new = float(neww @ atom_energies)
                if e_new > e_cap + 1e-12:
                    # project back toward the current feasible weights
                    e_now = float(warr @ atom_energies)
                    lam = (e_cap - e_now) / (e_new - e_now) if e_new > e_now else 0.0
                    neww = warr + max(0.0, lam) * (neww - warr)
            nsigma = hermitian_part((arr.T * neww) @ arr.conj())
            nobj, ng = _obj_and_grad(rho_mat, nsigma, tr_rho_ln_rho)
            if nobj > cur_obj + 1e-14:
                break
            warr, sigma, cur_obj, g_pol = neww, nsigma, nobj, ng
        atomset.weights = list(warr)
        atomset.prune(opts.prune_tol)
        sigma = atomset.sigma()
        obj = _objective(rho_mat, sigma, tr_rho_ln_rho)
        obj_history.append(obj)
        if len(obj_history) > opts.stall_window:
            # the heuristic gap can lag far behind the objective; stop once
            # the value itself has stopped moving
            if obj_history[-opts.stall_window - 1] - obj <= opts.stall_tol:
                converged = gap <= opts.tol
                break

    # refresh the certificate with a fresh linearization, then report the
    # gap against the best lower bound seen anywhere on the trajectory
    # (each iteration's obj - gap lower-bounds the optimum)
    final_obj, g_mat = _obj_and_grad(rho_mat, sigma, tr_rho_ln_rho)
    final = product_lmo(g_mat, rho.sig, partition, opts.restarts, opts.sweeps, rng)
    final_gap = float(np.real(np.trace(g_mat @ sigma))) - final.value
    best_lower = max(best_lower, final_obj - final_gap)
    sigma_op = DensityOp(rho.sig, sigma).clean()
    value = relative_entropy(rho, sigma_op)
    gap = max(0.0, float(value) - best_lower)
    converged = converged or gap <= opts.tol
    return ERSolution(
        value=float(value),
        gap=float(gap),
        sigma=sigma_op,
        atoms=list(zip(atomset.weights, atomset.atoms)),
        iterations=iterations,
        converged=converged,
        lmo_spread=spread,
    )


def energy_constrained_ree(
    rho: DensityOp,
    partition: Partition | None,
    constraint: EnergyConstraint,
    opts: SolverOpts | None = None,
    initial_atoms: list | None = None,
) -> ERSolution:
    """Energy-constrained variant: the feasible set keeps Tr H sigma <= E."""
    return relative_entropy_entanglement(
        rho, partition, opts, initial_atoms=initial_atoms, constraint=constraint
    )


def energy_sweep(
    rho: DensityOp,
    partition: Partition | None,
    hams,
    e_grid,
    opts: SolverOpts | None = None,
) -> list[dict]:
    """Solve the constrained problem along an increasing energy grid.

    Each step warm-starts from the previous solution's atoms (feasible
    again since the cap only loosens), which makes the reported values
    nonincreasing in E up to solver tolerance.
    """
    e_grid = [float(e) for e in e_grid]
    if any(b <= a for a, b in zip(e_grid, e_grid[1:])):
        raise ValueError("energy grid must be strictly increasing")
    rows = []
    warm: list | None = None
    for e in e_grid:
        sol = energy_constrained_ree(
            rho, partition, EnergyConstraint(hams=tuple(hams), E=e), opts, initial_atoms=warm
        )
        rows.append({"E": e, "value": sol.value, "gap": sol.gap, "iters": sol.iterations})
        warm = [(w, a) for w, a in sol.atoms]
    return rows


# ---------------------------------------------------------------------------
# Tensor powers and the regularization estimate
# ---------------------------------------------------------------------------

DIM_LIMIT = 4096


def tensor_power_regrouped(rho: DensityOp, k: int) -> DensityOp:
    """rho^(x k) with each party's k copies joined into one subsystem.

    The copy-major tensor ordering is permuted to party-major with a
    single dense reshape/transpose pass.
    """
    if k < 1:
        raise ValueError("tensor power needs k >= 1")
    dims = rho.sig.dims
    n = len(dims)
    total = rho.sig.total**k
    if total > DIM_LIMIT:
        k_ok = int(math.floor(math.log(DIM_LIMIT) / math.log(rho.sig.total)))
        raise ValueError(
            f"dimension overflow: total {total} exceeds {DIM_LIMIT}; admissible k_max={max(1, k_ok)}"
        )
    mat = rho.mat
    for _ in range(k - 1):
        mat = np.kron(mat, rho.mat)
    if k > 1:
        t = mat.reshape(dims * k + dims * k)
        axes = [c * n + s for s in range(n) for c in range(k)]
        t = np.transpose(t, axes + [k * n + a for a in axes])
        mat = np.ascontiguousarray(t).reshape(total, total)
    return DensityOp(DimSig(tuple(d**k for d in dims)), mat)


def _lift_atoms_to_power(
    atoms: list, sig: DimSig, partition: Partition, k: int, cap: int = 400
) -> list:
    """Products of k copies of first-power atoms, regrouped per party, largest weights first."""
    if k != 2:
        raise ValueError("warm-start lifting is implemented for k = 2")
    dims = sig.dims
    lifted = []
    for wa, a in atoms:
        for wb, b in atoms:
            w = wa * wb
            if w < 1e-12:
                continue
            factors = []
            for g, fa, fb in zip(partition.groups, a.factors, b.factors):
                shape = [dims[s] for s in g]
                ta = fa.reshape(shape)
                tb = fb.reshape(shape)
                prod = np.tensordot(ta, tb, axes=0)  # a-axes then b-axes
                m = len(shape)
                interleave = [i for pair in zip(range(m), range(m, 2 * m)) for i in pair]
                prod = np.transpose(prod, interleave)
                factors.append(prod.reshape(-1))
            lifted.append((w, SepAtom(tuple(factors))))
    lifted.sort(key=lambda t: -t[0])
    lifted = lifted[:cap]
    total = sum(w for w, _ in lifted)
    return [(w / total, a) for w, a in lifted]


def regularized_estimates(
    rho: DensityOp, partition: Partition | None = None, k_max: int = 2, opts: SolverOpts | None = None
) -> list[dict]:
    """Per-copy-count upper estimates of the regularized measure.

    Row k reports E(rho^(x k))/k; the k = 2 solve warm-starts from the
    k = 1 atom decomposition squared, so subadditivity holds by descent.
    """
    if partition is None:
        partition = Partition.finest(rho.sig.nsys)
    if rho.sig.total**k_max > DIM_LIMIT:
        raise ValueError(
            f"dimension overflow at k={k_max}; admissible k_max="
            f"{int(math.floor(math.log(DIM_LIMIT) / math.log(rho.sig.total)))}"
        )
    rows = []
    first: ERSolution | None = None
    for k in range(1, k_max + 1):
        if k == 1:
            sol = relative_entropy_entanglement(rho, partition, opts)
            first = sol
        else:
            rho_k = tensor_power_regrouped(rho, k)
            warm = _lift_atoms_to_power(first.atoms, rho.sig, partition, k)
            sol = relative_entropy_entanglement(rho_k, partition, opts, initial_atoms=warm)
        rows.append(
            {
                "k": k,
                "value": sol.value / k,
                "raw_value": sol.value,
                "gap": sol.gap,
                "iters": sol.iterations,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Projective truncation limit experiment
# ---------------------------------------------------------------------------


def truncation_limit_experiment(
    rho: DensityOp,
    projector_steps: list[dict[int, np.ndarray]],
    m_grid: list[int] | None = None,
    opts: SolverOpts | None = None,
) -> list[dict]:
    """Track E_R of compressed reductions along projector sequences.

    `projector_steps[k]` maps subsystem -> projector at step k; the
    sequences should increase to the identity. For each step and each m
    in `m_grid`, the compressed state is reduced to the first m
    subsystems and solved with the finest partition. Steps whose
    compression annihilates the state are skipped with a note.
    """
    n = rho.sig.nsys
    if m_grid is None:
        m_grid = [n]
    from .qmat import product_operator

    rows = []
    prev: dict[int, float] = {}
    for k, projs in enumerate(projector_steps):
        q = product_operator({s: p for s, p in projs.items()}, rho.sig)
        c = float(np.real(np.trace(q @ rho.mat)))
        if c <= 1e-12:
            rows.append({"k": k, "skipped": True, "note": "truncation annihilates state"})
            continue
        rho_k = DensityOp(rho.sig, hermitian_part(q @ rho.mat @ q / c)).clean()
        for m in m_grid:
            reduced = partial_trace(rho_k, list(range(m))) if m < n else rho_k
            sol = relative_entropy_entanglement(reduced, Partition.finest(m), opts)
            key = m
            rel = None
            if key in prev and max(abs(sol.value), abs(prev[key])) > 0:
                rel = abs(sol.value - prev[key]) / max(abs(sol.value), 1e-12)
            prev[key] = sol.value
            rows.append(
                {
                    "k": k,
                    "m": m,
                    "c_k": c,
                    "value": sol.value,
                    "gap": sol.gap,
                    "rel_change": rel,
                    "skipped": False,
                }
            )
    return rows


# ---------------------------------------------------------------------------
# Inequality verifiers
# ---------------------------------------------------------------------------


def _marginal_entropy_sums(rho: DensityOp) -> float:
    """Smallest sum of n-1 marginal entropies (the tightest upper bound)."""
    n = rho.sig.nsys
    ents = [von_neumann_entropy(partial_trace(rho, [s])) for s in range(n)]
    return float(sum(ents) - max(ents))


def verify_er_inequalities(
    er_ub_samples: list[DensityOp] = (),
    mixing_samples: list[tuple[DensityOp, DensityOp, float]] = (),
    lb1_samples: list[DensityOp] = (),
    lb2_samples: list[DensityOp] = (),
    partition: Partition | None = None,
    opts: SolverOpts | None = None,
    slack: float = 1e-6,
) -> dict:
    """Check the solver against the exact inequalities the measure satisfies.

    Orientation is conservative: upper estimates sit on the small side,
    (value - gap) lower certificates on the large side, so a pass is
    meaningful despite the heuristic oracle. Violations beyond gap+slack
    are reported with margins.
    """
    opts = opts or SolverOpts()
    rows = []
    violations = []

    def solve(state: DensityOp, part: Partition | None = None) -> ERSolution:
        return relative_entropy_entanglement(
            state, part or partition or Partition.finest(state.sig.nsys), opts
        )

    for i, rho in enumerate(er_ub_samples):
        sol = solve(rho)
        bound = _marginal_entropy_sums(rho)
        margin = bound + slack - sol.value
        row = {"check": "marginal-upper", "sample": i, "value": sol.value, "bound": bound, "margin": margin}
        rows.append(row)
        if margin < 0:
            violations.append(row)

    for i, (rho, sig2, p) in enumerate(mixing_samples):
        sol_r, sol_s = solve(rho), solve(sig2)
        mix = DensityOp(rho.sig, p * rho.mat + (1 - p) * sig2.mat)
        sol_m = solve(mix)
        lhs = p * max(0.0, sol_r.value - sol_r.gap) + (1 - p) * max(0.0, sol_s.value - sol_s.gap)
        rhs = sol_m.value + binary_entropy(p)
        margin = rhs + slack - lhs
        row = {"check": "mixing", "sample": i, "lhs": lhs, "rhs": rhs, "margin": margin}
        rows.append(row)
        if margin < 0:
            violations.append(row)

    for i, rho in enumerate(lb1_samples):
        if rho.sig.nsys != 2:
            raise ValueError("conditional-entropy lower bounds need bipartite samples")
        sol = solve(rho)
        from .entropy import conditional_entropy

        for a in (0, 1):
            lower = -conditional_entropy(rho, part=a)
            margin = sol.value + slack - lower
            row = {
                "check": "neg-conditional-lower",
                "sample": i,
                "conditioned_on": 1 - a,
                "lower": lower,
                "value": sol.value,
                "margin": margin,
            }
            rows.append(row)
            if margin < 0:
                violations.append(row)

    for i, rho in enumerate(lb2_samples):
        if rho.sig.nsys != 3:
            raise ValueError("pure-state monogamy checks need tripartite samples")
        purity = float(np.real(np.trace(rho.mat @ rho.mat)))
        if purity < 1.0 - 1e-8:
            raise ValueError("pure-state monogamy checks need pure samples")
        sol_full = solve(rho, Partition.finest(3))
        lhs = max(0.0, sol_full.value - sol_full.gap)
        for i_, j_ in ((0, 1), (1, 2), (2, 0)):
            red = partial_trace(rho, [i_, j_])
            sol_ij = solve(red, Partition.finest(2))
            rhs = sol_ij.value + von_neumann_entropy(red)
            margin = lhs + slack - rhs
            row = {
                "check": "pure-monogamy",
                "sample": i,
                "pair": (i_, j_),
                "lhs_cert": lhs,
                "rhs": rhs,
                "margin": margin,
            }
            rows.append(row)
            if margin < 0:
                violations.append(row)

    return {"rows": rows, "violations": violations, "ok": not violations}


# ---------------------------------------------------------------------------
# Convergence demonstration along a state sequence
# ---------------------------------------------------------------------------


def sequence_convergence_demo(
    states: list[DensityOp],
    rho0: DensityOp,
    partition: Partition | None = None,
    opts: SolverOpts | None = None,
    reg_k: int = 1,
) -> list[dict]:
    """Tabulate distances, mutual information and measure estimates along a sequence.

    A desk-scale illustration that the estimates track the limit state
    whenever the mutual-information column does.
    """
    from .entropy import mutual_information

    if partition is None:
        partition = Partition.finest(rho0.sig.nsys)
    rows = []
    for k, state in enumerate(list(states) + [rho0]):
        label = k if k < len(states) else "limit"
        sol = relative_entropy_entanglement(state, partition, opts)
        row = {
            "k": label,
            "trace_distance": trace_distance(state, rho0),
            "qmi": mutual_information(state),
            "value": sol.value,
            "gap": sol.gap,
        }
        if reg_k > 1:
            reg = regularized_estimates(state, partition, k_max=reg_k, opts=opts)
            row["reg_estimate"] = min(r["value"] for r in reg)
        rows.append(row)
    return rows
