"""Spectral truncation maps, their trace-preserving channel variant, and the
computable inequalities that control how much a state functional can move
under truncation.

The compression keeps, on each selected subsystem, the span of the r
largest marginal eigenvectors. The envelope combines the marginal tail
mass with a continuity bound evaluated on witness Hamiltonians; it is
reported only where the closed-form branch applies (tail parameter in
(0, 1]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import mutual_information
from .gibbs import BoundParams, fcb_bound
from .qmat import (
    DensityOp,
    eigh,
    hermitian_part,
    partial_trace,
    product_operator,
    top_projector,
    trace_norm,
)

ANNIHILATION_TOL = 1e-12


@dataclass(frozen=True)
class TruncationPlan:
    """Per-subsystem rank-r projectors and the product projector they generate."""

    subset: tuple[int, ...]
    r: int
    projectors: dict[int, np.ndarray] = field(repr=False)
    q_full: np.ndarray = field(repr=False)
    c_r: float

    def marginal_tail(self, rho: DensityOp) -> float:
        """Sum over the subset of the marginal weight outside the kept ranks."""
        total = 0.0
        for s in self.subset:
            marg = partial_trace(rho, [s])
            kept = float(np.real(np.trace(self.projectors[s] @ marg.mat)))
            total += max(0.0, 1.0 - kept)
        return total


def make_plan(rho: DensityOp, subset, r: int) -> TruncationPlan:
    """Build the rank-r compression plan from rho's own marginals."""
    subset = tuple(sorted(set(int(s) for s in subset)))
    if not subset:
        raise ValueError("subset must name at least one subsystem")
    dims = rho.sig.dims
    if any(s < 0 or s >= len(dims) for s in subset):
        raise ValueError(f"subset {subset} out of range for {len(dims)} subsystems")
    if r < 1:
        raise ValueError("rank r must be >= 1")
    if r > min(dims[s] for s in subset):
        raise ValueError(f"rank r={r} exceeds a local dimension on subset {subset}")
    projs = {s: top_projector(partial_trace(rho, [s]), r) for s in subset}
    q = product_operator(projs, rho.sig)
    c = float(np.real(np.trace(q @ rho.mat)))
    return TruncationPlan(subset=subset, r=r, projectors=projs, q_full=q, c_r=c)


def apply_plan(rho: DensityOp, plan: TruncationPlan) -> DensityOp:
    if plan.c_r <= ANNIHILATION_TOL:
        raise ValueError("truncation annihilates state: Tr Q rho is numerically zero")
    out = plan.q_full @ rho.mat @ plan.q_full / plan.c_r
    return DensityOp(rho.sig, hermitian_part(out)).clean()


def truncation_map(rho: DensityOp, subset, r: int) -> tuple[DensityOp, TruncationPlan]:
    """Normalized compression onto the top-r marginal subspaces of `subset`."""
    plan = make_plan(rho, subset, r)
    return apply_plan(rho, plan), plan


# ---------------------------------------------------------------------------
# Local channels
#
# A local channel is a function flat -> flat acting on an array of shape
# (d, d, K): the subsystem's bra/ket axes up front, everything else
# flattened behind. Extending a channel over untouched subsystems is then
# just slice-wise application, which the helpers below vectorize.
# ---------------------------------------------------------------------------


def channel_depolarizing(p: float):
    """Mix the subsystem toward maximally mixed with weight p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing weight must lie in [0, 1]")

    def apply_local(flat: np.ndarray) -> np.ndarray:
        d = flat.shape[0]
        tr = np.einsum("aaj->j", flat)
        out = (1.0 - p) * flat
        out += (p / d) * np.eye(d, dtype=complex)[:, :, None] * tr[None, None, :]
        return out

    return apply_local


def channel_dephasing(p: float):
    """Suppress the subsystem's off-diagonal elements with weight p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("dephasing weight must lie in [0, 1]")

    def apply_local(flat: np.ndarray) -> np.ndarray:
        d = flat.shape[0]
        mask = np.eye(d, dtype=float)[:, :, None]
        return (1.0 - p) * flat + p * mask * flat

    return apply_local


def channel_project_or_reroute(p: np.ndarray, tau_vec: np.ndarray):
    """P . P plus rerouting the complementary weight to the pure state tau."""
    p = np.asarray(p, dtype=complex)
    comp = np.eye(p.shape[0], dtype=complex) - p
    tau = np.outer(tau_vec, tau_vec.conj())

    def apply_local(flat: np.ndarray) -> np.ndarray:
        kept = np.einsum("ab,bcj,cd->adj", p, flat, p)
        lost = np.einsum("ab,baj->j", comp, flat)
        return kept + tau[:, :, None] * lost[None, None, :]

    return apply_local


CHANNEL_REGISTRY = {
    "identity": None,
    "depolarizing": channel_depolarizing,
    "dephasing": channel_dephasing,
}


def apply_local_channels(rho: DensityOp, channels: list) -> DensityOp:
    """Apply one local channel per subsystem (None entries mean identity)."""
    dims = rho.sig.dims
    n = len(dims)
    if len(channels) != n:
        raise ValueError(f"need one channel per subsystem ({n}), got {len(channels)}")
    mat = rho.mat
    for s, ch in enumerate(channels):
        if ch is None:
            continue
        d = dims[s]
        t = mat.reshape(dims + dims)
        t = np.moveaxis(t, (s, n + s), (0, 1))
        rest = t.shape[2:]
        flat = np.ascontiguousarray(t).reshape(d, d, -1)
        flat = ch(flat)
        t = flat.reshape((d, d) + rest)
        t = np.moveaxis(t, (0, 1), (s, n + s))
        mat = np.ascontiguousarray(t).reshape(rho.sig.total, rho.sig.total)
    return DensityOp(rho.sig, hermitian_part(mat)).clean()


def make_channel_product(specs: list):
    """Build a state map from per-subsystem specs like ('depolarizing', 0.1)."""

    def build(spec):
        if spec is None or spec == "identity":
            return None
        name, *args = spec if isinstance(spec, (tuple, list)) else (spec,)
        if name == "identity":
            return None
        if name not in CHANNEL_REGISTRY:
            raise ValueError(f"unknown channel {name!r}")
        return CHANNEL_REGISTRY[name](*[float(a) for a in args])

    chans = [build(spec) for spec in specs]

    def apply(rho: DensityOp) -> DensityOp:
        return apply_local_channels(rho, chans)

    return apply


def truncation_channels(rho: DensityOp, subset, r: int) -> DensityOp:
    """Trace-preserving truncation: project each selected subsystem onto its
    top-r marginal subspace and reroute the lost weight to the pure state of
    the largest marginal eigenvalue. Projectors come from rho's own marginals."""
    plan = make_plan(rho, subset, r)
    chans = [None] * rho.sig.nsys
    for s in plan.subset:
        marg = partial_trace(rho, [s])
        tau_vec = eigh(marg.mat).eigenvectors[:, 0]
        chans[s] = channel_project_or_reroute(plan.projectors[s], tau_vec)
    return apply_local_channels(rho, chans)


# ---------------------------------------------------------------------------
# Proof-side inequality checks
# ---------------------------------------------------------------------------


def projection_mass_check(plan: TruncationPlan, rho: DensityOp) -> tuple[float, float]:
    """Both sides of Tr Q rho >= 1 - sum of marginal tails."""
    lhs = plan.c_r
    rhs = 1.0 - plan.marginal_tail(rho)
    return lhs, rhs


def gentle_bound_check(rho: DensityOp, subset, r: int) -> dict:
    """Trace-norm distance to the compression against its two gentle bounds.

    The ordering of the two bounds is checked at the mass level (before
    the square root, which amplifies eigensolver noise near full rank).
    """
    out, plan = truncation_map(rho, subset, r)
    distance = trace_norm(rho.mat - out.mat)
    qbar_mass = max(0.0, 1.0 - plan.c_r)
    tail_mass = max(0.0, plan.marginal_tail(rho))
    bound_q = 2.0 * math.sqrt(qbar_mass)
    bound_marginal = 2.0 * math.sqrt(tail_mass)
    return {
        "distance": distance,
        "qbar_mass": qbar_mass,
        "tail_mass": tail_mass,
        "bound_q": bound_q,
        "bound_marginal": bound_marginal,
        "ok": distance <= bound_q + 1e-8 and qbar_mass <= tail_mass + 1e-8,
    }


def witness_operator(rho: DensityOp, s: int, g_values: np.ndarray) -> np.ndarray:
    """Witness matrix diagonal in the descending eigenbasis of the s-th marginal."""
    marg = partial_trace(rho, [s])
    dec = eigh(marg.mat)
    g = np.asarray(g_values, dtype=float)[: marg.dim]
    return hermitian_part((dec.eigenvectors * g) @ dec.eigenvectors.conj().T)


def energy_growth_check(
    rho: DensityOp, plan: TruncationPlan, witnesses: dict[int, np.ndarray]
) -> tuple[float, float]:
    """Both sides of the witness-energy growth inequality under compression.

    `witnesses` maps subsystem index -> witness operator matrix on that
    subsystem (diagonal in the marginal eigenbasis, as built by
    :func:`witness_operator`).
    """
    out = apply_plan(rho, plan)
    lhs = 0.0
    base = 0.0
    for s, g in witnesses.items():
        g = np.asarray(g, dtype=complex)
        lhs += float(np.real(np.trace(g @ partial_trace(out, [s]).mat)))
        base += float(np.real(np.trace(g @ partial_trace(rho, [s]).mat)))
    return lhs, base / plan.c_r


# ---------------------------------------------------------------------------
# Envelope and experiment harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundTemplate:
    """Coefficients of the continuity bound; energies and witnesses come later."""

    C: float
    D: float
    trunc_dim: int | None = None


def tail_parameter(tails_sum: float) -> float:
    """eps_r = sqrt(summed marginal tail mass)."""
    return math.sqrt(max(0.0, tails_sum))


def _bound_params(template: BoundTemplate, witnesses: list, e_s: float) -> BoundParams:
    m = len(witnesses)
    return BoundParams(
        C=template.C,
        D=template.D,
        m=m,
        E=2.0 * e_s / m,
        hams=tuple(witnesses),
        trunc_dim=template.trunc_dim,
    )


def _envelope_value(params: BoundParams, eps: float) -> float | None:
    if eps == 0.0:
        return 0.0
    if eps <= 1.0:
        return fcb_bound(params, eps)
    return None


def envelope_from_families(marginal_spectra, witnesses, template: BoundTemplate, r_grid) -> list[dict]:
    """Rows (r, eps_r, Y_r) with tails taken from idealized marginal spectra.

    The bound's energy parameter doubles the summed witness energies
    (mE = 2 E_S); Y_r is None outside the closed-form branch eps_r in
    (0, 1] and exactly 0 once the tails vanish.
    """
    witnesses = list(witnesses)
    if not witnesses:
        raise ValueError("need at least one witness")
    energies = [w.energy for w in witnesses]
    if any(not math.isfinite(e) for e in energies):
        raise ValueError("witness energy must be finite")
    params = _bound_params(template, witnesses, float(sum(energies)))
    rows = []
    for r in r_grid:
        r = int(r)
        tails = sum(fam.tail_weight(r) for fam in marginal_spectra)
        eps = tail_parameter(tails)
        rows.append({"r": r, "eps_r": eps, "Y_r": _envelope_value(params, eps)})
    return rows


@dataclass(frozen=True)
class ApproxReport:
    """Per-rank record of a truncation experiment."""

    rows: list

    def worst_envelope_margin(self) -> float:
        vals = [row["Y_r"] - row["diff"] for row in self.rows if row["Y_r"] is not None]
        return min(vals) if vals else math.inf


def truncation_experiment(
    rho: DensityOp,
    f,
    subset,
    r_grid,
    witnesses: list | None = None,
    witness_subsystems: list[int] | None = None,
    template: BoundTemplate | None = None,
) -> ApproxReport:
    """Tabulate f(rho) against f of each rank-r compression, with the envelope.

    eps_r and the witness energies are the actual quantities of `rho`
    (marginal tail masses and Tr G rho_marginal), so each row instantiates
    the envelope inequality exactly. Witness inputs are optional; without
    them only (r, c_r, eps_r, gentle, f values, diff) is reported.
    """
    f_exact = f(rho)
    params = None
    if witnesses is not None:
        if template is None:
            raise ValueError("witnesses need a bound template for the envelope")
        if witness_subsystems is None:
            witness_subsystems = list(range(len(witnesses)))
        g_ops = {
            s: witness_operator(rho, s, np.asarray(w.g_values(rho.sig.dims[s])))
            for s, w in zip(witness_subsystems, witnesses)
        }
        e_s = sum(
            float(np.real(np.trace(g_ops[s] @ partial_trace(rho, [s]).mat)))
            for s in witness_subsystems
        )
        params = _bound_params(template, list(witnesses), e_s)
    rows = []
    for r in r_grid:
        out, plan = truncation_map(rho, subset, int(r))
        eps = tail_parameter(plan.marginal_tail(rho))
        f_trunc = f(out)
        rows.append(
            {
                "r": int(r),
                "c_r": plan.c_r,
                "eps_r": eps,
                "gentle_bound": 2.0 * math.sqrt(max(0.0, 1.0 - plan.c_r)),
                "Y_r": None if params is None else _envelope_value(params, eps),
                "f_exact": f_exact,
                "f_trunc": f_trunc,
                "diff": abs(f_trunc - f_exact),
            }
        )
    return ApproxReport(rows=rows)


def qmi_function(channel_specs: list | None = None, groups=None):
    """Mutual-information functional, optionally composed with local channels."""
    chan = make_channel_product(channel_specs) if channel_specs else None

    def f(rho: DensityOp) -> float:
        out = chan(rho) if chan is not None else rho
        return mutual_information(out, groups)

    return f
