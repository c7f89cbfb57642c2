"""Symbolic spectrum and Hamiltonian families with analytic tail handling.

A :class:`SpectrumFamily` is a normalized nonincreasing eigenvalue
sequence of an idealized infinite-dimensional state, given either as an
explicit list or as a closed form (geometric decay, inverse power-log
laws, or a Gibbs weighting of a Hamiltonian). Closed-form kinds carry
enough structure to classify the convergence of log-weighted sums,
evaluate partition functions with integral tail corrections, and build
approximability witnesses.

Summation convention: partial sums are exact up to a head cutoff and are
completed with a midpoint integral of the closed form, which keeps the
relative tail error around 1/N^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qmat import DensityOp, DimSig

HEAD_N = 50_000
DEFAULT_BETAS = (0.2, 0.1, 0.05, 0.02, 0.01)
TERM_CUT = 1e-12
T_CEIL = 700.0

CONVERGES = "converges"
DIVERGES = "diverges"
INCONCLUSIVE = "inconclusive"


def _simpson(fn, a: float, b: float, npts: int = 2001) -> float:
    """Composite Simpson rule with an odd number of grid points."""
    if b <= a:
        return 0.0
    if npts % 2 == 0:
        npts += 1
    x = np.linspace(a, b, npts)
    y = fn(x)
    h = (b - a) / (npts - 1)
    return float(h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum()))


def _log_exp_integral(exponent_fn, t0: float, t_peak: float) -> float:
    """log of the integral of exp(exponent_fn(t)) over [t0, inf).

    The exponent must be unimodal with maximum near t_peak. Integration
    stops once the exponent has dropped 60 e-folds below its maximum on
    the interval; everything is scaled by that maximum so arbitrarily
    large integrals stay representable through their logarithm.
    """

    def expo(t: float) -> float:
        return float(exponent_fn(np.asarray([t], dtype=float))[0])

    ref = max(expo(t0), expo(max(t0, t_peak)))
    t_hi = max(t0, t_peak) + 1.0
    while expo(t_hi) > ref - 60.0:
        t_hi = t_hi * 1.5 + 1.0
        if t_hi > 1e12:
            break

    def fn(x):
        return np.exp(exponent_fn(x) - ref)

    val = _simpson(fn, t0, t_hi, 4001)
    return math.log(val) + ref if val > 0 else -math.inf


def _exp_integral(exponent_fn, t0: float, t_peak: float) -> float:
    lv = _log_exp_integral(exponent_fn, t0, t_peak)
    return math.exp(lv) if lv < 700.0 else math.inf


# ---------------------------------------------------------------------------
# Hamiltonian families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianSpec:
    """Nondecreasing eigenvalue sequence h_i of a diagonal positive operator.

    Kinds: ``explicit`` (finite list), ``logpow`` with h_i = a ln^p i,
    ``linear`` with h_i = w (i - 1). An additive ``offset`` shifts every
    level.
    """

    kind: str
    a: float = 0.0
    p: float = 0.0
    w: float = 0.0
    offset: float = 0.0
    levels: tuple[float, ...] = ()

    @staticmethod
    def explicit(levels, offset: float = 0.0) -> "HamiltonianSpec":
        lv = tuple(float(x) for x in levels)
        if not lv:
            raise ValueError("explicit Hamiltonian needs at least one level")
        if any(b < a for a, b in zip(lv, lv[1:])):
            raise ValueError("explicit Hamiltonian levels must be nondecreasing")
        if lv[0] + offset < 0:
            raise ValueError("Hamiltonian levels must be nonnegative")
        return HamiltonianSpec(kind="explicit", levels=lv, offset=float(offset))

    @staticmethod
    def logpow(a: float, p: float, offset: float = 0.0) -> "HamiltonianSpec":
        if a <= 0 or p <= 0:
            raise ValueError("logpow Hamiltonian needs a > 0 and p > 0")
        return HamiltonianSpec(kind="logpow", a=float(a), p=float(p), offset=float(offset))

    @staticmethod
    def linear(w: float, offset: float = 0.0) -> "HamiltonianSpec":
        if w <= 0:
            raise ValueError("linear Hamiltonian needs w > 0")
        return HamiltonianSpec(kind="linear", w=float(w), offset=float(offset))

    @property
    def finite_dim(self) -> int | None:
        return len(self.levels) if self.kind == "explicit" else None

    def values(self, dim: int) -> np.ndarray:
        """Levels h(1..dim) as a float array."""
        if self.kind == "explicit":
            if dim > len(self.levels):
                raise ValueError(
                    f"explicit Hamiltonian has {len(self.levels)} levels, requested {dim}"
                )
            return np.asarray(self.levels[:dim], dtype=float) + self.offset
        i = np.arange(1, dim + 1, dtype=float)
        if self.kind == "logpow":
            return self.a * np.log(i) ** self.p + self.offset
        if self.kind == "linear":
            return self.w * (i - 1) + self.offset
        raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")

    def ground(self) -> float:
        return float(self.values(1)[0])

    def log_partition_value(self, beta: float, n_max: int = 2_000_000) -> float:
        """ln Tr e^{-beta H} with integral tail correction; inf when divergent."""
        if beta <= 0:
            raise ValueError("partition function needs beta > 0")
        shift = -beta * self.offset
        if self.kind == "explicit":
            base = np.asarray(self.levels, dtype=float)
            return shift + math.log(float(np.exp(-beta * base).sum()))
        if self.kind == "linear":
            x = math.exp(-beta * self.w)
            return shift - math.log1p(-x)
        a, p = self.a, self.p
        s = a * beta
        if p < 1.0 or (p == 1.0 and s <= 1.0):
            return math.inf
        total = 0.0
        n = 0
        block = 100_000
        while n < n_max:
            hi = min(n + block, n_max)
            i = np.arange(n + 1, hi + 1, dtype=float)
            terms = np.exp(-s * np.log(i) ** p)
            total += float(terms.sum())
            n = hi
            if terms[-1] < TERM_CUT * total:
                break
        t0 = math.log(n + 0.5)
        if p == 1.0:
            log_tail = (1.0 - s) * t0 - math.log(s - 1.0)
        else:
            t_peak = (1.0 / (s * p)) ** (1.0 / (p - 1.0))
            log_tail = _log_exp_integral(lambda t: t - s * t**p, t0, t_peak)
        return shift + float(np.logaddexp(math.log(total), log_tail))

    def partition_value(self, beta: float, n_max: int = 2_000_000) -> float:
        """Tr e^{-beta H}; inf when divergent or beyond float range."""
        lv = self.log_partition_value(beta, n_max)
        return math.exp(lv) if lv < 700.0 else math.inf


# ---------------------------------------------------------------------------
# Spectrum families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumFamily:
    """Normalized nonincreasing spectrum, symbolic or explicit.

    Kinds and raw shapes (before the normalization constant):

    - ``explicit``: a finite list, normalized to unit sum;
    - ``geometric``: q^(i-1);
    - ``powlog``: 1 / (i ln^q i) for i >= i0, constant below i0;
    - ``loglog``: 1 / (i ln^q i (ln ln i)^p) for i >= i0, constant below;
    - ``gibbs``: exp(-beta h_i) for a HamiltonianSpec h.
    """

    kind: str
    q: float = 0.0
    p: float = 0.0
    i0: int = 2
    beta: float = 0.0
    ham: HamiltonianSpec | None = None
    values_list: tuple[float, ...] = ()
    norm: float = field(default=0.0, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- constructors -------------------------------------------------

    @staticmethod
    def geometric(q: float) -> "SpectrumFamily":
        if not 0.0 < q < 1.0:
            raise ValueError(f"geometric ratio must lie in (0, 1), got {q}")
        fam = SpectrumFamily(kind="geometric", q=float(q))
        return fam._with_norm(1.0 - q)

    @staticmethod
    def powlog(q: float, i0: int = 2) -> "SpectrumFamily":
        if q <= 1.0:
            raise ValueError(f"powlog needs q > 1 for a normalizable spectrum, got q={q}")
        if i0 < 2:
            raise ValueError("powlog needs i0 >= 2")
        fam = SpectrumFamily(kind="powlog", q=float(q), i0=int(i0))
        return fam._normalize()

    @staticmethod
    def loglog(q: float, p: float, i0: int = 16) -> "SpectrumFamily":
        if q < 1.0 or (q == 1.0 and p <= 1.0):
            raise ValueError(f"loglog with q={q}, p={p} is not normalizable")
        if i0 < 3:
            raise ValueError("loglog needs i0 >= 3")
        fam = SpectrumFamily(kind="loglog", q=float(q), p=float(p), i0=int(i0))
        return fam._normalize()

    @staticmethod
    def explicit(values) -> "SpectrumFamily":
        vals = np.asarray(list(values), dtype=float)
        if vals.size == 0 or (vals < 0).any():
            raise ValueError("explicit spectrum must be nonempty and nonnegative")
        if (np.diff(vals) > 1e-12).any():
            raise ValueError("explicit spectrum must be nonincreasing")
        s = vals.sum()
        if s <= 0:
            raise ValueError("explicit spectrum must have positive mass")
        fam = SpectrumFamily(kind="explicit", values_list=tuple(vals / s))
        return fam._with_norm(1.0)

    @staticmethod
    def gibbs_of(ham: HamiltonianSpec, beta: float) -> "SpectrumFamily":
        if beta <= 0:
            raise ValueError("gibbs spectrum needs beta > 0")
        z = ham.partition_value(beta)
        if math.isinf(z):
            raise ValueError("partition function diverges; no Gibbs spectrum at this beta")
        fam = SpectrumFamily(kind="gibbs", beta=float(beta), ham=ham)
        return fam._with_norm(1.0 / z)

    # -- normalization ------------------------------------------------

    def _with_norm(self, c: float) -> "SpectrumFamily":
        object.__setattr__(self, "norm", float(c))
        return self

    def _normalize(self) -> "SpectrumFamily":
        raw = self._raw_partial(HEAD_N) + self._raw_tail_integral(HEAD_N)
        return self._with_norm(1.0 / raw)

    # -- raw (unnormalized) machinery ----------------------------------

    def _raw_terms(self, lo: int, hi: int) -> np.ndarray:
        """Raw terms for indices lo..hi inclusive."""
        i = np.arange(lo, hi + 1, dtype=float)
        if self.kind == "geometric":
            return self.q ** (i - 1.0)
        if self.kind == "explicit":
            out = np.zeros_like(i)
            mask = i <= len(self.values_list)
            out[mask] = np.asarray(self.values_list)[i[mask].astype(int) - 1]
            return out
        if self.kind == "gibbs":
            dim = self.ham.finite_dim
            if dim is not None:
                out = np.zeros_like(i)
                mask = i <= dim
                if mask.any():
                    idx = i[mask].astype(int)
                    v = self.ham.values(dim)
                    out[mask] = np.exp(-self.beta * v[idx - 1])
                return out
            if self.ham.kind == "logpow":
                h = self.ham.a * np.log(i) ** self.ham.p + self.ham.offset
            else:
                h = self.ham.w * (i - 1.0) + self.ham.offset
            return np.exp(-self.beta * h)
        j = np.maximum(i, float(self.i0))
        if self.kind == "powlog":
            return 1.0 / (j * np.log(j) ** self.q)
        if self.kind == "loglog":
            lj = np.log(j)
            return 1.0 / (j * lj**self.q * np.log(lj) ** self.p)
        raise ValueError(f"unknown spectrum kind {self.kind!r}")

    def _cum(self, k: float) -> np.ndarray:
        """Cached cumulative sums of raw_term(i) ln^k i over the head range."""
        key = ("cum", float(k))
        if key not in self._cache:
            i = np.arange(1, HEAD_N + 1, dtype=float)
            w = np.log(i) ** k if k else np.ones_like(i)
            self._cache[key] = np.cumsum(self._raw_terms(1, HEAD_N) * w)
        return self._cache[key]

    def _raw_partial(self, n: int, k: float = 0.0) -> float:
        if n <= 0:
            return 0.0
        if self.kind == "geometric" and k == 0.0:
            return (1.0 - self.q**n) / (1.0 - self.q)
        if self.kind == "explicit":
            vals = np.asarray(self.values_list)
            m = min(n, vals.size)
            w = np.log(np.arange(1, m + 1, dtype=float)) ** k if k else 1.0
            return float((vals[:m] * w).sum())
        if n <= HEAD_N:
            return float(self._cum(k)[n - 1])
        total = float(self._cum(k)[-1])
        lo = HEAD_N + 1
        while lo <= n:
            hi = min(lo + 200_000 - 1, n)
            i = np.arange(lo, hi + 1, dtype=float)
            w = np.log(i) ** k if k else 1.0
            total += float((self._raw_terms(lo, hi) * w).sum())
            lo = hi + 1
        return total

    def _scalar_tail_sum(self, n, k: float, ratio_hint: float) -> float:
        """Direct summation for geometrically decaying tails."""
        total = 0.0
        i = n + 1
        steps = 0
        while True:
            t = ratio_hint ** (float(i) - 1.0)
            if t > 0 and k:
                t *= math.log(i) ** k
            total += t
            steps += 1
            if t <= 1e-18 * max(total, 1e-300) or steps > 400_000:
                return total
            i += 1

    def _raw_tail_integral(self, n, k: float = 0.0) -> float:
        """Sum of raw_term(i) ln^k i over i > n via midpoint integral (inf if divergent)."""
        x0 = float(n) + 0.5
        t0 = math.log(x0)
        if self.kind == "explicit" or (self.kind == "gibbs" and self.ham.finite_dim is not None):
            return 0.0
        if self.kind == "geometric":
            return self._scalar_tail_sum(n, k, self.q)
        if self.kind == "gibbs":
            if self.ham.kind == "linear":
                return self._scalar_tail_sum(n, k, math.exp(-self.beta * self.ham.w)) * math.exp(
                    -self.beta * self.ham.offset
                )
            a, p = self.ham.a, self.ham.p
            sb = self.beta * a
            scale = math.exp(-self.beta * self.ham.offset)
            if p < 1.0 or (p == 1.0 and sb <= 1.0):
                return math.inf
            if p == 1.0:

                def expo(t):
                    return (1.0 - sb) * t + (k * np.log(t) if k else 0.0)

                return scale * _exp_integral(expo, t0, t0)

            def expo(t):
                return t - sb * t**p + (k * np.log(t) if k else 0.0)

            t_peak = (1.0 / (sb * p)) ** (1.0 / (p - 1.0))
            return scale * _exp_integral(expo, t0, t_peak)
        # powlog / loglog: integral of u^{k-q} (ln u)^{-p} du over (t0, inf)
        q = self.q
        p = self.p if self.kind == "loglog" else 0.0
        s = q - k
        if s > 1.0:
            if p == 0.0:
                return t0 ** (1.0 - s) / (s - 1.0)
            # substitution u = t0 / v maps the range onto v in (0, 1]
            def fn(v):
                v = np.clip(v, 1e-14, 1.0)
                u = t0 / v
                return t0 * u ** (-s) / (v * v) / np.log(u) ** p

            return _simpson(fn, 0.0, 1.0, 8001)
        if s == 1.0 and p > 1.0:
            return math.log(t0) ** (1.0 - p) / (p - 1.0)
        return math.inf

    # -- public accessors ---------------------------------------------

    def lam(self, i) -> np.ndarray:
        """Eigenvalue accessor, vectorized over integer indices >= 1."""
        i = np.atleast_1d(np.asarray(i, dtype=float))
        if (i < 1).any():
            raise ValueError("spectrum indices start at 1")
        lo, hi = int(i.min()), int(i.max())
        terms = self._raw_terms(lo, hi)
        return self.norm * terms[(i - lo).astype(int)]

    def partial_weight(self, n: int) -> float:
        """Sum of the first n eigenvalues."""
        return self.norm * self._raw_partial(n)

    def tail_weight(self, n: int) -> float:
        """Weight beyond index n (the truncation weight), closed form where possible."""
        if self.kind == "geometric":
            return self.q**n
        if self.kind == "explicit":
            return max(0.0, 1.0 - self.partial_weight(n))
        if n <= HEAD_N:
            head = self._raw_partial(HEAD_N) - self._raw_partial(n)
            return self.norm * (head + self._raw_tail_integral(HEAD_N))
        return self.norm * self._raw_tail_integral(n)

    def weighted_partial(self, k: float, n: int) -> float:
        """Sum_{i<=n} lambda_i ln^k i."""
        return self.norm * self._raw_partial(int(n), float(k))

    def weighted_tail_from(self, k: float, n) -> float:
        """Sum_{i>n} lambda_i ln^k i via the analytic tail (inf if divergent)."""
        k = float(k)
        if n < HEAD_N and self.kind in ("powlog", "loglog"):
            head = self._raw_partial(HEAD_N, k) - self._raw_partial(int(n), k)
            return self.norm * (head + self._raw_tail_integral(HEAD_N, k))
        return self.norm * self._raw_tail_integral(n, k)

    def classify_weighted(self, k: float) -> str:
        """Convergence verdict for sum lambda_i ln^k i by integral comparison."""
        if self.kind == "explicit":
            return INCONCLUSIVE
        if self.kind == "geometric":
            return CONVERGES
        if self.kind == "gibbs":
            if self.ham.finite_dim is not None:
                return INCONCLUSIVE
            if self.ham.kind == "linear":
                return CONVERGES
            a, p = self.ham.a, self.ham.p
            if p > 1.0:
                return CONVERGES
            if p == 1.0:
                return CONVERGES if a * self.beta > 1.0 + 1e-12 else DIVERGES
            return DIVERGES
        s = self.q - k
        p = self.p if self.kind == "loglog" else 0.0
        if s > 1.0:
            return CONVERGES
        if s == 1.0:
            return CONVERGES if p > 1.0 else DIVERGES
        return DIVERGES


# ---------------------------------------------------------------------------
# Family literal parsing ("geometric:0.5", "powlog:q=4,i0=2", ...)
# ---------------------------------------------------------------------------


def parse_family(text: str) -> SpectrumFamily | HamiltonianSpec:
    """Parse the CLI literal syntax for spectrum and Hamiltonian families."""
    text = text.strip()
    if ":" not in text:
        raise ValueError(f"bad family literal {text!r}: expected 'kind:params'")
    kind, rest = text.split(":", 1)
    kind = kind.strip().lower()
    if kind == "geometric":
        return SpectrumFamily.geometric(float(rest))
    if kind == "explicit":
        body = rest.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"explicit family needs a bracketed list, got {rest!r}")
        vals = [float(x) for x in body[1:-1].split(",") if x.strip()]
        return SpectrumFamily.explicit(vals)
    kv: dict[str, float] = {}
    for part in rest.split(","):
        if not part.strip():
            continue
        key, _, val = part.partition("=")
        if not val:
            raise ValueError(f"bad parameter {part!r} in family literal {text!r}")
        kv[key.strip()] = float(val)
    if kind == "powlog":
        return SpectrumFamily.powlog(kv["q"], int(kv.get("i0", 2)))
    if kind == "loglog":
        return SpectrumFamily.loglog(kv["q"], kv["p"], int(kv.get("i0", 16)))
    if kind == "hamlogp":
        return HamiltonianSpec.logpow(kv["a"], kv["p"], kv.get("offset", 0.0))
    if kind == "hamlinear":
        return HamiltonianSpec.linear(kv["w"], kv.get("offset", 0.0))
    raise ValueError(f"unknown family kind {kind!r}")


# ---------------------------------------------------------------------------
# Convergence checkers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    verdict: str
    partial: float
    probe_q: float | None = None
    probe_verdict: str | None = None
    probe_partial: float | None = None


def check_entropy_criterion(s: SpectrumFamily, n_max: int = 100_000) -> CheckResult:
    """Classify sum lambda_i ln i (finite-entropy criterion) and report a partial sum."""
    return CheckResult(verdict=s.classify_weighted(1.0), partial=s.weighted_partial(1.0, n_max))


def check_fa_sufficient(
    s: SpectrumFamily, n_max: int = 100_000, probe_q: float | None = None
) -> CheckResult:
    """Classify sum lambda_i ln^2 i, optionally probing ln^q for a caller q > 2.

    The ln^2 verdict is the sufficient approximability condition; the
    probe reproduces the older power-law test that it strengthens.
    """
    verdict = s.classify_weighted(2.0)
    partial = s.weighted_partial(2.0, n_max)
    if probe_q is None:
        return CheckResult(verdict=verdict, partial=partial)
    if probe_q <= 2.0:
        raise ValueError(f"probe exponent must exceed 2, got {probe_q}")
    return CheckResult(
        verdict=verdict,
        partial=partial,
        probe_q=probe_q,
        probe_verdict=s.classify_weighted(probe_q),
        probe_partial=s.weighted_partial(probe_q, n_max),
    )


# ---------------------------------------------------------------------------
# Zeta limit evaluator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZetaResult:
    betas: tuple[float, ...]
    values: tuple[float, ...]
    extrapolated: float


def _extrapolate(betas: np.ndarray, values: np.ndarray) -> float:
    """Fit value = L + a b + c b ln b on the three smallest betas; return L."""
    b = betas[-3:]
    v = values[-3:]
    a_mat = np.vstack([np.ones_like(b), b, b * np.log(b)]).T
    sol = np.linalg.solve(a_mat, v)
    return float(sol[0])


def zeta_limit(h, betas=None, n_max: int = 2_000_000) -> ZetaResult:
    """Evaluate [Tr e^{-beta H}]^beta along a beta grid and extrapolate to 0+.

    Accepts a HamiltonianSpec or any object exposing partition_value
    (witnesses qualify). Divergent partition sums yield inf values and an
    inf extrapolation; that is a recorded outcome, not an error.
    """
    if betas is None:
        betas = DEFAULT_BETAS
    betas = tuple(float(b) for b in betas)
    if len(betas) < 3:
        raise ValueError("need at least three betas for extrapolation")
    if any(b <= 0 for b in betas) or any(b2 >= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("betas must be positive and strictly decreasing")
    values = []
    for b in betas:
        lz = h.log_partition_value(b, n_max)
        values.append(math.inf if math.isinf(lz) else math.exp(b * lz))
    if any(math.isinf(v) for v in values):
        return ZetaResult(betas, tuple(values), math.inf)
    ex = _extrapolate(np.asarray(betas), np.asarray(values))
    return ZetaResult(betas, tuple(values), ex)


# ---------------------------------------------------------------------------
# Witness construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FAWitness:
    """Weight sequence g_i = c_i ln^2 i with c_i stepping up on tail-halving blocks.

    g_1 = 0, the mean of g under the source spectrum is finite, and the
    partition values [sum_i e^{-beta g_i}]^beta extrapolate toward 1.
    Block boundaries are stored as ln(index) so they may exceed any
    representable index.
    """

    family: SpectrumFamily
    block_bounds_t: tuple[float, ...]
    energy: float

    def c_of(self, i) -> np.ndarray:
        t = np.log(np.atleast_1d(np.asarray(i, dtype=float)))
        return 1.0 + np.searchsorted(np.asarray(self.block_bounds_t), t, side="right")

    def g(self, i) -> np.ndarray:
        """Witness values, vectorized over indices >= 1."""
        i = np.atleast_1d(np.asarray(i, dtype=float))
        if (i < 1).any():
            raise ValueError("witness indices start at 1")
        return self.c_of(i) * np.log(i) ** 2

    def g_values(self, dim: int) -> np.ndarray:
        return self.g(np.arange(1, dim + 1))

    def log_partition_value(self, beta: float, n_max: int = 2_000_000) -> float:
        """ln sum_i e^{-beta g_i}: exact head plus per-block Gaussian integrals in ln-space."""
        if beta <= 0:
            raise ValueError("partition value needs beta > 0")
        head_n = min(20_000, n_max)
        log_total = math.log(float(np.exp(-beta * self.g(np.arange(1, head_n + 1))).sum()))
        t_lo = math.log(head_n + 0.5)
        bounds = list(self.block_bounds_t) + [math.inf]
        prev = 0.0
        for k, tb in enumerate(bounds, start=1):
            ta, prev = max(prev, t_lo), tb
            if tb <= t_lo:
                continue
            c = float(k)
            mu = 1.0 / (2.0 * beta * c)
            sigma = 1.0 / math.sqrt(2.0 * beta * c)
            hi = min(tb, mu + 12.0 * sigma)
            if hi <= ta:
                continue  # block lies beyond the Gaussian bump
            ref = max(ta - beta * c * ta * ta, (mu - beta * c * mu * mu) if ta <= mu <= hi else hi - beta * c * hi * hi)

            def fn(t, c=c, ref=ref):
                return np.exp(t - beta * c * t * t - ref)

            seg = _simpson(fn, ta, hi, 4001)
            if seg > 0:
                log_total = float(np.logaddexp(log_total, math.log(seg) + ref))
        return log_total

    def partition_value(self, beta: float, n_max: int = 2_000_000) -> float:
        """Sum_i e^{-beta g_i}; inf when beyond float range."""
        lv = self.log_partition_value(beta, n_max)
        return math.exp(lv) if lv < 700.0 else math.inf


def build_fa_witness(
    s: SpectrumFamily, n_max: int = 100_000, halving: float | None = None
) -> FAWitness:
    """Adaptive witness for a spectrum passing the ln^2 sufficiency check.

    Block k ends where the remaining tail of sum lambda_i ln^2 i has
    shrunk by the halving factor k times; c_i = k on block k, so the
    witness mean telescopes to a finite value. The factor defaults to 2
    but drops automatically for families whose tail-halving indices grow
    doubly exponentially, where unit-step c_i would grow too slowly for
    the partition values to approach 1 at any feasible inverse
    temperature. Raises when the sufficient condition is not established
    for the family.
    """
    if check_fa_sufficient(s, n_max=min(n_max, HEAD_N)).verdict != CONVERGES:
        raise ValueError("no witness: the ln^2-weighted sum is not known to converge")

    head_tail = s.weighted_tail_from(2.0, HEAD_N)
    cum2_full = s.weighted_partial(2.0, HEAD_N)

    def tail_ln2(t: float) -> float:
        n = math.floor(math.exp(min(t, T_CEIL)))
        if n < 1:
            n = 0
        if n <= HEAD_N:
            return cum2_full - (s.weighted_partial(2.0, n) if n else 0.0) + head_tail
        return s.weighted_tail_from(2.0, n)

    total = tail_ln2(0.0)
    if not math.isfinite(total) or total <= 0:
        raise ValueError("no witness: ln^2-weighted sum is not finite and positive")

    def boundary_for(target: float, t_lo: float) -> float:
        lo, hi = t_lo, T_CEIL
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if tail_ln2(mid) > target:
                lo = mid
            else:
                hi = mid
        # snap to the index midpoint so block membership is exact for integers
        if hi < math.log(1e15):
            n = math.floor(math.exp(hi))
            while tail_ln2(math.log(n + 0.5)) > target:
                n += 1
            return math.log(n + 0.5)
        return hi

    if halving is None:
        # families whose tail-halving boundaries explode doubly exponentially
        # need gentler blocks so c_i reaches useful sizes at feasible betas
        probe = boundary_for(total * 0.125, 0.0)
        halving = 1.05 if probe > 100.0 else 2.0
    if halving <= 1.0:
        raise ValueError("halving factor must exceed 1")

    bounds: list[float] = []
    tails: list[float] = [total]
    t_lo = 0.0
    for k in range(1, 201):
        target = total * halving**-k
        if target < total * 1e-16 or t_lo >= T_CEIL:
            break
        if tail_ln2(T_CEIL) > target:
            bounds.append(T_CEIL)
            tails.append(tail_ln2(T_CEIL))
            break
        hi = boundary_for(target, t_lo)
        bounds.append(hi)
        tails.append(tail_ln2(hi))
        t_lo = hi
    # the witness mean telescopes over blocks; c stays constant past the last bound
    energy = 0.0
    for k in range(1, len(tails)):
        energy += k * (tails[k - 1] - tails[k])
    energy += len(tails) * tails[-1]
    return FAWitness(family=s, block_bounds_t=tuple(bounds), energy=float(energy))


# ---------------------------------------------------------------------------
# Truncation to finite states
# ---------------------------------------------------------------------------


def truncate_to_density(s: SpectrumFamily, d: int) -> DensityOp:
    """Diagonal state from the first d eigenvalues, renormalized."""
    if d < 1:
        raise ValueError("truncation dimension must be >= 1")
    lam = s.lam(np.arange(1, d + 1))
    total = lam.sum()
    if total <= 0:
        raise ValueError("truncation annihilates the spectrum")
    return DensityOp(DimSig((d,)), np.diag(lam / total).astype(complex))
