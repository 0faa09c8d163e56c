"""Singular-value machinery: ideal norms, Dixmier estimation, closed-form laws.

Two independent routes run through this module everywhere: closed-form
singular-value laws vs numerically computed spectra, and logarithmic-mean
ladders (exact digamma partial sums for degeneracy-diagonal integrands) vs
their affine extrapolation in 1/log N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.special import digamma, polygamma

from .algebra import MagneticElement
from .basis import b_minus_matrix, b_plus_matrix
from .dirac import BLOCK_SHIFTS, DiracContext, QuartetOperator, dirac_phase, represent

__all__ = [
    "SingularSpectrum",
    "DixmierEstimate",
    "IdealVerdict",
    "singular_values",
    "sector_singular_values",
    "ideal_norm",
    "dixmier_estimate",
    "dixmier_from_spectrum",
    "dixmier_from_partial_sums",
    "shifted_resolvent_ladder",
    "tr_dix_shifted_resolvent",
    "stable_spectrum",
    "d4_partial_sums",
    "closed_form_mu",
    "c_alpha",
    "classify_decay",
    "verify_quasi_even",
    "build_shifted_commutator",
    "DEFAULT_LADDER",
]

DEFAULT_LADDER = (10**3, 10**4, 10**5, 10**6, 10**7)


@dataclass
class SingularSpectrum:
    """Descending singular values with provenance."""

    mu: np.ndarray
    source: str = ""

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        self.mu = np.sort(mu)[::-1].copy()

    @property
    def count(self) -> int:
        return len(self.mu)


@dataclass
class DixmierEstimate:
    """Extrapolated logarithmic mean with its ladder and fit diagnostics."""

    value: complex
    stderr: float
    ladder: list
    fit: tuple
    measurable: bool = True
    note: str = ""


@dataclass
class IdealVerdict:
    """Decay classification of a singular spectrum."""

    exponent: float
    r_squared: float
    norms: dict
    verdict: str


# ---------------------------------------------------------------------------
# Singular values of lattice operators.
# ---------------------------------------------------------------------------

def _as_quartet(t):
    if isinstance(t, QuartetOperator):
        return t.op, t.ctx, t.diag_in_m
    return sp.csr_matrix(t), None, False


def _n_window(op: sp.csr_matrix, ctx: DiracContext) -> int:
    """Smallest n_win so every nonzero entry has level index < n_win."""
    coo = op.tocoo()
    if coo.nnz == 0:
        return 1
    block = 4 * ctx.n_tot
    ns = np.concatenate([(coo.row % block) // 4, (coo.col % block) // 4])
    return int(ns.max()) + 1


def _window_selection(ctx: DiracContext, n_win: int) -> np.ndarray:
    base = (np.arange(ctx.m_tot)[:, None] * ctx.n_tot + np.arange(n_win)[None, :]) * 4
    return (base[..., None] + np.arange(4)).ravel()


def singular_values(t, k: int | None = None) -> SingularSpectrum:
    """Top-k singular values (all of them when k is None), descending.

    Degeneracy-diagonal operators are diagonalized sector by sector; banded
    operators (everything built from commutators of localized elements with
    the phase) are restricted to their level window and handled with the
    banded Hermitian eigensolver on T*T; small operators fall back to a dense
    SVD.
    """
    op, ctx, diag_m = _as_quartet(t)
    name = getattr(t, "name", "")
    if ctx is not None:
        n_win = _n_window(op, ctx)
        sel = _window_selection(ctx, n_win)
        sub = op[sel][:, sel].tocsr()
        if diag_m:
            mu = _sector_svd_concat(sub, 4 * n_win)
        else:
            mu = _banded_singular_values(sub, 4 * n_win)
    else:
        dense = op.toarray()
        mu = scipy.linalg.svdvals(dense)
    mu = np.sort(np.asarray(mu))[::-1]
    if k is not None:
        if k > len(mu):
            raise ValueError(f"requested {k} singular values, have {len(mu)}")
        mu = mu[:k]
    return SingularSpectrum(mu, source=name)


def _sector_svd_concat(sub: sp.csr_matrix, block: int) -> np.ndarray:
    sectors = sub.shape[0] // block
    out = []
    for m in range(sectors):
        sl = sub[m * block : (m + 1) * block, m * block : (m + 1) * block]
        if sl.nnz == 0:
            continue
        out.append(scipy.linalg.svdvals(sl.toarray()))
    if not out:
        return np.zeros(1)
    return np.concatenate(out)


def _banded_singular_values(sub: sp.csr_matrix, block: int) -> np.ndarray:
    """All singular values via the banded eigensolver on the Gram matrix."""
    h = (sub.conj().T @ sub).tocoo()
    if h.nnz == 0:
        return np.zeros(1)
    bw = int(np.max(np.abs(h.row - h.col)))
    dim = h.shape[0]
    if dim <= 2048 or bw > max(512, dim // 4):
        # small enough for a dense solve, or not meaningfully banded
        vals = scipy.linalg.svdvals(sub.toarray())
        return vals
    ab = np.zeros((bw + 1, dim), dtype=complex)
    lower = h.row >= h.col
    ab[h.row[lower] - h.col[lower], h.col[lower]] = h.data[lower]
    eig = scipy.linalg.eig_banded(
        ab, lower=True, eigvals_only=True, check_finite=False
    )
    return np.sqrt(np.clip(eig, 0.0, None))


def sector_singular_values(t: QuartetOperator, m_stop: int) -> list[np.ndarray]:
    """Per-degeneracy-sector singular values of an m-diagonal operator."""
    op, ctx, diag_m = _as_quartet(t)
    if ctx is None or not diag_m:
        raise ValueError("per-sector singular values need an m-diagonal operator")
    block = 4 * ctx.n_tot
    out = []
    for m in range(m_stop):
        sl = op[m * block : (m + 1) * block, m * block : (m + 1) * block]
        out.append(np.sort(scipy.linalg.svdvals(sl.toarray()))[::-1])
    return out


# ---------------------------------------------------------------------------
# Count-limited ideal norms.
# ---------------------------------------------------------------------------

def _mu_array(mu) -> np.ndarray:
    if isinstance(mu, SingularSpectrum):
        return mu.mu
    return np.sort(np.asarray(mu, dtype=float))[::-1]


def ideal_norm(mu, kind: str, p_or_q: float) -> float:
    """Count-limited evaluation of one operator-ideal norm.

    kinds: "schatten" (p > 0), "weak" (sup (m+1)^{1/p} mu_m, p > 0),
    "calderon" (p > 1 power form; p == 1 gives the logarithmic form),
    "macaev" (q >= 1).  Sup-type values are monotone nondecreasing in the
    number of singular values supplied.
    """
    mu = _mu_array(mu)
    p = float(p_or_q)
    if kind == "schatten":
        if p <= 0:
            raise ValueError("Schatten order must be positive")
        return float(np.sum(mu**p) ** (1.0 / p))
    if kind == "weak":
        if p <= 0:
            raise ValueError("weak order must be positive")
        m = np.arange(1, len(mu) + 1, dtype=float)
        return float(np.max(m ** (1.0 / p) * mu))
    if kind == "calderon":
        if p < 1:
            raise ValueError("Calderon order must be >= 1")
        csum = np.cumsum(mu)
        n = np.arange(1, len(mu) + 1, dtype=float)
        if p == 1:
            if len(mu) < 2:
                raise ValueError("logarithmic Calderon norm needs N >= 2")
            return float(np.max(csum[1:] / np.log(n[1:])))
        return float(np.max(csum / n ** (1.0 - 1.0 / p)))
    if kind == "macaev":
        if p < 1:
            raise ValueError("Macaev order must be >= 1")
        m = np.arange(1, len(mu) + 1, dtype=float)
        return float(np.sum(mu / m ** (1.0 - 1.0 / p)))
    raise ValueError(f"unknown ideal norm kind {kind!r}")


# ---------------------------------------------------------------------------
# Dixmier estimation: affine extrapolation of logarithmic means in 1/log N.
# ---------------------------------------------------------------------------

def dixmier_from_partial_sums(ns, sums, rel_tol: float = 0.05) -> DixmierEstimate:
    """Fit sigma_N = sum_N / log N against 1/log N; the intercept is the trace.

    The logarithmic means converge only at O(1/log N); the affine fit removes
    the leading correction.  Ladders whose partial sums are outright
    convergent (increments decaying geometrically across the rungs, the
    ratio test) belong to summable spectra, whose value is exactly zero.
    A ladder whose residuals exceed ``rel_tol`` of the value scale is flagged
    not measurable at this truncation.
    """
    ns = np.asarray(ns, dtype=float)
    sums = np.asarray(sums)
    if len(ns) < 3:
        raise ValueError("need at least three ladder rungs")
    if np.any(ns < 2) or np.any(np.diff(ns) <= 0):
        raise ValueError("ladder must be increasing with N >= 2")
    logs = np.log(ns)
    sigma = sums / logs
    if len(ns) >= 4:
        inc = np.abs(np.diff(sums))
        scale = float(np.max(np.abs(sums))) or 1.0
        tiny = inc <= 1e-12 * scale
        ratios = inc[1:] / np.maximum(inc[:-1], 1e-300)
        # a log-spaced ladder has constant increments exactly when the
        # spectrum is borderline-harmonic; geometric decay means summable
        if np.all(tiny[-2:]) or np.all(ratios[-2:] < 0.45):
            bound = float(np.abs(sums[-1] - sums[-2])) / logs[-1]
            val = 0j if np.iscomplexobj(sigma) else 0.0
            ladder = [
                (int(n), complex(s) if np.iscomplexobj(sigma) else float(s))
                for n, s in zip(ns, sigma)
            ]
            return DixmierEstimate(val, bound, ladder, (val, val), True,
                                   "partial sums converge (summable spectrum)")
    x = 1.0 / logs
    design = np.stack([np.ones_like(x), x], axis=-1)
    coef, *_ = np.linalg.lstsq(design, sigma, rcond=None)
    resid = sigma - design @ coef
    dof = max(len(ns) - 2, 1)
    gram_inv = np.linalg.inv(design.T @ design)
    resid_ms = float(np.sum(np.abs(resid) ** 2) / dof)
    stderr = float(np.sqrt(resid_ms * gram_inv[0, 0]))
    value = coef[0]
    scale = max(float(np.max(np.abs(sigma))), 1e-12)
    measurable = bool(np.sqrt(resid_ms) <= rel_tol * scale)
    note = "" if measurable else "not measurable at this truncation"
    if np.iscomplexobj(sigma):
        ladder = [(int(n), complex(s)) for n, s in zip(ns, sigma)]
        return DixmierEstimate(complex(value), stderr, ladder,
                               (complex(coef[0]), complex(coef[1])), measurable, note)
    ladder = [(int(n), float(s)) for n, s in zip(ns, sigma)]
    return DixmierEstimate(float(value), stderr, ladder,
                           (float(coef[0]), float(coef[1])), measurable, note)


def dixmier_from_spectrum(mu, ladder=DEFAULT_LADDER) -> DixmierEstimate:
    """Dixmier estimate from a positive singular spectrum and a count ladder."""
    mu = _mu_array(mu)
    ladder = [int(n) for n in ladder if n <= len(mu)]
    if len(ladder) < 3:
        raise ValueError("spectrum too short for the requested ladder")
    csum = np.cumsum(mu)
    sums = np.array([csum[n - 1] for n in ladder])
    return dixmier_from_partial_sums(np.array(ladder, dtype=float), sums)


def dixmier_estimate(data, ladder=DEFAULT_LADDER) -> DixmierEstimate:
    """Dispatch on input: a spectrum, or precomputed (N, partial sum) pairs."""
    if isinstance(data, SingularSpectrum) or (
        isinstance(data, np.ndarray) and data.ndim == 1 and not np.iscomplexobj(data)
    ):
        return dixmier_from_spectrum(data, ladder)
    ns, sums = data
    return dixmier_from_partial_sums(ns, sums)


def shifted_resolvent_ladder(s_el: MagneticElement, xi: float,
                             ladder=DEFAULT_LADDER):
    """Exact partial sums of the sector traces of (Q + xi)^{-1} S.

    Each degeneracy sector contributes sum_n S_nn / (n + m + 1 + xi); summing
    m < N gives sum_n S_nn (digamma(N + n + 1 + xi) - digamma(n + 1 + xi)),
    with no truncation error in either index.
    """
    if xi <= -1:
        raise ValueError("diagonal shift must exceed -1")
    diag = np.diag(s_el.block)
    ns = np.asarray(ladder, dtype=float)
    if len(diag) == 0 or not np.any(diag):
        return ns, np.zeros(len(ns), dtype=complex)
    n_idx = np.arange(len(diag), dtype=float)
    a = n_idx + 1.0 + xi
    sums = np.array([np.sum(diag * (digamma(n + a) - digamma(a))) for n in ns])
    return ns, sums


def tr_dix_shifted_resolvent(s_el: MagneticElement, xi: float,
                             ladder=DEFAULT_LADDER) -> DixmierEstimate:
    """Dixmier trace of (Q + xi)^{-1} S by ladder extrapolation."""
    ns, sums = shifted_resolvent_ladder(s_el, xi, ladder)
    return dixmier_from_partial_sums(ns, sums)


def d4_partial_sums(eps: float, ladder=DEFAULT_LADDER):
    """Partial sums for |D_eps|^{-4} at level cuts hitting the requested counts.

    Eigenvalues are (j + xi_i)^{-2} with multiplicity j at level j >= 1 over
    the four shifted blocks; the count at cut J is N = 2 J (J + 1) and the
    sums have exact digamma/trigamma closed forms.
    """
    shifts = eps + BLOCK_SHIFTS
    ns, sums = [], []
    for n_req in ladder:
        j = max(int(round(np.sqrt(n_req / 2.0))), 2)
        n_act = 2 * j * (j + 1)
        total = 0.0
        for xi in shifts:
            # sum_{r=1..J} r/(r+xi)^2 = [digamma(J+1+xi)-digamma(1+xi)]
            #                          - xi [trigamma(1+xi)-trigamma(J+1+xi)]
            total += digamma(j + 1 + xi) - digamma(1 + xi)
            total -= xi * (polygamma(1, 1 + xi) - polygamma(1, j + 1 + xi))
        ns.append(n_act)
        sums.append(total)
    return np.array(ns, dtype=float), np.array(sums)


# ---------------------------------------------------------------------------
# Closed-form singular-value laws and their numerical counterparts.
# ---------------------------------------------------------------------------

def c_alpha(j: int, k: int, eps: float, eps2: float, m) -> np.ndarray:
    """The bounded prefactor of the square-root-resolvent commutator law."""
    zj, zk = j + eps2, k + eps
    m1 = np.asarray(m, dtype=float) + 1.0
    rj = np.sqrt(1.0 + zj / m1)
    rk = np.sqrt(1.0 + zk / m1)
    return np.abs(zj - zk) / (rj * rk * (rj + rk))


def closed_form_mu(kind: str, j: int, k: int, eps: float, eps2: float,
                   eps3: float, m) -> np.ndarray:
    """Exact singular values at sector m for the three closed-form families.

    zeta_j = j + eps2 and zeta_k = k + eps attach the second and first shift
    respectively; xi_k = k + eps3 enters only the J family.  All shifted
    values must stay positive (shifts > -1).
    """
    zj, zk, xk = j + eps2, k + eps, k + eps3
    if eps <= -1 or eps2 <= -1:
        raise ValueError("shifts must exceed -1")
    m1 = np.asarray(m, dtype=float) + 1.0
    if kind == "C":
        return c_alpha(j, k, eps, eps2, m) / m1**1.5
    if kind == "D":
        return np.abs(zj - zk) / ((m1 + zj) * (m1 + zk))
    if kind == "J":
        if eps3 <= -1:
            raise ValueError("shifts must exceed -1")
        root = np.sqrt((m1 + zj) * (m1 + zk))
        return np.abs(m1 + xk - root) / ((m1 + xk) * root)
    raise ValueError(f"unknown closed-form family {kind!r}")


def _scalar_lattice(a: MagneticElement, n_tot: int, m_tot: int) -> sp.csr_matrix:
    block = sp.csr_matrix(a.padded(n_tot))
    return sp.kron(sp.identity(m_tot, format="csr"), block, format="csr")


def build_shifted_commutator(kind: str, a: MagneticElement, n_tot: int,
                             m_tot: int, eps: float, eps2: float,
                             eps3: float = 0.0, b_sign: int = 0) -> sp.csr_matrix:
    """Numerical counterparts of the closed-form families on the (n, m) lattice.

    kind "C": Q_eps^{-1/2} A - A Q_eps2^{-1/2};  "D": resolvent version;
    "J": Q_eps^{-1/2} A Q_eps2^{-1/2} - Q_eps3^{-1} A.  With ``b_sign`` = +-1
    the C family is multiplied on the left by the degeneracy ladder b+-.
    Index layout m-major: idx = m * n_tot + n.
    """
    n = np.arange(n_tot)
    m = np.arange(m_tot)
    q = (m[:, None] + n[None, :] + 1.0).ravel()
    pa = _scalar_lattice(a, n_tot, m_tot)
    if kind == "C":
        left = sp.diags((q + eps) ** -0.5)
        right = sp.diags((q + eps2) ** -0.5)
        out = (left @ pa - pa @ right).tocsr()
        if b_sign:
            b1 = b_plus_matrix(m_tot) if b_sign > 0 else b_minus_matrix(m_tot)
            b = sp.kron(b1, sp.identity(n_tot, format="csr"), format="csr")
            out = (b @ out).tocsr()
        return out
    if kind == "D":
        left = sp.diags((q + eps) ** -1.0)
        right = sp.diags((q + eps2) ** -1.0)
        return (left @ pa - pa @ right).tocsr()
    if kind == "J":
        half_l = sp.diags((q + eps) ** -0.5)
        half_r = sp.diags((q + eps2) ** -0.5)
        res = sp.diags((q + eps3) ** -1.0)
        return (half_l @ pa @ half_r - res @ pa).tocsr()
    raise ValueError(f"unknown closed-form family {kind!r}")


# ---------------------------------------------------------------------------
# Decay classification.
# ---------------------------------------------------------------------------

def classify_decay(mu, fit_floor: float = 1e-14) -> IdealVerdict:
    """Log-log tail fit of the ranked singular values.

    Fits mu_r ~ (r+1)^e over the tail half, maps e to the weak-Schatten order
    p = -1/e, and upgrades to "trace-class" when consecutive octave sums of
    the tail decay geometrically (a summability ratio test).  Poor fits
    (R^2 < 0.95) return "unclassified".
    """
    mu = _mu_array(mu)
    if len(mu) < 64:
        raise ValueError("need at least 64 singular values to classify")
    good = mu > fit_floor
    mu = mu[good]
    if len(mu) < 64:
        return IdealVerdict(-np.inf, 1.0, {}, "trace-class")
    lo = len(mu) // 2
    r = np.arange(1, len(mu) + 1, dtype=float)
    x, y = np.log(r[lo:]), np.log(mu[lo:])
    slope, intercept = np.polyfit(x, y, 1)
    yhat = slope * x + intercept
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    exponent = float(slope)

    summable = _octave_summable(mu)
    norms = _norm_panel(mu, exponent)
    if r2 < 0.95:
        verdict = "unclassified"
    elif summable:
        verdict = "trace-class"
    else:
        p = -1.0 / exponent if exponent < 0 else np.inf
        verdict = f"weak-S{p:.3g}"
    return IdealVerdict(exponent, r2, norms, verdict)


def _octave_summable(mu: np.ndarray) -> bool:
    """Tail octave sums must decay geometrically for a summable spectrum.

    For mu ~ r^e the ratio of consecutive octave sums tends to 2^(1+e); the
    0.85 cutoff (e below roughly -1.2) keeps a noise margin on truncated
    spectra while rejecting everything at or above the harmonic borderline.
    """
    sums = []
    hi = len(mu)
    while hi >= 32:
        lo = hi // 2
        sums.append(mu[lo:hi].sum())
        hi = lo
    sums = sums[::-1]
    if len(sums) < 3:
        return False
    ratios = np.array([b / a for a, b in zip(sums, sums[1:]) if a > 0])
    if len(ratios) == 0:
        return False
    return bool(np.median(ratios) < 0.85 and ratios[-1] < 0.9)


def _norm_panel(mu: np.ndarray, exponent: float) -> dict:
    p = -1.0 / exponent if exponent < -1e-3 else np.inf
    panel = {}

    def saturated(series: np.ndarray) -> bool:
        q = max(len(series) // 4, 1)
        head, tail = series[-q - 1], series[-1]
        return bool(abs(tail - head) <= 0.01 * max(abs(tail), 1e-300))

    m = np.arange(1, len(mu) + 1, dtype=float)
    if np.isfinite(p):
        weak_series = np.maximum.accumulate(m ** (1.0 / p) * mu)
        panel[f"weak-{p:.3g}"] = (float(weak_series[-1]), saturated(weak_series))
        if p > 1:
            cal_series = np.maximum.accumulate(np.cumsum(mu) / m ** (1.0 - 1.0 / p))
            panel[f"calderon-{p:.3g}+"] = (float(cal_series[-1]), saturated(cal_series))
    cal1 = np.maximum.accumulate(np.cumsum(mu)[1:] / np.log(m[1:]))
    panel["calderon-1+"] = (float(cal1[-1]), saturated(cal1))
    panel["schatten-1"] = (float(np.sum(mu)), saturated(np.cumsum(mu)))
    panel["macaev-2-"] = (
        float(np.sum(mu / m**0.5)),
        saturated(np.cumsum(mu / m**0.5)),
    )
    return panel


# ---------------------------------------------------------------------------
# Quasi-even module verification.
# ---------------------------------------------------------------------------

def stable_spectrum(build, ctx: DiracContext, shrink: float = 0.5,
                    agree_rtol: float = 1e-6) -> SingularSpectrum:
    """Ranked singular values stable under shrinking the degeneracy truncation.

    The compressed spectrum is exact on a ranked prefix and falls off
    spuriously near its capacity; comparing two truncations isolates the
    honest prefix, which is what decay fits may use.
    """
    small = DiracContext(lb=ctx.lb, eps=ctx.eps, n_max=ctx.n_max,
                         m_max=max(int(ctx.m_max * shrink), 64),
                         buffer=ctx.buffer)
    s_big = singular_values(build(ctx))
    if s_big.count == 0 or s_big.mu[0] <= 1e-14:
        # the zero operator: trivially stable, trivially summable
        return SingularSpectrum(np.zeros(64), source=s_big.source + " [zero]")
    s_small = singular_values(build(small))
    n = min(s_big.count, s_small.count)
    big, sml = s_big.mu[:n], s_small.mu[:n]
    scale = big[0] if n and big[0] > 0 else 1.0
    ok = np.abs(big - sml) <= agree_rtol * np.maximum(big, 1e-300) + 1e-12 * scale
    bad = np.nonzero(~ok)[0]
    stop = int(bad[0]) if len(bad) else n
    if stop < 64:
        raise RuntimeError(
            f"stable prefix too short ({stop}); increase the truncation"
        )
    return SingularSpectrum(big[:stop], source=s_big.source + " [stable prefix]")


def _phase_cache(ctx: DiracContext, cache: dict):
    f = cache.get(ctx)
    if f is None:
        f = dirac_phase(ctx, check=False)
        cache[ctx] = f
    return f


def verify_quasi_even(ctx: DiracContext, test_set: list[MagneticElement]) -> dict:
    """Classify the defect products of the phase module on a test set.

    For each element: [F, pi(A)] should sit in the weak ideal of order 2
    (ranked exponent -1/2), [F^2, pi(A)] and the mixed products
    R(A) [F, pi(A')] (both orders) and triple commutator products should be
    trace class.  All spectra are read on the truncation-stable prefix
    (computed at two truncations).  Returns verdicts with fitted exponents
    and norm panels.
    """
    report: dict = {"elements": [], "pairs": [], "triples": []}
    phases: dict = {}

    def fcomm(a, c):
        f = _phase_cache(c, phases)
        pa = represent(a, c)
        return QuartetOperator((f.op @ pa.op - pa.op @ f.op).tocsr(), c,
                               name="[F,pi(A)]")

    def rdef(a, c):
        from .dirac import gamma_grading

        g = gamma_grading(c)
        fc = fcomm(a, c)
        return QuartetOperator((g.op @ fc.op @ g.op + fc.op).tocsr(), c, name="R(A)")

    def fsq_comm(a, c):
        from .dirac import exact_phase_square

        fsq = exact_phase_square(c)
        pa = represent(a, c)
        return QuartetOperator((fsq.op @ pa.op - pa.op @ fsq.op).tocsr(), c,
                               diag_in_m=True, name="[F^2,pi(A)]")

    for a in test_set:
        v_f = classify_decay(stable_spectrum(lambda c: fcomm(a, c), ctx))
        v_sq = classify_decay(stable_spectrum(lambda c: fsq_comm(a, c), ctx))
        report["elements"].append(
            {
                "support": a.support_bound,
                "F_comm": v_f,
                "Fsq_comm": v_sq,
                "F_comm_ok": abs(v_f.exponent + 0.5) <= 0.1,
                "Fsq_ok": v_sq.verdict == "trace-class",
            }
        )
    for a, a2 in zip(test_set, test_set[1:]):
        def left(c, a=a, a2=a2):
            return QuartetOperator((rdef(a, c).op @ fcomm(a2, c).op).tocsr(), c,
                                   name="R(A)[F,A']")

        def right(c, a=a, a2=a2):
            return QuartetOperator((fcomm(a2, c).op @ rdef(a, c).op).tocsr(), c,
                                   name="[F,A']R(A)")

        v_l = classify_decay(stable_spectrum(left, ctx))
        v_r = classify_decay(stable_spectrum(right, ctx))
        report["pairs"].append(
            {
                "left": v_l,
                "right": v_r,
                "ok": v_l.verdict == "trace-class" and v_r.verdict == "trace-class",
            }
        )
    for a0, a1, a2 in zip(test_set, test_set[1:], test_set[2:]):
        def triple(c, a0=a0, a1=a1, a2=a2):
            return QuartetOperator(
                (fcomm(a0, c).op @ fcomm(a1, c).op @ fcomm(a2, c).op).tocsr(), c,
                name="triple",
            )

        v = classify_decay(stable_spectrum(triple, ctx))
        report["triples"].append(
            {"verdict": v, "ok": v.verdict == "trace-class" and v.exponent <= -1.4}
        )
    report["ok"] = (
        all(e["F_comm_ok"] and e["Fsq_ok"] for e in report["elements"])
        and all(p["ok"] for p in report["pairs"])
        and all(t["ok"] for t in report["triples"])
    )
    return report
