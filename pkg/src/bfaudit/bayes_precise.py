"""Bayes factors for the precise test H0: theta = 0 vs H1: theta != 0.

All arithmetic happens in log space; ``bf`` may overflow to +inf at
display time only.  The conjugate case is closed-form; semi-conjugate,
mixture-of-g, and fat-tailed-t cases are one extra quadrature (or QMC in
the multivariate semi-conjugate case).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .errors import Divergent, IntegrationFailure, InvalidData, Unsupported
from .model import Dims, SuffStats
from .priors import (
    AdaptiveGPrior,
    ConjugatePrior,
    FatTailedTPrior,
    GMixturePrior,
    PointMassTail,
    SemiConjugatePrior,
    VariancePrior,
)
from .special import log_gamma
from . import mc as _mc

__all__ = [
    "BfResult",
    "LimitResult",
    "bf_conjugate",
    "bf_conjugate_limit",
    "bf_univariate_t",
    "bf_semiconjugate",
    "bf_mixture",
    "bf_adaptive",
    "bf_fat_tail",
    "fat_tail_limit_kind",
]


@dataclass(frozen=True)
class BfResult:
    log_bf: float
    diag: dict = field(default_factory=dict)

    @property
    def bf(self) -> float:
        try:
            return math.exp(self.log_bf)
        except OverflowError:
            return math.inf


@dataclass(frozen=True)
class LimitResult:
    kind: str  # "zero" | "finite" | "infinite"
    value: float | None = None
    governing: str = ""

    def __post_init__(self):
        if self.kind not in ("zero", "finite", "infinite"):
            raise ValueError(f"bad limit kind {self.kind!r}")
        if self.kind == "finite" and not (self.value is not None and self.value > 0):
            raise ValueError("finite limit requires a positive value")


# ---------------------------------------------------------------------------
# conjugate building blocks


def _log_norm(nu: float, s2: float) -> float:
    """Log normalizing constant of the inv-chi2(s2, nu) branch; the improper
    nu=0 prior uses constant 1 by convention."""
    if nu == 0:
        return 0.0
    if s2 <= 0:
        raise InvalidData("proper variance prior (nu > 0) requires s2 > 0")
    return 0.5 * nu * math.log(0.5 * nu) + 0.5 * nu * math.log(s2) - log_gamma(0.5 * nu)


def log_c2(prior0, prior1, dims: Dims) -> float:
    """Constant C2 shared by every exact Bayes-factor formula here."""
    n, r2 = dims.n, dims.r2
    return (
        _log_norm(prior1.nu, prior1.s2)
        - _log_norm(prior0.nu, prior0.s2)
        + log_gamma(0.5 * (n + prior1.nu - r2))
        - log_gamma(0.5 * (n + prior0.nu - r2))
        + 0.5 * (prior1.nu - prior0.nu) * math.log(2.0)
    )


def _check_data(stats_: SuffStats, prior0, prior1) -> None:
    if stats_.s_y2 <= 0 and (prior0.nu == 0 or prior1.nu == 0):
        raise InvalidData(
            "zero residual sum of squares with an improper variance prior"
        )


class _ConjEig:
    """Simultaneous diagonalization of (info_theta, Omega) so that every
    g-scaled quadratic form is a cheap rational function of g."""

    def __init__(self, info_theta: np.ndarray, Omega: np.ndarray, theta_hat: np.ndarray):
        info_theta = np.atleast_2d(np.asarray(info_theta, dtype=float))
        Omega = np.atleast_2d(np.asarray(Omega, dtype=float))
        evals, evecs = np.linalg.eigh(info_theta)
        half = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
        lam, Q = np.linalg.eigh(half @ Omega @ half)
        self.lam = lam  # eigenvalues of info_theta^{1/2} Omega info_theta^{1/2}
        self.c2 = (Q.T @ (half @ np.atleast_1d(theta_hat))) ** 2

    def logdet_ig_plus_one(self, g: float = 1.0) -> float:
        return float(np.sum(np.log1p(g * self.lam)))

    def quad_shrunk(self, g: float = 1.0) -> float:
        """theta_hat' ((info^{-1} + g Omega)^{-1}) theta_hat."""
        return float(np.sum(self.c2 / (1.0 + g * self.lam)))

    @property
    def ssr(self) -> float:
        return float(np.sum(self.c2))

    @property
    def lam_max(self) -> float:
        return float(self.lam.max())


def _log_bf_conjugate_from_eig(eig: _ConjEig, stats_: SuffStats, prior0, prior1,
                               dims: Dims, g: float = 1.0) -> float:
    n, r2 = dims.n, dims.r2
    sse1 = prior1.nu * prior1.s2 + stats_.s_y2
    sse0 = prior0.nu * prior0.s2 + stats_.s_y2
    return (
        log_c2(prior0, prior1, dims)
        - 0.5 * eig.logdet_ig_plus_one(g)
        - 0.5 * (n + prior1.nu - r2) * math.log(sse1 + eig.quad_shrunk(g))
        + 0.5 * (n + prior0.nu - r2) * math.log(sse0 + eig.ssr)
    )


def bf_conjugate(stats_: SuffStats, prior0: VariancePrior, prior1: ConjugatePrior,
                 dims: Dims) -> BfResult:
    """Exact conjugate-prior Bayes factor (closed form, no integration)."""
    _check_data(stats_, prior0, prior1)
    eig = _ConjEig(stats_.info_theta, prior1.Omega, stats_.theta_hat)
    return BfResult(
        _log_bf_conjugate_from_eig(eig, stats_, prior0, prior1, dims),
        diag={"quad_abs_err": 0.0, "mc_std_err": 0.0},
    )


def bf_conjugate_limit(prior0: VariancePrior, prior1: ConjugatePrior, dims: Dims,
                       info_theta, direction=None) -> LimitResult:
    """Behavior of the conjugate Bayes factor as |theta_hat| -> infinity
    (fixed s_y2): zero, a finite bound, or divergence, depending on the sign
    of nu0 - nu1.  With a direction the finite value is direction-specific;
    otherwise the supremum over directions (top eigenvector) is reported."""
    if prior0.nu < prior1.nu:
        return LimitResult("zero", governing="Lemma 1")
    if prior0.nu > prior1.nu:
        return LimitResult("infinite", governing="Lemma 1")
    n, r2 = dims.n, dims.r2
    info_theta = np.atleast_2d(np.asarray(info_theta, dtype=float))
    r1 = info_theta.shape[0]
    if direction is None:
        eig = _ConjEig(info_theta, prior1.Omega, np.zeros(r1))
        ratio = 1.0 + eig.lam_max
    else:
        v = np.atleast_1d(np.asarray(direction, dtype=float))
        eig = _ConjEig(info_theta, prior1.Omega, v)
        ratio = eig.ssr / eig.quad_shrunk()
    m = n + prior1.nu - r2
    log_val = (
        log_c2(prior0, prior1, dims)
        - 0.5 * eig.logdet_ig_plus_one()
        + 0.5 * m * math.log(ratio)
    )
    return LimitResult("finite", value=math.exp(log_val), governing="Lemma 1")


def bf_univariate_t(t: float, n: int, rho: float, mode: str = "value") -> float:
    """Closed-form conjugate Bayes factor (Omega = 1, unit-vector design,
    equicorrelated errors, nu0 = nu1 = 0) as a function of the t statistic;
    ``mode='limit'`` returns the |t| -> infinity value."""
    if n < 2:
        raise InvalidData(f"need n >= 2, got {n}")
    if not 0.0 <= rho <= 1.0:
        raise InvalidData(f"rho must be in [0, 1], got {rho}")
    rho_bar = 1.0 + (n - 1) * rho
    lead = -0.5 * math.log1p(n / rho_bar)
    if mode == "limit":
        log_bf = lead - 0.5 * n * math.log1p(-n / (n + 1 + (n - 1) * rho))
    elif mode == "value":
        frac = n * t * t / ((t * t + n - 1.0) * (n + 1.0 + (n - 1.0) * rho))
        log_bf = lead - 0.5 * n * math.log1p(-frac)
    else:
        raise ValueError(f"mode must be 'value' or 'limit', got {mode!r}")
    return math.exp(log_bf)


# ---------------------------------------------------------------------------
# quadrature helpers


def _log_quad(log_f, pieces, *, epsrel=1e-9, limit=400):
    """Integrate exp(log_f) over a list of (a, b) pieces in log space.

    Each piece is shifted by its own scan maximum.  Returns (log_integral,
    rel_err).
    """
    results = []  # (shift, val, abs_err) per piece, val on the shifted scale
    for a, b in pieces:
        if not a < b:
            continue
        if math.isinf(a) or math.isinf(b):
            grid = np.linspace(min(max(a, -1e6), 1e6), max(min(b, 1e6), -1e6), 201)
        else:
            grid = np.linspace(a, b, 201)
        shift = max(log_f(x) for x in grid)
        if math.isinf(shift):
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(
                lambda x: math.exp(min(log_f(x) - shift, 700.0)),
                a, b, epsabs=1e-300, epsrel=epsrel, limit=limit,
            )
        if val > 0:
            results.append((shift, val, err))
    if not results:
        raise IntegrationFailure("integrand vanished on every piece")
    top = max(s + math.log(v) for s, v, _ in results)
    total = sum(v * math.exp(s - top) for s, v, _ in results)
    err_total = sum(e * math.exp(s - top) for s, _, e in results)
    return top + math.log(total), err_total / total


def bf_semiconjugate(stats_: SuffStats, prior0: VariancePrior,
                     prior1: SemiConjugatePrior, dims: Dims,
                     seed: int = 0) -> BfResult:
    """Semi-conjugate Bayes factor: the theta integral has no closed form, so
    it is done by deterministic quadrature (r1 = 1) or QMC over the
    N(0, Omega) prior (r1 > 1)."""
    _check_data(stats_, prior0, prior1)
    n, r2 = dims.n, dims.r2
    m1 = n - r2 + prior1.nu
    m0 = n - r2 + prior0.nu
    sse1 = prior1.nu * prior1.s2 + stats_.s_y2
    sse0 = prior0.nu * prior0.s2 + stats_.s_y2
    lc2 = log_c2(prior0, prior1, dims)
    log_den = -0.5 * m0 * math.log(sse0 + stats_.ssr)

    if dims.r1 == 1:
        info = float(stats_.info_theta[0, 0])
        th = float(stats_.theta_hat[0])
        omega = float(prior1.Omega[0, 0])
        sd = math.sqrt(omega)
        w = math.sqrt(sse1 / (m1 * info))

        def log_f(x):
            return (
                -0.5 * m1 * math.log(sse1 + (x - th) ** 2 * info)
                - 0.5 * x * x / omega
                - 0.5 * math.log(2.0 * math.pi * omega)
            )

        cuts = sorted({-40 * sd, 0.0, 40 * sd, th - 40 * w, th, th + 40 * w})
        pieces = [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]
        log_num, rel = _log_quad(log_f, pieces)
        if rel > 1e-6:
            raise IntegrationFailure(f"quadrature relative error {rel} > 1e-6")
        return BfResult(lc2 + log_num - log_den,
                        diag={"quad_abs_err": rel, "mc_std_err": 0.0})

    # multivariate: QMC normal draws from the prior, antithetic pairing
    r1 = dims.r1
    chol = np.linalg.cholesky(prior1.Omega)
    info = stats_.info_theta
    th = stats_.theta_hat
    n_points = 2 * 10**5
    n_rep = n_points // 16
    base = _mc._lattice(n_rep, r1)
    rng = np.random.default_rng(seed)
    shifts = rng.random((16, r1))
    shift_log = -0.5 * m1 * math.log(sse1)  # kernel maximum, at theta = theta_hat
    means = np.empty(16)
    for k in range(16):
        u = (base + shifts[k]) % 1.0
        z = _mc._norm_ppf_clipped(u)
        vals = []
        for sign in (1.0, -1.0):
            theta = sign * z @ chol.T
            d = theta - th
            q = np.einsum("ij,jk,ik->i", d, info, d)
            vals.append(np.exp(-0.5 * m1 * np.log(sse1 + q) - shift_log))
        means[k] = 0.5 * (vals[0].mean() + vals[1].mean())
    mean = float(means.mean())
    se = float(means.std(ddof=1) / math.sqrt(16))
    if mean <= 0 or 3 * se >= mean:
        raise IntegrationFailure(
            f"QMC mean {mean} not separated from zero (se {se})"
        )
    log_num = shift_log + math.log(mean)
    return BfResult(lc2 + log_num - log_den,
                    diag={"quad_abs_err": 0.0, "mc_std_err": se / mean})


def bf_mixture(stats_: SuffStats, prior0: VariancePrior, mixture: GMixturePrior,
               dims: Dims) -> BfResult:
    """Mixture-of-g Bayes factor: B10 = integral of B10(g) pi(g) dg, computed
    on u = g/(1+g) so heavy tails become an integrable endpoint at u = 1."""
    _check_data(stats_, prior0, mixture)
    Omega = mixture.Omega
    if Omega is None:
        Omega = np.linalg.inv(stats_.info_theta)
    if isinstance(mixture.tail, PointMassTail):
        fixed = ConjugatePrior(mixture.tail.g0 * Omega, s2=mixture.s2, nu=mixture.nu)
        res = bf_conjugate(stats_, prior0, fixed, dims)
        return BfResult(res.log_bf, diag=dict(res.diag, g_max=mixture.tail.g0))
    eig = _ConjEig(stats_.info_theta, Omega, stats_.theta_hat)

    def log_f(x):
        g = math.exp(x)
        dens = mixture.density(g)
        if dens <= 0.0:
            return -math.inf
        return (
            _log_bf_conjugate_from_eig(eig, stats_, prior0, mixture, dims, g)
            + math.log(dens)
            + x  # jacobian of g = e^x
        )

    sse = mixture.nu * mixture.s2 + stats_.s_y2
    pieces = _mixture_log_g_pieces(stats_.ssr / sse)
    log_bf, rel = _log_quad(log_f, pieces, epsrel=1e-8, limit=10_000)
    if not math.isfinite(log_bf):
        raise Divergent("mixture Bayes factor is non-finite for these data")
    if rel > 1e-5:
        raise IntegrationFailure(f"mixture quadrature relative error {rel}")
    return BfResult(log_bf, diag={"quad_abs_err": rel, "mc_std_err": 0.0})


def _mixture_log_g_pieces(g_star: float):
    """Quadrature pieces on the x = log g scale: one per decade around unit
    g plus a ladder around the data-critical scale g_star = SSR/SSE, where
    the conjugate factor transitions.  The tails beyond are exponentially
    negligible for every admissible mixing density."""
    cuts = set(range(-12, 13))  # log10 g
    if g_star > 0:
        lead = math.log10(g_star)
        for j in range(-3, 13):
            cuts.add(lead + j)
    xs = sorted(math.log(10.0) * c for c in cuts)
    return [(xs[i], xs[i + 1]) for i in range(len(xs) - 1) if xs[i] < xs[i + 1]]


def _adaptive_log_bf(g: float, ssr: float, sse: float, m: float, r1: int) -> float:
    return (
        -0.5 * r1 * math.log1p(g)
        - 0.5 * m * (math.log(sse + ssr / (1.0 + g)) - math.log(sse + ssr))
    )


def bf_adaptive(stats_: SuffStats, prior0: AdaptiveGPrior, dims: Dims) -> BfResult:
    """g-prior Bayes factor with g chosen to maximize B10 (same variance
    prior on both sides).  The maximizer has a closed form; a golden-section
    sweep over log g guards it in the multivariate case."""
    if prior0.nu == 0 and stats_.s_y2 <= 0:
        raise InvalidData("zero residual sum of squares with nu = 0")
    n, r1, r2 = dims.n, dims.r1, dims.r2
    m = n + prior0.nu - r2
    sse = prior0.nu * prior0.s2 + stats_.s_y2
    ssr = stats_.ssr
    g_max = max(0.0, ssr * (m - r1) / (r1 * sse) - 1.0)
    if r1 > 1:
        g_num = _golden_max(lambda lg: _adaptive_log_bf(math.exp(lg), ssr, sse, m, r1),
                            math.log(1e-8), math.log(1e12))
        cand = math.exp(g_num)
        if _adaptive_log_bf(cand, ssr, sse, m, r1) > _adaptive_log_bf(g_max, ssr, sse, m, r1):
            g_max = cand
    log_bf = _adaptive_log_bf(g_max, ssr, sse, m, r1)
    return BfResult(log_bf, diag={"quad_abs_err": 0.0, "mc_std_err": 0.0,
                                  "g_max": g_max})


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Golden-section maximizer on [lo, hi]; ties resolve toward lo."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * (1.0 + abs(a) + abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return a if f(a) >= f(b) else b


def bf_fat_tail(stats_: SuffStats, prior0: VariancePrior, tprior: FatTailedTPrior,
                dims: Dims) -> BfResult:
    """Exact Bayes factor for the scalar fat-tailed t prior on theta,
    independent of sigma^2 (requires r1 = 1, r2 = 0)."""
    if dims.r1 != 1 or dims.r2 != 0:
        raise Unsupported("fat-tailed t prior supports only r1=1, r2=0")
    _check_data(stats_, prior0, tprior)
    n = dims.n
    m1 = n + tprior.nu
    m0 = n + prior0.nu
    sse1 = tprior.nu * tprior.s2 + stats_.s_y2
    sse0 = prior0.nu * prior0.s2 + stats_.s_y2
    info = float(stats_.info_theta[0, 0])
    th = float(stats_.theta_hat[0])
    lc2 = log_c2(prior0, tprior, dims)
    log_den = -0.5 * m0 * math.log(sse0 + stats_.ssr)

    def log_f(x):
        return -0.5 * m1 * math.log(sse1 + (x - th) ** 2 * info) + tprior.log_density(x)

    span0 = 50.0 * tprior.tau * math.sqrt(max(tprior.nu_t, 1.0))
    w = math.sqrt(sse1 / (m1 * info))
    cuts = sorted({-span0, 0.0, span0, th - 50 * w, th, th + 50 * w})
    pieces = [(-math.inf, cuts[0])] + [
        (cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)
    ] + [(cuts[-1], math.inf)]
    log_num, rel = _log_quad(log_f, pieces)
    if rel > 1e-6:
        raise IntegrationFailure(f"fat-tail quadrature relative error {rel}")
    return BfResult(lc2 + log_num - log_den,
                    diag={"quad_abs_err": rel, "mc_std_err": 0.0})


def fat_tail_limit_kind(tprior: FatTailedTPrior, prior0: VariancePrior,
                        dims: Dims, info: float = 1.0,
                        s_y2: float | None = None) -> LimitResult:
    """Trichotomy for the fat-tailed prior as |theta_hat| -> infinity: the
    comparison is between n + nu0 and min(n + nu1, nu_t + 1).

    In the knife-edge finite case the limit value depends on the (fixed)
    residual scale; ``info`` and ``s_y2`` pin it down, defaulting to the
    audit convention info = 1, s_y2 = n - 1.
    """
    n = dims.n
    m1 = n + tprior.nu
    m0 = n + prior0.nu
    nu_t = tprior.nu_t
    cut = min(m1, nu_t + 1.0)
    if m0 < cut:
        return LimitResult("zero", governing="fat-tail trichotomy")
    if m0 > cut:
        return LimitResult("infinite", governing="fat-tail trichotomy")
    # Knife edge: the numerator integral splits into a hump near 0 decaying
    # like theta_hat^{-(n+nu1)} and a hump near theta_hat decaying like
    # theta_hat^{-(nu_t+1)}; only pieces matching the denominator rate m0
    # survive in the limit.
    if s_y2 is None:
        s_y2 = float(n - 1)
    sse1 = tprior.nu * tprior.s2 + s_y2
    lc2 = log_c2(prior0, tprior, dims)
    total = 0.0
    if m0 == m1:
        total += info ** (-0.5 * m1)  # prior mass near 0, kernel at theta_hat
    if m0 == nu_t + 1.0:
        # prior tail constant K_t and the full kernel integral J
        log_kt = (
            log_gamma(0.5 * (nu_t + 1.0)) - log_gamma(0.5 * nu_t)
            - 0.5 * math.log(nu_t * math.pi) - math.log(tprior.tau)
            + 0.5 * (nu_t + 1.0) * math.log(nu_t * tprior.tau ** 2)
        )
        log_j = (
            -0.5 * (m1 - 1.0) * math.log(sse1) - 0.5 * math.log(info)
            + log_gamma(0.5) + log_gamma(0.5 * (m1 - 1.0)) - log_gamma(0.5 * m1)
        )
        total += math.exp(log_kt + log_j)
    value = math.exp(lc2 + 0.5 * m0 * math.log(info)) * total
    return LimitResult("finite", value=value, governing="fat-tail trichotomy")
