"""Bayes factors for the one-sided test H0: theta <= 0 vs H1: otherwise,
and the three-way precise/one-sided test.

Everything is composed from two orthant probabilities: the prior probability
P(theta <= 0) and the posterior probability P(theta <= 0 | y), combined as a
ratio of posterior to prior odds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import IntegrationFailure, InvalidData, MCFailure, Unsupported
from .mc import McConfig, mvt_orthant
from .model import Dims, SuffStats
from .bayes_precise import (
    _ConjEig,
    _log_quad,
    _mixture_log_g_pieces,
    bf_conjugate,
    bf_mixture,
    bf_semiconjugate,
    log_c2,
)
from .priors import (
    ConjugatePrior,
    GMixturePrior,
    PointMassTail,
    SemiConjugatePrior,
    VariancePrior,
    prior_orthant_prob,
)
from .special import ProbEstimate, student_t_cdf

__all__ = [
    "OnesidedResult",
    "OnesidedLimit",
    "MultipleResult",
    "bf_onesided_conjugate",
    "bf_onesided_univariate",
    "onesided_limit_direction",
    "bf_onesided_independence",
    "bf_onesided_mixture",
    "bf_onesided_adaptive_g",
    "bf_multiple",
]

_P_LO = 1e-300
_P_HI = 1.0 - 1e-16


@dataclass(frozen=True)
class OnesidedResult:
    log_bf: float
    prior_prob: ProbEstimate
    post_prob: ProbEstimate
    diag: dict = field(default_factory=dict)

    @property
    def bf(self) -> float:
        try:
            return math.exp(self.log_bf)
        except OverflowError:
            return math.inf


@dataclass(frozen=True)
class OnesidedLimit:
    v_star: np.ndarray
    scale: np.ndarray
    df: float
    limit_log_bf: float


@dataclass(frozen=True)
class MultipleResult:
    log_b10: float
    log_b20: float
    log_b21: float


def _compose(prior: ProbEstimate, post: ProbEstimate, diag=None) -> OnesidedResult:
    """Eq-of-odds composition: B10 = (P_prior^{-1}-1)^{-1} (P_post^{-1}-1),
    with clamping against MC zeros (flagged)."""
    diag = dict(diag or {})
    pp, qq = prior.value, post.value
    if not (_P_LO <= pp <= _P_HI) or not (_P_LO <= qq <= _P_HI):
        diag["clamped"] = True
    pp = min(max(pp, _P_LO), _P_HI)
    qq = min(max(qq, _P_LO), _P_HI)
    log_bf = (math.log1p(-qq) - math.log(qq)) - (math.log1p(-pp) - math.log(pp))
    return OnesidedResult(log_bf, prior, post, diag)


def _posterior_t_params(stats_: SuffStats, Omega: np.ndarray, s2: float, nu: float,
                        dims: Dims):
    """Mean, scale, and df of the conjugate posterior of theta."""
    info = np.atleast_2d(stats_.info_theta)
    prec = info + np.linalg.inv(Omega)
    cov = np.linalg.inv(prec)
    mean = cov @ info @ np.atleast_1d(stats_.theta_hat)
    eig = _ConjEig(info, Omega, stats_.theta_hat)
    m = dims.n + nu - dims.r2
    s = (nu * s2 + stats_.s_y2 + eig.quad_shrunk()) / m
    return mean, s * cov, m


def bf_onesided_conjugate(stats_: SuffStats, enc: ConjugatePrior, dims: Dims,
                          seed: int = 0) -> OnesidedResult:
    """One-sided Bayes factor under a zero-centered conjugate encompassing
    prior: posterior of theta is multivariate t, so both probabilities are
    orthant evaluations."""
    if enc.nu == 0 and stats_.s_y2 <= 0:
        raise InvalidData("zero residual sum of squares with nu = 0")
    prior = prior_orthant_prob(enc.Omega, seed=seed)
    mean, scale, df = _posterior_t_params(stats_, enc.Omega, enc.s2, enc.nu, dims)
    post = mvt_orthant(mean, scale, df, McConfig(seed=seed + 1))
    return _compose(prior, post)


def bf_onesided_univariate(t: float, n: int, rho: float, mode: str = "value") -> float:
    """Closed-form one-sided Bayes factor for the unit-vector design with
    equicorrelated errors, Omega = 1, nu = 0; ``mode='limit'`` gives the
    t -> +infinity value (the t -> -infinity value is its reciprocal)."""
    if n < 2:
        raise InvalidData(f"need n >= 2, got {n}")
    rho_bar = 1.0 + (n - 1) * rho
    if mode == "limit":
        p = student_t_cdf(-n / math.sqrt(rho_bar), n)
        return 1.0 / p - 1.0
    if mode != "value":
        raise ValueError(f"mode must be 'value' or 'limit', got {mode!r}")
    if t == 0.0:
        return 1.0
    arg = math.sqrt(
        n * n / (rho_bar + (n - 1.0) * (1.0 + n + (n - 1.0) * rho) / (t * t))
    )
    p = student_t_cdf(-arg, n)
    if t > 0:
        return 1.0 / p - 1.0
    return 1.0 / (1.0 - p) - 1.0


def onesided_limit_direction(v, prior: ConjugatePrior, dims: Dims,
                             info_theta, seed: int = 0) -> OnesidedLimit:
    """Limiting posterior of theta (suitably standardized) when theta_hat
    grows along the unit direction v: a multivariate t with noncentrality
    v*, so the one-sided Bayes factor stays bounded."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    v = v / np.linalg.norm(v)
    info = np.atleast_2d(np.asarray(info_theta, dtype=float))
    Omega = prior.Omega
    m = dims.n + prior.nu - dims.r2
    prec = info + np.linalg.inv(Omega)
    cov = np.linalg.inv(prec)
    eig = _ConjEig(info, Omega, v)
    denom = math.sqrt(eig.quad_shrunk() / m)
    v_star = (cov @ info @ v) / denom
    post = mvt_orthant(v_star, cov, m, McConfig(seed=seed + 1))
    prior_p = prior_orthant_prob(Omega, seed=seed)
    res = _compose(prior_p, post)
    return OnesidedLimit(v_star=v_star, scale=cov, df=m, limit_log_bf=res.log_bf)


def bf_onesided_independence(stats_: SuffStats, enc: SemiConjugatePrior, dims: Dims,
                             seed: int = 0, mode: str = "value",
                             n_points: int = 2 * 10**5) -> OnesidedResult:
    """One-sided Bayes factor under the independence (semi-conjugate)
    encompassing prior.  The posterior has no closed form: r1 = 1 uses
    quadrature of the posterior kernel, r1 > 1 importance-samples from the
    conjugate posterior.  In limit mode the posterior probability tends to
    1/2, so the BF tends to (P_prior^{-1} - 1)^{-1}."""
    prior = prior_orthant_prob(enc.Omega, seed=seed)
    if mode == "limit":
        return _compose(prior, ProbEstimate(0.5, 0.0), {"mode": "limit"})
    if mode != "value":
        raise ValueError(f"mode must be 'value' or 'limit', got {mode!r}")
    if enc.nu == 0 and stats_.s_y2 <= 0:
        raise InvalidData("zero residual sum of squares with nu = 0")
    m = dims.n + enc.nu - dims.r2
    sse = enc.nu * enc.s2 + stats_.s_y2
    info = np.atleast_2d(stats_.info_theta)
    th = np.atleast_1d(stats_.theta_hat)

    if dims.r1 == 1:
        i0 = float(info[0, 0])
        t0 = float(th[0])
        omega = float(enc.Omega[0, 0])
        sd = math.sqrt(omega)
        w = math.sqrt(sse / (m * i0))

        def log_k(x):
            return -0.5 * m * math.log(sse + (x - t0) ** 2 * i0) - 0.5 * x * x / omega

        cuts = sorted({-40 * sd, 0.0, 40 * sd, t0 - 40 * w, t0, t0 + 40 * w})
        pieces = [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]
        log_total, rel = _log_quad(log_k, pieces)
        neg = [(a, min(b, 0.0)) for a, b in pieces if a < 0.0]
        log_neg, rel2 = _log_quad(log_k, neg)
        post = ProbEstimate(math.exp(log_neg - log_total), 0.0)
        if max(rel, rel2) > 1e-6:
            raise IntegrationFailure("posterior quadrature tolerance unattained")
        return _compose(prior, post, {"quad_abs_err": max(rel, rel2)})

    # importance sampling from the conjugate posterior with matching Omega
    mean, scale, df = _posterior_t_params(stats_, enc.Omega, enc.s2, enc.nu, dims)
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(scale)
    z = rng.standard_normal((n_points, dims.r1))
    u = rng.chisquare(df, n_points)
    theta = mean + (z @ chol.T) / np.sqrt(u / df)[:, None]
    d = theta - th
    log_target = -0.5 * m * np.log(sse + np.einsum("ij,jk,ik->i", d, info, d))
    Oi = np.linalg.inv(enc.Omega)
    log_target += -0.5 * np.einsum("ij,jk,ik->i", theta, Oi, theta)
    dm = theta - mean
    Si = np.linalg.inv(scale)
    log_prop = -0.5 * (df + dims.r1) * np.log1p(
        np.einsum("ij,jk,ik->i", dm, Si, dm) / df
    )
    lw = log_target - log_prop
    lw -= lw.max()
    wts = np.exp(lw)
    ess = wts.sum() ** 2 / (wts**2).sum()
    if ess < 1000:
        raise MCFailure(f"importance-sampling effective sample size {ess:.0f} < 1000")
    inside = np.all(theta <= 0.0, axis=1)
    p = float(wts[inside].sum() / wts.sum())
    se = float(
        np.sqrt(np.sum((wts * (inside - p)) ** 2)) / wts.sum()
    )
    return _compose(prior, ProbEstimate(p, se), {"ess": float(ess)})


def bf_onesided_mixture(stats_: SuffStats, mixture: GMixturePrior, dims: Dims,
                        seed: int = 0,
                        var_prior: VariancePrior | None = None) -> OnesidedResult:
    """One-sided Bayes factor under a mixture-of-g encompassing prior: the
    posterior orthant probability is a posterior-weighted average over g of
    conjugate orthant probabilities.

    The directional hypothesis behind the limit theory is verified for the
    two structural cases (r1 = 1, or Omega proportional to the inverse
    information); otherwise the result carries a ``condition_unverified``
    flag and is still computed.
    """
    if var_prior is None:
        var_prior = VariancePrior(mixture.s2, mixture.nu)
    if var_prior.nu == 0 and stats_.s_y2 <= 0:
        raise InvalidData("zero residual sum of squares with nu = 0")
    info = np.atleast_2d(stats_.info_theta)
    Omega = mixture.Omega
    if Omega is None:
        Omega = np.linalg.inv(info)
    diag: dict = {}
    if dims.r1 > 1:
        prod = info @ Omega
        if not np.allclose(prod, prod[0, 0] * np.eye(dims.r1), rtol=1e-8, atol=1e-10):
            diag["condition_unverified"] = True
    prior = prior_orthant_prob(Omega, seed=seed)
    m = dims.n + var_prior.nu - dims.r2
    sse = var_prior.nu * var_prior.s2 + stats_.s_y2
    eig = _ConjEig(info, Omega, stats_.theta_hat)
    prec_base = np.linalg.inv(Omega)

    if isinstance(mixture.tail, PointMassTail):
        g0 = mixture.tail.g0
        enc = ConjugatePrior(g0 * Omega, s2=var_prior.s2, nu=var_prior.nu)
        res = bf_onesided_conjugate(stats_, enc, dims, seed=seed)
        return OnesidedResult(res.log_bf, res.prior_prob, res.post_prob,
                              dict(res.diag, **diag, g_fixed=g0))

    def log_w(u):
        # posterior weight of g on the u = g/(1+g) scale, up to a constant
        if u <= 0.0 or u >= 1.0:
            return -math.inf
        g = u / (1.0 - u)
        dens = mixture.density(g)
        if dens <= 0.0:
            return -math.inf
        return (
            -0.5 * eig.logdet_ig_plus_one(g)
            - 0.5 * m * math.log(sse + eig.quad_shrunk(g))
            + math.log(dens)
            - 2.0 * math.log1p(-u)
        )

    def post_given_g(g, node_seed):
        cov = np.linalg.inv(info + prec_base / g)
        mean = cov @ info @ np.atleast_1d(stats_.theta_hat)
        s = (sse + eig.quad_shrunk(g)) / m
        return mvt_orthant(mean, s * cov, m, McConfig(seed=node_seed)).value

    if dims.r1 == 1:
        def log_w_x(x):
            # posterior weight of g on the x = log g scale
            g = math.exp(x)
            dens = mixture.density(g)
            if dens <= 0.0:
                return -math.inf
            return (
                -0.5 * eig.logdet_ig_plus_one(g)
                - 0.5 * m * math.log(sse + eig.quad_shrunk(g))
                + math.log(dens)
                + x
            )

        def log_num(x):
            lw = log_w_x(x)
            if lw == -math.inf:
                return lw
            p = post_given_g(math.exp(x), seed)
            return lw + math.log(p) if p > 0 else -math.inf

        pieces = _mixture_log_g_pieces(stats_.ssr / sse)
        log_den, rel1 = _log_quad(log_w_x, pieces)
        log_top, rel2 = _log_quad(log_num, pieces)
        post = ProbEstimate(math.exp(log_top - log_den), 0.0)
        if max(rel1, rel2) > 1e-5:
            raise IntegrationFailure("mixture posterior quadrature tolerance unattained")
        return _compose(prior, post, dict(diag, quad_abs_err=max(rel1, rel2)))

    # multivariate: fixed-node Gauss-Legendre in u, per-node orthant MC
    nodes, wts = np.polynomial.legendre.leggauss(96)
    u = 0.5 * (nodes + 1.0)
    wts = 0.5 * wts
    lw = np.array([log_w(ui) for ui in u])
    shift = lw.max()
    w_post = wts * np.exp(lw - shift)
    ps = np.empty_like(u)
    ses = np.empty_like(u)
    for i, ui in enumerate(u):
        est = mvt_orthant(
            *_mix_node_params(stats_, info, prec_base, eig, sse, m, ui / (1.0 - ui)),
            McConfig(seed=seed + 17 * i + 1),
        )
        ps[i], ses[i] = est.value, est.std_error
    denom = w_post.sum()
    p = float((w_post * ps).sum() / denom)
    se = float(np.sqrt((w_post**2 * ses**2).sum()) / denom)
    return _compose(prior, ProbEstimate(p, se), diag)


def _mix_node_params(stats_, info, prec_base, eig, sse, m, g):
    cov = np.linalg.inv(info + prec_base / g)
    mean = cov @ info @ np.atleast_1d(stats_.theta_hat)
    s = (sse + eig.quad_shrunk(g)) / m
    return mean, s * cov, m


def bf_onesided_adaptive_g(stats_: SuffStats, dims: Dims, seed: int = 0,
                           nu: float = 0.0, s2: float = 0.0) -> OnesidedResult:
    """One-sided Bayes factor with the adaptive (maximized) g-prior: the
    optimal g grows with the data, so the posterior converges to a
    multivariate t centered at theta_hat."""
    if nu == 0 and stats_.s_y2 <= 0:
        raise InvalidData("zero residual sum of squares with nu = 0")
    info = np.atleast_2d(stats_.info_theta)
    inv_info = np.linalg.inv(info)
    prior = prior_orthant_prob(inv_info, seed=seed)
    m = dims.n + nu - dims.r2
    sse = nu * s2 + stats_.s_y2
    scale = (sse / m) * inv_info
    post = mvt_orthant(np.atleast_1d(stats_.theta_hat), scale, m,
                       McConfig(seed=seed + 1))
    return _compose(prior, post, {"g_limit": math.inf})


def bf_multiple(stats_: SuffStats, enc, dims: Dims, seed: int = 0,
                prior0: VariancePrior | None = None) -> MultipleResult:
    """Three-way test H0: theta = 0 vs H1: theta <= 0 vs H2: otherwise,
    with H1 and H2 defined by truncating one encompassing prior.

    B10 and B20 reweight the encompassing-vs-null Bayes factor by the
    posterior and prior orthant masses; B21 is their log difference by
    construction.
    """
    if prior0 is None:
        prior0 = VariancePrior(getattr(enc, "s2", 0.0), getattr(enc, "nu", 0.0))
    if isinstance(enc, ConjugatePrior):
        log_bu0 = bf_conjugate(stats_, prior0, enc, dims).log_bf
        prior = prior_orthant_prob(enc.Omega, seed=seed)
        mean, scale, df = _posterior_t_params(stats_, enc.Omega, enc.s2, enc.nu, dims)
        post = mvt_orthant(mean, scale, df, McConfig(seed=seed + 1))
    elif isinstance(enc, GMixturePrior):
        log_bu0 = bf_mixture(stats_, prior0, enc, dims).log_bf
        side = bf_onesided_mixture(stats_, enc, dims, seed=seed, var_prior=prior0)
        prior, post = side.prior_prob, side.post_prob
    elif isinstance(enc, SemiConjugatePrior):
        log_bu0 = bf_semiconjugate(stats_, prior0, enc, dims, seed=seed).log_bf
        side = bf_onesided_independence(stats_, enc, dims, seed=seed)
        prior, post = side.prior_prob, side.post_prob
    else:
        raise Unsupported(
            f"multiple test not supported for prior type {type(enc).__name__}"
        )
    pp = min(max(prior.value, _P_LO), _P_HI)
    qq = min(max(post.value, _P_LO), _P_HI)
    log_b10 = log_bu0 + math.log(qq) - math.log(pp)
    log_b20 = log_bu0 + math.log1p(-qq) - math.log1p(-pp)
    return MultipleResult(log_b10, log_b20, log_b20 - log_b10)
