"""Information-(in)consistency audits.

``audit`` returns the analytic verdict on what the Bayes factor does as the
evidence against the null grows without bound (|theta_hat| -> infinity at
fixed residual scale); ``empirical_probe`` validates a verdict numerically
by actually driving theta_hat up a log-spaced grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import Inconclusive, Unsupported
from .model import Dims, SuffStats
from .priors import (
    AdaptiveGPrior,
    ConjugatePrior,
    CustomTail,
    FatTailedTPrior,
    GMixturePrior,
    PointMassTail,
    PolynomialTail,
    SemiConjugatePrior,
    VariancePrior,
    prior_orthant_prob,
)
from . import bayes_precise as bp
from . import bayes_onesided as bo

__all__ = ["Verdict", "ProbeReport", "audit", "mixture_integral_diverges",
           "empirical_probe"]

_KINDS = ("zero", "finite", "diverges")


@dataclass(frozen=True)
class Verdict:
    kind: str  # "zero" | "finite" | "diverges"
    governing: str
    detail: str = ""
    value: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"bad verdict kind {self.kind!r}")
        if self.value is not None and not self.value > 0:
            raise ValueError("finite limit value must be positive")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "lemma": self.governing, "detail": self.detail}
        if self.value is not None:
            out["value"] = self.value
        return out


@dataclass(frozen=True)
class ProbeReport:
    magnitudes: np.ndarray
    log_bfs: np.ndarray
    classification: dict
    agreement: bool
    verdict: Verdict = field(repr=False, default=None)


def mixture_integral_diverges(mixture: GMixturePrior, q: float) -> bool:
    """Does the consistency integral of (g+1)^q against pi(g) diverge?

    Polynomial tails answer analytically; a point mass never diverges; an
    unknown tail class falls back to an escalating partial-integral test.
    """
    tail = mixture.tail
    if isinstance(tail, PointMassTail):
        return False
    if isinstance(tail, PolynomialTail):
        return q - tail.alpha >= -1.0
    # Custom tail: partial integrals over [0, 10^k]; growth ratio decides.
    parts = []
    prev_hi = 0.0
    total = 0.0
    for k in range(1, 13):
        hi = 10.0**k
        val, _ = integrate.quad(
            lambda g: (g + 1.0) ** q * mixture.density(g),
            prev_hi, hi, limit=400,
        )
        total += val
        parts.append(total)
        prev_hi = hi
    ratio = parts[-1] / parts[-2] if parts[-2] > 0 else math.inf
    if ratio >= 1.01:
        return True
    if ratio <= 1.001:
        return False
    raise Inconclusive(
        f"partial integrals neither saturate nor clearly grow (last ratio {ratio})"
    )


def _lemma1_verdict(prior0: VariancePrior, prior1: ConjugatePrior, dims: Dims,
                    info_theta) -> Verdict:
    res = bp.bf_conjugate_limit(prior0, prior1, dims, info_theta)
    if res.kind == "zero":
        return Verdict("zero", "Lemma 1", "nu0 < nu1: the Bayes factor vanishes")
    if res.kind == "infinite":
        return Verdict("diverges", "Lemma 1", "nu0 > nu1: the Bayes factor diverges")
    return Verdict("finite", "Lemma 1",
                   "nu0 = nu1: bounded by C1 (1 + lambda_max)^{(n+nu-r2)/2}",
                   value=res.value)


def _mixture_precise_verdict(prior0: VariancePrior, mixture: GMixturePrior,
                             dims: Dims) -> Verdict:
    n, r1, r2 = dims.n, dims.r1, dims.r2
    nu0, nu1 = prior0.nu, mixture.nu
    if isinstance(mixture.tail, PointMassTail):
        # degenerate mixture behaves exactly like the fixed-g conjugate prior
        if nu0 < nu1:
            return Verdict("zero", "Lemma 1", "point-mass mixture with nu0 < nu1")
        if nu0 > nu1:
            return Verdict("diverges", "Lemma 1", "point-mass mixture with nu0 > nu1")
        return Verdict("finite", "Lemma 1", "point-mass mixture with nu0 = nu1")
    if nu0 > nu1:
        return Verdict("diverges", "Lemma 2",
                       "nu0 > nu1: diverges for every fixed g, hence for the mixture")
    if nu0 == nu1:
        q = 0.5 * (n - r1 - r2 + nu1)
        if mixture_integral_diverges(mixture, q):
            return Verdict("diverges", "Lemma 2",
                           f"integral of (g+1)^{{{q}}} pi(g) dg diverges")
        return Verdict("finite", "Lemma 2",
                       f"integral of (g+1)^{{{q}}} pi(g) dg converges")
    # nu0 < nu1
    if isinstance(mixture.tail, PolynomialTail):
        thr = 0.5 * (n - r1 - r2 + nu0) + 1.0
        alpha = mixture.tail.alpha
        if alpha < thr:
            return Verdict("diverges", "Lemma 3",
                           f"tail exponent alpha={alpha} < threshold {thr}")
        return Verdict("zero", "Lemma 3",
                       f"tail exponent alpha={alpha} >= threshold {thr}")
    q = 0.5 * (n - r1 - r2 + nu1)
    if not mixture_integral_diverges(mixture, q):
        return Verdict("zero", "Lemma 2",
                       "necessary divergence condition fails with nu0 < nu1")
    raise Inconclusive(
        "nu0 < nu1 with unknown tail class: the divergence condition is only "
        "necessary, so no verdict is available"
    )


def audit(test: str, prior1, prior0: VariancePrior | None = None,
          dims: Dims | None = None, info_theta=None, seed: int = 0) -> Verdict:
    """Analytic information-consistency verdict for a (test, prior) pair."""
    if dims is None:
        raise ValueError("dims is required")
    if prior0 is None:
        prior0 = VariancePrior(getattr(prior1, "s2", 0.0), getattr(prior1, "nu", 0.0))
    r1 = dims.r1
    if info_theta is None:
        info_theta = np.eye(r1)

    if test == "precise":
        if isinstance(prior1, ConjugatePrior):
            return _lemma1_verdict(prior0, prior1, dims, info_theta)
        if isinstance(prior1, SemiConjugatePrior):
            if prior0.nu < prior1.nu:
                return Verdict("zero", "semi-conjugate limit", "nu0 < nu1")
            if prior0.nu > prior1.nu:
                return Verdict("diverges", "semi-conjugate limit", "nu0 > nu1")
            return Verdict("finite", "semi-conjugate limit",
                           "nu0 = nu1: the Bayes factor tends to C2",
                           value=math.exp(bp.log_c2(prior0, prior1, dims)))
        if isinstance(prior1, GMixturePrior):
            return _mixture_precise_verdict(prior0, prior1, dims)
        if isinstance(prior1, FatTailedTPrior):
            res = bp.fat_tail_limit_kind(
                prior1, prior0, dims,
                info=float(np.atleast_2d(info_theta)[0, 0]),
            )
            kind = {"zero": "zero", "finite": "finite", "infinite": "diverges"}[res.kind]
            detail = (
                f"n+nu0 = {dims.n + prior0.nu} vs "
                f"min(n+nu1, nu_t+1) = {min(dims.n + prior1.nu, prior1.nu_t + 1)}"
            )
            return Verdict(kind, "fat-tail trichotomy", detail, value=res.value)
        if isinstance(prior1, AdaptiveGPrior):
            return Verdict("diverges", "Lemma 4",
                           "maximized-g Bayes factor grows without bound")
        raise Unsupported(f"precise test with {type(prior1).__name__}")

    if test == "onesided":
        if isinstance(prior1, ConjugatePrior):
            v = np.ones(r1) / math.sqrt(r1)
            lim = bo.onesided_limit_direction(v, prior1, dims, info_theta, seed=seed)
            return Verdict("finite", "Lemma 5",
                           "posterior orthant probability bounded away from 0 and 1",
                           value=math.exp(lim.limit_log_bf))
        if isinstance(prior1, SemiConjugatePrior):
            p = prior_orthant_prob(prior1.Omega, seed=seed).value
            return Verdict("finite", "Lemma 7",
                           "posterior probability tends to 1/2",
                           value=1.0 / (1.0 / p - 1.0))
        if isinstance(prior1, GMixturePrior):
            q = 0.5 * (dims.n - dims.r1 - dims.r2 + prior1.nu)
            if isinstance(prior1.tail, PointMassTail):
                return Verdict("finite", "Lemma 6",
                               "fixed-g one-sided Bayes factor stays bounded")
            if mixture_integral_diverges(prior1, q):
                return Verdict("diverges", "Lemma 6",
                               f"integral of (g+1)^{{{q}}} pi(g) dg diverges")
            return Verdict("finite", "Lemma 6",
                           f"integral of (g+1)^{{{q}}} pi(g) dg converges")
        if isinstance(prior1, AdaptiveGPrior):
            return Verdict("diverges", "Lemma 8",
                           "adaptive-g one-sided Bayes factor is information consistent")
        raise Unsupported(f"one-sided test with {type(prior1).__name__}")

    if test == "multiple":
        # classification concerns B21 = B20 / B10 along theta_hat -> +infinity
        if isinstance(prior1, ConjugatePrior):
            return Verdict("finite", "Lemma 5",
                           "B20/B10 is an odds ratio of orthant probabilities, "
                           "both bounded: B21 plateaus even when B20 diverges")
        if isinstance(prior1, GMixturePrior):
            q2 = 0.5 * (dims.n - dims.r1 - dims.r2 + prior1.nu)
            precise = _mixture_precise_verdict(prior0, prior1, dims)
            onesided_div = (not isinstance(prior1.tail, PointMassTail)
                            and mixture_integral_diverges(prior1, q2))
            if precise.kind == "diverges" and onesided_div:
                return Verdict("diverges", "Lemma 6",
                               "mixture satisfies both divergence conditions: "
                               "B20 and B21 diverge")
            return Verdict("finite", "Lemma 6",
                           "at least one divergence condition fails")
        if isinstance(prior1, SemiConjugatePrior):
            return Verdict("finite", "Lemma 7",
                           "one-sided probabilities converge to 1/2 so B21 plateaus")
        raise Unsupported(f"multiple test with {type(prior1).__name__}")

    raise Unsupported(f"unknown test kind {test!r}")


def _probe_stats(theta_hat: np.ndarray, info: np.ndarray, n: int) -> SuffStats:
    s_y2 = float(n - 1)
    ssr = float(theta_hat @ info @ theta_hat)
    t = None
    if theta_hat.shape[0] == 1:
        t = float(theta_hat[0]) * math.sqrt(info[0, 0]) / math.sqrt(s_y2 / (n - 1))
    return SuffStats(theta_hat, np.empty(0), info, s_y2, ssr, t)


def _probe_log_bf(test, prior1, prior0, stats_, dims, seed):
    if test == "precise":
        if isinstance(prior1, ConjugatePrior):
            return bp.bf_conjugate(stats_, prior0, prior1, dims).log_bf
        if isinstance(prior1, SemiConjugatePrior):
            return bp.bf_semiconjugate(stats_, prior0, prior1, dims, seed=seed).log_bf
        if isinstance(prior1, GMixturePrior):
            return bp.bf_mixture(stats_, prior0, prior1, dims).log_bf
        if isinstance(prior1, FatTailedTPrior):
            return bp.bf_fat_tail(stats_, prior0, prior1, dims).log_bf
        if isinstance(prior1, AdaptiveGPrior):
            return bp.bf_adaptive(stats_, prior1, dims).log_bf
    elif test == "onesided":
        if isinstance(prior1, ConjugatePrior):
            return bo.bf_onesided_conjugate(stats_, prior1, dims, seed=seed).log_bf
        if isinstance(prior1, SemiConjugatePrior):
            return bo.bf_onesided_independence(stats_, prior1, dims, seed=seed).log_bf
        if isinstance(prior1, GMixturePrior):
            return bo.bf_onesided_mixture(stats_, prior1, dims, seed=seed,
                                          var_prior=prior0).log_bf
        if isinstance(prior1, AdaptiveGPrior):
            return bo.bf_onesided_adaptive_g(stats_, dims, seed=seed,
                                             nu=prior1.nu, s2=prior1.s2).log_bf
    elif test == "multiple":
        return bo.bf_multiple(stats_, prior1, dims, seed=seed, prior0=prior0).log_b21
    raise Unsupported(f"probe does not support ({test}, {type(prior1).__name__})")


def empirical_probe(test: str, prior1, dims: Dims,
                    prior0: VariancePrior | None = None,
                    direction=None, grid_decades: int = 8, seed: int = 0,
                    info_theta=None) -> ProbeReport:
    """Drive |theta_hat| up a log grid and classify the tail behavior of
    log BF by a least-squares slope over the last three decades."""
    if grid_decades < 4:
        raise ValueError("grid_decades must be at least 4")
    if prior0 is None:
        prior0 = VariancePrior(getattr(prior1, "s2", 0.0), getattr(prior1, "nu", 0.0))
    r1 = dims.r1
    if direction is None:
        direction = np.ones(r1) / math.sqrt(r1)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    info = np.eye(r1) if info_theta is None else np.atleast_2d(info_theta)

    mags = 10.0 ** np.arange(0, grid_decades + 1, dtype=float)
    log_bfs = np.array([
        _probe_log_bf(test, prior1, prior0,
                      _probe_stats(m * direction, info, dims.n), dims,
                      seed + 101 * k)
        for k, m in enumerate(mags)
    ])
    tail = mags >= mags[-1] / 10.0**3
    slope = float(np.polyfit(np.log(mags[tail]), log_bfs[tail], 1)[0])
    if abs(slope) < 0.02:
        classification = {"kind": "plateau", "level": float(log_bfs[-1])}
    elif slope > 0:
        classification = {"kind": "growth", "slope": slope}
    else:
        classification = {"kind": "decay", "slope": slope}
    verdict = audit(test, prior1, prior0, dims, info_theta=info, seed=seed)
    expected = {"diverges": "growth", "finite": "plateau", "zero": "decay"}[verdict.kind]
    return ProbeReport(mags, log_bfs, classification,
                       classification["kind"] == expected, verdict)
