"""Prior families for theta and sigma^2.

Priors on the nuisance block gamma are always flat and carry no
representation.  The variance prior is an inverse-chi-square(s2, nu); nu=0
selects the improper 1/sigma^2 branch, in which case s2 is irrelevant and
stored as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConfigError, DataError, DomainError
from .mc import McConfig, mvn_orthant
from .special import ProbEstimate

__all__ = [
    "VariancePrior",
    "ConjugatePrior",
    "SemiConjugatePrior",
    "PolynomialTail",
    "PointMassTail",
    "CustomTail",
    "GMixturePrior",
    "FatTailedTPrior",
    "AdaptiveGPrior",
    "make_hyper_g",
    "make_zellner_siow",
    "prior_orthant_prob",
    "parse_prior",
    "resolve_omega",
]


def _validate_variance(s2: float, nu: float) -> tuple[float, float]:
    if nu < 0:
        raise DomainError(f"nu must be >= 0, got {nu}")
    if s2 < 0:
        raise DomainError(f"s2 must be >= 0, got {s2}")
    if nu == 0:
        s2 = 0.0  # improper branch: pi(sigma^2) propto 1/sigma^2
    return float(s2), float(nu)


def _validate_spd(Omega) -> np.ndarray:
    Omega = np.atleast_2d(np.asarray(Omega, dtype=float))
    if Omega.shape[0] != Omega.shape[1] or not np.allclose(Omega, Omega.T, atol=1e-10):
        raise DomainError("Omega must be a symmetric square matrix")
    if np.linalg.eigvalsh(Omega)[0] <= 0:
        raise DomainError("Omega must be positive definite")
    return Omega


@dataclass(frozen=True)
class VariancePrior:
    """Inverse-chi-square(s2, nu) prior on sigma^2 under the null side."""

    s2: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        s2, nu = _validate_variance(self.s2, self.nu)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "nu", nu)


@dataclass(frozen=True)
class ConjugatePrior:
    """theta | sigma^2 ~ N(0, sigma^2 Omega), sigma^2 ~ inv-chi2(s2, nu)."""

    Omega: np.ndarray
    s2: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "Omega", _validate_spd(self.Omega))
        s2, nu = _validate_variance(self.s2, self.nu)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "nu", nu)

    @property
    def r1(self) -> int:
        return self.Omega.shape[0]


@dataclass(frozen=True)
class SemiConjugatePrior:
    """theta ~ N(0, Omega) independent of sigma^2 ~ inv-chi2(s2, nu)."""

    Omega: np.ndarray
    s2: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "Omega", _validate_spd(self.Omega))
        s2, nu = _validate_variance(self.s2, self.nu)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "nu", nu)

    @property
    def r1(self) -> int:
        return self.Omega.shape[0]


@dataclass(frozen=True)
class PolynomialTail:
    """Bounds K_lo g^{-alpha} <= pi(g) <= K_hi g^{-alpha} valid for g >= m."""

    alpha: float
    k_lo: float = 1.0
    k_hi: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if self.alpha <= 1:
            raise DomainError("polynomial tail needs alpha > 1 to normalize")
        if not 0 < self.k_lo <= self.k_hi:
            raise DomainError("need 0 < k_lo <= k_hi")


@dataclass(frozen=True)
class PointMassTail:
    g0: float

    def __post_init__(self):
        if self.g0 <= 0:
            raise DomainError("point mass location must be positive")


@dataclass(frozen=True)
class CustomTail:
    """Unknown tail class: forces numeric divergence testing in the auditor."""


@dataclass(frozen=True)
class GMixturePrior:
    """Mixture of g-priors: theta | g, sigma^2 ~ N(0, g sigma^2 Omega) with
    a density pi(g) on (0, inf)."""

    density: Callable[[float], float]
    tail: PolynomialTail | PointMassTail | CustomTail
    Omega: np.ndarray | None = None
    s2: float = 0.0
    nu: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        if self.Omega is not None:
            object.__setattr__(self, "Omega", _validate_spd(self.Omega))
        s2, nu = _validate_variance(self.s2, self.nu)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "nu", nu)
        if not isinstance(self.tail, PointMassTail):
            total, _ = integrate.quad(self.density, 0.0, np.inf, limit=400)
            if abs(total - 1.0) > 1e-6:
                raise DomainError(
                    f"mixing density normalizes to {total}, not 1 within 1e-6"
                )

    def with_omega(self, Omega) -> "GMixturePrior":
        return GMixturePrior(self.density, self.tail, Omega, self.s2, self.nu, self.name)


@dataclass(frozen=True)
class FatTailedTPrior:
    """theta ~ t(0, tau, nu_t) independent of sigma^2 ~ inv-chi2(s2, nu).

    Supported only in the scalar full-null setting (r1=1, r2=0).
    """

    tau: float
    nu_t: float
    s2: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if self.tau <= 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        if self.nu_t <= 0:
            raise DomainError(f"nu_t must be positive, got {self.nu_t}")
        s2, nu = _validate_variance(self.s2, self.nu)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "nu", nu)

    def log_density(self, theta: float) -> float:
        v, tau = self.nu_t, self.tau
        return (
            math.lgamma((v + 1) / 2.0)
            - math.lgamma(v / 2.0)
            - 0.5 * math.log(v * math.pi)
            - math.log(tau)
            - ((v + 1) / 2.0) * math.log1p(theta * theta / (v * tau * tau))
        )


@dataclass(frozen=True)
class AdaptiveGPrior:
    """g-prior with g chosen at evaluation time to maximize the Bayes
    factor; the base scale is Omega = (X_theta' Sigma^{-1} X_theta)^{-1}."""

    s2: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        s2, nu = _validate_variance(self.s2, self.nu)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "nu", nu)


def make_hyper_g(a: float, Omega=None) -> GMixturePrior:
    """Hyper-g mixing density pi(g) = ((a-2)/2) (1+g)^{-a/2}, a > 2."""
    if a <= 2:
        raise DomainError(f"hyper-g requires a > 2, got {a}")

    def density(g: float) -> float:
        return 0.5 * (a - 2.0) * (1.0 + g) ** (-0.5 * a)

    return GMixturePrior(density, PolynomialTail(alpha=0.5 * a), Omega, name="hyper-g")


def make_zellner_siow(n: int, info=None) -> GMixturePrior:
    """Inverse-gamma(1/2, n/2) mixing density on g: the standard heavy-tailed
    choice with polynomial tail exponent 3/2."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    half_n = 0.5 * n
    lognorm = 0.5 * math.log(half_n) - math.lgamma(0.5)

    def density(g: float) -> float:
        if g <= 0:
            return 0.0
        return math.exp(lognorm - 1.5 * math.log(g) - half_n / g)

    Omega = None if info is None else np.linalg.inv(_validate_spd(info))
    return GMixturePrior(density, PolynomialTail(alpha=1.5), Omega, name="zellner-siow")


def make_point_mass(g0: float, Omega=None) -> GMixturePrior:
    """Degenerate mixture at g = g0 (reduces to a fixed-g conjugate prior)."""
    tail = PointMassTail(g0)
    return GMixturePrior(lambda g: 0.0, tail, Omega, name="point-mass")


def prior_orthant_prob(Omega, seed: int = 0) -> ProbEstimate:
    """P(theta <= 0) under N(0, Omega); exact 1/2 in one dimension."""
    Omega = _validate_spd(Omega)
    r1 = Omega.shape[0]
    if r1 == 1:
        return ProbEstimate(0.5, 0.0)
    return mvn_orthant(np.zeros(r1), Omega, McConfig(seed=seed))


def resolve_omega(spec, r1: int = 1, info_theta=None) -> np.ndarray:
    """Resolve an omega spec: ``g:<val>`` (needs info_theta), ``identity``,
    a CSV matrix path, or an already-numeric matrix."""
    if isinstance(spec, (int, float)):
        return np.array([[float(spec)]]) if r1 == 1 else float(spec) * np.eye(r1)
    if isinstance(spec, (list, np.ndarray)):
        return _validate_spd(spec)
    if not isinstance(spec, str):
        raise ConfigError(f"cannot interpret omega spec {spec!r}")
    if spec == "identity":
        return np.eye(r1)
    if spec.startswith("g:"):
        try:
            g = float(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad g-prior spec {spec!r}") from None
        if g <= 0:
            raise ConfigError("g must be positive")
        if info_theta is None:
            raise ConfigError("g-prior omega requires the design information matrix")
        return g * np.linalg.inv(np.atleast_2d(np.asarray(info_theta, dtype=float)))
    try:
        mat = np.loadtxt(spec, delimiter=",")
    except OSError as exc:
        raise DataError(f"cannot read omega matrix: {exc}") from None
    return _validate_spd(np.atleast_2d(mat))


def parse_prior(cfg: dict, r1: int = 1, info_theta=None, n: int | None = None):
    """Build a prior object from the JSON grammar, e.g.
    ``{"family":"conjugate","omega":"g:5.0","s2":1.0,"nu":0}``."""
    if not isinstance(cfg, dict):
        raise ConfigError("prior spec must be a JSON object")
    fam = cfg.get("family")
    s2 = float(cfg.get("s2", 0.0))
    nu = float(cfg.get("nu", 0.0))
    if fam in ("conjugate", "semi-conjugate"):
        Omega = resolve_omega(cfg.get("omega", "identity"), r1, info_theta)
        cls = ConjugatePrior if fam == "conjugate" else SemiConjugatePrior
        return cls(Omega, s2=s2, nu=nu)
    if fam == "variance":
        return VariancePrior(s2=s2, nu=nu)
    if fam == "hyper-g":
        if "a" not in cfg:
            raise ConfigError("hyper-g prior requires field 'a'")
        Omega = resolve_omega(cfg.get("omega", "g:1.0"), r1, info_theta) if "omega" in cfg else None
        if Omega is None and info_theta is not None:
            Omega = np.linalg.inv(np.atleast_2d(np.asarray(info_theta, dtype=float)))
        pr = make_hyper_g(float(cfg["a"]), Omega)
        return GMixturePrior(pr.density, pr.tail, pr.Omega, s2, nu, pr.name)
    if fam == "zellner-siow":
        if n is None:
            raise ConfigError("zellner-siow prior requires the sample size")
        pr = make_zellner_siow(int(n), info_theta)
        return GMixturePrior(pr.density, pr.tail, pr.Omega, s2, nu, pr.name)
    if fam == "fat-t":
        try:
            return FatTailedTPrior(float(cfg["tau"]), float(cfg["nu_t"]), s2=s2, nu=nu)
        except KeyError as exc:
            raise ConfigError(f"fat-t prior requires field {exc}") from None
    if fam == "adaptive-g":
        return AdaptiveGPrior(s2=s2, nu=nu)
    raise ConfigError(f"unknown prior family {fam!r}")
