"""Gaussian linear model with dependent errors and its reparametrization.

The tested combination theta = R beta is made orthogonal (in the
Sigma^{-1} inner product) to the nuisance combination gamma = D beta by
choosing the rows of D from the projected information matrix, after which
GLS estimates of theta and gamma are independent and the sufficient
statistics for every Bayes factor reduce to (theta_hat, info_theta, s_y2).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DataError, OutOfRange, RankDeficient, SingularTransform

__all__ = [
    "Dims",
    "ModelSpec",
    "Reparam",
    "SuffStats",
    "reparametrize",
    "sufficient_stats",
    "equicorrelation",
    "synthetic_stats",
    "load_dataset",
    "parse_sigma",
]

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class Dims:
    n: int
    r1: int
    r2: int


@dataclass(frozen=True)
class ModelSpec:
    y: np.ndarray
    X_beta: np.ndarray
    R: np.ndarray
    Sigma: np.ndarray
    n: int = field(init=False)
    K: int = field(init=False)
    r1: int = field(init=False)
    r2: int = field(init=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        X = np.atleast_2d(np.asarray(self.X_beta, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        S = np.atleast_2d(np.asarray(self.Sigma, dtype=float))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X_beta", X)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Sigma", S)
        n, K = X.shape
        r1 = R.shape[0]
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", K - r1)
        if y.shape[0] != n:
            raise DataError(f"y has length {y.shape[0]}, expected {n}")
        if n <= K:
            raise DataError(f"need n > K, got n={n}, K={K}")
        if R.shape[1] != K:
            raise DataError("R must have K columns")
        if np.linalg.matrix_rank(R) != r1:
            raise RankDeficient("restriction matrix R is not full row rank")
        if S.shape != (n, n) or not np.allclose(S, S.T, atol=1e-10):
            raise DataError("Sigma must be a symmetric n x n matrix")
        if np.linalg.eigvalsh(S)[0] <= 0:
            raise OutOfRange("Sigma must be positive definite")

    @property
    def dims(self) -> Dims:
        return Dims(self.n, self.r1, self.r2)


@dataclass(frozen=True)
class Reparam:
    T: np.ndarray
    D: np.ndarray
    X_theta: np.ndarray
    X_gamma: np.ndarray


@dataclass(frozen=True)
class SuffStats:
    theta_hat: np.ndarray
    gamma_hat: np.ndarray
    info_theta: np.ndarray
    s_y2: float
    ssr: float
    t_stat: float | None


def reparametrize(model: ModelSpec) -> Reparam:
    """Build T = [R; D] with D rows taken from P_R^perp X' Sigma^{-1} X."""
    K, r1, r2 = model.K, model.r1, model.r2
    M = _gls_gram(model.X_beta, model.Sigma)
    R = model.R
    P = np.eye(K) - R.T @ np.linalg.solve(R @ R.T, R)
    A = P @ M
    if r2 > 0:
        # Rank-revealing: column-pivoted QR of A' exposes the most
        # independent rows of A first.
        _, qr_r, piv = linalg.qr(A.T, pivoting=True, mode="economic")
        diag = np.abs(np.diag(qr_r))
        if diag.shape[0] < r2 or diag[r2 - 1] <= 1e-12 * diag[0]:
            raise RankDeficient(
                f"found fewer than r2={r2} independent rows of the projected "
                "information matrix"
            )
        D = A[np.sort(piv[:r2])]
    else:
        D = np.empty((0, K))
    T = np.vstack([R, D])
    if np.linalg.cond(T) > _COND_LIMIT:
        raise SingularTransform("transform T is numerically singular")
    XT = model.X_beta @ np.linalg.inv(T)
    rep = Reparam(T=T, D=D, X_theta=XT[:, :r1], X_gamma=XT[:, r1:])
    _check_block_orthogonal(rep, model.Sigma)
    return rep


def _gls_gram(X: np.ndarray, Sigma: np.ndarray) -> np.ndarray:
    half = linalg.cho_solve(linalg.cho_factor(Sigma, lower=True), X)
    return X.T @ half


def _check_block_orthogonal(rep: Reparam, Sigma: np.ndarray) -> None:
    if rep.X_gamma.shape[1] == 0:
        return
    half = linalg.cho_solve(linalg.cho_factor(Sigma, lower=True), rep.X_gamma)
    cross = rep.X_theta.T @ half
    scale = max(
        np.abs(np.diag(_gls_gram(rep.X_theta, Sigma))).max(),
        np.abs(np.diag(_gls_gram(rep.X_gamma, Sigma))).max(),
    )
    if np.abs(cross).max() > 1e-8 * scale:
        raise SingularTransform("reparametrized blocks are not orthogonal")


def sufficient_stats(model: ModelSpec, rep: Reparam) -> SuffStats:
    """GLS estimates and sums of squares in the (theta, gamma) coordinates."""
    Sigma = model.Sigma
    cf = linalg.cho_factor(Sigma, lower=True)
    Si_y = linalg.cho_solve(cf, model.y)

    info_theta = _gls_gram(rep.X_theta, Sigma)
    theta_hat = np.linalg.solve(info_theta, rep.X_theta.T @ Si_y)
    if model.r2 > 0:
        info_gamma = _gls_gram(rep.X_gamma, Sigma)
        gamma_hat = np.linalg.solve(info_gamma, rep.X_gamma.T @ Si_y)
    else:
        gamma_hat = np.empty(0)
    resid = model.y - rep.X_theta @ theta_hat - rep.X_gamma @ gamma_hat
    s_y2 = float(resid @ linalg.cho_solve(cf, resid))
    s_y2 = max(s_y2, 0.0)
    ssr = float(theta_hat @ info_theta @ theta_hat)
    t_stat = None
    if model.r1 == 1:
        denom = math.sqrt(s_y2 / (model.n - 1)) if s_y2 > 0 else 0.0
        num = float(theta_hat[0]) * math.sqrt(info_theta[0, 0])
        t_stat = num / denom if denom > 0 else math.copysign(math.inf, num) if num else 0.0
    return SuffStats(theta_hat, gamma_hat, info_theta, s_y2, ssr, t_stat)


def equicorrelation(n: int, rho: float) -> np.ndarray:
    """Correlation matrix rho*J_n + (1-rho)*I_n.

    rho = 1 yields a singular (PSD) matrix; it is accepted here because the
    univariate closed forms use it as an algebraic limit, but matrix-based
    paths will reject it through the ModelSpec SPD check.
    """
    if n < 1:
        raise OutOfRange("n must be positive")
    if not (-1.0 / (n - 1) if n > 1 else -math.inf) < rho <= 1.0:
        raise OutOfRange(f"rho={rho} makes the equicorrelation matrix indefinite")
    return rho * np.ones((n, n)) + (1.0 - rho) * np.eye(n)


def ones_info(n: int, rho: float) -> float:
    """1' Sigma^{-1} 1 for the equicorrelation matrix (Sherman-Morrison)."""
    return n / (1.0 + (n - 1) * rho)


def synthetic_stats(n: int, rho: float, *, t: float | None = None,
                    theta_hat: float | None = None,
                    s_y2: float | None = None) -> SuffStats:
    """Sufficient statistics for the univariate design X_theta = 1_n with
    equicorrelated errors, parameterized directly by t or theta_hat.

    This is how the tables and figures are configured: no raw responses
    are needed, only (n, rho, t, s_y2).
    """
    if (t is None) == (theta_hat is None):
        raise DataError("provide exactly one of t or theta_hat")
    info = ones_info(n, rho)
    if s_y2 is None:
        s_y2 = float(n - 1)
    if theta_hat is None:
        theta_hat = t * math.sqrt(s_y2 / (n - 1)) / math.sqrt(info)
    th = np.array([float(theta_hat)])
    info_m = np.array([[info]])
    ssr = float(theta_hat) ** 2 * info
    denom = math.sqrt(s_y2 / (n - 1)) if s_y2 > 0 else 0.0
    t_stat = float(theta_hat) * math.sqrt(info) / denom if denom > 0 else math.inf
    return SuffStats(th, np.empty(0), info_m, float(s_y2), ssr, t_stat)


def load_dataset(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read a CSV with header ``y,x1,...,xK`` into (y, X_beta)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or header[0].strip() != "y":
            raise DataError(f"{path}: first column must be 'y'")
        rows = []
        for i, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {i + 2} has {len(row)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError(f"{path}: row {i + 2}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no observations")
    data = np.asarray(rows)
    return data[:, 0], data[:, 1:]


def parse_sigma(spec: str, n: int) -> np.ndarray:
    """Parse a covariance spec: ``equicorrelation:<rho>`` or a CSV path."""
    if spec.startswith("equicorrelation:"):
        try:
            rho = float(spec.split(":", 1)[1])
        except ValueError:
            raise DataError(f"bad equicorrelation spec {spec!r}") from None
        return equicorrelation(n, rho)
    try:
        mat = np.loadtxt(spec, delimiter=",")
    except OSError as exc:
        raise DataError(f"cannot read covariance matrix: {exc}") from None
    mat = np.atleast_2d(mat)
    if mat.shape != (n, n):
        raise DataError(f"covariance matrix is {mat.shape}, expected ({n}, {n})")
    return mat
