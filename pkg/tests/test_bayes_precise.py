import math

import numpy as np
import pytest
from scipy import integrate, special as sps, stats as spstats

from bfaudit.bayes_precise import (
    bf_adaptive,
    bf_conjugate,
    bf_conjugate_limit,
    bf_fat_tail,
    bf_mixture,
    bf_semiconjugate,
    bf_univariate_t,
    fat_tail_limit_kind,
    log_c2,
)
from bfaudit.errors import InvalidData, Unsupported
from bfaudit.model import Dims, SuffStats, ones_info, synthetic_stats
from bfaudit.priors import (
    AdaptiveGPrior,
    ConjugatePrior,
    FatTailedTPrior,
    GMixturePrior,
    PointMassTail,
    SemiConjugatePrior,
    VariancePrior,
    make_hyper_g,
    make_point_mass,
    make_zellner_siow,
)


def _mv_stats(theta_hat, info, s_y2):
    theta_hat = np.asarray(theta_hat, dtype=float)
    info = np.atleast_2d(np.asarray(info, dtype=float))
    return SuffStats(
        theta_hat=theta_hat,
        gamma_hat=np.zeros(0),
        info_theta=info,
        s_y2=float(s_y2),
        ssr=float(theta_hat @ info @ theta_hat),
        t_stat=None,
    )


def _rand_spd(rng, d):
    A = rng.standard_normal((d, d))
    return A @ A.T + d * np.eye(d)


# ---------------------------------------------------------------------------
# conjugate closed forms


def test_conjugate_matches_univariate_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 30))
        rho = float(rng.uniform(0.0, 1.0))
        t = float(rng.uniform(-6.0, 6.0))
        st = synthetic_stats(n, rho, t=t)
        res = bf_conjugate(st, VariancePrior(), ConjugatePrior(np.eye(1)),
                           Dims(n, 1, 0))
        want = bf_univariate_t(t, n, rho)
        assert res.bf == pytest.approx(want, rel=1e-10)


def test_univariate_limit_closed_form():
    for n, rho in [(2, 0.0), (7, 0.5), (10, 1.0), (20, 0.0)]:
        want = (1.0 + n / (1.0 + (n - 1) * rho)) ** (0.5 * (n - 1))
        assert bf_univariate_t(0.0, n, rho, mode="limit") == pytest.approx(
            want, rel=1e-12
        )
    assert bf_univariate_t(4.0, 7, 0.5) == pytest.approx(5.3074, abs=5e-4)
    with pytest.raises(InvalidData):
        bf_univariate_t(1.0, 1, 0.0)
    with pytest.raises(InvalidData):
        bf_univariate_t(1.0, 5, -0.1)


def test_univariate_monotone_in_abs_t():
    grid = np.linspace(0.0, 30.0, 400)
    vals = [bf_univariate_t(float(t), 7, 0.5) for t in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    # even in t
    assert bf_univariate_t(-3.0, 7, 0.5) == pytest.approx(
        bf_univariate_t(3.0, 7, 0.5), rel=1e-14
    )


def test_log_c2_antisymmetric():
    p0 = VariancePrior(2.0, 3.0)
    p1 = VariancePrior(0.7, 5.0)
    d = Dims(10, 1, 2)
    assert log_c2(p0, p1, d) == pytest.approx(-log_c2(p1, p0, d), rel=1e-14)
    assert log_c2(p0, p0, d) == 0.0


def test_conjugate_scale_invariance_improper():
    # with nu0 = nu1 = 0 the Bayes factor is invariant under a joint rescale
    # of theta_hat and the residual scale
    rng = np.random.default_rng(2)
    info = _rand_spd(rng, 2)
    Omega = _rand_spd(rng, 2)
    th = rng.standard_normal(2)
    dims = Dims(12, 2, 1)
    base = bf_conjugate(_mv_stats(th, info, 5.0), VariancePrior(),
                        ConjugatePrior(Omega), dims)
    for c in (0.1, 3.0, 250.0):
        scaled = bf_conjugate(_mv_stats(c * th, info, c * c * 5.0),
                              VariancePrior(), ConjugatePrior(Omega), dims)
        assert abs(scaled.log_bf - base.log_bf) < 1e-10


def test_conjugate_requires_data_with_improper_prior():
    st = _mv_stats([1.0], [[1.0]], 0.0)
    with pytest.raises(InvalidData):
        bf_conjugate(st, VariancePrior(), ConjugatePrior(np.eye(1)), Dims(5, 1, 0))


# ---------------------------------------------------------------------------
# conjugate limits


def test_conjugate_limit_trichotomy():
    dims = Dims(7, 1, 0)
    info = np.array([[ones_info(7, 0.5)]])
    lo = bf_conjugate_limit(VariancePrior(1.0, 2.0), ConjugatePrior(np.eye(1), 1.0, 4.0),
                            dims, info)
    assert lo.kind == "zero" and lo.governing == "Lemma 1"
    hi = bf_conjugate_limit(VariancePrior(1.0, 4.0), ConjugatePrior(np.eye(1), 1.0, 2.0),
                            dims, info)
    assert hi.kind == "infinite"


def test_conjugate_limit_crosscheck_numeric():
    for n in (2, 5, 7, 10, 20):
        for rho in (0.0, 0.5, 1.0):
            info = np.array([[ones_info(n, rho)]])
            omega = np.eye(1)  # the closed forms use unit prior scale
            lim = bf_conjugate_limit(VariancePrior(), ConjugatePrior(omega),
                                     Dims(n, 1, 0), info)
            assert lim.kind == "finite"
            st = synthetic_stats(n, rho, theta_hat=1e6)
            num = bf_conjugate(st, VariancePrior(), ConjugatePrior(omega),
                               Dims(n, 1, 0))
            assert num.bf == pytest.approx(lim.value, rel=1e-3)
            # and the closed-form limit agrees exactly
            assert lim.value == pytest.approx(
                bf_univariate_t(0.0, n, rho, mode="limit"), rel=1e-10
            )


def test_conjugate_limit_direction_specific():
    rng = np.random.default_rng(4)
    info = _rand_spd(rng, 2)
    Omega = _rand_spd(rng, 2)
    dims = Dims(10, 2, 0)
    v = np.array([0.3, -0.9])
    lim = bf_conjugate_limit(VariancePrior(), ConjugatePrior(Omega), dims, info,
                             direction=v)
    st = _mv_stats(1e8 * v, info, 9.0)
    num = bf_conjugate(st, VariancePrior(), ConjugatePrior(Omega), dims)
    assert num.bf == pytest.approx(lim.value, rel=1e-6)
    # supremum over directions dominates any specific direction
    sup = bf_conjugate_limit(VariancePrior(), ConjugatePrior(Omega), dims, info)
    for _ in range(20):
        w = rng.standard_normal(2)
        lw = bf_conjugate_limit(VariancePrior(), ConjugatePrior(Omega), dims,
                                info, direction=w)
        assert lw.value <= sup.value * (1 + 1e-12)


# ---------------------------------------------------------------------------
# Savage-Dickey consistency


def _mvt_logpdf(x, mu, scale, df):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    d = len(mu)
    dev = x - mu
    q = float(dev @ np.linalg.solve(scale, dev))
    return float(
        sps.gammaln(0.5 * (df + d)) - sps.gammaln(0.5 * df)
        - 0.5 * d * math.log(df * math.pi) - 0.5 * np.linalg.slogdet(scale)[1]
        - 0.5 * (df + d) * math.log1p(q / df)
    )


def test_savage_dickey_identity():
    # matched priors (nu0 = nu1 + r1, s2 adjusted) make B10 a ratio of the
    # prior to posterior density of theta at zero
    rng = np.random.default_rng(7)
    for trial in range(6):
        r1 = 1 + trial % 2
        n = int(rng.integers(r1 + 2, 25))
        nu1 = float(rng.uniform(0.5, 6.0))
        s21 = float(rng.uniform(0.3, 4.0))
        nu0 = nu1 + r1
        s20 = nu1 * s21 / nu0
        Omega = _rand_spd(rng, r1)
        info = _rand_spd(rng, r1)
        th = rng.standard_normal(r1)
        s_y2 = float(rng.uniform(1.0, 10.0)) * n
        st = _mv_stats(th, info, s_y2)
        dims = Dims(n, r1, 0)
        res = bf_conjugate(st, VariancePrior(s20, nu0),
                           ConjugatePrior(Omega, s21, nu1), dims)
        cov = np.linalg.inv(info + np.linalg.inv(Omega))
        mu_n = cov @ info @ th
        m = n + nu1
        quad = float(th @ np.linalg.solve(np.linalg.inv(info) + Omega, th))
        s_hat = (nu1 * s21 + s_y2 + quad) / m
        want = _mvt_logpdf(np.zeros(r1), np.zeros(r1), s21 * Omega, nu1) - \
            _mvt_logpdf(np.zeros(r1), mu_n, s_hat * cov, m)
        assert res.log_bf == pytest.approx(want, rel=1e-10, abs=1e-12)


# ---------------------------------------------------------------------------
# semi-conjugate


def test_semiconjugate_vs_trapezoid_oracle():
    n = 9
    st = synthetic_stats(n, 0.3, t=2.5)
    dims = Dims(n, 1, 0)
    prior0 = VariancePrior(1.0, 2.0)
    prior1 = SemiConjugatePrior(np.array([[2.0]]), 1.5, 3.0)
    res = bf_semiconjugate(st, prior0, prior1, dims)

    info = float(st.info_theta[0, 0])
    th = float(st.theta_hat[0])
    m1 = n + prior1.nu
    m0 = n + prior0.nu
    sse1 = prior1.nu * prior1.s2 + st.s_y2
    sse0 = prior0.nu * prior0.s2 + st.s_y2
    grid = np.linspace(-60.0, 60.0, 4_000_001)
    f = (sse1 + (grid - th) ** 2 * info) ** (-0.5 * m1) * spstats.norm.pdf(
        grid, 0.0, math.sqrt(2.0)
    )
    num = float(np.trapezoid(f, grid))
    lc2 = log_c2(prior0, prior1, dims)
    want = lc2 + math.log(num) + 0.5 * m0 * math.log(sse0 + st.ssr)
    assert res.log_bf == pytest.approx(want, rel=1e-8, abs=1e-8)


def test_semiconjugate_limits_by_nu_sign():
    n = 8
    dims = Dims(n, 1, 0)
    omega = np.array([[1.0]])
    big = synthetic_stats(n, 0.0, theta_hat=1e5)
    # nu0 = nu1: converges to C2
    p0 = VariancePrior(1.0, 3.0)
    p1 = SemiConjugatePrior(omega, 2.0, 3.0)
    res = bf_semiconjugate(big, p0, p1, dims)
    assert res.bf == pytest.approx(math.exp(log_c2(p0, p1, dims)), rel=1e-3)
    # nu0 < nu1: vanishes
    res_lo = bf_semiconjugate(big, VariancePrior(), SemiConjugatePrior(omega, 1.0, 2.0),
                              dims)
    assert res_lo.bf < 1e-6
    # nu0 > nu1: grows without bound
    res_hi = bf_semiconjugate(big, VariancePrior(1.0, 2.0),
                              SemiConjugatePrior(omega), dims)
    small = bf_semiconjugate(synthetic_stats(n, 0.0, theta_hat=10.0),
                             VariancePrior(1.0, 2.0), SemiConjugatePrior(omega),
                             dims)
    assert res_hi.log_bf > small.log_bf + 5.0


def test_semiconjugate_multivariate_vs_grid_oracle():
    rng = np.random.default_rng(11)
    n, r1 = 10, 2
    info = _rand_spd(rng, r1)
    Omega = np.array([[1.5, 0.4], [0.4, 0.8]])
    th = np.array([0.8, -0.4])
    st = _mv_stats(th, info, 11.0)
    dims = Dims(n, r1, 0)
    prior0 = VariancePrior(1.0, 1.0)
    prior1 = SemiConjugatePrior(Omega, 1.0, 1.0)
    res = bf_semiconjugate(st, prior0, prior1, dims, seed=0)

    m1 = n + prior1.nu
    m0 = n + prior0.nu
    sse1 = prior1.nu * prior1.s2 + st.s_y2
    sse0 = prior0.nu * prior0.s2 + st.s_y2
    xs = np.linspace(-12, 12, 801)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    d = pts - th
    q = np.einsum("ij,jk,ik->i", d, info, d)
    kern = (sse1 + q) ** (-0.5 * m1)
    dens = spstats.multivariate_normal(np.zeros(2), Omega).pdf(pts)
    num = float(np.sum(kern * dens)) * (xs[1] - xs[0]) ** 2
    want = (log_c2(prior0, prior1, dims) + math.log(num)
            + 0.5 * m0 * math.log(sse0 + st.ssr))
    tol = max(3 * res.diag["mc_std_err"], 1e-4)
    assert res.log_bf == pytest.approx(want, abs=tol + 1e-4)


# ---------------------------------------------------------------------------
# mixtures of g


def test_mixture_point_mass_is_exact_conjugate():
    st = synthetic_stats(7, 0.5, t=3.0)
    dims = Dims(7, 1, 0)
    info = st.info_theta
    mix = make_point_mass(5.0, Omega=np.linalg.inv(info))
    res = bf_mixture(st, VariancePrior(), mix, dims)
    want = bf_conjugate(st, VariancePrior(),
                        ConjugatePrior(5.0 * np.linalg.inv(info)), dims)
    assert res.log_bf == pytest.approx(want.log_bf, abs=1e-10)
    assert res.diag["g_max"] == 5.0


def test_mixture_vs_quad_over_g_oracle():
    st = synthetic_stats(7, 0.5, t=4.0)
    dims = Dims(7, 1, 0)
    for mix in (make_hyper_g(3.0), make_zellner_siow(7)):
        res = bf_mixture(st, VariancePrior(), mix, dims)

        def integrand(g):
            unit = ConjugatePrior(g * np.linalg.inv(st.info_theta))
            return bf_conjugate(st, VariancePrior(), unit, dims).bf * mix.density(g)

        lo, _ = integrate.quad(integrand, 0, 100.0, limit=800,
                               points=[0.1, 1.0, 10.0])
        hi, _ = integrate.quad(integrand, 100.0, np.inf, limit=800)
        want = lo + hi
        assert res.bf == pytest.approx(want, rel=1e-4)


def test_mixture_handles_extreme_theta_hat():
    st = synthetic_stats(7, 0.5, theta_hat=1e6)
    res = bf_mixture(st, VariancePrior(), make_hyper_g(3.0), Dims(7, 1, 0))
    assert math.isfinite(res.log_bf) and res.log_bf > 10.0


# ---------------------------------------------------------------------------
# adaptive g


def test_adaptive_examples():
    dims = Dims(7, 1, 0)
    low = bf_adaptive(synthetic_stats(7, 0.5, t=1.0), AdaptiveGPrior(), dims)
    assert low.bf == pytest.approx(1.0, rel=1e-12)
    assert low.diag["g_max"] == 0.0
    hi = bf_adaptive(synthetic_stats(7, 0.5, t=4.0), AdaptiveGPrior(), dims)
    t, n = 4.0, 7
    want = (1.0 / t) * ((n - 1 + t * t) / n) ** (0.5 * n)
    assert hi.bf == pytest.approx(want, rel=1e-10)
    assert hi.bf == pytest.approx(13.7587, abs=5e-4)
    assert hi.diag["g_max"] == pytest.approx(t * t - 1.0, rel=1e-12)


def test_adaptive_maximizer_numeric_crosscheck():
    from scipy.optimize import minimize_scalar

    st = synthetic_stats(10, 0.2, t=3.0)
    dims = Dims(10, 1, 0)
    res = bf_adaptive(st, AdaptiveGPrior(), dims)

    def neg(g):
        pr = ConjugatePrior(g * np.linalg.inv(st.info_theta))
        return -bf_conjugate(st, VariancePrior(), pr, dims).log_bf

    opt = minimize_scalar(neg, bounds=(1e-8, 1e4), method="bounded",
                          options={"xatol": 1e-10})
    assert res.log_bf == pytest.approx(-opt.fun, rel=1e-8)
    assert res.diag["g_max"] == pytest.approx(opt.x, rel=1e-4)


def test_adaptive_multivariate_runs():
    rng = np.random.default_rng(13)
    st = _mv_stats(rng.standard_normal(2) * 3, _rand_spd(rng, 2), 9.0)
    res = bf_adaptive(st, AdaptiveGPrior(), Dims(10, 2, 0))
    assert res.bf >= 1.0


# ---------------------------------------------------------------------------
# fat-tailed t prior


def test_fat_tail_vs_grid_oracle():
    n = 7
    st = synthetic_stats(n, 0.5, t=3.0)
    dims = Dims(n, 1, 0)
    prior0 = VariancePrior()
    tprior = FatTailedTPrior(1.0, 1.0)  # Cauchy
    res = bf_fat_tail(st, prior0, tprior, dims)

    info = float(st.info_theta[0, 0])
    th = float(st.theta_hat[0])
    grid = np.linspace(-500.0, 500.0, 4_000_001)
    kern = (st.s_y2 + (grid - th) ** 2 * info) ** (-0.5 * n)
    dens = spstats.cauchy.pdf(grid)
    num = float(np.trapezoid(kern * dens, grid))
    want = math.log(num) + 0.5 * n * math.log(st.s_y2 + st.ssr)
    assert res.log_bf == pytest.approx(want, rel=1e-5)


def test_fat_tail_requires_scalar_full_null():
    st = synthetic_stats(7, 0.5, t=2.0)
    with pytest.raises(Unsupported):
        bf_fat_tail(st, VariancePrior(), FatTailedTPrior(1.0, 1.0), Dims(7, 1, 1))
    with pytest.raises(Unsupported):
        bf_fat_tail(st, VariancePrior(), FatTailedTPrior(1.0, 1.0), Dims(7, 2, 0))


def test_fat_tail_limit_trichotomy():
    # Cauchy prior, n = 2, everything improper: knife edge -> finite
    fin = fat_tail_limit_kind(FatTailedTPrior(1.0, 1.0), VariancePrior(), Dims(2, 1, 0))
    assert fin.kind == "finite" and fin.governing == "fat-tail trichotomy"
    # very fat tail (nu_t = 0.5): prior tail dominates -> diverges
    assert fat_tail_limit_kind(FatTailedTPrior(1.0, 0.5), VariancePrior(),
                               Dims(7, 1, 0)).kind == "infinite"
    # thin t tail relative to the null: vanishes
    assert fat_tail_limit_kind(FatTailedTPrior(1.0, 10.0, 1.0, 2.0),
                               VariancePrior(), Dims(5, 1, 0)).kind == "zero"


def test_fat_tail_knife_edge_value_matches_numeric():
    n = 2
    dims = Dims(n, 1, 0)
    tprior = FatTailedTPrior(1.0, 1.0)
    info = 2.0
    s_y2 = 1.0
    lim = fat_tail_limit_kind(tprior, VariancePrior(), dims, info=info, s_y2=s_y2)
    st = _mv_stats([1e7], [[info]], s_y2)
    num = bf_fat_tail(st, VariancePrior(), tprior, dims)
    assert num.bf == pytest.approx(lim.value, rel=1e-4)
    assert lim.value == pytest.approx(2.414213562, rel=1e-6)


def test_fat_tail_growth_when_divergent():
    dims = Dims(7, 1, 0)
    tprior = FatTailedTPrior(1.0, 0.5)
    lo = bf_fat_tail(synthetic_stats(7, 0.0, theta_hat=10.0), VariancePrior(),
                     tprior, dims)
    hi = bf_fat_tail(synthetic_stats(7, 0.0, theta_hat=1e5), VariancePrior(),
                     tprior, dims)
    assert hi.log_bf > lo.log_bf + 5.0
