import math

import numpy as np
import pytest
from scipy import integrate, optimize

from bfaudit.errors import ConfigError, DomainError
from bfaudit.priors import (
    ConjugatePrior,
    CustomTail,
    FatTailedTPrior,
    GMixturePrior,
    PointMassTail,
    PolynomialTail,
    SemiConjugatePrior,
    VariancePrior,
    make_hyper_g,
    make_zellner_siow,
    parse_prior,
    prior_orthant_prob,
    resolve_omega,
)


def test_variance_prior_improper_branch():
    vp = VariancePrior(3.0, 0.0)
    assert vp.s2 == 0.0  # nu = 0 ignores and records s2 = 0
    with pytest.raises(DomainError):
        VariancePrior(1.0, -1.0)
    with pytest.raises(DomainError):
        VariancePrior(-1.0, 1.0)


def test_conjugate_prior_validation():
    ConjugatePrior(np.eye(2), 1.0, 2.0)
    with pytest.raises(DomainError):
        ConjugatePrior(np.array([[1.0, 2.0], [2.0, 1.0]]))  # indefinite
    with pytest.raises(DomainError):
        SemiConjugatePrior(np.array([[1.0, 0.5], [0.4, 1.0]]))  # asymmetric


def test_hyper_g():
    pr = make_hyper_g(3.0)
    assert pr.density(0.0) == pytest.approx(0.5)
    total, _ = integrate.quad(pr.density, 0, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert pr.tail.alpha == 1.5
    assert make_hyper_g(4.0).density(1.0) == pytest.approx(0.25)  # (1+g)^{-2}
    assert make_hyper_g(2.5).tail.alpha == 1.25
    with pytest.raises(DomainError):
        make_hyper_g(2.0)


def test_zellner_siow():
    n = 9
    pr = make_zellner_siow(n)
    total, _ = integrate.quad(pr.density, 0, np.inf, limit=400)
    assert total == pytest.approx(1.0, abs=1e-6)
    mode = optimize.minimize_scalar(lambda g: -pr.density(g), bounds=(0.1, 50),
                                    method="bounded").x
    assert mode == pytest.approx(n / 3, rel=1e-4)
    assert pr.tail.alpha == 1.5
    with pytest.raises(DomainError):
        make_zellner_siow(1)


def test_mixture_normalization_enforced():
    with pytest.raises(DomainError):
        GMixturePrior(lambda g: math.exp(-g) * 2.0, CustomTail())
    GMixturePrior(lambda g: math.exp(-g), CustomTail())  # proper: fine


def test_tail_validation():
    with pytest.raises(DomainError):
        PolynomialTail(alpha=1.0)
    with pytest.raises(DomainError):
        PolynomialTail(alpha=2.0, k_lo=2.0, k_hi=1.0)
    with pytest.raises(DomainError):
        PointMassTail(0.0)


def test_fat_tailed_prior():
    pr = FatTailedTPrior(2.0, 1.0)
    # log density matches a scaled Cauchy
    x = 0.7
    want = math.log(1.0 / (math.pi * 2.0 * (1.0 + (x / 2.0) ** 2)))
    assert pr.log_density(x) == pytest.approx(want, rel=1e-12)
    with pytest.raises(DomainError):
        FatTailedTPrior(0.0, 1.0)
    with pytest.raises(DomainError):
        FatTailedTPrior(1.0, 0.0)


def test_prior_orthant_prob():
    assert prior_orthant_prob(np.eye(1)).std_error == 0.0
    assert prior_orthant_prob(np.eye(1)).value == 0.5
    est = prior_orthant_prob(np.eye(2), seed=0)
    assert est.value == pytest.approx(0.25, abs=3 * est.std_error + 1e-5)
    rho = 0.5
    est2 = prior_orthant_prob(np.array([[1.0, rho], [rho, 1.0]]), seed=0)
    want = 0.25 + math.asin(rho) / (2 * math.pi)
    assert est2.value == pytest.approx(want, abs=3 * est2.std_error + 2e-5)
    # scale invariance (cones)
    est3 = prior_orthant_prob(7.0 * np.array([[1.0, rho], [rho, 1.0]]), seed=1)
    joint = math.hypot(est2.std_error, est3.std_error)
    assert abs(est2.value - est3.value) <= 3 * joint + 1e-5


def test_resolve_omega():
    assert np.allclose(resolve_omega("identity", 2), np.eye(2))
    info = np.array([[4.0]])
    assert resolve_omega("g:5.0", 1, info)[0, 0] == pytest.approx(1.25)
    with pytest.raises(ConfigError):
        resolve_omega("g:5.0", 1, None)
    with pytest.raises(ConfigError):
        resolve_omega("g:zero", 1, info)
    with pytest.raises(ConfigError):
        resolve_omega("g:-1", 1, info)


def test_parse_prior_grammar():
    info = np.array([[2.0]])
    pr = parse_prior({"family": "conjugate", "omega": "g:5.0", "s2": 1.0, "nu": 0},
                     1, info_theta=info)
    assert isinstance(pr, ConjugatePrior)
    assert pr.Omega[0, 0] == pytest.approx(2.5)
    assert pr.nu == 0 and pr.s2 == 0.0
    hg = parse_prior({"family": "hyper-g", "a": 3.0}, 1, info_theta=info)
    assert hg.tail.alpha == 1.5
    zs = parse_prior({"family": "zellner-siow"}, 1, info_theta=info, n=8)
    assert zs.name == "zellner-siow"
    ft = parse_prior({"family": "fat-t", "tau": 1.0, "nu_t": 1.0}, 1)
    assert isinstance(ft, FatTailedTPrior)
    parse_prior({"family": "adaptive-g"}, 1)
    with pytest.raises(ConfigError):
        parse_prior({"family": "nope"}, 1)
    with pytest.raises(ConfigError):
        parse_prior({"family": "fat-t", "tau": 1.0}, 1)
    with pytest.raises(ConfigError):
        parse_prior({"family": "zellner-siow"}, 1)  # needs n
    with pytest.raises(ConfigError):
        parse_prior({"family": "hyper-g"}, 1)  # needs a
    with pytest.raises(ConfigError):
        parse_prior("conjugate", 1)


def test_mixture_density_nonnegative_sampled():
    for pr in (make_hyper_g(3.0), make_zellner_siow(5)):
        for g in np.logspace(-6, 8, 40):
            assert pr.density(float(g)) >= 0.0
