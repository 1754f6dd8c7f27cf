"""Tests for the discrete random-variable families."""

import itertools
import math

import numpy as np
import pytest

from srkweak.randvars import (
    ITO,
    STRATONOVICH,
    CapacityError,
    FamilyError,
    RvFamily,
    draws_from_uniforms,
    enumerate_atoms,
    moment,
    sample_draw,
)

S3 = math.sqrt(3.0)


def fam(calculus, c):
    return RvFamily.make(calculus, c)


def test_family_validation():
    with pytest.raises(FamilyError):
        RvFamily.make(ITO, 0.7)
    with pytest.raises(FamilyError):
        RvFamily.make(ITO, 0.0)
    with pytest.raises(FamilyError):
        RvFamily(ITO, 0.25, True)  # half variant requires c = 1/2
    with pytest.raises(FamilyError):
        RvFamily(ITO, 0.5, False)
    with pytest.raises(FamilyError):
        RvFamily.make("milstein", 0.5)
    assert fam(ITO, 0.5).half_variant is True
    assert fam(STRATONOVICH, 0.25).half_variant is False


def test_theta_supports():
    values, probs = fam(ITO, 0.5).theta_support
    assert sorted(abs(v) for v in values) == pytest.approx(
        sorted([math.sqrt(2 - S3)] * 2 + [math.sqrt(2 + S3)] * 2)
    )
    assert sum(probs) == pytest.approx(1.0)
    values, probs = fam(STRATONOVICH, 0.5).theta_support
    assert set(values) == {S3, -S3, 0.0}
    assert sum(probs) == pytest.approx(1.0)


def test_rv_counts():
    f = fam(ITO, 0.5)
    assert f.rv_count(1) == 1
    assert f.rv_count(2) == 3
    assert f.rv_count(10) == 11
    g = fam(ITO, 1.0 / 3.0)
    assert g.rv_count(1) == 2
    assert g.rv_count(5) == 11
    s = fam(STRATONOVICH, 0.25)
    assert s.rv_count(1) == 2
    assert s.rv_count(4) == 9


def test_atom_counts_and_total_probability():
    table = enumerate_atoms(fam(ITO, 0.25), 1)
    assert len(table.atoms) == 16  # 2^2 * 4
    assert sum(p for p, _ in table.atoms) == pytest.approx(1.0, abs=1e-15)
    table = enumerate_atoms(fam(STRATONOVICH, 0.25), 2)
    assert len(table.atoms) == 72  # 2^3 * 3^2
    assert sum(p for p, _ in table.atoms) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(CapacityError):
        enumerate_atoms(fam(ITO, 0.25), 4)


def test_basic_moments():
    for calculus in (ITO, STRATONOVICH):
        for c in (0.25, 1.0 / 3.0, 0.5):
            f = fam(calculus, c)
            assert moment(f, 1, [(("theta", 1), 2)]) == pytest.approx(1.0, abs=1e-13)
            assert moment(f, 1, [(("Theta", 0, 1), 2)]) == pytest.approx(
                1.0 / (2.0 * c), abs=1e-12
            )
            assert moment(f, 1, [(("Theta", 1, 0), 1)]) == pytest.approx(1.0, abs=1e-13)
    assert moment(fam(ITO, 0.5), 1, [(("theta", 1), 4)]) == pytest.approx(3.0, abs=1e-12)
    assert moment(fam(STRATONOVICH, 0.5), 1, [(("theta", 1), 4)]) == pytest.approx(3.0, abs=1e-12)
    # E[theta * Theta_pp] = -3 E[theta^2] + E[theta^4] = 0 for the Ito family
    assert moment(fam(ITO, 0.5), 1, [(("theta", 1), 1), (("Theta", 1, 1), 1)]) == pytest.approx(
        0.0, abs=1e-13
    )
    with pytest.raises(ValueError):
        moment(fam(ITO, 0.5), 1, [(("theta", 2), 2)])


def test_draw_invariants():
    rng = np.random.default_rng(3)
    for calculus in (ITO, STRATONOVICH):
        f = fam(calculus, 0.25)
        for _ in range(200):
            d = sample_draw(f, 2, rng)
            assert d.theta[0] == 1.0
            assert d.Theta[0, 0] == 1.0
            for p in (1, 2):
                t = d.theta[p]
                expected = (-3.0 * t + t**3) if calculus == ITO else t
                assert d.Theta[p, p] == pytest.approx(expected, abs=1e-14)
            # (1+eta0)(1-eta0) = 0 makes one of the mixed entries vanish
            assert d.Theta[1, 2] * d.Theta[2, 1] == 0.0
        # and the same holds over the entire sample space
        for _, atom in enumerate_atoms(f, 2).atoms:
            assert atom.Theta[1, 2] * atom.Theta[2, 1] == 0.0


def test_ito_theta_support_values():
    rng = np.random.default_rng(4)
    hi, lo = math.sqrt(2 + S3), math.sqrt(2 - S3)
    seen = {round(abs(float(sample_draw(fam(ITO, 0.5), 1, rng).theta[1])), 12) for _ in range(500)}
    assert seen == {round(hi, 12), round(lo, 12)}


def _mixed_factors(m):
    out = []
    for p in range(1, m + 1):
        out.append(("theta", p))
    for p in range(0, m + 1):
        for q in range(0, m + 1):
            if (p, q) != (0, 0):
                out.append(("Theta", p, q))
    return out


def _swap12(factor):
    swap = {0: 0, 1: 2, 2: 1}
    if factor[0] == "theta":
        return ("theta", swap[factor[1]])
    return ("Theta", swap[factor[1]], swap[factor[2]])


def test_permutation_invariance_exhaustive_degree_four():
    for calculus in (ITO, STRATONOVICH):
        f = fam(calculus, 0.25)
        factors = _mixed_factors(2)
        for degree in (1, 2, 3, 4):
            for combo in itertools.combinations_with_replacement(factors, degree):
                mono = [(fac, 1) for fac in combo]
                swapped = [(_swap12(fac), 1) for fac in combo]
                a = moment(f, 2, mono)
                b = moment(f, 2, swapped)
                assert a == pytest.approx(b, abs=1e-12), (calculus, combo)


def _odd_count(combo):
    n = 0
    for fac in combo:
        if fac[0] == "theta" and fac[1] != 0:
            n += 1
        if fac[0] == "Theta" and fac[2] != 0:
            n += 1
    return n


def test_odd_moments_vanish_degree_five():
    for calculus in (ITO, STRATONOVICH):
        f = fam(calculus, 0.25)
        factors = _mixed_factors(2)
        for degree in (1, 3, 5):
            for combo in itertools.combinations_with_replacement(factors, degree):
                if _odd_count(combo) % 2 == 1:
                    value = moment(f, 2, [(fac, 1) for fac in combo])
                    assert value == pytest.approx(0.0, abs=1e-11), (calculus, combo)


def test_empirical_moments_match_exact():
    f = fam(ITO, 0.25)
    m = 2
    n = 1_000_000
    rng = np.random.default_rng(99)
    u = rng.random((n, f.uniforms_per_step(m)))
    theta, Theta = draws_from_uniforms(f, m, u)
    checks = [
        (theta[:, 1] ** 2, [(("theta", 1), 2)]),
        (theta[:, 1] ** 4, [(("theta", 1), 4)]),
        (theta[:, 1] * Theta[:, 1, 1], [(("theta", 1), 1), (("Theta", 1, 1), 1)]),
        (Theta[:, 0, 1] ** 2, [(("Theta", 0, 1), 2)]),
        (Theta[:, 1, 2] * Theta[:, 2, 1], [(("Theta", 1, 2), 1), (("Theta", 2, 1), 1)]),
    ]
    for samples, mono in checks:
        exact = moment(f, m, mono)
        se = samples.std(ddof=1) / math.sqrt(n)
        assert abs(samples.mean() - exact) <= 5.0 * se + 1e-12, mono


def test_sample_stream_use_is_rv_count():
    for calculus, c, m in [(ITO, 0.5, 1), (ITO, 0.5, 3), (ITO, 0.25, 2), (STRATONOVICH, 0.25, 3)]:
        f = fam(calculus, c)
        rng1 = np.random.default_rng(5)
        rng2 = np.random.default_rng(5)
        sample_draw(f, m, rng1)
        rng2.random(f.rv_count(m))
        # both streams must now be at the same position
        assert rng1.random() == rng2.random()


def test_half_variant_entries():
    rng = np.random.default_rng(6)
    d = sample_draw(fam(ITO, 0.5), 2, rng)
    assert np.allclose(d.Theta[0, 1:], d.theta[1:])
    assert np.allclose(d.Theta[1:, 0], 1.0)
