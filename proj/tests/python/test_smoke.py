import cmath

import pytest

import lattes_forge as lf

GAMMA0 = complex(1 / 3, 1)


def test_square_lattice_w():
    d = lf.theta_data(1j)
    assert abs(d["w"] + 1) < 1e-10
    assert d["lemma1_residual"] < 1e-8


def test_weierstrass_p_is_even_and_periodic():
    a = lf.weierstrass_p(0.2, 0.1, GAMMA0)
    assert abs(a - lf.weierstrass_p(-0.2, -0.1, GAMMA0)) < 1e-10
    assert abs(a - lf.weierstrass_p(1.2, -0.9, GAMMA0)) < 1e-9


def test_build_map_and_semiconjugacy():
    f = lf.build_map(GAMMA0, 2, 1)
    assert f.degree == 4
    assert lf.verify_semiconjugacy(f, GAMMA0, 2, 1) < 1e-9
    assert f(0) == pytest.approx(0, abs=1e-12)
    assert f(1) == pytest.approx(0, abs=1e-9)  # v -> 0
    g = lf.RationalMap.from_json(f.to_json())
    assert g.num == f.num and g.den == f.den
    total = sum(m for _, m in lf.critical_points(f))
    assert total == 6


def test_lemma3_constants():
    for a, case, c in [(2, 1, -1.0), (3, 2, -1.125), (3, 3, -0.9)]:
        r = lf.verify_lemma3(GAMMA0, a, case)
        assert abs(r["c_measured"] - c) < 1e-6


def test_construct_and_certify():
    r = lf.construct("1/3", "1", 2, 1, 3)
    assert r["certificate"]["non_lattes_witness"]
    assert r["certificate"]["postcritical_count"] > 4
    assert all(c["repelling"] for c in r["certificate"]["certificates"])
    again = lf.certify(r["g_k"])
    assert again["postcritical_count"] == r["certificate"]["postcritical_count"]
    base = lf.certify(lf.build_map(GAMMA0, 2, 1))
    assert base["lattes_witness"] and base["postcritical_count"] == 4


def test_errors_carry_codes():
    with pytest.raises(lf.LattesForgeError) as info:
        lf.construct("1/3", "1", 3, 2, 3)
    assert info.value.code == "CoprimalityViolation"
    z2_plus_1 = lf.RationalMap([1, 0, 1], [1, 0, 0])
    with pytest.raises(lf.LattesForgeError) as info:
        lf.certify(z2_plus_1)
    assert info.value.code == "NotPCF"
    assert cmath.isfinite(lf.theta(0.25, 0.25, 1j))
