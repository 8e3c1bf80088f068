import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvtflow import thermo
from nvtflow.thermo import (BAR, R_GAS, CovolumeError, ThermoDomainError, builtin_components,
                            chemical_potential_bulk, helmholtz_bulk, lookup_component, make_mixture,
                            mixture_params, pressure_bulk, pressure_closed_form, pure_params)

mp.mp.dps = 40


def mp_pure(pc, tc, w, T):
    pc, tc, w, T = map(mp.mpf, (pc, tc, w, T))
    R = mp.mpf("8.3144598")
    if w <= mp.mpf("0.49"):
        m = mp.mpf("0.37464") + mp.mpf("1.54226") * w - mp.mpf("0.26992") * w ** 2
    else:
        m = mp.mpf("0.379642") + mp.mpf("1.485030") * w - mp.mpf("0.164423") * w ** 2 + mp.mpf("0.016666") * w ** 3
    a = mp.mpf("0.45724") * R ** 2 * tc ** 2 / pc * (1 + m * (1 - mp.sqrt(T / tc))) ** 2
    b = mp.mpf("0.07780") * R * tc / pc
    return a, b, m


def mp_fb(comps, T, n):
    R = mp.mpf("8.3144598")
    T = mp.mpf(T)
    n = [mp.mpf(v) for v in n]
    ab = [mp_pure(c.p_crit, c.t_crit, c.acentric, T) for c in comps]
    ntot = sum(n)
    y = [v / ntot for v in n]
    a = sum(y[i] * y[j] * mp.sqrt(ab[i][0] * ab[j][0]) for i in range(len(n)) for j in range(len(n)))
    b = sum(y[i] * ab[i][1] for i in range(len(n)))
    s2 = mp.sqrt(2)
    ideal = R * T * sum(v * (mp.log(v) - 1) for v in n)
    rep = -ntot * R * T * mp.log(1 - b * ntot)
    att = a * ntot / (2 * s2 * b) * mp.log((1 + (1 - s2) * b * ntot) / (1 + (1 + s2) * b * ntot))
    return ideal + rep + att


def test_table_values():
    c = {x.name: x for x in builtin_components()}
    assert c["methane"].p_crit == pytest.approx(4.599e6, rel=1e-15)
    assert lookup_component("pentane").t_crit == 469.7
    assert lookup_component("decane").molar_weight == pytest.approx(0.14228, rel=1e-15)
    assert c["decane"].acentric == 0.489


def test_unknown_component():
    with pytest.raises(KeyError):
        lookup_component("water")


def test_reduced_temperature_one_kills_m_term():
    ch4 = lookup_component("methane")
    a, _, _ = pure_params(ch4, ch4.t_crit)
    assert a == pytest.approx(0.45724 * R_GAS ** 2 * ch4.t_crit ** 2 / ch4.p_crit, rel=1e-14)


def test_methane_b_and_m():
    ch4 = lookup_component("methane")
    a, b, m = pure_params(ch4, 310.0)
    ma, mb, mm = mp_pure(45.99 * BAR, 190.56, 0.011, 310.0)
    assert b == pytest.approx(float(mb), rel=1e-14)
    assert b == pytest.approx(2.680e-5, rel=1e-3)
    assert m == pytest.approx(float(mm), rel=1e-14)
    assert m == pytest.approx(0.39157, rel=1e-5)
    assert a == pytest.approx(float(ma), rel=1e-13)


def test_decane_uses_quadratic_branch():
    w = 0.489
    assert thermo.m_coefficient(w) == pytest.approx(0.37464 + 1.54226 * w - 0.26992 * w * w, rel=1e-15)
    assert thermo.m_coefficient(0.5) == pytest.approx(
        0.379642 + 1.485030 * 0.5 - 0.164423 * 0.25 + 0.016666 * 0.125, rel=1e-15)


def test_pure_params_bad_temperature():
    with pytest.raises(ThermoDomainError):
        pure_params(lookup_component("methane"), 0.0)


def test_mixture_params_single_and_identical():
    mix = make_mixture(["methane"], 310.0)
    a, b = mixture_params(mix, [5.0])
    a1, b1, _ = pure_params(mix.components[0], 310.0)
    assert (a, b) == pytest.approx((a1, b1), rel=1e-15)
    twin = make_mixture(["methane", "methane"], 310.0)
    a, b = mixture_params(twin, [3.0, 3.0])
    assert (a, b) == pytest.approx((a1, b1), rel=1e-14)


def test_mixture_params_equimolar_binary(binary):
    a, b = mixture_params(binary, [1.0, 1.0])
    a1, b1, _ = pure_params(binary.components[0], 310.0)
    a2, b2, _ = pure_params(binary.components[1], 310.0)
    assert a == pytest.approx(0.25 * (a1 + 2 * np.sqrt(a1 * a2) + a2), rel=1e-14)
    assert b == pytest.approx(0.5 * (b1 + b2), rel=1e-14)


def test_mixture_params_zero_density(binary):
    with pytest.raises(ThermoDomainError):
        mixture_params(binary, [0.0, 0.0])


def test_fb_vanishes_at_low_density():
    # each ideal term is RT n (ln n - 1), about 5e-4 J/m^3 per component at 1e-8 mol/m^3
    for name in ("methane", "pentane", "decane"):
        assert abs(helmholtz_bulk(make_mixture([name], 310.0), [1e-8])) < 1e-3


def test_fb_extended_precision_methane():
    mix = make_mixture(["methane"], 310.0)
    ref = mp_fb(mix.components, 310.0, [7430.2])
    assert helmholtz_bulk(mix, [7430.2]) == pytest.approx(float(ref), rel=1e-12)


def test_fb_extended_precision_ternary(ternary):
    n = [10516.0, 770.0, 184.0]
    ref = mp_fb(ternary.components, 323.0, n)
    assert helmholtz_bulk(ternary, n) == pytest.approx(float(ref), rel=1e-12)


@pytest.fixture
def ideal(monkeypatch, binary):
    zeros = thermo._EosCoefficients(np.zeros(2), np.zeros(2), np.zeros((2, 2)))
    monkeypatch.setattr(thermo, "eos_coefficients", lambda spec: zeros)
    return binary


def test_ideal_reduction(ideal):
    n = np.array([120.0, 30.0])
    rt = R_GAS * 310.0
    assert helmholtz_bulk(ideal, n) == pytest.approx(rt * np.sum(n * (np.log(n) - 1)), rel=1e-14)
    assert chemical_potential_bulk(ideal, n) == pytest.approx(rt * np.log(n), rel=1e-14)
    assert pressure_bulk(ideal, n) == pytest.approx(n.sum() * rt, rel=1e-12)


def test_identical_components_equal_mu():
    twin = make_mixture(["pentane", "pentane"], 310.0)
    mu = chemical_potential_bulk(twin, [900.0, 900.0])
    assert mu[0] == mu[1]


def test_domain_errors(binary):
    with pytest.raises(ThermoDomainError):
        helmholtz_bulk(binary, [1.0, 0.0])
    with pytest.raises(ThermoDomainError):
        helmholtz_bulk(binary, [1.0, np.nan])
    with pytest.raises(CovolumeError):
        helmholtz_bulk(binary, [40000.0, 10000.0])


def test_field_shapes(ternary):
    rng = np.random.default_rng(0)
    n = rng.uniform(100, 3000, size=(3, 4, 5))
    mu = chemical_potential_bulk(ternary, n)
    assert mu.shape == n.shape
    assert mu[:, 2, 3] == pytest.approx(chemical_potential_bulk(ternary, n[:, 2, 3]), rel=1e-14)


def test_small_covolume_series_branch():
    g, dg = thermo._attraction_kernel(np.array([5e-8, 2e-7]))
    gs, dgs = thermo._attraction_kernel(np.array([1.999e-7]))
    assert np.all(np.isfinite(g)) and np.all(np.isfinite(dg))
    assert g[1] == pytest.approx(gs[0], rel=1e-9)


@st.composite
def states(draw):
    names = ["methane", "pentane", "decane"]
    m = draw(st.integers(1, 3))
    chosen = draw(st.permutations(names))[:m]
    temp = draw(st.floats(250.0, 450.0))
    mix = make_mixture(chosen, temp)
    _, b = zip(*[pure_params(c, temp)[:2] for c in mix.components])
    y = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=m, max_size=m)))
    y /= y.sum()
    frac = draw(st.floats(1e-3, 0.85))
    ntot = frac / float(np.dot(b, y))
    return mix, y * ntot


@given(states())
def test_mu_matches_finite_differences(case):
    mix, n = case
    mu = chemical_potential_bulk(mix, n)
    fd = np.empty_like(mu)
    for i in range(len(n)):
        h = 1e-6 * n[i]
        e = np.zeros_like(n)
        e[i] = h
        fd[i] = (helmholtz_bulk(mix, n + e) - helmholtz_bulk(mix, n - e)) / (2 * h)
    assert np.max(np.abs(fd - mu)) <= 1e-6 * np.max(np.abs(mu))


@given(states())
def test_pressure_identity_and_closed_form(case):
    mix, n = case
    p = pressure_bulk(mix, n)
    assert p == pytest.approx(np.dot(n, chemical_potential_bulk(mix, n)) - helmholtz_bulk(mix, n),
                              rel=1e-12, abs=0)
    assert p == pytest.approx(pressure_closed_form(mix, n), rel=1e-10)


def test_pressure_density_sweep_methane():
    mix = make_mixture(["methane"], 310.0)
    for n in np.geomspace(1.0, 3.0e4, 25):
        assert pressure_bulk(mix, [n]) == pytest.approx(pressure_closed_form(mix, [n]), rel=1e-10)


def test_mixture_validation():
    ch4 = lookup_component("methane")
    with pytest.raises(ValueError):
        thermo.MixtureSpec([ch4, ch4], 300.0, k_ij=[[0, 0.1], [0.2, 0]])
    with pytest.raises(ValueError):
        thermo.MixtureSpec([ch4, ch4], 300.0, beta=[[0, 1.0], [1.0, 0]])
    with pytest.raises(ThermoDomainError):
        thermo.MixtureSpec([ch4], -1.0)
    with pytest.raises(ValueError):
        thermo.ComponentSpec("x", -1.0, 100.0, 0.1, 0.01)
