import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compton_povm import kernels
from compton_povm.chain import (
    AZIMUTH_AVERAGE,
    ScatterChainSpec,
    azimuth_averaged_rotation,
    chain_mueller,
    coplanar_beta_batch,
    coplanar_summary,
    nfold_cross_section,
    povm_normalizer,
    propagate_energies,
    total_cross_section,
    total_cross_section_estimate,
    total_cross_section_mc,
)
from compton_povm.kinematics import alpha_beta, scattered_energy, transition_matrix

chains = st.lists(st.floats(0.0, np.pi), min_size=1, max_size=6)


def test_spec_validation():
    with pytest.raises(ValueError):
        ScatterChainSpec(1.0, ())
    with pytest.raises(ValueError):
        ScatterChainSpec(1.0, (1.0, 4.0))
    with pytest.raises(ValueError):
        ScatterChainSpec(1.0, (1.0,), (7.0,))
    with pytest.raises(ValueError):
        ScatterChainSpec(1.0, (1.0, 1.0), (0.0,))
    assert ScatterChainSpec.coplanar(1.0, (1.0, 2.0), 0.3).is_coplanar


def test_single_factor():
    spec = ScatterChainSpec(1.0, (0.9,), (0.0,))
    np.testing.assert_array_equal(chain_mueller(spec), transition_matrix(1.0, 0.9))


@settings(max_examples=300, deadline=None)
@given(chains, st.floats(0.01, 10.0))
def test_coplanar_block_diagonal(thetas, e0):
    p = chain_mueller(ScatterChainSpec(e0, thetas))
    assert np.all(p[:2, 2:] == 0.0) and np.all(p[2:, :2] == 0.0)
    assert p[2, 3] == 0.0 and p[3, 2] == 0.0


@pytest.mark.parametrize("thetas, beta, e_final", [
    ((1.425,), 0.6918, 0.5391),
    ((1.038, 1.479), 0.8683, 0.4166),
    ((0.777, 1.071, 1.499), 0.9207, None),
])
def test_summary_examples(thetas, beta, e_final):
    s = coplanar_summary(1.0, thetas)
    assert s.beta == pytest.approx(beta, abs=1e-4)
    if e_final is not None:
        assert s.e_final == pytest.approx(e_final, abs=1e-4)


def test_summary_reduces_to_alpha_beta(rng):
    for _ in range(100):
        e0, t = rng.uniform(0.01, 5.0), rng.uniform(0.0, np.pi)
        s = coplanar_summary(e0, (t,))
        a, b = alpha_beta(e0, t)
        assert s.alpha == pytest.approx(a, rel=1e-14)
        assert s.beta == pytest.approx(b, rel=1e-13, abs=1e-14)


def test_beta_range_random_chains(rng):
    for n in range(1, 7):
        thetas = rng.uniform(0.0, np.pi, (2000, n))
        beta, alpha, e_final = coplanar_beta_batch(1.0, thetas)
        assert np.all(alpha > 0)
        assert np.all((beta >= -1e-15) & (beta <= 1.0 + 1e-15))


def test_energy_chain(rng):
    for _ in range(50):
        thetas = rng.uniform(0.01, np.pi, rng.integers(1, 7))
        e = 1.0
        for t in thetas:
            e = scattered_energy(e, t)
        s = coplanar_summary(1.0, thetas)
        assert s.e_final == pytest.approx(e, rel=1e-14)
        assert np.all(np.diff(s.energies) < 0)
        _, _, e_batch = coplanar_beta_batch(1.0, thetas[None, :])
        assert e_batch[0] == pytest.approx(e, rel=1e-14)


def test_batch_matches_matrix_product(rng):
    thetas = rng.uniform(0.0, np.pi, (200, 4))
    beta, alpha, _ = coplanar_beta_batch(0.7, thetas)
    for k in range(0, 200, 20):
        s = coplanar_summary(0.7, thetas[k])
        assert beta[k] == pytest.approx(s.beta, rel=1e-12)
        assert alpha[k] == pytest.approx(s.alpha, rel=1e-12)


def test_backends_agree(rng):
    thetas = rng.uniform(0.0, np.pi, (500, 5))
    a1, g1, e1 = kernels.coplanar_coefficients_numba(1.3, thetas)
    a2, g2, e2 = kernels.coplanar_coefficients_numpy(1.3, thetas)
    np.testing.assert_allclose(a1, a2, rtol=1e-13)
    np.testing.assert_allclose(g1, g2, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(e1, e2, rtol=1e-14)
    x, w = np.polynomial.legendre.leggauss(12)
    t = 0.5 * np.pi * (x + 1)
    wt = np.pi ** 2 * w * np.sin(t)
    for n in (1, 2, 3):
        assert kernels.nested_total_cross_section_numba(1.0, n, np.cos(t), wt) == pytest.approx(
            kernels.nested_total_cross_section_numpy(1.0, n, np.cos(t), wt), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(chains, st.floats(0.0, 2 * np.pi - 1e-9), st.floats(0.0, 2 * np.pi), st.floats(0.0, 1.0))
def test_coplanar_cross_section_identity(thetas, phi1, chi, r):
    spec = ScatterChainSpec.coplanar(1.0, thetas, phi1)
    s = np.array([1.0, r * np.cos(chi), r * np.sin(chi), 0.0])
    summary = coplanar_summary(1.0, thetas)
    expect = summary.alpha * (1 + summary.beta * (s[1] * np.cos(2 * phi1) + s[2] * np.sin(2 * phi1)))
    assert nfold_cross_section(spec, s) == pytest.approx(expect, rel=1e-12, abs=1e-14)


def test_unpolarized_gives_alpha(rng):
    thetas = rng.uniform(0.0, np.pi, 3)
    spec = ScatterChainSpec.coplanar(1.0, thetas, 1.1)
    assert nfold_cross_section(spec, [1, 0, 0, 0]) == pytest.approx(coplanar_summary(1.0, thetas).alpha)
    with pytest.raises(ValueError):
        nfold_cross_section(spec, [2, 0, 0, 0])


def test_propagate_energies():
    e = propagate_energies(1.0, (np.pi / 2, np.pi / 2))
    assert e == pytest.approx([1.0, 0.5, 1.0 / 3.0])


def test_sigma_values(expected):
    ref = expected["total_cross_sections"]
    for key, val in ref["values"].items():
        assert total_cross_section(int(key)) == pytest.approx(val, rel=ref["relative_tolerance"][key])


def test_sigma_grows():
    vals = [total_cross_section(n) for n in range(1, 6)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_sigma_error_estimate_small():
    for n in range(1, 6):
        est = total_cross_section_estimate(n)
        assert est.method == "quadrature"
        assert est.error < 1e-6 * est.value
    with pytest.raises(ValueError):
        total_cross_section(0)


def test_sigma_mc_agrees_with_quadrature():
    value, se = total_cross_section_mc(3, 1.0, samples=400_000, seed=3)
    assert abs(value - total_cross_section(3)) < 5 * se
    again = total_cross_section_mc(3, 1.0, samples=400_000, seed=3)
    assert again == (value, se)


def test_sigma_other_energy():
    # tensor quadrature vs MC away from E0 = 1
    value, se = total_cross_section_mc(2, 0.3, samples=400_000, seed=5)
    assert abs(total_cross_section(2, 0.3) - value) < 5 * se


def test_azimuth_average():
    np.testing.assert_allclose(azimuth_averaged_rotation(64), 2 * np.pi * AZIMUTH_AVERAGE, atol=1e-12)


def test_normalizer():
    norm = povm_normalizer(1)
    assert norm(np.pi / 2) == pytest.approx(0.1875 / 3.60846, abs=1e-5)
    x, w = np.polynomial.legendre.leggauss(200)
    t = 0.5 * np.pi * (x + 1)
    total = 2 * np.pi * np.sum(0.5 * np.pi * w * np.sin(t) * norm(t[:, None]))
    assert total == pytest.approx(1.0, abs=1e-10)
    v = povm_normalizer(2)((1.038, 1.479))
    assert 0 < v < 1
    with pytest.raises(ValueError):
        povm_normalizer(2)((1.0,))
