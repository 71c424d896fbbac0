"""Operator-spectrum tests: closed forms, quadrature oracle, tails, distances."""

import math

import numpy as np
import pytest

from gsbm import (
    BlockKernel,
    FiniteSet,
    FourierKernel,
    LabelAlphabet,
    PLUS_MINUS,
    TWO_LABEL_2G,
    UnitInterval,
    draw_weighing,
    fourier_spectrum,
    ideal_embedding,
    kernel_distance_sq,
    nystrom_spectrum,
    tail_epsilon_r,
    triangle_kernel,
    band_kernel,
)
from gsbm.operator_spectrum import effective_kernel_fn, eta_diagnostic

UNIT_WEIGHING = draw_weighing(LabelAlphabet(("e",)), 0, override={"e": 1.0})
PM_WEIGHING = draw_weighing(PLUS_MINUS, 0, override={"+1": 1.0, "-1": -1.0})


def unlabeled_block(b: np.ndarray) -> BlockKernel:
    r = b.shape[0]
    return BlockKernel(edge_prob=b, label_dist=np.ones((r, r, 1)))


# ---------------------------------------------------------------------------
# Closed-form spectra
# ---------------------------------------------------------------------------

def test_triangle_power_law_spectrum():
    spec = fourier_spectrum(triangle_kernel())
    lam = spec.eigenvalues
    assert lam[0] == pytest.approx(0.25, abs=1e-15)
    assert lam[1] == pytest.approx(-1 / np.pi**2, abs=1e-15)
    assert lam[2] == pytest.approx(-1 / np.pi**2, abs=1e-15)
    assert abs(lam[3]) == pytest.approx(1 / (9 * np.pi**2), abs=1e-15)
    assert abs(lam[4]) == pytest.approx(1 / (9 * np.pi**2), abs=1e-15)
    # power-law profile with exponent 2: |lambda_{2k}| = 1 / (pi (2k-1))^2
    for k in (1, 2, 3, 4):
        assert abs(lam[2 * k]) == pytest.approx(1 / (np.pi**2 * (2 * k - 1) ** 2), rel=1e-12)


def test_band_power_law_spectrum():
    spec = fourier_spectrum(band_kernel())
    lam = spec.eigenvalues
    assert lam[0] == pytest.approx(0.5, abs=1e-15)
    for k in (1, 2, 3):
        assert abs(lam[2 * k]) == pytest.approx(1 / (np.pi * (2 * k - 1)), rel=1e-12)


def test_constant_kernel_is_rank_one():
    spec = fourier_spectrum(FourierKernel(g0=0.37, gk=np.array([])))
    assert spec.eigenvalues.shape == (1,)
    assert spec.eigenvalues[0] == pytest.approx(0.37)
    assert np.allclose(spec.phi(0, np.linspace(0, 1, 7)), 1.0)


def test_fourier_rejects_block_kernel():
    with pytest.raises(ValueError, match="nystrom"):
        fourier_spectrum(unlabeled_block(np.array([[0.5]])))


def test_degenerate_pair_order_is_cos_then_sin():
    spec = fourier_spectrum(triangle_kernel())
    x = np.array([0.0, 0.25])
    assert np.allclose(spec.phi(1, x), math.sqrt(2) * np.cos(2 * np.pi * x))
    assert np.allclose(spec.phi(2, x), math.sqrt(2) * np.sin(2 * np.pi * x))


# ---------------------------------------------------------------------------
# Quadrature spectra
# ---------------------------------------------------------------------------

def test_two_class_hand_eigenvalues():
    # diag(sqrt(P)) K diag(sqrt(P)) for uniform P is K/2 with eigenvalues
    # (p + q)/2 and (p - q)/2 — by-hand 2x2 symmetric decomposition.
    p, q = 0.8, 0.2
    spec = nystrom_spectrum(FiniteSet((0.5, 0.5)), unlabeled_block(np.array([[p, q], [q, p]])),
                            UNIT_WEIGHING)
    assert spec.eigenvalues == pytest.approx([(p + q) / 2, (p - q) / 2], abs=1e-14)
    assert spec.tail_is_exact


def test_all_ones_kernel_rank_one():
    spec = nystrom_spectrum(UnitInterval(), FourierKernel(g0=1.0, gk=np.array([])),
                            UNIT_WEIGHING, m=64)
    assert spec.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    assert np.abs(spec.eigenvalues[1:]).max() < 1e-12


def test_cross_oracle_agreement_triangle():
    m = 1000
    four = fourier_spectrum(triangle_kernel())
    ny = nystrom_spectrum(UnitInterval(), triangle_kernel(), UNIT_WEIGHING, m=m)
    tol = max(1e-3, 5 / m)
    assert np.allclose(four.eigenvalues[:10], ny.eigenvalues[:10], atol=tol)


def test_cross_oracle_agreement_band():
    m = 1200
    four = fourier_spectrum(band_kernel())
    ny = nystrom_spectrum(UnitInterval(), band_kernel(), UNIT_WEIGHING, m=m)
    tol = max(1e-3, 5 / m)
    assert np.allclose(four.eigenvalues[:10], ny.eigenvalues[:10], atol=tol)


def test_cross_oracle_agreement_labeled_kernel():
    # Weighted +/-1 kernel: closed-form coefficients against the grid oracle.
    kernel = triangle_kernel(label_rule=TWO_LABEL_2G)
    four = fourier_spectrum(kernel, PM_WEIGHING)
    ny = nystrom_spectrum(UnitInterval(), kernel, PM_WEIGHING, m=1000)
    assert np.allclose(four.eigenvalues[:8], ny.eigenvalues[:8], atol=1e-3)
    # top block: the +/-1 weighing puts the oscillating pair first
    assert four.eigenvalues[0] == pytest.approx(-1 / np.pi**2, abs=1e-12)
    assert four.eigenvalues[2] == pytest.approx(1 / 12, abs=1e-12)


def test_cross_oracle_agreement_random_weights_labeled():
    kernel = triangle_kernel(label_rule=TWO_LABEL_2G)
    w = draw_weighing(PLUS_MINUS, seed=123)
    four = fourier_spectrum(kernel, w)
    ny = nystrom_spectrum(UnitInterval(), kernel, w, m=1000)
    assert np.allclose(four.eigenvalues[:8], ny.eigenvalues[:8], atol=1e-3)


def test_finite_series_labeled_square_is_exact():
    # Explicit finite coefficient list: g^2 by exact convolution.
    kernel = FourierKernel(g0=0.3, gk=np.array([0.1, -0.05]), label_rule=TWO_LABEL_2G)
    w = draw_weighing(PLUS_MINUS, seed=5)
    four = fourier_spectrum(kernel, w)
    ny = nystrom_spectrum(UnitInterval(), kernel, w, m=1500)
    assert np.allclose(four.eigenvalues[:8], ny.eigenvalues[:8], atol=1e-4)


def test_nystrom_m_too_small():
    with pytest.raises(ValueError, match="at least 16"):
        nystrom_spectrum(UnitInterval(), triangle_kernel(), UNIT_WEIGHING, m=8)


def test_eigenfunction_orthonormality_under_quadrature():
    m = 1000
    grid = (np.arange(m) + 0.5) / m
    for spec in (fourier_spectrum(triangle_kernel()),
                 nystrom_spectrum(UnitInterval(), triangle_kernel(), UNIT_WEIGHING, m=m)):
        top = min(10, spec.eigenvalues.size)
        table = np.column_stack([spec.phi(k, grid) for k in range(top)])
        gram = table.T @ table / m
        assert np.abs(gram - np.eye(top)).max() < 1e-6


def test_kernel_reconstruction_error_equals_tail():
    spec = fourier_spectrum(triangle_kernel())
    m = 800
    grid = (np.arange(m) + 0.5) / m
    kernel = triangle_kernel()
    kfull = kernel.g(grid[:, None] - grid[None, :])
    for r in (1, 3, 5):
        krec = np.zeros((m, m))
        for k in range(r):
            col = spec.phi(k, grid)
            krec += spec.eigenvalues[k] * np.outer(col, col)
        err = np.mean((kfull - krec) ** 2)
        assert err == pytest.approx(tail_epsilon_r(spec, r), abs=2e-5)


def test_distance_identity():
    spec = fourier_spectrum(triangle_kernel())
    kernel = triangle_kernel()
    m = 2000
    grid = (np.arange(m) + 0.5) / m
    for x, xp in ((0.1, 0.35), (0.0, 0.5), (0.2, 0.8)):
        quad = np.mean((kernel.g(x - grid) - kernel.g(xp - grid)) ** 2)
        series = kernel_distance_sq(spec, x, xp)
        assert series == pytest.approx(quad, abs=1e-6)


# ---------------------------------------------------------------------------
# Ideal embedding
# ---------------------------------------------------------------------------

def test_rank_one_ideal_embedding_constant():
    spec = fourier_spectrum(triangle_kernel())
    sigma = np.array([0.1, 0.4, 0.9])
    f = ideal_embedding(spec, sigma, 1)
    assert np.allclose(f, 1.0)  # top eigenfunction of a convolution kernel


def test_circle_coordinates_of_ideal_embedding():
    spec = fourier_spectrum(triangle_kernel())
    sigma = np.array([0.0, 0.2, 0.7])
    f = ideal_embedding(spec, sigma, 3)
    lam = spec.eigenvalues
    assert np.allclose(f[:, 1], lam[1] / lam[0] * math.sqrt(2) * np.cos(2 * np.pi * sigma))
    assert np.allclose(f[:, 2], lam[2] / lam[0] * math.sqrt(2) * np.sin(2 * np.pi * sigma))


def test_equal_attributes_equal_embedding():
    spec = fourier_spectrum(triangle_kernel())
    f = ideal_embedding(spec, np.array([0.3, 0.3]), 5)
    assert np.array_equal(f[0], f[1])


def test_ideal_embedding_rank_check():
    spec = nystrom_spectrum(FiniteSet((0.5, 0.5)),
                            unlabeled_block(np.array([[0.6, 0.2], [0.2, 0.6]])), UNIT_WEIGHING)
    with pytest.raises(ValueError, match="exceeds"):
        ideal_embedding(spec, np.array([0, 1]), 3)


# ---------------------------------------------------------------------------
# Tail energy
# ---------------------------------------------------------------------------

def test_block_model_tail_vanishes_at_rank():
    b = np.array([[0.7, 0.3, 0.1], [0.3, 0.6, 0.2], [0.1, 0.2, 0.9]])
    spec = nystrom_spectrum(FiniteSet((0.3, 0.3, 0.4)), unlabeled_block(b), UNIT_WEIGHING)
    assert tail_epsilon_r(spec, 3) == pytest.approx(0.0, abs=1e-15)
    assert tail_epsilon_r(spec, 2) > 0.0


def test_triangle_tail_series_oracle():
    # Independent series oracle: eps_1 = sum over odd k of 2 / (pi^4 k^4),
    # and sum_odd 1/k^4 = pi^4 / 96, so eps_1 = 1/48.
    k = np.arange(1, 200_001, 2, dtype=float)
    oracle = float(np.sum(2.0 / (np.pi**4 * k**4)))
    spec = fourier_spectrum(triangle_kernel())
    assert tail_epsilon_r(spec, 1) == pytest.approx(oracle, abs=1e-10)
    assert tail_epsilon_r(spec, 1) == pytest.approx(1.0 / 48.0, abs=1e-10)


def test_tail_decreases_to_zero():
    spec = fourier_spectrum(triangle_kernel())
    vals = [tail_epsilon_r(spec, r) for r in (0, 1, 2, 5, 11, 41, 201)]
    assert all(a >= b >= 0.0 for a, b in zip(vals, vals[1:]))
    assert vals[0] == pytest.approx(1.0 / 12.0, abs=1e-14)  # full energy of |x|
    assert vals[-1] < 1e-8


def test_quadrature_tail_is_partial_sum():
    spec = nystrom_spectrum(UnitInterval(), triangle_kernel(), UNIT_WEIGHING, m=200)
    assert not spec.tail_is_exact
    assert tail_epsilon_r(spec, 1) == pytest.approx(1.0 / 48.0, abs=1e-4)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def test_eta_diagnostic_decreases_with_smaller_tail():
    spec = fourier_spectrum(triangle_kernel())
    psi = lambda t: t  # caller-supplied modulus of continuity
    vals = [eta_diagnostic(spec, eps=0.3, psi=psi, sigma_i=0.2, r=r, quad_m=500)
            for r in (1, 3, 7)]
    assert vals[0] > vals[1] > vals[2] > 0.0


def test_effective_kernel_matches_weighted_sum():
    kernel = triangle_kernel(label_rule=TWO_LABEL_2G)
    w = draw_weighing(PLUS_MINUS, seed=2)
    kfn = effective_kernel_fn(kernel, w)
    x, y = 0.15, 0.62
    g = kernel.g(x - y)
    expected = w.weights[0] * g * 2 * g + w.weights[1] * g * (1 - 2 * g)
    assert kfn(x, y) == pytest.approx(expected, rel=1e-12)
