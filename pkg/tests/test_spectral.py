import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlparax import Axis, Field, Frame, Grid
from nlparax.spectral import (
    antideriv_array,
    dealias_array,
    deriv_array,
    line_means,
    mean_zero_array,
    project_mean_zero,
    spectral_antiderivative,
    spectral_derivative,
    wavenumbers,
)


def _grid1d(n=64, L=2 * np.pi, name="x1"):
    return Grid((Axis(name, L, n),), Frame.PHYSICAL)


modes = st.lists(
    st.tuples(st.integers(min_value=1, max_value=8),
              st.floats(-2.0, 2.0),
              st.floats(0.0, 6.0)),
    min_size=1, max_size=5,
)


def _synth(x, L, terms):
    out = np.zeros_like(x)
    for k, a, ph in terms:
        out += a * np.sin(2 * np.pi * k * x / L + ph)
    return out


def test_single_mode_derivative_exact():
    n, L = 64, 5.0
    g = _grid1d(n, L)
    x = g.mesh()[0]
    f = Field(g, np.sin(2 * np.pi * 3 * x / L))
    df = spectral_derivative(f, "x1")
    exact = (2 * np.pi * 3 / L) * np.cos(2 * np.pi * 3 * x / L)
    assert np.abs(df.scalar - exact).max() < 1e-12


@settings(deadline=None, max_examples=40)
@given(terms=modes)
def test_derivative_is_linear(terms):
    n, L = 64, 3.0
    x = L * np.arange(n) / n
    f = _synth(x, L, terms)
    g = np.cos(2 * np.pi * x / L)
    lhs = deriv_array(f + 2.5 * g, 0, n, L)
    rhs = deriv_array(f, 0, n, L) + 2.5 * deriv_array(g, 0, n, L)
    assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(lhs).max())


@settings(deadline=None, max_examples=40)
@given(terms=modes)
def test_antideriv_inverts_deriv_on_mean_zero(terms):
    n, L = 128, 2 * np.pi
    x = L * np.arange(n) / n
    f = mean_zero_array(_synth(x, L, terms), 0)
    back = antideriv_array(deriv_array(f, 0, n, L), 0, n, L)
    # antideriv returns the mean-zero primitive, f is already mean-zero
    assert np.abs(back - f).max() < 1e-10 * max(1.0, np.abs(f).max())


def test_antideriv_output_is_mean_zero(rng):
    n, L = 96, 4.0
    x = L * np.arange(n) / n
    f = mean_zero_array(rng.standard_normal(n), 0)
    F = antideriv_array(f, 0, n, L)
    assert abs(F.mean()) < 1e-13


def test_spectral_antiderivative_rejects_nonzero_mean():
    g = _grid1d(32)
    f = Field(g, np.ones(32))
    with pytest.raises(ValueError):
        spectral_antiderivative(f, "x1")


def test_nyquist_mode_zeroed_for_odd_order():
    n, L = 32, 2 * np.pi
    x = L * np.arange(n) / n
    f = np.cos(np.pi * n / L * x)  # pure Nyquist mode
    df = deriv_array(f, 0, n, L, order=1)
    assert np.abs(df).max() < 1e-12


def test_dealias_cutoff():
    n, L = 48, 2 * np.pi
    x = L * np.arange(n) / n
    kept = np.sin((n // 3 - 1) * x)
    dropped = np.sin((n // 3 + 2) * x)
    out = dealias_array(kept + dropped, 0, n)
    assert np.abs(out - kept).max() < 1e-12


def test_wavenumbers_rfft_ordering():
    k = wavenumbers(16, 2 * np.pi)
    assert k.shape == (9,)
    assert k[0] == 0.0
    assert np.allclose(k, np.arange(9))  # L = 2*pi gives integer wavenumbers


def test_line_means_constant_in_transverse():
    g = Grid((Axis("tau", 2 * np.pi, 32), Axis("y1", 2.0, 8)), Frame.KZK)
    T, Y = g.mesh()
    f = Field(g, np.sin(T) + 0.7 * Y)
    m = line_means(f, "tau")
    assert m.shape == (8, 1)  # component axis survives
    assert np.allclose(m[:, 0], 0.7 * g.mesh()[1][0, :], atol=1e-12)


def test_project_mean_zero_idempotent(rng):
    g = _grid1d(64)
    f = Field(g, rng.standard_normal(64) + 3.0)
    p = project_mean_zero(f, "x1")
    assert abs(p.scalar.mean()) < 1e-13
    p2 = project_mean_zero(p, "x1")
    assert np.abs(p2.scalar - p.scalar).max() < 1e-14


@settings(deadline=None, max_examples=25)
@given(terms=modes)
def test_parseval_l2_norm(terms):
    n, L = 128, 2 * np.pi
    g = _grid1d(n, L)
    x = g.mesh()[0]
    v = _synth(x, L, terms)
    f = Field(g, v)
    fh = np.fft.rfft(v) / n
    w = np.full(fh.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    fourier = np.sqrt(L * np.sum(w * np.abs(fh) ** 2))
    assert f.l2_norm() == pytest.approx(fourier, rel=1e-12, abs=1e-12)
