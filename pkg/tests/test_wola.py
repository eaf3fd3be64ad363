import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occlusion_mvdr.wola import (WolaConfig, analyze, design_windows,
                                 n_frames, synthesize)


def _interior_error_db(x, y, cfg):
    sl = slice(cfg.frame_len, x.shape[-1] - cfg.frame_len)
    err = np.sum((x[..., sl] - y[..., sl]) ** 2)
    return 10 * np.log10(err / np.sum(x[..., sl] ** 2))


def test_window_pair_is_cola(wola_cfg):
    prod = wola_cfg.analysis_window * wola_cfg.synthesis_window
    total = prod.reshape(-1, wola_cfg.hop).sum(axis=0)
    np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_window_validation():
    with pytest.raises(ValueError):
        design_windows(256, 100)
    with pytest.raises(ValueError):
        design_windows(256, 256)
    with pytest.raises(ValueError):
        WolaConfig(frame_len=256, fft_size=128)


def test_frame_matches_direct_dft(wola_cfg, rng):
    x = rng.standard_normal(3000)
    spec = analyze(x, wola_cfg)[:, :, 0]
    padded = np.concatenate([np.zeros(wola_cfg.pad), x, np.zeros(1000)])
    n = np.arange(wola_cfg.frame_len)
    k = np.arange(wola_cfg.n_bins)
    dft = np.exp(-2j * np.pi * np.outer(k, n) / wola_cfg.fft_size)
    for t in (0, 3, 17):
        seg = padded[t * wola_cfg.hop:t * wola_cfg.hop + wola_cfg.frame_len]
        expected = dft @ (seg * wola_cfg.analysis_window)
        np.testing.assert_allclose(spec[t], expected, atol=1e-10)


def test_shapes(wola_cfg, rng):
    x = rng.standard_normal((5, 4000))
    spec = analyze(x, wola_cfg)
    assert spec.shape == (n_frames(4000, wola_cfg), 129, 5)
    assert synthesize(spec, wola_cfg, 4000).shape == (5, 4000)
    assert synthesize(spec[:, :, 0], wola_cfg, 4000).shape == (4000,)


def test_linearity(wola_cfg, rng):
    a, b = rng.standard_normal((2, 2, 2000))
    np.testing.assert_allclose(analyze(2 * a - 3 * b, wola_cfg),
                               2 * analyze(a, wola_cfg)
                               - 3 * analyze(b, wola_cfg), atol=1e-10)


def test_full_reconstruction_with_padding(wola_cfg, rng):
    x = rng.standard_normal((2, 1234))
    y = synthesize(analyze(x, wola_cfg), wola_cfg, 1234)
    np.testing.assert_allclose(y, x, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(256, 5000), seed=st.integers(0, 2 ** 31))
def test_round_trip_any_length(n, seed):
    cfg = WolaConfig()
    x = np.random.default_rng(seed).standard_normal(n)
    y = synthesize(analyze(x, cfg), cfg, n)
    np.testing.assert_allclose(y[0], x, atol=1e-9)


def test_errors(wola_cfg):
    with pytest.raises(ValueError):
        analyze(np.zeros(100), wola_cfg)
    with pytest.raises(ValueError):
        analyze(np.array([0.0, np.nan] * 200), wola_cfg)
    with pytest.raises(ValueError):
        synthesize(np.zeros((10, 65, 1), complex), wola_cfg)


def test_interior_error_helper(wola_cfg, rng):
    x = rng.standard_normal((2, 20000))
    y = synthesize(analyze(x, wola_cfg), wola_cfg, 20000)
    assert _interior_error_db(x, y, wola_cfg) < -200


def test_unpadded_framing(wola_cfg, rng):
    x = rng.standard_normal(1000)
    spec = analyze(x, wola_cfg, pad=False)
    assert spec.shape[0] == n_frames(1000, wola_cfg, pad=False) == 12
    first = np.fft.rfft(x[:256] * wola_cfg.analysis_window)
    np.testing.assert_allclose(spec[0, :, 0], first, atol=1e-10)
    # interior samples covered by all overlapping frames are exact
    y = synthesize(spec, wola_cfg, pad=False)
    np.testing.assert_allclose(y[0, 192:700], x[192:700], atol=1e-10)
