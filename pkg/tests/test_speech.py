import numpy as np
import pytest

from occlusion_mvdr.speech import (load_source, read_wav, synthetic_utterance,
                                   write_wav)


def test_utterance_properties():
    x = synthetic_utterance(0, duration_s=4.0)
    assert x.shape == (64000,)
    assert np.max(np.abs(x)) == pytest.approx(0.5)
    assert np.all(x[:8000] == 0)  # leading silence
    np.testing.assert_array_equal(x, synthetic_utterance(0, duration_s=4.0))
    assert not np.allclose(x, synthetic_utterance(1, duration_s=4.0))


def test_utterance_has_pauses_and_broadband_energy():
    x = synthetic_utterance(2)
    frames = x[:len(x) // 256 * 256].reshape(-1, 256)
    energy = np.sum(frames ** 2, axis=1)
    active = energy > 1e-4 * energy.max()
    assert 0.3 < np.mean(active) < 0.95
    spec = np.abs(np.fft.rfft(x)) ** 2
    f = np.fft.rfftfreq(len(x), 1 / 16000)
    assert np.sum(spec[f > 500]) / np.sum(spec) > 0.3
    assert np.sum(spec[f > 1000]) / np.sum(spec) > 0.03


def test_too_short_utterance():
    with pytest.raises(ValueError):
        synthetic_utterance(0, duration_s=0.6)


def test_wav_round_trip(tmp_path, rng):
    x = 0.5 * rng.uniform(-1, 1, (5, 1000))
    write_wav(tmp_path / 'a.wav', 16000, x)
    fs, y = read_wav(tmp_path / 'a.wav')
    assert fs == 16000
    np.testing.assert_allclose(y, x, atol=1e-7)
    write_wav(tmp_path / 'b.wav', 16000, x[0], pcm16=True)
    fs, y = read_wav(tmp_path / 'b.wav')
    assert y.shape == (1, 1000)
    np.testing.assert_allclose(y[0], x[0], atol=1 / 32767)


def test_load_source(tmp_path):
    x = load_source('synthetic:4', duration_s=2.0)
    assert x.size == 32000
    write_wav(tmp_path / 'm.wav', 16000, x)
    np.testing.assert_allclose(load_source(tmp_path / 'm.wav'), x, atol=1e-7)
    write_wav(tmp_path / 's.wav', 8000, x)
    with pytest.raises(ValueError):
        load_source(tmp_path / 's.wav')
    write_wav(tmp_path / 'st.wav', 16000, np.stack([x, x]))
    with pytest.raises(ValueError):
        load_source(tmp_path / 'st.wav')
