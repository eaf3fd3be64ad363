"""Speech-like test utterances and WAV helpers.

The synthetic utterances are formant-filtered glottal pulse trains with
unvoiced bursts, organised into syllables separated by silent pauses, so a
VAD has genuine speech-absent frames to work with.
"""
import numpy as np
from scipy.io import wavfile
from scipy.signal import lfilter

__all__ = ['synthetic_utterance', 'read_wav', 'write_wav', 'load_source']

# (F1, F2, F3) in Hz for a handful of vowels
_VOWELS = np.array([
    [730, 1090, 2440],
    [270, 2290, 3010],
    [300, 870, 2240],
    [530, 1840, 2480],
    [570, 840, 2410],
    [660, 1720, 2410],
    [440, 1020, 2240],
])
_BANDWIDTHS = np.array([80.0, 110.0, 160.0])


def _resonator(x, freq, bw, fs):
    """Two-pole resonator with unit gain at its center frequency."""
    r = np.exp(-np.pi * bw / fs)
    theta = 2 * np.pi * freq / fs
    a = [1.0, -2 * r * np.cos(theta), r * r]
    z = np.exp(-1j * theta)
    peak = abs(1.0 / (a[0] + a[1] * z + a[2] * z * z))
    return lfilter([1.0 / peak], a, x)


def _syllable(rng, n, fs):
    t = np.arange(n) / fs
    f0 = rng.uniform(95, 210) * (1 + 0.08 * np.sin(2 * np.pi * rng.uniform(
        1, 4) * t + rng.uniform(0, 2 * np.pi)))
    phase = np.cumsum(f0 / fs)
    pulses = np.diff(np.floor(phase), prepend=0.0)
    # -12 dB/oct glottal tilt
    glottal = lfilter([1.0], [1.0, -1.8, 0.81], pulses)
    glottal -= np.mean(glottal)
    formants = _VOWELS[rng.integers(len(_VOWELS))] * rng.uniform(0.9, 1.15)
    voiced = np.zeros(n)
    for freq, bw, g in zip(formants, _BANDWIDTHS, (1.0, 0.5, 0.25)):
        voiced += g * _resonator(glottal, freq, bw, fs)
    # lip radiation, +6 dB/oct
    voiced = np.diff(voiced, prepend=0.0)
    voiced /= np.std(voiced) + 1e-12

    # short fricative burst at onset or offset
    fric = lfilter([1.0, -0.95], [1.0], rng.standard_normal(n))
    burst = np.zeros(n)
    m = min(n, int(rng.uniform(0.03, 0.08) * fs))
    if rng.random() < 0.5:
        burst[:m] = np.hanning(2 * m)[m:]
    else:
        burst[-m:] = np.hanning(2 * m)[:m]
    sig = voiced + 0.3 * fric * burst / (np.std(fric) + 1e-12)

    ramp = min(n // 4, int(0.02 * fs))
    env = np.ones(n)
    env[:ramp] = np.hanning(2 * ramp)[:ramp]
    env[-ramp:] = np.hanning(2 * ramp)[ramp:]
    return sig * env * rng.uniform(0.4, 1.0)


def synthetic_utterance(seed, duration_s=13.0, fs=16000,
                        lead_silence_s=0.5):
    """Deterministic speech-like utterance with pauses.

    Args:
        seed: selects the "talker" and sentence.
        duration_s: total length.
        lead_silence_s: leading silence (lets trackers see noise first).

    Returns:
        mono float array with peak 0.5.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    out = np.zeros(n)
    pos = int(lead_silence_s * fs)
    while True:
        word = []
        for _ in range(rng.integers(1, 4)):
            word.append(_syllable(rng, int(rng.uniform(0.12, 0.3) * fs), fs))
        word = np.concatenate(word)
        if pos + word.size > n - int(0.3 * fs):
            break
        out[pos:pos + word.size] = word
        pos += word.size
        pause = 0.4 if rng.random() < 0.2 else rng.uniform(0.08, 0.25)
        pos += int(pause * fs)
    peak = np.max(np.abs(out))
    if peak == 0:
        raise ValueError(f'duration {duration_s} s leaves no room for speech')
    return 0.5 * out / peak


def read_wav(path):
    """Read a WAV file as float in [-1, 1]; returns (fs, (channels, samples))."""
    fs, data = wavfile.read(path)
    if np.issubdtype(data.dtype, np.integer):
        data = data / float(np.iinfo(data.dtype).max + 1)
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    return fs, data.T


def write_wav(path, fs, signal, pcm16=False):
    """Write (channels, samples) or mono float data."""
    x = np.asarray(signal, dtype=float)
    x = x.T if x.ndim == 2 else x
    if pcm16:
        x = np.clip(np.round(x * 32767), -32768, 32767).astype(np.int16)
    else:
        x = x.astype(np.float32)
    wavfile.write(path, int(fs), x)


def load_source(spec, fs=16000, duration_s=13.0):
    """Resolve an utterance spec: ``synthetic:<seed>`` or a mono WAV path."""
    spec = str(spec)
    if spec.startswith('synthetic:'):
        return synthetic_utterance(int(spec.split(':', 1)[1]), duration_s, fs)
    rate, data = read_wav(spec)
    if rate != fs:
        raise ValueError(f'{spec}: sample rate {rate} Hz, expected {fs} Hz')
    if data.shape[0] != 1:
        raise ValueError(f'{spec}: expected a mono file')
    return data[0]
