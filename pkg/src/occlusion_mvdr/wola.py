"""Weighted overlap-add STFT analysis and synthesis.

Spectrograms are stored as complex arrays of shape (frames, bins, channels);
time signals as real arrays of shape (channels, samples).  The forward FFT is
unnormalized, the inverse carries the 1/fft_size factor (numpy convention).

Both ends of the signal are zero-padded by ``frame_len - hop`` samples so
that every input sample is covered by the full set of overlapping frames and
the round trip is exact up to floating point error.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sp_fft
from numpy.lib.stride_tricks import as_strided

__all__ = ['WolaConfig', 'design_windows', 'analyze', 'synthesize',
           'n_frames']


def design_windows(frame_len, hop):
    """Square-root Hann analysis/synthesis pair satisfying COLA.

    The pair is scaled so that the overlap-added product of both windows is
    exactly one for the given hop.

    >>> a, s = design_windows(256, 64)
    >>> prod = a * s
    >>> bool(np.allclose(prod.reshape(4, 64).sum(axis=0), 1.0))
    True
    """
    frame_len = int(frame_len)
    hop = int(hop)
    if hop <= 0 or frame_len <= 0:
        raise ValueError('frame_len and hop must be positive')
    if frame_len % hop != 0:
        raise ValueError(
            f'hop ({hop}) must divide frame_len ({frame_len})')
    if frame_len // hop < 2:
        raise ValueError('sqrt-Hann pair needs at least 50% overlap')

    n = np.arange(frame_len)
    hann = 0.5 - 0.5 * np.cos(2 * np.pi * n / frame_len)  # periodic
    cola = hann.reshape(frame_len // hop, hop).sum(axis=0)
    if not np.allclose(cola, cola[0], rtol=0, atol=1e-12):
        raise ValueError('window pair is not COLA for this hop')
    window = np.sqrt(hann / cola[0])
    return window, window.copy()


@dataclass(frozen=True)
class WolaConfig:
    sample_rate_hz: int = 16000
    frame_len: int = 256
    hop: int = 64
    fft_size: int = 256
    analysis_window: np.ndarray = field(default=None, repr=False,
                                        compare=False)
    synthesis_window: np.ndarray = field(default=None, repr=False,
                                         compare=False)

    def __post_init__(self):
        if self.fft_size < self.frame_len:
            raise ValueError('fft_size must be >= frame_len')
        if self.analysis_window is None or self.synthesis_window is None:
            a, s = design_windows(self.frame_len, self.hop)
            object.__setattr__(self, 'analysis_window', a)
            object.__setattr__(self, 'synthesis_window', s)
        for w in (self.analysis_window, self.synthesis_window):
            if np.shape(w) != (self.frame_len,):
                raise ValueError('windows must have length frame_len')

    @property
    def n_bins(self):
        return self.fft_size // 2 + 1

    @property
    def hop_s(self):
        return self.hop / self.sample_rate_hz

    @property
    def pad(self):
        """Zero padding applied at the start of the signal."""
        return self.frame_len - self.hop

    @property
    def frequencies(self):
        return np.arange(self.n_bins) * self.sample_rate_hz / self.fft_size


def n_frames(n_samples, cfg, pad=True):
    """Number of frames ``analyze`` produces for a signal of given length."""
    if pad:
        n_samples = n_samples + 2 * cfg.pad
        n_samples += (-(n_samples - cfg.frame_len)) % cfg.hop
    if n_samples < cfg.frame_len:
        raise ValueError(
            f'signal of {n_samples} samples is shorter than one frame '
            f'({cfg.frame_len})')
    return (n_samples - cfg.frame_len) // cfg.hop + 1


def analyze(signal, cfg, pad=True):
    """Multichannel STFT.

    Args:
        signal: real array (channels, samples) or (samples,).
        cfg: WolaConfig.
        pad: zero-pad both ends so that edge samples are fully covered.

    Returns:
        complex array (frames, bins, channels).
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim == 1:
        x = x[None]
    if x.ndim != 2:
        raise ValueError('signal must be (channels, samples)')
    if x.shape[-1] < cfg.frame_len:
        raise ValueError(
            f'signal of {x.shape[-1]} samples is shorter than one frame '
            f'({cfg.frame_len})')
    if not np.all(np.isfinite(x)):
        raise ValueError('signal contains non-finite values')

    n_ch, n = x.shape
    lead = cfg.pad if pad else 0
    total = n + 2 * lead
    if pad:
        total += (-(total - cfg.frame_len)) % cfg.hop
    # time-major buffer so frames come out as (frames, frame_len, channels)
    buf = np.zeros((total, n_ch))
    buf[lead:lead + n] = x.T
    n_t = (total - cfg.frame_len) // cfg.hop + 1
    row, col = buf.strides
    frames = as_strided(buf, (n_t, cfg.frame_len, n_ch),
                        (cfg.hop * row, row, col), writeable=False)
    return sp_fft.rfft(frames * cfg.analysis_window[:, None],
                       n=cfg.fft_size, axis=1)


def synthesize(spec, cfg, n_samples=None, pad=True):
    """Inverse of :func:`analyze`.

    Args:
        spec: complex array (frames, bins, channels) or (frames, bins) for a
            single channel.
        cfg: WolaConfig.
        n_samples: length of the returned signal; defaults to everything the
            frames cover (minus the leading pad).
        pad: whether ``analyze`` was called with padding.

    Returns:
        real array (channels, samples), or (samples,) for 2-D input.
    """
    spec = np.asarray(spec)
    squeeze = spec.ndim == 2
    if squeeze:
        spec = spec[..., None]
    if spec.ndim != 3 or spec.shape[1] != cfg.n_bins:
        raise ValueError(
            f'spectrogram shape {spec.shape} does not match '
            f'{cfg.n_bins} bins')
    n_t, _, n_ch = spec.shape

    frames = sp_fft.irfft(spec, n=cfg.fft_size, axis=1)[:, :cfg.frame_len]
    frames = frames * cfg.synthesis_window[:, None]

    ratio = cfg.frame_len // cfg.hop
    blocks = np.zeros((n_t + ratio - 1, cfg.hop, n_ch))
    for r in range(ratio):
        blocks[r:r + n_t] += frames[:, r * cfg.hop:(r + 1) * cfg.hop]
    out = blocks.reshape(-1, n_ch).T

    if pad:
        out = out[:, cfg.pad:]
    if n_samples is not None:
        if n_samples > out.shape[-1]:
            raise ValueError(
                f'requested {n_samples} samples, frames cover only '
                f'{out.shape[-1]}')
        out = out[:, :n_samples]
    return out[0] if squeeze else out
