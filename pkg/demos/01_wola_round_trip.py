"""
WOLA analysis and synthesis
===========================

The filter bank behind every strategy: 16 ms frames with 75 % overlap at
16 kHz.  A sqrt-Hann pair sums to one across overlaps, so synthesis undoes
analysis up to rounding.
"""
import numpy as np

from occlusion_mvdr.wola import WolaConfig, analyze, synthesize

cfg = WolaConfig()
print(f'frame {cfg.frame_len}, hop {cfg.hop}, {cfg.n_bins} bins, '
      f'{cfg.hop_s * 1e3:.0f} ms per frame step')

# the window product overlaps to a constant
prod = cfg.analysis_window * cfg.synthesis_window
print('overlap-add of window product:', prod.reshape(-1, cfg.hop).sum(0)[:4])

# five channels of noise through the filter bank and back
x = np.random.default_rng(0).standard_normal((5, 13 * 16000))
spec = analyze(x, cfg)
print('spectrogram (frames, bins, mics):', spec.shape)
y = synthesize(spec, cfg, x.shape[1])
err = np.sum((x - y) ** 2) / np.sum(x ** 2)
print(f'reconstruction error: {10 * np.log10(err):.1f} dB')
