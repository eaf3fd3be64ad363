"""
An occluded glasses array
=========================

Five microphones on a pair of glasses: one on the nose pad, two on each
temple.  The nose-pad mic sits closest to the mouth but is the one a hand or
scarf can cover.  This script builds a scene and looks at what occlusion
does to it.
"""
import numpy as np

from occlusion_mvdr.detect import oracle_vad
from occlusion_mvdr.metrics import activity_mask, snr_db
from occlusion_mvdr.scene import (ArrayGeometry, SceneConfig, build_scene,
                                  diffuse_coherence, generate_pattern,
                                  nearfield_rtf, noise_gain,
                                  parametric_occlusion_profile)
from occlusion_mvdr.speech import synthetic_utterance
from occlusion_mvdr.wola import WolaConfig, synthesize

cfg = WolaConfig()
geom = ArrayGeometry.glasses()
print('mouth distances (cm):', np.round(100 * geom.mouth_distances(), 1))

# a-priori model: free-field mouth RTF and diffuse coherence
h = nearfield_rtf(geom, cfg, geom.left_ref_index)
gamma = diffuse_coherence(geom, cfg)
k1k = np.argmin(np.abs(cfg.frequencies - 1000))
print('|RTF| at 1 kHz:', np.round(np.abs(h[k1k]), 2))
print('coherence nose pad / left hinge at 1 kHz: '
      f'{gamma[k1k, 0, 1].real:.2f}')

# covering the nose pad low-passes the own voice more than the noise
prof = parametric_occlusion_profile(cfg=cfg)
for f in (250, 800, 2000, 6000):
    k = np.argmin(np.abs(cfg.frequencies - f))
    print(f'{f:5d} Hz  speech {20 * np.log10(abs(prof.speech_tf[k])):6.1f} dB'
          f'  noise {20 * np.log10(abs(prof.noise_tf[k])):6.1f} dB')

# a 13 s utterance in a diffuse-like field, occluded 8 times
scene = build_scene(synthetic_utterance(0), SceneConfig(), geom, cfg,
                    noise_seed=1, user_seed=2)
vad = oracle_vad(scene.speech_spec)
mask = activity_mask(vad, cfg, scene.n_samples)
gain = noise_gain(scene.speech, scene.noise, geom, 5.0, mask)
pattern = generate_pattern(scene.n_frames, 8, seed=0)
X, N = scene.condition(gain, pattern)
print(f'speech active in {vad.mean():.0%} of frames, occluded in '
      f'{pattern.state.mean():.0%}')

for m in range(geom.n_mics):
    x = synthesize(X[:, :, m], cfg, scene.n_samples)
    n = synthesize(N[:, :, m], cfg, scene.n_samples)
    print(f'mic {m}: input SNR {snr_db(x, n, mask):5.1f} dB')
