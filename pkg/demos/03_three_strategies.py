"""
Adaptive, switching and hybrid beamforming on one scene
=======================================================

The adaptive MVDR re-learns its statistics after every occlusion change.  The
switching MVDR jumps between two fixed a-priori filters.  The hybrid keeps
one adaptive set of statistics per occlusion state.  The numbers below are
for the left-ear reference mic at 5 dB input SNR with 24 occlusion changes.
"""
from occlusion_mvdr.beamform import STRATEGIES, process, shadow_apply
from occlusion_mvdr.detect import FrameFlags, corrupt_vad, oracle_vad
from occlusion_mvdr.metrics import activity_mask, ovd_db, snr_db
from occlusion_mvdr.scene import (SceneConfig, build_scene, generate_pattern,
                                  noise_gain)
from occlusion_mvdr.speech import synthetic_utterance

scene = build_scene(synthetic_utterance(1), SceneConfig(), noise_seed=2,
                    user_seed=3)
cfg, geom = scene.cfg, scene.geom
ref = geom.left_ref_index

vad = oracle_vad(scene.speech_spec)
mask = activity_mask(vad, cfg, scene.n_samples)
gain = noise_gain(scene.speech, scene.noise, geom, 5.0, mask)
pattern = generate_pattern(scene.n_frames, 24, seed=1)
X, N = scene.condition(gain, pattern)
snr_in = snr_db(scene.speech[ref], gain * scene.noise[ref], mask)

for label, v in (('oracle VAD', vad), ('5% missed', corrupt_vad(vad, 0.05,
                                                                 seed=0))):
    print(label)
    flags = FrameFlags(v, pattern.state)
    for strategy in STRATEGIES:
        res = process(strategy, X + N, flags, scene.apriori(ref))
        # filter the clean parts with the same weights ("shadow filtering")
        xs = shadow_apply(res.weights, X, cfg, scene.n_samples)
        ns = shadow_apply(res.weights, N, cfg, scene.n_samples)
        print(f'  {strategy:9s}  SNR +{snr_db(xs, ns, mask) - snr_in:5.2f} dB'
              f'   OVD {ovd_db(scene.speech[ref], xs, mask):6.2f} dB')
