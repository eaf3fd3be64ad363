import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occlusion_mvdr.scene import (
    ArrayGeometry, OcclusionProfile, apply_occlusion, build_apriori,
    diffuse_coherence, generate_pattern, mix_at_snr, nearfield_rtf,
    noise_gain, parametric_occlusion_profile, render_speech,
    synthesize_noise)
from occlusion_mvdr.wola import analyze


def test_glasses_geometry(geom):
    assert geom.n_mics == 5
    assert geom.reference_indices == (2, 4)
    d = geom.mouth_distances()
    assert np.argmin(d) == geom.occludable_index


def test_rtf_two_mic_example(wola_cfg):
    geom = ArrayGeometry(np.array([[0.05, 0, 0], [0.1, 0, 0], [0, 0.1, 0]]),
                         occludable_index=2, left_ref_index=0,
                         right_ref_index=1)
    h = nearfield_rtf(geom, wola_cfg, ref_index=0)
    f = wola_cfg.frequencies
    expected = 0.5 * np.exp(-2j * np.pi * f * 0.05 / 343.0)
    np.testing.assert_allclose(h[:, 1], expected, rtol=1e-12)
    np.testing.assert_array_equal(h[:, 0], 1.0)


def test_rtf_matches_delay_line_render(geom, wola_cfg, rng):
    # cross-spectral ratio of a white source rendered at the mics
    src = rng.standard_normal(16000 * 4)
    x = render_speech(src, geom, wola_cfg)
    X = analyze(x, wola_cfg)
    ref = geom.left_ref_index
    est = (np.sum(X * X[:, :, [ref]].conj(), axis=0)
           / np.sum(np.abs(X[:, :, ref]) ** 2, axis=0)[:, None])
    h = nearfield_rtf(geom, wola_cfg, ref)
    k = slice(4, 120)
    assert np.max(np.abs(est[k] - h[k]) / np.abs(h[k])) < 0.05


def test_rtf_reference_change(geom, wola_cfg):
    h2 = nearfield_rtf(geom, wola_cfg, 2)
    h4 = nearfield_rtf(geom, wola_cfg, 4)
    np.testing.assert_allclose(h2 / h2[:, [4]], h4, atol=1e-12)


def test_rtf_rejects_coincident_mouth(wola_cfg):
    geom = ArrayGeometry(np.zeros((3, 3)), occludable_index=0,
                         left_ref_index=1, right_ref_index=2)
    with pytest.raises(ValueError):
        nearfield_rtf(geom, wola_cfg)


def test_coherence_matches_plane_wave_integral(geom, wola_cfg):
    # numerical average of plane waves over a Fibonacci sphere
    n = 20000
    i = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * i / n)
    theta = np.pi * (1 + 5 ** 0.5) * i
    u = np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi),
                  np.cos(phi)], axis=1)
    p = geom.mic_positions
    gamma = diffuse_coherence(geom, wola_cfg)
    for k in (10, 40, 90, 128):
        f = wola_cfg.frequencies[k]
        a = np.exp(2j * np.pi * f * (u @ p.T) / 343.0)
        num = a.T @ a.conj() / n
        np.testing.assert_allclose(gamma[k], num, atol=0.05 * 1)


def test_coherence_properties(geom, wola_cfg):
    gamma = diffuse_coherence(geom, wola_cfg)
    np.testing.assert_allclose(np.diagonal(gamma, axis1=1, axis2=2), 1.0)
    np.testing.assert_allclose(gamma, gamma.conj().transpose(0, 2, 1))
    assert np.all(np.linalg.eigvalsh(gamma) > 0)


def test_synthetic_noise_coherence_monte_carlo(geom, wola_cfg):
    noise = synthesize_noise(geom, 16000 * 8, seed=11)
    N = analyze(noise, wola_cfg)
    cross = np.einsum('tki,tkj->kij', N, N.conj())
    p = np.real(np.diagonal(cross, axis1=1, axis2=2))
    coh = cross / np.sqrt(p[:, :, None] * p[:, None, :])
    gamma = diffuse_coherence(geom, wola_cfg)
    # finite wave count and frames leave a small estimation error
    err = np.abs(coh[4:] - gamma[4:])
    assert np.mean(err) < 0.08
    assert np.max(np.abs(coh[4:].real - gamma[4:].real)) < 0.2


def test_noise_determinism(geom):
    a = synthesize_noise(geom, 4000, seed=3, n_waves=16)
    b = synthesize_noise(geom, 4000, seed=3, n_waves=16)
    c = synthesize_noise(geom, 4000, seed=4, n_waves=16)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_single_plane_wave_delay(geom):
    # one wave along +x: mic m leads by x_m / c
    x = synthesize_noise(geom, 1 << 14, seed=0,
                         directions=np.array([[1.0, 0, 0]]))
    X = np.fft.rfft(x, axis=-1)
    f = np.fft.rfftfreq(1 << 14, 1 / 16000)
    lead = geom.mic_positions[:, 0] / 343.0
    expected = X[0] * np.exp(2j * np.pi * f * (lead[1] - lead[0]))
    # Nyquist bin excluded: a real signal cannot carry its phase shift
    np.testing.assert_allclose(X[1, :-1], expected[:-1],
                               atol=1e-6 * np.abs(X[0]).max())


def test_occlusion_profile_shape(wola_cfg):
    prof = parametric_occlusion_profile(cfg=wola_cfg)
    f = wola_cfg.frequencies
    assert prof.speech_tf[0] == pytest.approx(1.0)
    k = np.argmin(np.abs(f - 4000))
    floor = 0.1
    oracle = floor + (1 - floor) / (1 + 1j * f[k] / 800.0)
    assert prof.speech_tf[k] == pytest.approx(oracle, abs=1e-12)
    # frozen regression value |B_o(4 kHz)| for the default profile
    assert abs(prof.speech_tf[k]) == pytest.approx(0.219265, abs=1e-6)
    # about -3 dB at the cutoff
    b_fc = floor + (1 - floor) / (1 + 1j)
    assert 20 * np.log10(abs(b_fc)) == pytest.approx(-2.97, abs=0.01)
    assert np.all(np.diff(np.abs(prof.speech_tf)) <= 0)
    assert np.all(np.abs(prof.noise_tf) >= np.abs(prof.speech_tf) - 1e-12)


def test_occlusion_profile_validation(wola_cfg):
    np.testing.assert_array_equal(
        parametric_occlusion_profile(depth_db=0.0, cfg=wola_cfg).speech_tf,
        1.0)
    with pytest.raises(ValueError):
        parametric_occlusion_profile(speech_cutoff_hz=9000, cfg=wola_cfg)
    with pytest.raises(ValueError):
        OcclusionProfile(np.array([20.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        OcclusionProfile(np.array([np.nan]), np.array([1.0]))


@settings(max_examples=50, deadline=None)
@given(n_frames=st.integers(50, 400), switches=st.integers(0, 20),
       seed=st.integers(0, 1000))
def test_pattern_properties(n_frames, switches, seed):
    if (switches + 1) * 2 > n_frames:
        with pytest.raises(ValueError):
            generate_pattern(n_frames, switches, n_frames, seed=seed)
        return
    min_seg = min(10, n_frames // (switches + 1))
    pat = generate_pattern(n_frames, switches, min_seg, seed=seed)
    assert len(pat) == n_frames
    assert pat.state[0] == 0
    assert np.count_nonzero(np.diff(pat.state)) == switches
    edges = np.flatnonzero(np.diff(np.concatenate(([-1], pat.state, [-1]))))
    assert np.min(np.diff(edges)) >= min_seg


def test_pattern_errors():
    with pytest.raises(ValueError):
        generate_pattern(100, 20, 10)
    with pytest.raises(ValueError):
        generate_pattern(100, -1, 10)


def test_apply_occlusion(wola_cfg, rng):
    spec = rng.standard_normal((6, 129, 5)) + 0j
    prof = parametric_occlusion_profile(cfg=wola_cfg)
    state = np.array([0, 1, 1, 0, 1, 0])
    out = apply_occlusion(spec, prof, state, 'speech')
    np.testing.assert_array_equal(out[:, :, 1:], spec[:, :, 1:])
    np.testing.assert_array_equal(out[state == 0], spec[state == 0])
    np.testing.assert_allclose(out[1, :, 0], spec[1, :, 0] * prof.speech_tf)
    out_n = apply_occlusion(spec, prof, state, 'noise')
    np.testing.assert_allclose(out_n[4, :, 0], spec[4, :, 0] * prof.noise_tf)
    with pytest.raises(ValueError):
        apply_occlusion(spec, prof, state, 'wind')
    with pytest.raises(ValueError):
        apply_occlusion(spec, prof, state[:3], 'speech')


def test_occlusion_transformation_consistency(small_scene):
    """Occluded covariances equal B R B^H and G R G^H on simulated data."""
    sc = small_scene
    prof = sc.true_profile
    state = np.ones(sc.n_frames, dtype=int)
    for comp, spec in (('speech', sc.speech_spec), ('noise', sc.noise_spec)):
        occ = apply_occlusion(spec, prof, state, comp)
        R = np.einsum('tki,tkj->kij', spec, spec.conj())
        R_o = np.einsum('tki,tkj->kij', occ, occ.conj())
        T = prof.matrix(comp, 5)
        pred = T @ R @ T.conj().transpose(0, 2, 1)
        rel = np.linalg.norm(R_o - pred) / np.linalg.norm(R_o)
        assert rel < 1e-10


def test_apriori_occluded_quantities(geom, wola_cfg):
    prof = parametric_occlusion_profile(cfg=wola_cfg)
    ap = build_apriori(geom, wola_cfg, prof, 2)
    B = ap.speech_matrix()
    np.testing.assert_allclose(ap.rtf_occluded(),
                               np.einsum('kij,kj->ki', B, ap.rtf_unoccluded),
                               atol=1e-14)
    np.testing.assert_allclose(ap.rtf_occluded()[:, 2], 1.0)
    G = ap.noise_matrix()
    np.testing.assert_allclose(
        ap.noise_cov_occluded(),
        G @ ap.noise_cov_unoccluded @ G.conj().transpose(0, 2, 1))
    ap4 = ap.with_reference(4)
    np.testing.assert_allclose(ap4.rtf_unoccluded,
                               nearfield_rtf(geom, wola_cfg, 4), atol=1e-12)


def test_mix_at_snr(geom, rng):
    s = rng.standard_normal((5, 8000))
    n = 3 * rng.standard_normal((5, 8000))
    noisy, scaled = mix_at_snr(s, n, geom, 5.0)
    snrs = [10 * np.log10(np.sum(s[r] ** 2) / np.sum(scaled[r] ** 2))
            for r in geom.reference_indices]
    assert np.mean(snrs) == pytest.approx(5.0, abs=1e-9)
    np.testing.assert_allclose(noisy, s + scaled)
    with pytest.raises(ValueError):
        noise_gain(np.zeros((5, 10)), n[:, :10], geom, 0.0)


def test_scene_is_deterministic(geom, wola_cfg):
    from occlusion_mvdr.scene import SceneConfig, build_scene
    from occlusion_mvdr.speech import synthetic_utterance
    src = synthetic_utterance(1, duration_s=2.0)
    a = build_scene(src, SceneConfig(), geom, wola_cfg, 2, 3)
    b = build_scene(src, SceneConfig(), geom, wola_cfg, 2, 3)
    np.testing.assert_array_equal(a.speech, b.speech)
    np.testing.assert_array_equal(a.noise, b.noise)
    np.testing.assert_array_equal(a.true_profile.speech_tf,
                                  b.true_profile.speech_tf)


def test_scene_reference_normalization(small_scene):
    sc = small_scene
    assert sc.speech.shape == sc.noise.shape
    assert sc.speech_spec.shape == (sc.n_frames, 129, 5)
    # the nose pad is closest to the mouth and receives the most speech
    power = np.sum(sc.speech ** 2, axis=1)
    assert np.argmax(power) == 0
