"""Synthetic own-voice scenes for a glasses-type array with one occludable mic.

Covers the array geometry, nearfield RTFs of the mouth, the free-field
diffuse-noise coherence model, time-domain diffuse noise built from random
plane waves, occlusion transfer functions and random occlusion patterns.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import _kernels
from .wola import WolaConfig, analyze

__all__ = [
    'SPEED_OF_SOUND', 'ArrayGeometry', 'OcclusionProfile',
    'OcclusionPattern', 'AprioriData', 'SceneConfig', 'NoiseField',
    'Mismatch', 'Articulation', 'articulated_speech', 'Scene', 'nearfield_rtf', 'diffuse_coherence',
    'synthesize_noise', 'apply_occlusion', 'mix_at_snr', 'noise_gain',
    'generate_pattern', 'parametric_occlusion_profile', 'build_apriori',
    'render_speech', 'build_scene',
]

SPEED_OF_SOUND = 343.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Microphone layout in meters; the mouth sits at the origin by default.

    Axes: x points forward (out of the face), y to the user's left, z up.
    """
    mic_positions: np.ndarray
    mouth_position: np.ndarray = field(
        default_factory=lambda: np.zeros(3))
    occludable_index: int = 0
    left_ref_index: int = 2
    right_ref_index: int = 4
    speed_of_sound: float = SPEED_OF_SOUND

    def __post_init__(self):
        pos = np.asarray(self.mic_positions, dtype=float)
        mouth = np.asarray(self.mouth_position, dtype=float)
        object.__setattr__(self, 'mic_positions', pos)
        object.__setattr__(self, 'mouth_position', mouth)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError('mic_positions must be (M, 3)')
        idx = (self.occludable_index, self.left_ref_index,
               self.right_ref_index)
        if len(set(idx)) != 3 or not all(0 <= i < self.n_mics for i in idx):
            raise ValueError(f'invalid role indices {idx}')

    @classmethod
    def glasses(cls):
        """Nose pad, then left front/rear temple, right front/rear temple."""
        return cls(np.array([
            [0.020, 0.000, 0.067],    # nose pad, ~7 cm from the mouth
            [-0.010, 0.070, 0.070],   # left hinge
            [-0.080, 0.075, 0.065],   # left temple near the ear (ref)
            [-0.010, -0.070, 0.070],  # right hinge
            [-0.080, -0.075, 0.065],  # right temple near the ear (ref)
        ]))

    @property
    def n_mics(self):
        return self.mic_positions.shape[0]

    @property
    def reference_indices(self):
        return self.left_ref_index, self.right_ref_index

    def mouth_distances(self):
        return np.linalg.norm(self.mic_positions - self.mouth_position,
                              axis=1)

    def mic_distances(self):
        diff = self.mic_positions[:, None] - self.mic_positions[None]
        return np.linalg.norm(diff, axis=-1)

    def check_mouth_nearest(self):
        d = self.mouth_distances()
        return int(np.argmin(d)) == self.occludable_index


def _frequencies(cfg):
    return cfg.frequencies if isinstance(cfg, WolaConfig) else np.asarray(cfg)


def nearfield_rtf(geom, cfg, ref_index=None):
    """RTF of the mouth for each bin, relative to ``ref_index``.

    Spherical spreading (1/distance) and a pure propagation delay per mic.

    Returns:
        complex array (bins, mics) with exactly 1 in the reference column.
    """
    if ref_index is None:
        ref_index = geom.left_ref_index
    d = geom.mouth_distances()
    if np.any(d < 1e-6):
        raise ValueError('mouth coincides with a microphone')
    f = _frequencies(cfg)
    delay = (d - d[ref_index]) / geom.speed_of_sound
    h = (d[ref_index] / d) * np.exp(-2j * np.pi * f[:, None] * delay)
    h[:, ref_index] = 1.0
    return h


def diffuse_coherence(geom, cfg, floor=1e-6):
    """Spherically isotropic coherence sinc(2 f d / c) per bin.

    A diagonal load of ``floor * trace / M`` is added and the result is
    rescaled to a unit diagonal, so the matrices are numerically PSD.

    Returns:
        complex array (bins, mics, mics).
    """
    f = _frequencies(cfg)
    d = geom.mic_distances()
    gamma = np.sinc(2 * f[:, None, None] * d / geom.speed_of_sound)
    m = geom.n_mics
    gamma = (gamma + floor * np.eye(m)) / (1 + floor)
    return gamma.astype(complex)


def _unit_vectors(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _complex_white(rng, n_fft_bins, n_samples):
    """Spectrum of unit-variance real white noise of length ``n_samples``."""
    spec = (rng.standard_normal(n_fft_bins)
            + 1j * rng.standard_normal(n_fft_bins)) * np.sqrt(n_samples / 2)
    spec[0] = spec[0].real * np.sqrt(2)
    if n_samples % 2 == 0:
        spec[-1] = spec[-1].real * np.sqrt(2)
    return spec


def synthesize_noise(geom, n_samples, seed, sample_rate_hz=16000,
                     n_waves=256, directions=None, spectrum=None,
                     mic_directivity_db=0.0, sensor_noise_db=None):
    """Diffuse noise as a superposition of independent random plane waves.

    Args:
        geom: ArrayGeometry.
        n_samples: output length.
        seed: RNG seed; identical seeds give bit-identical output.
        n_waves: number of plane waves (ignored when ``directions`` given).
        directions: optional (n_waves, 3) unit vectors pointing towards the
            sources.
        spectrum: optional callable f_hz -> amplitude shaping every wave.
        mic_directivity_db: attenuation of waves arriving from behind a mic
            (relative to its outward direction from the head center) at
            Nyquist, rising linearly with frequency.  Zero gives the
            free-field case whose coherence is exactly the sinc model.
        sensor_noise_db: if given, adds spatially white noise at this level
            relative to the per-channel diffuse power.

    Returns:
        real array (mics, n_samples) with roughly unit variance per channel.
    """
    rng = np.random.default_rng(seed)
    if directions is None:
        directions = _unit_vectors(rng, n_waves)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    n_waves = directions.shape[0]

    f = np.fft.rfftfreq(n_samples, 1 / sample_rate_hz)
    df = f[1] - f[0]
    shape = np.ones_like(f) if spectrum is None else spectrum(f)
    pos = geom.mic_positions
    # arrival advance of each wave at each mic
    advance = directions @ pos.T / geom.speed_of_sound  # (waves, mics)
    log_step = 2j * np.pi * df * advance
    if mic_directivity_db:
        center = pos.mean(axis=0)
        outward = pos - center
        outward /= np.linalg.norm(outward, axis=1, keepdims=True)
        behind = np.clip(-(directions @ outward.T), 0, None)
        # attenuation in dB grows linearly with frequency
        slope = mic_directivity_db / (sample_rate_hz / 2)
        log_step = log_step - np.log(10) / 20 * slope * df * behind

    total = np.zeros((geom.n_mics, f.size), dtype=complex)
    for w in range(n_waves):
        src = _complex_white(rng, f.size, n_samples) * shape
        _kernels.accumulate_wave(total, src, log_step[w])
    out = np.fft.irfft(total, n=n_samples, axis=-1) / np.sqrt(n_waves)

    if sensor_noise_db is not None:
        power = np.mean(out ** 2, axis=1, keepdims=True)
        out = out + (np.sqrt(power * 10 ** (sensor_noise_db / 10))
                     * rng.standard_normal(out.shape))
    return out


@dataclass(frozen=True)
class OcclusionProfile:
    """Per-bin occlusion transfer functions of the occludable mic."""
    speech_tf: np.ndarray
    noise_tf: np.ndarray

    def __post_init__(self):
        for tf in (self.speech_tf, self.noise_tf):
            if not np.all(np.isfinite(tf)):
                raise ValueError('occlusion transfer function not finite')
            if np.max(np.abs(tf)) > 10:
                raise ValueError('occlusion transfer function exceeds 10')

    def matrix(self, component, n_mics, index=0):
        """Diagonal transformation matrices per bin, shape (bins, M, M)."""
        tf = self.speech_tf if component == 'speech' else self.noise_tf
        mat = np.tile(np.eye(n_mics, dtype=complex), (tf.size, 1, 1))
        mat[:, index, index] = tf
        return mat


def first_order_lowpass(f, cutoff_hz):
    return 1.0 / (1.0 + 1j * np.asarray(f) / cutoff_hz)


def parametric_occlusion_profile(speech_cutoff_hz=800.0,
                                 noise_cutoff_hz=1500.0, depth_db=20.0,
                                 cfg=None, noise_depth_db=None):
    """Low-pass shelving surrogate for measured occlusion responses.

    Each transfer function is ``floor + (1 - floor) / (1 + j f / fc)`` with
    ``floor = 10 ** (-depth_db / 20)``: unity at DC, a first-order roll-off
    around the cutoff, and a stop band that settles at ``-depth_db``.
    """
    cfg = WolaConfig() if cfg is None else cfg
    f = _frequencies(cfg)
    nyquist = (cfg.sample_rate_hz / 2 if isinstance(cfg, WolaConfig)
               else f[-1])
    for fc in (speech_cutoff_hz, noise_cutoff_hz):
        if not 0 < fc < nyquist:
            raise ValueError(f'cutoff {fc} Hz outside (0, Nyquist)')
    if noise_depth_db is None:
        noise_depth_db = depth_db

    def shelf(fc, depth):
        floor = 10 ** (-depth / 20)
        if floor == 1.0:
            return np.ones(f.size, dtype=complex)
        return floor + (1 - floor) * first_order_lowpass(f, fc)

    return OcclusionProfile(shelf(speech_cutoff_hz, depth_db),
                            shelf(noise_cutoff_hz, noise_depth_db))


@dataclass(frozen=True)
class OcclusionPattern:
    state: np.ndarray
    switch_count: int

    def __post_init__(self):
        state = np.asarray(self.state, dtype=np.int8)
        object.__setattr__(self, 'state', state)
        if np.count_nonzero(np.diff(state)) != self.switch_count:
            raise ValueError('switch_count does not match the pattern')

    def __len__(self):
        return self.state.size


def generate_pattern(n_frames, switch_count, min_segment_frames=10,
                     seed=None):
    """Random occlusion pattern starting unoccluded.

    Segment lengths are drawn uniformly among all compositions of
    ``n_frames`` into ``switch_count + 1`` parts of at least
    ``min_segment_frames`` frames.
    """
    n_seg = switch_count + 1
    slack = n_frames - n_seg * min_segment_frames
    if switch_count < 0 or slack < 0:
        raise ValueError(
            f'cannot fit {switch_count} switches with segments of '
            f'{min_segment_frames} frames into {n_frames} frames')
    rng = np.random.default_rng(seed)
    # stars and bars: choose positions of the bars among slack + n_seg - 1
    bars = np.sort(rng.choice(slack + n_seg - 1, size=n_seg - 1,
                              replace=False))
    extra = np.diff(np.concatenate(([-1], bars, [slack + n_seg - 1]))) - 1
    lengths = extra + min_segment_frames
    state = np.repeat(np.arange(n_seg) % 2, lengths).astype(np.int8)
    return OcclusionPattern(state, switch_count)


def apply_occlusion(spec, profile, pattern, component, channel=0):
    """Multiply the occludable channel by the occlusion TF in occluded frames.

    Args:
        spec: complex (frames, bins, mics).
        profile: OcclusionProfile.
        pattern: OcclusionPattern or binary frame vector.
        component: 'speech' (uses B_o) or 'noise' (uses G_o).
    """
    if component == 'speech':
        tf = profile.speech_tf
    elif component == 'noise':
        tf = profile.noise_tf
    else:
        raise ValueError(f"component must be 'speech' or 'noise', "
                         f"got {component!r}")
    state = getattr(pattern, 'state', pattern)
    state = np.asarray(state).astype(bool)
    if state.size != spec.shape[0]:
        raise ValueError('pattern length differs from number of frames')
    out = np.array(spec, dtype=complex, copy=True)
    out[state, :, channel] *= tf
    return out


def noise_gain(speech, noise, geom, snr_db, mask=None):
    """Noise gain giving a mean left/right reference SNR of ``snr_db``."""
    speech = np.asarray(speech)
    noise = np.asarray(noise)
    if speech.shape != noise.shape:
        raise ValueError('speech and noise must have the same shape')
    sel = slice(None) if mask is None else np.asarray(mask, dtype=bool)
    snrs = []
    for ref in geom.reference_indices:
        ps = np.sum(speech[ref, sel] ** 2)
        pn = np.sum(noise[ref, sel] ** 2)
        if ps <= 0 or pn <= 0:
            raise ValueError('silent speech or noise in a reference channel')
        snrs.append(10 * np.log10(ps / pn))
    return 10 ** ((np.mean(snrs) - snr_db) / 20)


def mix_at_snr(speech, noise, geom, snr_db, mask=None):
    """Scale the noise to ``snr_db`` at the ear references and add it.

    The SNR per reference is measured on samples where ``mask`` is true
    (all samples when omitted), and the mean of the two dB values is hit.

    Returns:
        (noisy, scaled_noise)
    """
    gain = noise_gain(speech, noise, geom, snr_db, mask)
    scaled = gain * np.asarray(noise)
    return np.asarray(speech) + scaled, scaled


@dataclass(frozen=True)
class AprioriData:
    """Prior knowledge for the fixed and switching-adaptive beamformers."""
    rtf_unoccluded: np.ndarray          # (bins, M), unit reference entry
    noise_cov_unoccluded: np.ndarray    # (bins, M, M)
    occlusion_profile: OcclusionProfile
    ref_index: int
    occludable_index: int = 0

    def __post_init__(self):
        if not np.allclose(self.rtf_unoccluded[:, self.ref_index], 1.0):
            raise ValueError('a-priori RTF must have unit reference entry')

    @property
    def n_mics(self):
        return self.rtf_unoccluded.shape[1]

    def speech_matrix(self):
        return self.occlusion_profile.matrix(
            'speech', self.n_mics, self.occludable_index)

    def noise_matrix(self):
        return self.occlusion_profile.matrix(
            'noise', self.n_mics, self.occludable_index)

    def rtf_occluded(self):
        b = self.occlusion_profile.speech_tf
        h = self.rtf_unoccluded.copy()
        h[:, self.occludable_index] *= b
        return h

    def noise_cov_occluded(self):
        g = self.noise_matrix()
        return g @ self.noise_cov_unoccluded @ g.conj().transpose(0, 2, 1)

    def with_reference(self, ref_index):
        h = self.rtf_unoccluded / self.rtf_unoccluded[:, [ref_index]]
        h[:, ref_index] = 1.0
        return AprioriData(h, self.noise_cov_unoccluded,
                           self.occlusion_profile, ref_index,
                           self.occludable_index)


def build_apriori(geom, cfg, profile, ref_index):
    """Nominal prior: free-field mouth RTF, sinc coherence, nominal profile."""
    return AprioriData(nearfield_rtf(geom, cfg, ref_index),
                       diffuse_coherence(geom, cfg), profile, ref_index,
                       geom.occludable_index)


# -- realistic scenes ---------------------------------------------------------

@dataclass(frozen=True)
class NoiseField:
    """How the simulated noise departs from the ideal free-field diffuse model.

    The a-priori noise covariance is always the free-field sinc coherence;
    these settings emulate a recorded "diffuse-like" field around a head.
    """
    n_waves: int = 256
    mic_directivity_db: float = 6.0
    sensor_noise_db: float = -40.0
    # loudspeakers near ear height, each at source_level_db re the
    # diffuse (reverberant) part
    n_sources: int = 4
    source_level_db: float = 6.0
    max_elevation_deg: float = 20.0
    pink: bool = True


@dataclass(frozen=True)
class Mismatch:
    """Per-user deviations of the true acoustics from the a-priori model."""
    mouth_offset_m: float = 0.003
    mic_gain_db: float = 0.3
    mic_phase_deg: float = 2.0
    cutoff_jitter: float = 0.2
    depth_jitter_db: float = 3.0


@dataclass(frozen=True)
class Articulation:
    """Slow wander of the effective mouth position while talking.

    The own voice is rendered from ``n_positions`` mouth positions scattered
    with ``spread_m`` standard deviation and cross-faded with smooth random
    weights of bandwidth ``rate_hz``, so the speech RTF is not exactly
    time-invariant.  ``spread_m = 0`` gives a fixed point source.
    """
    spread_m: float = 0.015
    rate_hz: float = 4.0
    n_positions: int = 6


@dataclass(frozen=True)
class SceneConfig:
    input_snr_db: float = 5.0
    switch_count: int = 8
    duration_s: float = 13.0
    rng_seed: int = 0
    speech_cutoff_hz: float = 800.0
    noise_cutoff_hz: float = 1500.0
    depth_db: float = 20.0
    noise_depth_db: float = None
    min_segment_frames: int = 10
    noise: NoiseField = NoiseField()
    mismatch: Mismatch = Mismatch()
    articulation: Articulation = Articulation()


def _pink(f):
    return 1.0 / np.sqrt(np.maximum(f, 100.0) / 100.0)


def render_speech(source, geom, cfg, rtf_gains=None, mouth=None):
    """Propagate a mono source to all mics, normalized to the left reference.

    Args:
        source: mono samples.
        rtf_gains: optional complex per-mic gain mismatch.
        mouth: optional true mouth position (defaults to the geometry's).

    Returns:
        real array (mics, samples).
    """
    if mouth is not None:
        geom = ArrayGeometry(geom.mic_positions, mouth,
                             geom.occludable_index, geom.left_ref_index,
                             geom.right_ref_index, geom.speed_of_sound)
    source = np.asarray(source, dtype=float)
    pad = 512
    n = source.size + 2 * pad
    spec = np.fft.rfft(np.pad(source, pad))
    f = np.fft.rfftfreq(n, 1 / cfg.sample_rate_hz)
    h = nearfield_rtf(geom, f)
    if rtf_gains is not None:
        h = h * rtf_gains
    out = np.fft.irfft(spec[:, None] * h, n=n, axis=0).T
    return out[:, pad:pad + source.size]


def articulated_speech(source, geom, cfg, articulation, seed,
                       rtf_gains=None, mouth=None):
    """Own voice from a slowly moving effective mouth position."""
    mouth = geom.mouth_position if mouth is None else np.asarray(mouth)
    if articulation.spread_m == 0 or articulation.n_positions < 2:
        return render_speech(source, geom, cfg, rtf_gains, mouth)
    rng = np.random.default_rng(seed)
    n_pos = articulation.n_positions
    offsets = articulation.spread_m * rng.standard_normal((n_pos, 3))

    # second-order smoothed noise -> softmax cross-fade weights
    a = np.exp(-2 * np.pi * articulation.rate_hz / cfg.sample_rate_hz)
    z = rng.standard_normal((n_pos, np.size(source)))
    for _ in range(2):
        z = lfilter([1 - a], [1, -a], z, axis=1)
    z /= z.std(axis=1, keepdims=True)
    weights = np.exp(2 * z)
    weights /= weights.sum(axis=0)

    out = np.zeros((geom.n_mics, np.size(source)))
    for off, w in zip(offsets, weights):
        out += w * render_speech(source, geom, cfg, rtf_gains, mouth + off)
    return out


@dataclass
class Scene:
    """Clean components of one utterance plus the a-priori model.

    Spectrograms are unoccluded; occlusion and noise scaling are linear and
    applied per condition with :meth:`condition`.
    """
    cfg: WolaConfig
    geom: ArrayGeometry
    speech: np.ndarray          # (M, N) clean unoccluded speech at the mics
    noise: np.ndarray           # (M, N) unscaled noise
    speech_spec: np.ndarray     # (T, K, M)
    noise_spec: np.ndarray      # (T, K, M)
    true_profile: OcclusionProfile
    nominal_profile: OcclusionProfile

    @property
    def n_samples(self):
        return self.speech.shape[1]

    @property
    def n_frames(self):
        return self.speech_spec.shape[0]

    def apriori(self, ref_index):
        return build_apriori(self.geom, self.cfg, self.nominal_profile,
                             ref_index)

    def condition(self, gain, pattern):
        """Occluded speech and scaled occluded noise spectrograms."""
        x = apply_occlusion(self.speech_spec, self.true_profile, pattern,
                            'speech', self.geom.occludable_index)
        n = apply_occlusion(self.noise_spec, self.true_profile, pattern,
                            'noise', self.geom.occludable_index)
        return x, gain * n


def build_scene(source, scfg, geom=None, cfg=None, noise_seed=0,
                user_seed=0):
    """Render speech and noise at the array and draw per-user mismatch.

    ``user_seed`` controls the deviation of the true acoustics from the
    nominal model (mouth position, mic gains/phases, occlusion TFs);
    ``noise_seed`` controls the noise realization and source directions.
    """
    geom = ArrayGeometry.glasses() if geom is None else geom
    cfg = WolaConfig() if cfg is None else cfg
    mm = scfg.mismatch
    rng = np.random.default_rng(user_seed)

    mouth = geom.mouth_position + mm.mouth_offset_m * rng.standard_normal(3)
    gains = 10 ** (mm.mic_gain_db * rng.standard_normal(geom.n_mics) / 20)
    phases = np.deg2rad(mm.mic_phase_deg) * rng.standard_normal(geom.n_mics)
    mic_tf = gains * np.exp(1j * phases)
    mic_tf /= mic_tf[geom.left_ref_index]
    speech = articulated_speech(source, geom, cfg, scfg.articulation,
                                [user_seed, 1], mic_tf, mouth)

    jitter = 1 + mm.cutoff_jitter * rng.uniform(-1, 1, 2)
    depth = scfg.depth_db + mm.depth_jitter_db * rng.uniform(-1, 1, 2)
    noise_depth = (scfg.depth_db if scfg.noise_depth_db is None
                   else scfg.noise_depth_db)
    nominal = parametric_occlusion_profile(
        scfg.speech_cutoff_hz, scfg.noise_cutoff_hz, scfg.depth_db, cfg,
        noise_depth)
    true = parametric_occlusion_profile(
        scfg.speech_cutoff_hz * jitter[0], scfg.noise_cutoff_hz * jitter[1],
        depth[0], cfg, noise_depth + depth[1] - scfg.depth_db)

    nf = scfg.noise
    n_samples = speech.shape[1]
    spectrum = _pink if nf.pink else None
    noise = synthesize_noise(
        geom, n_samples, noise_seed, cfg.sample_rate_hz, nf.n_waves,
        spectrum=spectrum, mic_directivity_db=nf.mic_directivity_db)
    if nf.n_sources:
        src_rng = np.random.default_rng([noise_seed, 1])
        az = src_rng.uniform(0, 2 * np.pi, nf.n_sources)
        el = np.deg2rad(nf.max_elevation_deg) * src_rng.uniform(
            -1, 1, nf.n_sources)
        dirs = np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az),
                         np.sin(el)], axis=1)
        directional = synthesize_noise(
            geom, n_samples, [noise_seed, 2], cfg.sample_rate_hz,
            directions=dirs, spectrum=spectrum,
            mic_directivity_db=nf.mic_directivity_db)
        # per-source level (synthesize_noise normalizes by sqrt(n_waves))
        directional *= 10 ** (nf.source_level_db / 20) * np.sqrt(
            nf.n_sources)
        noise = noise + directional
    if nf.sensor_noise_db is not None:
        power = np.mean(noise ** 2, axis=1, keepdims=True)
        noise = noise + np.sqrt(power * 10 ** (nf.sensor_noise_db / 10)) \
            * np.random.default_rng([noise_seed, 3]).standard_normal(
                noise.shape)
    noise = _apply_mic_tf(noise, mic_tf)

    return Scene(cfg, geom, speech, noise, analyze(speech, cfg),
                 analyze(noise, cfg), true, nominal)


def _apply_mic_tf(signal, mic_tf):
    """Constant complex gain per channel, applied to positive frequencies."""
    spec = np.fft.rfft(signal, axis=-1) * mic_tf[:, None]
    return np.fft.irfft(spec, n=signal.shape[-1], axis=-1)
