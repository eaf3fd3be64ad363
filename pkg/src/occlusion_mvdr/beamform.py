"""MVDR weights and the three occlusion-handling strategies.

``adaptive``   VAD-gated covariance tracking + GEVD RTF, one state.
``switching``  fixed a-priori MVDR filters selected by the occlusion flag.
``hybrid``     like adaptive, but with one covariance set per occlusion state.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .estimation import (SmoothingConfig, SwitchingTracker,
                         estimate_rtf_gevd, load)
from .wola import synthesize

__all__ = ['STRATEGIES', 'mvdr', 'FixedFilterPair',
           'precompute_fixed_filters', 'StrategyConfig', 'ProcessResult',
           'process', 'apply_weights', 'shadow_apply', 'DivergenceError']

logger = logging.getLogger(__name__)

STRATEGIES = ('adaptive', 'switching', 'hybrid')


class DivergenceError(RuntimeError):
    pass


def mvdr(R_n, h, loading=1e-4):
    """MVDR weights ``R^-1 h / (h^H R^-1 h)`` with ``R`` the loaded R_n.

    Broadcasts over leading dimensions.
    """
    R = load(np.asarray(R_n), loading)
    h = np.asarray(h, dtype=complex)
    x = np.linalg.solve(R, h[..., None])[..., 0]
    den = np.sum(h.conj() * x, axis=-1)
    if not (np.all(np.isfinite(den)) and np.all(den.real > 0)):
        raise ValueError('h^H R^-1 h must be positive and finite')
    return x / den.real[..., None]


@dataclass(frozen=True)
class FixedFilterPair:
    unoccluded: np.ndarray  # (bins, M)
    occluded: np.ndarray    # (bins, M)

    def stack(self):
        return np.stack([self.unoccluded, self.occluded])


def precompute_fixed_filters(apriori, loading=1e-4):
    """MVDR filters for both occlusion states from the prior alone."""
    w_u = mvdr(apriori.noise_cov_unoccluded, apriori.rtf_unoccluded, loading)
    w_o = mvdr(apriori.noise_cov_occluded(), apriori.rtf_occluded(), loading)
    return FixedFilterPair(w_u, w_o)


@dataclass(frozen=True)
class StrategyConfig:
    strategy: str = 'hybrid'
    smoothing: SmoothingConfig = field(
        default_factory=SmoothingConfig.from_forgetting_times)
    loading: float = 1e-4
    power_iters: int = 2
    # frames at the start used to scale the a-priori initial covariances
    calibration_frames: int = 62
    max_weight_norm: float = 1e3

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f'unknown strategy {self.strategy!r}; '
                             f'expected one of {STRATEGIES}')


@dataclass
class ProcessResult:
    output: np.ndarray   # (T, K) enhanced spectrogram
    weights: np.ndarray  # (T, K, M) weight log
    resets: int = 0


def apply_weights(weights, spec):
    """Z = w^H y per frame and bin."""
    return np.einsum('tkm,tkm->tk', np.conj(weights), spec)


def _init_level(noisy, n_frames):
    n = max(1, min(n_frames, noisy.shape[0]))
    level = np.mean(np.abs(noisy[:n]) ** 2, axis=(0, 2))
    floor = 1e-12 * max(level.max(), 1e-30)
    return np.maximum(level, floor)


def process(strategy, noisy, flags, apriori, cfg=None, backend='numba'):
    """Enhance a noisy multichannel spectrogram.

    Args:
        strategy: 'adaptive', 'switching' or 'hybrid' (overrides
            ``cfg.strategy``).
        noisy: (T, K, M) spectrogram.
        flags: FrameFlags (VAD and occlusion detection per frame).
        apriori: AprioriData; its ``ref_index`` is the output reference.
        cfg: StrategyConfig.
        backend: 'numba' (compiled loop) or 'numpy' (reference path).

    Returns:
        ProcessResult with the enhanced spectrogram and the weight log.
    """
    cfg = StrategyConfig(strategy) if cfg is None else cfg
    if strategy not in STRATEGIES:
        raise ValueError(f'unknown strategy {strategy!r}')
    noisy = np.asarray(noisy, dtype=complex)
    n_t, n_k, n_m = noisy.shape
    if len(flags) != n_t:
        raise ValueError(f'{len(flags)} flags for {n_t} frames')
    if apriori.rtf_unoccluded.shape != (n_k, n_m):
        raise ValueError('a-priori data does not match the spectrogram')

    fixed = precompute_fixed_filters(apriori, cfg.loading)
    if strategy == 'switching':
        weights = np.where(flags.od.astype(bool)[:, None, None],
                           fixed.occluded[None], fixed.unoccluded[None])
        return ProcessResult(apply_weights(weights, noisy), weights)

    od = flags.od if strategy == 'hybrid' else np.zeros_like(flags.od)
    level = _init_level(noisy, cfg.calibration_frames)
    tracker = SwitchingTracker.from_apriori(apriori, level)
    if backend == 'numba':
        weights, resets = _run_compiled(noisy, flags.vad, od, tracker,
                                        apriori.ref_index, cfg, fixed)
    elif backend == 'numpy':
        weights, resets = _run_numpy(noisy, flags.vad, od, tracker,
                                     apriori.ref_index, cfg, fixed)
    else:
        raise ValueError(f'unknown backend {backend!r}')
    if resets:
        logger.warning('%s: %d weight resets by the divergence guard',
                       strategy, resets)
    return ProcessResult(apply_weights(weights, noisy), weights, resets)


def _run_compiled(noisy, vad, od, tracker, ref, cfg, fixed):
    w, resets, bad_t, bad_k = _kernels.track(
        noisy, np.ascontiguousarray(vad, dtype=np.int8),
        np.ascontiguousarray(od, dtype=np.int8),
        np.ascontiguousarray(tracker.R_y), np.ascontiguousarray(tracker.R_n),
        np.ascontiguousarray(tracker.rtf), cfg.smoothing.alpha_y,
        cfg.smoothing.alpha_n, cfg.loading, ref, cfg.power_iters,
        np.ascontiguousarray(fixed.stack()), cfg.max_weight_norm)
    if bad_t >= 0:
        raise DivergenceError(
            f'tracker diverged at frame {bad_t}, bin {bad_k}')
    return w, int(resets)


def _run_numpy(noisy, vad, od, tracker, ref, cfg, fixed):
    n_t = noisy.shape[0]
    weights = np.empty_like(noisy)
    w_fixed = fixed.stack()
    resets = 0
    for t in range(n_t):
        s = tracker.update(noisy[t], vad[t], od[t], cfg.smoothing)
        R_n, R_y = tracker.R_n[s], tracker.R_y[s]
        if not (np.all(np.isfinite(R_n)) and np.all(np.isfinite(R_y))):
            raise DivergenceError(f'non-finite covariance at frame {t}')
        est = estimate_rtf_gevd(R_n, R_y, ref, cfg.power_iters,
                                tracker.rtf[s], cfg.loading)
        tracker.rtf[s] = est.h
        w = mvdr(R_n, est.h, cfg.loading)
        norm = np.linalg.norm(w, axis=-1)
        bad = norm > cfg.max_weight_norm
        if np.any(bad):
            w[bad] = w_fixed[s][bad]
            resets += int(np.count_nonzero(bad))
        weights[t] = w
    return weights, resets


def shadow_apply(weights, component, wola_cfg, n_samples=None):
    """Filter an isolated component with a logged weight sequence.

    Args:
        weights: (T, K, M) weight log from :func:`process`.
        component: (T, K, M) spectrogram of speech or noise alone.

    Returns:
        time signal (samples,).
    """
    weights = np.asarray(weights)
    component = np.asarray(component)
    if weights.shape != component.shape:
        raise ValueError(f'weight log {weights.shape} does not match '
                         f'component {component.shape}')
    return synthesize(apply_weights(weights, component), wola_cfg,
                      n_samples)
