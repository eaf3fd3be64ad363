"""Occlusion-robust own-voice MVDR beamforming for a head-worn mic array.

Modules:
    wola        STFT analysis/synthesis (weighted overlap-add)
    scene       array geometry, noise field, occlusion model, scene builder
    speech      synthetic utterances and WAV helpers
    detect      voice activity and occlusion flags
    estimation  covariance tracking and GEVD-based RTF estimation
    beamform    MVDR weights and the adaptive/switching/hybrid strategies
    metrics     SNR improvement and own-voice distortion
    experiment  grid evaluation, scene export and single-file enhancement
    plotdata    plot-ready series from results
"""
from .beamform import STRATEGIES, StrategyConfig, mvdr, process
from .config import ExperimentConfig, load_config
from .experiment import run_experiment
from .wola import WolaConfig, analyze, synthesize

__version__ = '0.1.0'
__all__ = ['STRATEGIES', 'StrategyConfig', 'mvdr', 'process',
           'ExperimentConfig', 'load_config', 'run_experiment',
           'WolaConfig', 'analyze', 'synthesize']
