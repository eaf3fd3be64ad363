"""Experiment configuration: a YAML tree mapped onto frozen dataclasses.

Every field has a default, so an empty file (or ``default``) gives the full
evaluation grid.  Unknown keys are rejected rather than silently ignored.
"""
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .beamform import STRATEGIES
from .scene import Articulation, Mismatch, NoiseField, SceneConfig

OUTDIR_ENV = 'OCCLUSION_MVDR_OUTDIR'


def default_out_dir():
    return os.environ.get(OUTDIR_ENV, 'results')


@dataclass(frozen=True)
class VadCondition:
    name: str
    false_negative_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.false_negative_rate < 1.0:
            raise ValueError(f'false_negative_rate must be in [0, 1), got '
                             f'{self.false_negative_rate}')


@dataclass(frozen=True)
class ExperimentConfig:
    snr_grid: tuple = (0.0, 5.0, 10.0)
    switch_grid: tuple = (2, 8, 24, 48)
    vad_conditions: tuple = (VadCondition('oracle', 0.0),
                             VadCondition('fn5', 0.05))
    strategies: tuple = STRATEGIES
    # utterances are all (speech, noise) pairs
    speech: tuple = ('synthetic:0', 'synthetic:1', 'synthetic:2')
    noise_seeds: tuple = (1, 2)
    seed: int = 0
    duration_s: float = 13.0
    tau_y_s: float = 0.3
    tau_n_s: float = 0.5
    power_iters: int = 2
    vad_threshold_db: float = 40.0
    scene: SceneConfig = field(default_factory=SceneConfig)
    out_dir: str = field(default_factory=default_out_dir)
    csv_name: str = 'results.csv'
    jobs: int = 1

    def __post_init__(self):
        for name in ('snr_grid', 'switch_grid', 'vad_conditions',
                     'strategies', 'speech', 'noise_seeds'):
            if len(getattr(self, name)) == 0:
                raise ValueError(f'{name} must not be empty')
        bad = set(self.strategies) - set(STRATEGIES)
        if bad:
            raise ValueError(f'unknown strategies {sorted(bad)}')
        names = [v.name for v in self.vad_conditions]
        if len(set(names)) != len(names):
            raise ValueError(f'duplicate VAD condition names {names}')
        if any(int(s) < 0 for s in self.switch_grid):
            raise ValueError('switch counts must be non-negative')
        if self.jobs < 1:
            raise ValueError('jobs must be >= 1')

    @property
    def utterances(self):
        """(index, speech spec, noise seed) for every utterance."""
        pairs = [(s, n) for s in self.speech for n in self.noise_seeds]
        return [(i, s, n) for i, (s, n) in enumerate(pairs)]

    @property
    def csv_path(self):
        return Path(self.out_dir) / self.csv_name

    def to_dict(self):
        d = dataclasses.asdict(self)
        d['vad_conditions'] = [dataclasses.asdict(v)
                               for v in self.vad_conditions]
        for key in ('snr_grid', 'switch_grid', 'strategies', 'speech',
                    'noise_seeds'):
            d[key] = list(d[key])
        return d


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ValueError(f'{where}: expected a mapping')
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f'{where}: unknown keys {sorted(unknown)}')
    return cls(**data)


def _scene(data):
    data = dict(data or {})
    nested = {'noise': NoiseField, 'mismatch': Mismatch,
              'articulation': Articulation}
    for key, cls in nested.items():
        if key in data:
            data[key] = _build(cls, data[key], f'scene.{key}')
    return _build(SceneConfig, data, 'scene')


def from_dict(data):
    data = dict(data or {})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f'unknown config keys {sorted(unknown)}')
    if 'scene' in data:
        data['scene'] = _scene(data['scene'])
    if 'vad_conditions' in data:
        conds = []
        for item in data['vad_conditions']:
            if isinstance(item, str):
                item = {'name': item}
            conds.append(_build(VadCondition, item, 'vad_conditions'))
        data['vad_conditions'] = tuple(conds)
    for key in ('snr_grid', 'switch_grid', 'strategies', 'speech',
                'noise_seeds'):
        if key in data:
            val = data[key]
            data[key] = tuple(val) if isinstance(val, (list, tuple)) \
                else (val,)
    data['snr_grid'] = tuple(float(v) for v in data.get(
        'snr_grid', ExperimentConfig.snr_grid))
    data['switch_grid'] = tuple(int(v) for v in data.get(
        'switch_grid', ExperimentConfig.switch_grid))
    return ExperimentConfig(**data)


def load_config(path=None, overrides=None):
    """Load a config file; ``None`` or ``'default'`` gives the defaults.

    ``overrides`` is a flat dict of top-level keys applied after the file.
    """
    data = {}
    if path is not None and str(path) != 'default':
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f'config file not found: {path}')
        with open(path) as fh:
            try:
                data = yaml.safe_load(fh) or {}
            except yaml.YAMLError as exc:
                raise ValueError(f'{path}: invalid YAML: {exc}') from exc
        if not isinstance(data, dict):
            raise ValueError(f'{path}: top level must be a mapping')
    data.update({k: v for k, v in (overrides or {}).items()
                 if v is not None})
    return from_dict(data)


def dump_config(cfg, path):
    with open(path, 'w') as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
