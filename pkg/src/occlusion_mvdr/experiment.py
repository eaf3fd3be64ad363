"""Grid evaluation: scenes x SNR x occlusion switches x VAD x strategy.

Results go to a versioned CSV with one row per condition and utterance and
an aggregate (mean/std over utterances) row after each condition.  The CSV
holds no timing data so that reruns are byte-identical; run times are written
next to it in ``timings.csv``.
"""
import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .beamform import StrategyConfig, process, shadow_apply
from .config import ExperimentConfig
from .detect import FrameFlags, corrupt_vad, oracle_vad, write_flags_csv
from .estimation import SmoothingConfig
from .metrics import MetricsReport, SideMetrics, activity_mask, ovd_db, \
    snr_db
from .scene import (ArrayGeometry, build_apriori, build_scene,
                    generate_pattern, noise_gain,
                    parametric_occlusion_profile)
from .speech import load_source, write_wav
from .wola import WolaConfig, analyze, synthesize

__all__ = ['CSV_HEADER', 'FIELDS', 'derive_seed', 'strategy_config',
           'prepare_scene', 'evaluate_utterance', 'run_experiment',
           'read_results', 'simulate', 'enhance']

logger = logging.getLogger(__name__)

CSV_HEADER = '# occlusion-mvdr results v1'
KEY_FIELDS = ['kind', 'utterance', 'speech', 'noise_seed', 'snr_db',
              'switches', 'vad', 'strategy', 'vad_independent', 'n']
METRIC_FIELDS = ['snr_in_db_L', 'snr_out_db_L', 'snr_improvement_db_L',
                 'ovd_db_L', 'snr_in_db_R', 'snr_out_db_R',
                 'snr_improvement_db_R', 'ovd_db_R', 'snr_in_db',
                 'snr_out_db', 'snr_improvement_db', 'ovd_db',
                 'nosepad_improvement_db']
STD_FIELDS = ['snr_improvement_db_std', 'ovd_db_std',
              'nosepad_improvement_db_std']
FIELDS = KEY_FIELDS + METRIC_FIELDS + STD_FIELDS + ['resets']
TIMING_FIELDS = ['utterance', 'snr_db', 'switches', 'vad', 'strategy',
                 'runtime_ms', 'audio_s']


def derive_seed(*keys):
    """A 32-bit seed determined by a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys])
               .generate_state(1)[0])


def strategy_config(cfg, strategy, wola_cfg):
    smoothing = SmoothingConfig.from_forgetting_times(
        cfg.tau_y_s, cfg.tau_n_s, wola_cfg.hop_s)
    return StrategyConfig(strategy, smoothing=smoothing,
                          power_iters=cfg.power_iters)


def prepare_scene(cfg, speech, noise_seed, utterance, wola_cfg=None):
    """Build the scene for one utterance with seeds derived from ``cfg``."""
    wola_cfg = WolaConfig() if wola_cfg is None else wola_cfg
    source = load_source(speech, wola_cfg.sample_rate_hz, cfg.duration_s)
    return build_scene(source, cfg.scene, ArrayGeometry.glasses(), wola_cfg,
                       noise_seed=derive_seed(cfg.seed, 2, noise_seed),
                       user_seed=derive_seed(cfg.seed, 1, utterance))


def _metrics(scene, X, N, gain, weights_by_ref, mask):
    sides = []
    for ref, weights in weights_by_ref:
        xs = shadow_apply(weights, X, scene.cfg, scene.n_samples)
        ns = shadow_apply(weights, N, scene.cfg, scene.n_samples)
        snr_in = snr_db(scene.speech[ref], gain * scene.noise[ref], mask)
        sides.append(SideMetrics(snr_in, snr_db(xs, ns, mask),
                                 ovd_db(scene.speech[ref], xs, mask)))
    return MetricsReport(*sides)


def _nosepad_improvement(scene, X, N, gain, mask):
    """SNR gain of the (occludable) nose-pad mic over the reference mics."""
    idx = scene.geom.occludable_index
    x = synthesize(X[:, :, idx], scene.cfg, scene.n_samples)
    n = synthesize(N[:, :, idx], scene.cfg, scene.n_samples)
    out = snr_db(x, n, mask)
    ins = [snr_db(scene.speech[r], gain * scene.noise[r], mask)
           for r in scene.geom.reference_indices]
    return out - float(np.mean(ins))


def evaluate_utterance(cfg, utterance, speech, noise_seed):
    """All conditions for one utterance; returns (rows, timings)."""
    wola_cfg = WolaConfig()
    scene = prepare_scene(cfg, speech, noise_seed, utterance, wola_cfg)
    geom = scene.geom
    aprioris = {r: scene.apriori(r) for r in geom.reference_indices}
    vad_oracle = oracle_vad(scene.speech_spec, cfg.vad_threshold_db)
    mask = activity_mask(vad_oracle, wola_cfg, scene.n_samples)
    vads = {}
    for i, cond in enumerate(cfg.vad_conditions):
        vads[cond.name] = (vad_oracle if cond.false_negative_rate == 0 else
                           corrupt_vad(vad_oracle, cond.false_negative_rate,
                                       derive_seed(cfg.seed, 4, utterance,
                                                   i)))
    audio_s = scene.n_samples / wola_cfg.sample_rate_hz

    rows, timings = [], []
    for snr in cfg.snr_grid:
        gain = noise_gain(scene.speech, scene.noise, geom, snr, mask)
        for switches in cfg.switch_grid:
            pattern = generate_pattern(
                scene.n_frames, switches, cfg.scene.min_segment_frames,
                seed=derive_seed(cfg.seed, 3, utterance, switches))
            X, N = scene.condition(gain, pattern)
            Y = X + N
            nosepad = _nosepad_improvement(scene, X, N, gain, mask)
            shared = {}
            for cond in cfg.vad_conditions:
                flags = FrameFlags(vads[cond.name], pattern.state)
                for strategy in cfg.strategies:
                    vad_free = strategy == 'switching'
                    if vad_free and strategy in shared:
                        report, resets, ms = shared[strategy]
                    else:
                        scfg = strategy_config(cfg, strategy, wola_cfg)
                        t0 = time.perf_counter()
                        results = [(r, process(strategy, Y, flags,
                                               aprioris[r], scfg))
                                   for r in geom.reference_indices]
                        ms = 1e3 * (time.perf_counter() - t0)
                        report = _metrics(scene, X, N, gain,
                                          [(r, res.weights)
                                           for r, res in results], mask)
                        resets = sum(res.resets for _, res in results)
                        if vad_free:
                            shared[strategy] = (report, resets, ms)
                        timings.append({
                            'utterance': utterance, 'snr_db': snr,
                            'switches': switches, 'vad': cond.name,
                            'strategy': strategy, 'runtime_ms': ms,
                            'audio_s': audio_s})
                    row = {'kind': 'row', 'utterance': utterance,
                           'speech': speech, 'noise_seed': noise_seed,
                           'snr_db': snr, 'switches': switches,
                           'vad': cond.name, 'strategy': strategy,
                           'vad_independent': int(vad_free), 'n': 1,
                           'nosepad_improvement_db': nosepad,
                           'resets': resets}
                    row.update(report.as_dict())
                    rows.append(row)
    return rows, timings


def _evaluate_job(args):
    return evaluate_utterance(*args)


def _condition_key(cfg, row):
    return (cfg.snr_grid.index(row['snr_db']),
            cfg.switch_grid.index(row['switches']),
            [v.name for v in cfg.vad_conditions].index(row['vad']),
            list(cfg.strategies).index(row['strategy']))


def _aggregate(rows):
    first = rows[0]
    agg = {k: first[k] for k in ('snr_db', 'switches', 'vad', 'strategy',
                                 'vad_independent')}
    agg.update(kind='mean', utterance='*', speech='*', noise_seed='*',
               n=len(rows), resets=sum(r['resets'] for r in rows))
    for key in METRIC_FIELDS:
        agg[key] = float(np.mean([r[key] for r in rows]))
    for key in STD_FIELDS:
        base = key[:-len('_std')]
        agg[key] = float(np.std([r[base] for r in rows]))
    return agg


def _format(value):
    if isinstance(value, (float, np.floating)):
        return f'{float(value):.3f}'
    return str(value)


def run_experiment(cfg=None, jobs=None):
    """Run the full grid and write the results CSV.

    Returns:
        path of the written CSV.
    """
    cfg = ExperimentConfig() if cfg is None else cfg
    jobs = cfg.jobs if jobs is None else jobs
    out_dir = Path(cfg.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f'cannot create output directory {out_dir}: '
                      f'{exc}') from exc
    for speech in cfg.speech:
        if not str(speech).startswith('synthetic:') and \
                not Path(speech).is_file():
            raise FileNotFoundError(f'speech file not found: {speech}')

    args = [(cfg, u, s, n) for u, s, n in cfg.utterances]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_evaluate_job, args))
    else:
        outputs = [_evaluate_job(a) for a in args]

    rows = [r for out, _ in outputs for r in out]
    timings = [t for _, times in outputs for t in times]
    groups = {}
    for row in rows:
        groups.setdefault(_condition_key(cfg, row), []).append(row)
    ordered = []
    for key in sorted(groups):
        group = sorted(groups[key], key=lambda r: r['utterance'])
        ordered.extend(group)
        ordered.append(_aggregate(group))

    path = cfg.csv_path
    try:
        with open(path, 'w', newline='') as fh:
            fh.write(CSV_HEADER + '\n')
            writer = csv.DictWriter(fh, FIELDS, lineterminator='\n')
            writer.writeheader()
            for row in ordered:
                writer.writerow({k: _format(row.get(k, '')) for k in FIELDS})
        with open(out_dir / 'timings.csv', 'w', newline='') as fh:
            writer = csv.DictWriter(fh, TIMING_FIELDS, lineterminator='\n')
            writer.writeheader()
            for t in timings:
                writer.writerow({k: _format(t[k]) for k in TIMING_FIELDS})
    except OSError as exc:
        raise OSError(f'cannot write results to {path}: {exc}') from exc
    logger.info('wrote %d rows to %s', len(ordered), path)
    return path


_INT_FIELDS = ('switches', 'vad_independent', 'n', 'resets')
_TEXT_FIELDS = ('kind', 'utterance', 'speech', 'noise_seed', 'vad',
                'strategy')


def read_results(path):
    """Parse a results CSV into a list of dicts with typed values."""
    path = Path(path)
    with open(path, newline='') as fh:
        first = fh.readline().rstrip('\n')
        if first != CSV_HEADER:
            raise ValueError(f'{path}: missing or unsupported header line '
                             f'{first!r}')
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = set(KEY_FIELDS + METRIC_FIELDS) - set(reader.fieldnames)
        if missing:
            raise ValueError(f'{path}: missing columns {sorted(missing)}')
        rows = []
        for lineno, raw in enumerate(reader, start=3):
            row = {}
            try:
                for key, val in raw.items():
                    if key is None or val is None:
                        raise ValueError('wrong number of fields')
                    if key in _TEXT_FIELDS:
                        row[key] = val
                    elif key in _INT_FIELDS:
                        row[key] = int(val)
                    else:
                        row[key] = float(val) if val != '' else None
            except ValueError as exc:
                raise ValueError(f'{path}:{lineno}: {exc}') from exc
            if row['kind'] not in ('row', 'mean'):
                raise ValueError(f'{path}:{lineno}: bad kind {row["kind"]!r}')
            rows.append(row)
    return rows


def simulate(cfg, out_dir, utterance=0, snr=None, switches=None):
    """Render one scene condition to WAV files plus a flags CSV.

    Writes ``noisy.wav`` (all mics, float32), ``speech.wav`` (clean
    unoccluded speech at the mics), ``noise.wav`` (scaled occluded noise)
    and ``flags.csv`` (oracle VAD and occlusion state per frame).
    """
    utts = cfg.utterances
    if not 0 <= utterance < len(utts):
        raise ValueError(f'utterance index {utterance} out of range '
                         f'0..{len(utts) - 1}')
    _, speech, noise_seed = utts[utterance]
    snr = cfg.snr_grid[0] if snr is None else snr
    switches = cfg.switch_grid[0] if switches is None else switches
    scene = prepare_scene(cfg, speech, noise_seed, utterance)
    vad = oracle_vad(scene.speech_spec, cfg.vad_threshold_db)
    mask = activity_mask(vad, scene.cfg, scene.n_samples)
    gain = noise_gain(scene.speech, scene.noise, scene.geom, snr, mask)
    pattern = generate_pattern(
        scene.n_frames, switches, cfg.scene.min_segment_frames,
        seed=derive_seed(cfg.seed, 3, utterance, switches))
    X, N = scene.condition(gain, pattern)
    x = synthesize(X, scene.cfg, scene.n_samples)
    n = synthesize(N, scene.cfg, scene.n_samples)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fs = scene.cfg.sample_rate_hz
    write_wav(out_dir / 'noisy.wav', fs, x + n)
    write_wav(out_dir / 'speech.wav', fs, scene.speech)
    write_wav(out_dir / 'noise.wav', fs, n)
    write_flags_csv(out_dir / 'flags.csv', FrameFlags(vad, pattern.state))
    return out_dir


def enhance(noisy, flags, strategy, cfg=None, side='left', scene_cfg=None,
            wola_cfg=None):
    """Enhance a multichannel recording of the glasses array.

    Args:
        noisy: (M, N) time signal.
        flags: FrameFlags with one entry per WOLA frame.
        strategy: one of the beamforming strategies.
        side: output reference, 'left' or 'right'.

    Returns:
        (enhanced mono signal of length N, ProcessResult).
    """
    cfg = ExperimentConfig() if cfg is None else cfg
    wola_cfg = WolaConfig() if wola_cfg is None else wola_cfg
    scene_cfg = cfg.scene if scene_cfg is None else scene_cfg
    geom = ArrayGeometry.glasses()
    noisy = np.asarray(noisy, dtype=float)
    if noisy.ndim != 2 or noisy.shape[0] != geom.n_mics:
        raise ValueError(f'expected {geom.n_mics} channels, got shape '
                         f'{noisy.shape}')
    if side not in ('left', 'right'):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    ref = geom.left_ref_index if side == 'left' else geom.right_ref_index
    profile = parametric_occlusion_profile(
        scene_cfg.speech_cutoff_hz, scene_cfg.noise_cutoff_hz,
        scene_cfg.depth_db, wola_cfg, scene_cfg.noise_depth_db)
    apriori = build_apriori(geom, wola_cfg, profile, ref)
    Y = analyze(noisy, wola_cfg)
    if len(flags) != Y.shape[0]:
        raise ValueError(f'{len(flags)} flag frames for {Y.shape[0]} '
                         f'signal frames')
    result = process(strategy, Y, flags, apriori,
                     strategy_config(cfg, strategy, wola_cfg))
    return synthesize(result.output, wola_cfg, noisy.shape[1]), result
