"""Frame-level voice activity and occlusion flags (oracle and corrupted)."""
import csv
from dataclasses import dataclass

import numpy as np

__all__ = ['FrameFlags', 'oracle_vad', 'corrupt_vad', 'oracle_od',
           'write_flags_csv', 'read_flags_csv']


@dataclass(frozen=True)
class FrameFlags:
    vad: np.ndarray
    od: np.ndarray

    def __post_init__(self):
        vad = np.asarray(self.vad).astype(np.int8)
        od = np.asarray(self.od).astype(np.int8)
        if vad.shape != od.shape or vad.ndim != 1:
            raise ValueError('vad and od must be 1-D of equal length')
        object.__setattr__(self, 'vad', vad)
        object.__setattr__(self, 'od', od)

    def __len__(self):
        return self.vad.size


def oracle_vad(clean_speech, threshold_db=40.0):
    """Flag frames whose broadband clean-speech energy is within
    ``threshold_db`` of the loudest frame.

    Args:
        clean_speech: spectrogram (frames, bins[, channels]).

    Returns:
        int8 vector of length frames.
    """
    spec = np.asarray(clean_speech)
    energy = np.sum(np.abs(spec.reshape(spec.shape[0], -1)) ** 2, axis=1)
    peak = energy.max() if energy.size else 0.0
    if peak <= 0:
        return np.zeros(spec.shape[0], dtype=np.int8)
    return (energy >= peak * 10 ** (-threshold_db / 10)).astype(np.int8)


def corrupt_vad(vad, false_negative_rate=0.05, seed=None):
    """Drop active frames independently with probability
    ``false_negative_rate``; inactive frames are left alone."""
    if not 0 <= false_negative_rate <= 1:
        raise ValueError('false_negative_rate must lie in [0, 1]')
    vad = np.asarray(vad).astype(np.int8)
    rng = np.random.default_rng(seed)
    drop = rng.random(vad.size) < false_negative_rate
    return np.where(drop, 0, vad).astype(np.int8)


def oracle_od(pattern):
    state = getattr(pattern, 'state', pattern)
    return np.asarray(state).astype(np.int8).copy()


def write_flags_csv(path, flags):
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(['frame', 'vad', 'od'])
        for t, (v, o) in enumerate(zip(flags.vad, flags.od)):
            writer.writerow([t, int(v), int(o)])


def read_flags_csv(path):
    with open(path, newline='') as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {'vad', 'od'} <= set(rows[0]):
        raise ValueError(f'{path}: expected columns frame,vad,od')
    return FrameFlags([int(r['vad']) for r in rows],
                      [int(r['od']) for r in rows])
