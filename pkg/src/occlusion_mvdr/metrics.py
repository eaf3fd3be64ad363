"""SNR improvement and own-voice distortion on time-domain signals."""
from dataclasses import dataclass, asdict

import numpy as np

__all__ = ['OVD_FLOOR_DB', 'activity_mask', 'snr_db', 'ovd_db',
           'SideMetrics', 'MetricsReport']

OVD_FLOOR_DB = -60.0


def activity_mask(vad, cfg, n_samples):
    """Samples covered by at least one speech-active frame.

    Uses the padded framing of :func:`occlusion_mvdr.wola.analyze`; the
    first and last ``frame_len`` samples are always excluded.
    """
    vad = np.asarray(vad).astype(bool)
    cover = np.zeros(n_samples + 2 * cfg.frame_len + vad.size * cfg.hop,
                     dtype=np.int32)
    # frame t spans padded samples [t*hop, t*hop + frame_len)
    starts = np.flatnonzero(vad) * cfg.hop
    np.add.at(cover, starts, 1)
    np.add.at(cover, starts + cfg.frame_len, -1)
    covered = np.cumsum(cover)[cfg.pad:cfg.pad + n_samples] > 0
    covered[:cfg.frame_len] = False
    covered[max(0, n_samples - cfg.frame_len):] = False
    return covered


def _masked(x, mask):
    x = np.asarray(x, dtype=float)
    if mask is None:
        return x
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape:
        raise ValueError('mask and signal lengths differ')
    return x[mask]


def snr_db(speech, noise, mask=None):
    """10 log10 of the speech-to-noise energy ratio on masked samples.

    Returns +inf when the masked noise is silent.
    """
    if np.shape(speech) != np.shape(noise):
        raise ValueError('speech and noise lengths differ')
    s = _masked(speech, mask)
    n = _masked(noise, mask)
    if s.size == 0:
        raise ValueError('empty mask')
    es = np.sum(s ** 2)
    en = np.sum(n ** 2)
    if en == 0:
        return np.inf
    if es == 0:
        return -np.inf
    return float(10 * np.log10(es / en))


def ovd_db(x_ref, x_out, mask=None, floor_db=OVD_FLOOR_DB):
    """Own-voice distortion: negative scale-invariant SDR.

    ``c = x_out . x_ref / |x_ref|^2`` and
    ``OVD = -20 log10(|c x_ref| / |c x_ref - x_out|)``, floored at
    ``floor_db``.  A silent output gives ``c = 0`` and OVD = 0 dB.

    >>> x = np.sin(np.arange(100))
    >>> ovd_db(x, 3 * x)
    -60.0
    """
    if np.shape(x_ref) != np.shape(x_out):
        raise ValueError('reference and output lengths differ')
    ref = _masked(x_ref, mask)
    out = _masked(x_out, mask)
    if ref.size == 0:
        raise ValueError('empty mask')
    ref_energy = np.sum(ref ** 2)
    if ref_energy == 0:
        raise ValueError('reference signal is silent')
    if not np.any(out):
        return 0.0
    c = np.dot(out, ref) / ref_energy
    target = c * ref
    err = np.linalg.norm(target - out)
    num = np.linalg.norm(target)
    if err == 0:
        return float(floor_db)
    if num == 0:
        return np.inf
    return float(max(floor_db, -20 * np.log10(num / err)))


@dataclass
class SideMetrics:
    snr_in_db: float
    snr_out_db: float
    ovd_db: float

    @property
    def snr_improvement_db(self):
        return self.snr_out_db - self.snr_in_db


@dataclass
class MetricsReport:
    """Per-side metrics and their left/right average (in dB)."""
    left: SideMetrics
    right: SideMetrics

    @property
    def snr_in_db(self):
        return 0.5 * (self.left.snr_in_db + self.right.snr_in_db)

    @property
    def snr_out_db(self):
        return 0.5 * (self.left.snr_out_db + self.right.snr_out_db)

    @property
    def snr_improvement_db(self):
        return self.snr_out_db - self.snr_in_db

    @property
    def ovd_db(self):
        return 0.5 * (self.left.ovd_db + self.right.ovd_db)

    def as_dict(self):
        out = {}
        for side in ('left', 'right'):
            m = getattr(self, side)
            for key, val in asdict(m).items():
                out[f'{key}_{side[0].upper()}'] = val
            out[f'snr_improvement_db_{side[0].upper()}'] = \
                m.snr_improvement_db
        out.update(snr_in_db=self.snr_in_db, snr_out_db=self.snr_out_db,
                   snr_improvement_db=self.snr_improvement_db,
                   ovd_db=self.ovd_db)
        return out
