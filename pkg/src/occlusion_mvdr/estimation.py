"""VAD-gated recursive covariance tracking and GEVD-based RTF estimation.

All functions broadcast over leading (bin) dimensions: covariance matrices
have shape (..., M, M) and frame vectors (..., M).
"""
from dataclasses import dataclass

import numpy as np

__all__ = ['SmoothingConfig', 'forgetting_factor', 'outer', 'load',
           'update_noisy', 'update_noise', 'RtfEstimate',
           'estimate_rtf_gevd', 'SwitchingTracker']


def forgetting_factor(tau_s, hop_s):
    """Smoothing constant for a forgetting time of ``tau_s`` seconds."""
    if tau_s <= 0 or hop_s <= 0:
        raise ValueError('forgetting time and hop must be positive')
    return float(np.exp(-hop_s / tau_s))


@dataclass(frozen=True)
class SmoothingConfig:
    alpha_y: float
    alpha_n: float

    def __post_init__(self):
        for a in (self.alpha_y, self.alpha_n):
            if not 0 < a < 1:
                raise ValueError(f'smoothing constant {a} not in (0, 1)')

    @classmethod
    def from_forgetting_times(cls, tau_y=0.3, tau_n=0.5, hop_s=0.004):
        return cls(forgetting_factor(tau_y, hop_s),
                   forgetting_factor(tau_n, hop_s))


def outer(y):
    y = np.asarray(y)
    return y[..., :, None] * y[..., None, :].conj()


def load(R, loading):
    """Diagonal loading relative to the mean diagonal power."""
    m = R.shape[-1]
    tr = np.trace(R, axis1=-2, axis2=-1).real
    return R + (loading * tr / m)[..., None, None] * np.eye(m)


def update_noisy(R_y, y, vad, alpha_y):
    """Recursive noisy-covariance update, active only in speech frames."""
    if not vad:
        return R_y
    return alpha_y * R_y + (1 - alpha_y) * outer(y)


def update_noise(R_n, y, vad, alpha_n):
    """Recursive noise-covariance update, active only in speech pauses."""
    if vad:
        return R_n
    return alpha_n * R_n + (1 - alpha_n) * outer(y)


@dataclass
class RtfEstimate:
    """RTF with unit reference entry and the speech PSD at the reference.

    ``eigenvalue`` is the Rayleigh quotient of the whitened pencil and
    ``whitened`` the unit-norm whitened principal vector.
    """
    h: np.ndarray
    phi_x: np.ndarray
    eigenvalue: np.ndarray
    whitened: np.ndarray


def _matvec(A, x):
    return np.einsum('...ij,...j->...i', A, x)


def _solve(A, b):
    return np.linalg.solve(A, b[..., None])[..., 0]


def estimate_rtf_gevd(R_n, R_y, ref_index, iters=2, prev_vector=None,
                      loading=1e-4):
    """Principal generalized eigenvector of (R_n, R_y) by power iteration.

    With ``L L^H`` the Cholesky factor of the loaded noise covariance, the
    power method runs on ``C = L^-1 R_y L^-H`` warm-started from
    ``L^-1 prev_vector``.  The principal whitened vector ``v`` is
    de-whitened as ``L v`` and scaled to a unit reference entry.  For
    ``R_y = R_n + phi h h^H`` this recovers ``h`` and, from the principal
    eigenvalue ``lam = v^H C v``, ``phi = (lam - 1) |(L v)_ref|^2 / |v|^2``,
    clamped at zero.

    Args:
        R_n, R_y: (..., M, M) Hermitian matrices.
        ref_index: reference microphone.
        iters: power iterations.
        prev_vector: (..., M) warm start (an RTF estimate); defaults to the
            all-ones vector.
        loading: diagonal loading of R_n relative to trace / M.

    Returns:
        RtfEstimate.  Where the iteration collapses to zero the previous
        vector is returned unchanged.
    """
    R_n = np.asarray(R_n)
    R_y = np.asarray(R_y)
    if not (np.all(np.isfinite(R_n)) and np.all(np.isfinite(R_y))):
        raise ValueError('covariance matrices must be finite')
    if prev_vector is None:
        prev_vector = np.ones(R_n.shape[:-1], dtype=complex)
    prev_vector = np.broadcast_to(prev_vector, R_n.shape[:-1]).astype(
        complex)

    L = np.linalg.cholesky(load(R_n, loading))
    LH = np.conj(np.swapaxes(L, -1, -2))
    v = _solve(L, prev_vector)
    for _ in range(iters):
        v = _solve(L, _matvec(R_y, _solve(LH, v)))
        norm = np.linalg.norm(v, axis=-1, keepdims=True)
        v = np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)
    cv = _solve(L, _matvec(R_y, _solve(LH, v)))
    vv = np.sum(np.abs(v) ** 2, axis=-1)
    lam = np.real(np.sum(v.conj() * cv, axis=-1)) / np.where(vv > 0, vv, 1)

    g = _matvec(L, v)
    g_ref = g[..., ref_index]
    ok = (np.abs(g_ref) > 0) & np.all(np.isfinite(g), axis=-1)
    safe_ref = np.where(ok, g_ref, 1.0)
    h = np.where(ok[..., None], g / safe_ref[..., None], prev_vector)
    h[..., ref_index] = np.where(ok, 1.0, h[..., ref_index])
    phi = np.where(ok, np.maximum(0.0, lam - 1) * np.abs(g_ref) ** 2
                   / np.where(vv > 0, vv, 1), 0.0)
    return RtfEstimate(h, phi, lam, v)


class SwitchingTracker:
    """Two sets of (noisy, noise) covariances, one per occlusion state.

    Each frame only the set of the detected state is updated; the other
    keeps the values from the last frame its state was active.  With the
    occlusion flag held at zero this is the single-state adaptive tracker.
    """

    def __init__(self):
        self.R_y = None
        self.R_n = None
        self.rtf = None
        self.last_update = np.zeros(2, dtype=int)
        self.frame = 0

    @property
    def initialized(self):
        return self.R_y is not None

    def initialize(self, rtf, noise_cov, speech_matrix, noise_matrix,
                   level=1.0):
        """Initialization from a-priori data.

        R_y,unocc = h h^H, R_y,occ = B R_y,unocc B^H, R_n,unocc = R_n prior,
        R_n,occ = G R_n,unocc G^H, all times an optional per-bin ``level``.
        """
        level = np.asarray(level, dtype=float)[..., None, None]
        ry0 = outer(rtf) * level
        rn0 = np.asarray(noise_cov) * level
        bh = np.conj(np.swapaxes(speech_matrix, -1, -2))
        gh = np.conj(np.swapaxes(noise_matrix, -1, -2))
        self.R_y = np.stack([ry0, speech_matrix @ ry0 @ bh])
        self.R_n = np.stack([rn0, noise_matrix @ rn0 @ gh])
        self.rtf = np.stack([np.array(rtf, dtype=complex),
                             _matvec(speech_matrix, rtf)])
        self.last_update[:] = 0
        self.frame = 0
        return self

    @classmethod
    def from_apriori(cls, apriori, level=1.0):
        return cls().initialize(apriori.rtf_unoccluded,
                                apriori.noise_cov_unoccluded,
                                apriori.speech_matrix(),
                                apriori.noise_matrix(), level)

    def update(self, y, vad, od, smoothing):
        """Process one frame ``y`` (bins, M); returns the active state."""
        if not self.initialized:
            raise RuntimeError('tracker used before initialize()')
        s = int(bool(od))
        self.frame += 1
        self.R_y[s] = update_noisy(self.R_y[s], y, vad, smoothing.alpha_y)
        self.R_n[s] = update_noise(self.R_n[s], y, vad, smoothing.alpha_n)
        self.last_update[s] = self.frame
        return s

    def save(self, path):
        """Snapshot of all per-bin matrices for offline inspection."""
        np.savez(path, R_y=self.R_y, R_n=self.R_n, rtf=self.rtf,
                 last_update=self.last_update, frame=self.frame)
