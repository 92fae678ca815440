"""Autocorrelation pitch tracker.

Frame-synchronous with the emission grid: one F0 value per requested frame,
0.0 for unvoiced. Deliberately simple (no octave smoothing); the method
string is recorded in the bundle so downstream consumers know what produced
the track.
"""

from __future__ import annotations

import numpy as np

F_MIN = 50.0
F_MAX = 500.0
WINDOW_MS = 40.0
VOICING_THRESHOLD = 0.5  # normalized autocorrelation peak
ENERGY_FLOOR = 0.03  # frame rms relative to utterance rms


def track_f0(
    wave: np.ndarray,
    sample_rate: int,
    hop_ms: float,
    n_frames: int,
) -> np.ndarray:
    x = np.asarray(wave, dtype=np.float64)
    hop = max(1, int(round(sample_rate * hop_ms / 1000.0)))
    win = int(round(sample_rate * WINDOW_MS / 1000.0))
    lag_min = int(sample_rate / F_MAX)
    lag_max = min(int(sample_rate / F_MIN), win - 1)

    global_rms = np.sqrt(np.mean(x**2)) if x.size else 0.0
    out = np.zeros(n_frames, dtype=np.float32)
    if global_rms == 0.0 or lag_max <= lag_min:
        return out

    padded = np.concatenate([x, np.zeros(win)])
    for i in range(n_frames):
        frame = padded[i * hop : i * hop + win]
        frame = frame - frame.mean()
        rms = np.sqrt(np.mean(frame**2))
        if rms < ENERGY_FLOOR * global_rms:
            continue
        spec = np.fft.rfft(frame, n=2 * win)
        ac = np.fft.irfft(spec * np.conj(spec))[:win]
        if ac[0] <= 0:
            continue
        ac = ac / ac[0]
        seg = ac[lag_min : lag_max + 1]
        best = int(np.argmax(seg)) + lag_min
        if ac[best] < VOICING_THRESHOLD:
            continue
        # parabolic refinement around the peak
        if 0 < best < win - 1:
            a, b, c = ac[best - 1], ac[best], ac[best + 1]
            denom = a - 2 * b + c
            shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
            best = best + float(np.clip(shift, -1.0, 1.0))
        out[i] = sample_rate / best
    return out
