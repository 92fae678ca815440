"""WAV loading: mono float32 at the model sample rate."""

from __future__ import annotations

import logging
from math import gcd
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import DecodeFailure

log = logging.getLogger(__name__)

_INT_SCALE = {np.dtype("int16"): 32768.0, np.dtype("int32"): 2147483648.0}


def load_wav(path: str | Path, target_rate: int = 16000) -> np.ndarray:
    """Decode a WAV file to mono float32 in [-1, 1] at target_rate."""
    try:
        rate, data = wavfile.read(str(path))
    except Exception as e:
        raise DecodeFailure(f"{path}: {e}") from e
    x = np.asarray(data)
    if x.ndim == 2:
        log.info("%s: downmixing %d channels to mono", path, x.shape[1])
        x = x.mean(axis=1)
    if x.dtype in _INT_SCALE:
        x = x.astype(np.float32) / _INT_SCALE[x.dtype]
    elif x.dtype == np.uint8:
        x = (x.astype(np.float32) - 128.0) / 128.0
    else:
        x = x.astype(np.float32)
    if x.size == 0:
        raise DecodeFailure(f"{path}: empty audio")
    if rate != target_rate:
        g = gcd(int(rate), target_rate)
        x = resample_poly(x, target_rate // g, rate // g).astype(np.float32)
    return x
