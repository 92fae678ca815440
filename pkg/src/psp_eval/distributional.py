"""Corpus-level distributional metrics.

Fréchet distance between Gaussians fitted to utterance embedding sets (FAD)
and to 5-D prosodic feature sets (PSD: pitch range, log-F0 mean, speech
rate, nPVI, log-duration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ctc_align import AlignmentSpan
from .errors import (
    DimensionMismatch,
    EigenFailure,
    NonPositiveInterval,
    NoVoicedFrames,
    TooFewIntervals,
    TooFewSamples,
    TooFewSpans,
)
from .interchange import UtteranceBundle

PROSODIC_FEATURES = ("pitch_range", "logf0_mean", "speech_rate", "npvi", "log_duration")


@dataclass
class GaussianSummary:
    mean: np.ndarray  # (d,)
    cov: np.ndarray  # (d, d), symmetric
    n: int


@dataclass(frozen=True)
class FrechetResult:
    """Fréchet distance with its mean/trace decomposition.

    total = mean_dist**2 + trace_term holds by construction.
    """

    total: float
    mean_dist: float
    trace_term: float

    @classmethod
    def from_components(cls, mean_dist: float, trace_term: float) -> "FrechetResult":
        return cls(mean_dist * mean_dist + trace_term, mean_dist, trace_term)


def fit_gaussian(rows: np.ndarray) -> GaussianSummary:
    """Sample mean and unbiased covariance (N-1), symmetrized."""
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2:
        raise TooFewSamples(f"expected N x d matrix, got ndim={x.ndim}")
    n = x.shape[0]
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianSummary(mean=mean, cov=cov, n=n)


def _sqrtm_psd(c: np.ndarray) -> np.ndarray:
    # symmetric eigendecomposition; negative eigenvalues clamped to 0
    try:
        w, v = np.linalg.eigh(c)
    except np.linalg.LinAlgError as e:
        raise EigenFailure(str(e)) from e
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def frechet(
    a: GaussianSummary, b: GaussianSummary, eps: float = 1e-6
) -> FrechetResult:
    """Fréchet distance between two Gaussians.

    eps*I is added to both covariances before the matrix square root; with
    few samples in many dimensions the covariances are rank-deficient and
    the regularizer keeps the root stable. Reported values include eps.
    """
    if a.mean.shape != b.mean.shape:
        raise DimensionMismatch(f"{a.mean.shape} vs {b.mean.shape}")
    d = a.mean.shape[0]
    ca = a.cov + eps * np.eye(d)
    cb = b.cov + eps * np.eye(d)
    root_a = _sqrtm_psd(ca)
    inner = root_a @ cb @ root_a
    cross = _sqrtm_psd((inner + inner.T) / 2.0)
    trace_term = float(np.trace(ca) + np.trace(cb) - 2.0 * np.trace(cross))
    if -1e-6 < trace_term < 0.0:
        trace_term = 0.0
    mean_dist = float(np.linalg.norm(a.mean - b.mean))
    return FrechetResult.from_components(mean_dist, trace_term)


def npvi(intervals: np.ndarray) -> float:
    """Normalized Pairwise Variability Index of consecutive intervals.

    100/(m-1) * sum_k |d_k - d_{k+1}| / ((d_k + d_{k+1}) / 2)
    """
    d = np.asarray(intervals, dtype=np.float64)
    m = d.shape[0]
    if m < 2:
        raise TooFewIntervals(f"need at least 2 intervals, got {m}")
    if np.any(d <= 0):
        raise NonPositiveInterval("all intervals must be > 0")
    pair = np.abs(d[:-1] - d[1:]) / ((d[:-1] + d[1:]) / 2.0)
    return float(100.0 / (m - 1) * pair.sum())


@dataclass(frozen=True)
class ProsodicVector:
    pitch_range: float  # 5th-95th percentile spread of log-F0 (natural log Hz)
    logf0_mean: float
    speech_rate: float  # aligned non-blank graphemes per second
    npvi: float
    log_duration: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.pitch_range, self.logf0_mean, self.speech_rate, self.npvi, self.log_duration]
        )


def prosodic_vector(
    bundle: UtteranceBundle, spans: list[AlignmentSpan]
) -> ProsodicVector:
    """5-D prosodic features for one utterance.

    nPVI is computed over inter-onset intervals, the gaps between consecutive
    aligned-span start times; coinciding onsets merge, and at least two
    intervals (three distinct onsets) must remain.
    """
    f0 = np.asarray(bundle.f0_hz, dtype=np.float64)
    voiced = f0[f0 > 0]
    if voiced.size == 0:
        raise NoVoicedFrames(f"{bundle.id}: no voiced frames")
    logf0 = np.log(voiced)
    p5, p95 = np.percentile(logf0, [5.0, 95.0])

    if len(spans) < 2:
        raise TooFewSpans(f"{bundle.id}: need at least 2 aligned spans, got {len(spans)}")
    hop_s = bundle.frame_hop_ms / 1000.0
    onsets = np.array([s.start_frame for s in spans], dtype=np.float64) * hop_s
    intervals = np.diff(onsets)
    intervals = intervals[intervals > 0]  # merge coinciding onsets
    if intervals.shape[0] < 2:
        raise TooFewSpans(
            f"{bundle.id}: {intervals.shape[0] + 1} distinct onsets, need 3 for nPVI"
        )
    return ProsodicVector(
        pitch_range=float(p95 - p5),
        logf0_mean=float(logf0.mean()),
        speech_rate=len(spans) / bundle.duration_s,
        npvi=npvi(intervals),
        log_duration=math.log(bundle.duration_s),
    )


def psd(
    system_vectors: np.ndarray,
    native_vectors: np.ndarray,
    eps: float = 1e-6,
    zscore: bool = False,
) -> FrechetResult:
    """Fréchet distance in the 5-D prosodic space.

    Features are unnormalized by default; with zscore set, both sets are
    standardized by the native set's per-dimension mean and std first.
    """
    sys_m = np.asarray(system_vectors, dtype=np.float64)
    nat_m = np.asarray(native_vectors, dtype=np.float64)
    if zscore:
        mu = nat_m.mean(axis=0)
        sd = nat_m.std(axis=0, ddof=1)
        sd = np.where(sd > 0, sd, 1.0)
        sys_m = (sys_m - mu) / sd
        nat_m = (nat_m - mu) / sd
    return frechet(fit_gaussian(sys_m), fit_gaussian(nat_m), eps=eps)
