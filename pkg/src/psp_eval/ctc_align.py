"""CTC forced alignment and greedy frame decoding.

``force_align`` runs Viterbi over the standard extended target sequence
(blanks interleaved between labels, skip transition allowed across a blank
when the flanking labels differ) and reports one frame span per target.
Blank frames belong to no span, so span embeddings stay phoneme-pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import BadTargetIndex, InfeasibleLength, SpanOutOfRange
from .interchange import UtteranceBundle, text_to_targets


@dataclass(frozen=True)
class AlignmentSpan:
    """One target grapheme's frame interval; end_frame is exclusive."""

    target_index: int
    grapheme: str
    start_frame: int
    end_frame: int
    score: float  # mean log-prob of the target's own label over the span

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame


def _extended_sequence(targets: Sequence[int], blank_index: int):
    ext = np.empty(2 * len(targets) + 1, dtype=np.int64)
    ext[0::2] = blank_index
    ext[1::2] = np.asarray(targets, dtype=np.int64)
    allow_skip = np.zeros(ext.shape[0], dtype=np.bool_)
    # skip lands only on label states whose previous label differs
    for s in range(3, ext.shape[0], 2):
        allow_skip[s] = ext[s] != ext[s - 2]
    return ext, allow_skip


def min_feasible_frames(targets: Sequence[int]) -> int:
    """Shortest CTC path length: one frame per target plus forced blanks
    between adjacent repeats."""
    repeats = sum(1 for a, b in zip(targets, targets[1:]) if a == b)
    return len(targets) + repeats


def viterbi_path(
    emissions: np.ndarray, targets: Sequence[int], blank_index: int
) -> tuple[np.ndarray, float]:
    """Best CTC path as per-frame extended-state indices, plus its total
    log-probability."""
    em = np.asarray(emissions, dtype=np.float64)
    T, V = em.shape
    targets = list(targets)
    if not targets:
        raise ValueError("targets must be non-empty")
    for idx in targets:
        if not (0 <= idx < V):
            raise BadTargetIndex(f"target index {idx} outside [0, {V})")
        if idx == blank_index:
            raise BadTargetIndex(f"target index {idx} equals blank index")
    need = min_feasible_frames(targets)
    if T < need:
        raise InfeasibleLength(f"{T} frames < {need} required for {len(targets)} targets")

    ext, allow_skip = _extended_sequence(targets, blank_index)
    emis_ext = em[:, ext]  # (T, S)
    final, back = _kernels.viterbi_fill(emis_ext, allow_skip)

    S = ext.shape[0]
    # ends at final blank or last label; prefer the final blank on a tie
    s = S - 1 if final[S - 1] >= final[S - 2] else S - 2
    score = float(final[s])
    states = np.empty(T, dtype=np.int64)
    for t in range(T - 1, -1, -1):
        states[t] = s
        s -= int(back[t, s])
    return states, score


def force_align(
    emissions: np.ndarray,
    targets: Sequence[int],
    blank_index: int,
    vocab: Sequence[str] | None = None,
) -> list[AlignmentSpan]:
    """Align targets against a T x V log-prob emission matrix.

    Returns exactly one span per target, in target order, non-overlapping.
    Span score is the mean emission log-prob of the target's own label over
    the span's frames (not the path score, which includes blanks).
    """
    em = np.asarray(emissions, dtype=np.float64)
    states, _ = viterbi_path(em, targets, blank_index)
    spans: list[AlignmentSpan] = []
    for i, idx in enumerate(targets):
        s = 2 * i + 1
        frames = np.flatnonzero(states == s)
        start, end = int(frames[0]), int(frames[-1]) + 1
        grapheme = vocab[idx] if vocab is not None else str(idx)
        spans.append(
            AlignmentSpan(
                target_index=i,
                grapheme=grapheme,
                start_frame=start,
                end_frame=end,
                score=float(em[start:end, idx].mean()),
            )
        )
    return spans


def align_bundle(bundle: UtteranceBundle) -> tuple[list[AlignmentSpan], list[str]]:
    """Text-to-targets plus force_align for one bundle.

    Returns (spans, dropped graphemes). Raises InfeasibleLength / ValueError
    when the utterance cannot be aligned.
    """
    indices, _, dropped = text_to_targets(bundle.text, bundle.vocab)
    spans = force_align(bundle.emissions, indices, bundle.blank_index, bundle.vocab)
    return spans, dropped


def greedy_frames(emissions: np.ndarray) -> np.ndarray:
    """Per-frame argmax label indices; ties break toward the lowest index."""
    return np.argmax(np.asarray(emissions), axis=1)


def span_embedding(embeddings: np.ndarray, span: AlignmentSpan) -> np.ndarray:
    """Arithmetic mean of the embedding rows covered by the span."""
    eb = np.asarray(embeddings)
    if not (0 <= span.start_frame < span.end_frame <= eb.shape[0]):
        raise SpanOutOfRange(
            f"span [{span.start_frame}, {span.end_frame}) outside 0..{eb.shape[0]}"
        )
    return eb[span.start_frame : span.end_frame].mean(axis=0)
