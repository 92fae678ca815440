"""Per-phoneme fidelity probes and aggregation.

Token fidelity is the rectified-cosine contrast between a span embedding and
the native vs substitute centroids: s_nat / (s_nat + s_sub) with
s = max(0, cosine). A token counts as collapsed when fidelity drops below
the threshold tau (strictly; the symmetric 0.5 tie is not a collapse).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .ctc_align import AlignmentSpan, span_embedding
from .errors import DegenerateFloor, EmptyTokens, ZeroVector
from .interchange import DimensionTable, UtteranceBundle

log = logging.getLogger(__name__)

DEFAULT_TAU = 0.5


def fidelity_components(
    e: np.ndarray, mu_nat: np.ndarray, mu_sub: np.ndarray
) -> tuple[float, float, float]:
    """(fidelity, s_nat, s_sub) for one embedding against a centroid pair.

    When both rectified cosines are 0 the contrast is undefined; 0.5 is
    returned as the maximally uninformative value (callers may flag it).
    """
    e = np.asarray(e, dtype=np.float64)
    mu_nat = np.asarray(mu_nat, dtype=np.float64)
    mu_sub = np.asarray(mu_sub, dtype=np.float64)
    ne, nn, ns = np.linalg.norm(e), np.linalg.norm(mu_nat), np.linalg.norm(mu_sub)
    if ne == 0 or nn == 0 or ns == 0:
        raise ZeroVector("fidelity requires nonzero vectors")
    s_nat = max(0.0, float(e @ mu_nat) / float(ne * nn))
    s_sub = max(0.0, float(e @ mu_sub) / float(ne * ns))
    denom = s_nat + s_sub
    if denom == 0.0:
        return 0.5, s_nat, s_sub
    return s_nat / denom, s_nat, s_sub


def fidelity(e: np.ndarray, mu_nat: np.ndarray, mu_sub: np.ndarray) -> float:
    return fidelity_components(e, mu_nat, mu_sub)[0]


@dataclass(frozen=True)
class TokenFidelity:
    utterance_id: str
    dimension: str
    grapheme: str
    fidelity: float
    collapsed: bool
    span: AlignmentSpan
    low_confidence: bool = False  # both rectified cosines were 0


def score_per_phoneme(
    bundle: UtteranceBundle,
    spans: list[AlignmentSpan],
    table: DimensionTable,
    centroids,
    tau: float = DEFAULT_TAU,
) -> list[TokenFidelity]:
    """Score every aligned span whose grapheme is in the table's native set.

    Spans without a centroid entry are skipped with a warning (sparse
    corpora legitimately miss rare graphemes).
    """
    tokens: list[TokenFidelity] = []
    for span in spans:
        if span.grapheme not in table.native_graphemes:
            continue
        entry = centroids.entries.get((table.dimension, span.grapheme))
        if entry is None:
            log.warning(
                "%s: no %s centroid entry for %r, span skipped",
                bundle.id, table.dimension, span.grapheme,
            )
            continue
        e = span_embedding(bundle.embeddings, span)
        fid, s_nat, s_sub = fidelity_components(
            e, entry.native_centroid, entry.substitute_centroid
        )
        tokens.append(
            TokenFidelity(
                utterance_id=bundle.id,
                dimension=table.dimension,
                grapheme=span.grapheme,
                fidelity=fid,
                collapsed=fid < tau,
                span=span,
                low_confidence=(s_nat + s_sub) == 0.0,
            )
        )
    return tokens


def lf_fidelity(
    spans: list[AlignmentSpan], table: DimensionTable, native_ratio: float
) -> float | None:
    """Vowel-length fidelity from aligned span durations.

    r_sys = mean(long-vowel span duration) / mean(short-vowel span duration),
    mapped through clamp((r_sys - 1) / (native_ratio - 1), 0, 1): no duration
    contrast scores 0, the native ratio (or beyond) scores 1. Returns None
    when the utterance has no long/short contrast tokens (absent score).
    Durations are span frame counts; the per-frame hop cancels in the ratio.
    """
    if not (native_ratio > 1.0):
        raise ValueError(f"native_ratio must be > 1, got {native_ratio}")
    longs = [s.n_frames for s in spans if s.grapheme in table.native_graphemes]
    shorts = [s.n_frames for s in spans if s.grapheme in table.substitute_graphemes]
    if not longs or not shorts:
        return None
    r_sys = (sum(longs) / len(longs)) / (sum(shorts) / len(shorts))
    return float(np.clip((r_sys - 1.0) / (native_ratio - 1.0), 0.0, 1.0))


@dataclass
class DimensionScore:
    dimension: str
    mean_fidelity: float
    collapse_rate: float
    n_tokens: int
    ci_low: float | None = None
    ci_high: float | None = None
    collapse_ci_low: float | None = None
    collapse_ci_high: float | None = None
    normalized: float | None = None
    warnings: list[str] = field(default_factory=list)


def aggregate(tokens: list[TokenFidelity], level: str = "corpus") -> DimensionScore:
    """Pool token fidelities into one dimension score.

    Utterance level is the unweighted mean over one utterance's tokens;
    corpus level is the token-count-weighted mean over utterances, which is
    exactly the pooled mean over all tokens. collapse_rate is the pooled
    collapsed fraction either way.
    """
    if level not in ("utterance", "corpus"):
        raise ValueError(f"unknown aggregation level {level!r}")
    if not tokens:
        raise EmptyTokens("cannot aggregate zero tokens")
    dims = {t.dimension for t in tokens}
    if len(dims) != 1:
        raise ValueError(f"tokens span multiple dimensions: {sorted(dims)}")
    if level == "utterance" and len({t.utterance_id for t in tokens}) != 1:
        raise ValueError("utterance-level aggregation requires a single utterance")
    fids = np.array([t.fidelity for t in tokens], dtype=np.float64)
    collapsed = np.array([t.collapsed for t in tokens], dtype=np.float64)
    return DimensionScore(
        dimension=tokens[0].dimension,
        mean_fidelity=float(fids.mean()),
        collapse_rate=float(collapsed.mean()),
        n_tokens=len(tokens),
    )


def normalize_floor(system_stat: float, native_stat: float) -> float:
    """Subtract the native-audio noise floor from a fidelity statistic.

    (system - native) / (1 - native), clamped to [0, 1]; applicable to
    higher-is-better statistics only.
    """
    if native_stat >= 1.0 - 1e-9:
        raise DegenerateFloor(f"native floor {native_stat} leaves no headroom")
    value = (system_stat - native_stat) / (1.0 - native_stat)
    return float(np.clip(value, 0.0, 1.0))
