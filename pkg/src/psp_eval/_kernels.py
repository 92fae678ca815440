"""Hot numeric kernels: CTC Viterbi trellis fill.

Two interchangeable implementations live here: a numba ``@njit`` kernel and a
vectorized pure-numpy fallback. Selection happens once at import: the numpy
path is used when numba is unavailable or when ``PSP_EVAL_NO_NUMBA=1`` is set.
Both must produce bit-identical (scores, backpointers); tie-breaking prefers
stay over advance over skip.

Backpointer codes: 0 = stay in state, 1 = from state s-1, 2 = skip from s-2.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_NEG = -np.inf


def viterbi_fill_numpy(emis_ext: np.ndarray, allow_skip: np.ndarray):
    """Trellis fill over (T frames) x (S extended states), numpy path.

    emis_ext[t, s] is the emission log-prob of extended-state s's label at
    frame t; allow_skip[s] marks states reachable by the two-step transition.
    Returns (final scores over states, backpointer matrix).
    """
    T, S = emis_ext.shape
    back = np.zeros((T, S), dtype=np.int8)
    dp = np.full(S, _NEG)
    dp[0] = emis_ext[0, 0]
    if S > 1:
        dp[1] = emis_ext[0, 1]
    arange = np.arange(S)
    for t in range(1, T):
        stay = dp
        adv = np.empty(S)
        adv[0] = _NEG
        adv[1:] = dp[:-1]
        skip = np.full(S, _NEG)
        skip[2:] = dp[:-2]
        skip[~allow_skip] = _NEG
        cand = np.vstack((stay, adv, skip))
        move = np.argmax(cand, axis=0)  # first max: stay < adv < skip
        dp = cand[move, arange] + emis_ext[t]
        back[t] = move
    return dp, back


if HAVE_NUMBA:

    @njit(cache=True)
    def _viterbi_fill_jit(emis_ext, allow_skip):  # pragma: no cover - jitted
        T, S = emis_ext.shape
        back = np.zeros((T, S), dtype=np.int8)
        dp = np.full(S, _NEG)
        dp[0] = emis_ext[0, 0]
        if S > 1:
            dp[1] = emis_ext[0, 1]
        new = np.empty(S)
        for t in range(1, T):
            for s in range(S):
                best = dp[s]
                move = 0
                if s >= 1 and dp[s - 1] > best:
                    best = dp[s - 1]
                    move = 1
                if s >= 2 and allow_skip[s] and dp[s - 2] > best:
                    best = dp[s - 2]
                    move = 2
                new[s] = best + emis_ext[t, s]
                back[t, s] = move
            dp, new = new, dp
        return dp.copy(), back

    def viterbi_fill_numba(emis_ext, allow_skip):
        return _viterbi_fill_jit(
            np.ascontiguousarray(emis_ext, dtype=np.float64),
            np.ascontiguousarray(allow_skip),
        )

else:
    viterbi_fill_numba = viterbi_fill_numpy


def _select_backend():
    if os.environ.get("PSP_EVAL_NO_NUMBA", "0") == "1" or not HAVE_NUMBA:
        return viterbi_fill_numpy, "numpy"
    return viterbi_fill_numba, "numba"


viterbi_fill, BACKEND = _select_backend()
