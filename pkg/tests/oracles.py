"""Independent reference implementations the test suite checks against.

Everything here is deliberately written in plain Python (loops, sorted(),
dicts) with no code shared with the package, so a bug would have to be made
twice to go unnoticed.
"""

from __future__ import annotations


def osa_distance(a, b) -> int:
    """Edit distance by recursive search over edit scripts, memoized on prefix lengths.

    At every prefix pair the search branches over delete, insert,
    substitute/match, and (when the last two tokens are crossed) an adjacent
    transposition; the restriction that a transposed pair is never edited
    again is what the (i-2, j-2) recursion encodes.
    """
    memo: dict[tuple[int, int], int] = {}

    def search(i: int, j: int) -> int:
        if (i, j) in memo:
            return memo[(i, j)]
        if i == 0:
            best = j
        elif j == 0:
            best = i
        else:
            best = search(i - 1, j - 1) + (0 if a[i - 1] == b[j - 1] else 1)
            best = min(best, search(i - 1, j) + 1)
            best = min(best, search(i, j - 1) + 1)
            if i >= 2 and j >= 2 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                best = min(best, search(i - 2, j - 2) + 1)
        memo[(i, j)] = best
        return best

    return search(len(a), len(b))


def tally_cooccurrence(annotations, num_verbs: int, num_nouns: int) -> list[list[float]]:
    """Flat scan over every action of every record, counted into a dict."""
    counts: dict[tuple[int, int], int] = {}
    for record in annotations:
        sequences = [record.observed]
        if record.future is not None:
            sequences.append(record.future)
        for seq in sequences:
            for action in seq:
                key = (action.verb, action.noun)
                counts[key] = counts.get(key, 0) + 1
    return [
        [float(counts.get((v, n), 0)) for n in range(num_nouns)] for v in range(num_verbs)
    ]


def top_k_by_sort(values, k: int) -> list[tuple[int, float]]:
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    return [(i, float(values[i])) for i in order[:k]]


def rerank_reference(verb_probs, noun_probs, row_stochastic, col_stochastic, k: int):
    """Mirror of the documented two-branch re-ranking procedure, loops only.

    Returns (chosen, candidates, naive, used_fallback) where candidates are
    (verb, noun, score, branch) tuples in final output order.
    """
    vp = [float(x) for x in verb_probs]
    np_ = [float(x) for x in noun_probs]
    row = [[float(x) for x in r] for r in row_stochastic]
    col = [[float(x) for x in r] for r in col_stochastic]

    verb_branch = []
    for v, p_verb in top_k_by_sort(vp, k):
        adjusted = [np_[n] * row[v][n] for n in range(len(np_))]
        for n, q in top_k_by_sort(adjusted, k):
            verb_branch.append((p_verb * q, v, n, "verb_anchored"))
    verb_branch = sorted(verb_branch, key=lambda t: (-t[0], t[1], t[2]))[:k]

    noun_branch = []
    for n, p_noun in top_k_by_sort(np_, k):
        adjusted = [vp[v] * col[v][n] for v in range(len(vp))]
        for v, q in top_k_by_sort(adjusted, k):
            noun_branch.append((p_noun * q, v, n, "noun_anchored"))
    noun_branch = sorted(noun_branch, key=lambda t: (-t[0], t[1], t[2]))[:k]

    merged: dict[tuple[int, int], tuple[float, str]] = {}
    for score, v, n, branch in verb_branch + noun_branch:
        held = merged.get((v, n))
        if held is None or score > held[0]:
            merged[(v, n)] = (score, branch)
    candidates = sorted(
        ((v, n, score, branch) for (v, n), (score, branch) in merged.items()),
        key=lambda t: (-t[2], t[0], t[1]),
    )

    naive = (vp.index(max(vp)), np_.index(max(np_)))
    if candidates[0][2] > 0.0:
        chosen, used_fallback = (candidates[0][0], candidates[0][1]), False
    else:
        chosen, used_fallback = naive, True
    return chosen, candidates, naive, used_fallback


def min_track_ed(candidates, gt, project) -> tuple[float, int]:
    """Loop-style min-over-candidates normalized edit distance for one track."""
    best_ed, best_idx = None, None
    for idx, cand in enumerate(candidates):
        pred = [project(a) for a in cand]
        truth = [project(a) for a in gt]
        ed = min(1.0, osa_distance(pred, truth) / len(truth))
        if best_ed is None or ed < best_ed:
            best_ed, best_idx = ed, idx
    return best_ed, best_idx
