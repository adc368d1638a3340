"""Correlation-based subset selection for the Auto attribute set.

Numeric attributes are first discretized with the supervised MDL method
(recursive entropy-minimizing binary cuts, accepted only when the coding
gain clears the MDL bar). Attribute-class and attribute-attribute
correlations are symmetric uncertainty over the discretized values, with
MISSING kept as its own category. A greedy best-first forward search then
maximizes the subset merit

    merit(S) = k * mean_su(attr, class) / sqrt(k + k*(k-1) * mean_su(attr, attr))

and stops after five consecutive non-improving expansions.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Optional, Sequence

from .model import TraceForgeError

_LOG2 = math.log(2.0)


def _entropy(counts: Counter) -> float:
    total = sum(counts.values())
    if total == 0:
        return 0.0
    ent = 0.0
    for n in counts.values():
        if n:
            p = n / total
            ent -= p * math.log(p) / _LOG2
    return ent


def _entropy_of(values: Sequence) -> float:
    return _entropy(Counter(values))


def mdlp_cuts(values: Sequence[float], labels: Sequence) -> list[float]:
    """Supervised binary cut points for one numeric attribute (MDL stop)."""
    known = sorted((v, l) for v, l in zip(values, labels) if v is not None)
    cuts: list[float] = []
    _mdlp_recurse(known, cuts)
    return sorted(cuts)


def _mdlp_recurse(pairs: list[tuple[float, object]], cuts: list[float]) -> None:
    n = len(pairs)
    if n < 4:
        return
    total_counts = Counter(l for _, l in pairs)
    if len(total_counts) < 2:
        return
    base_entropy = _entropy(total_counts)

    best = None  # (weighted_entropy, cut, split_idx, left_counts, right_counts)
    left_counts: Counter = Counter()
    for i in range(n - 1):
        left_counts[pairs[i][1]] += 1
        if pairs[i][0] == pairs[i + 1][0]:
            continue
        right_counts = total_counts - left_counts
        weighted = ((i + 1) * _entropy(left_counts) + (n - i - 1) * _entropy(right_counts)) / n
        if best is None or weighted < best[0] - 1e-12:
            cut = (pairs[i][0] + pairs[i + 1][0]) / 2.0
            best = (weighted, cut, i + 1, Counter(left_counts), Counter(right_counts))
    if best is None:
        return

    weighted, cut, split_idx, lc, rc = best
    gain = base_entropy - weighted
    k = len(total_counts)
    k1, k2 = len(lc), len(rc)
    delta = math.log(3**k - 2) / _LOG2 - (
        k * base_entropy - k1 * _entropy(lc) - k2 * _entropy(rc)
    )
    if gain <= (math.log(n - 1) / _LOG2 + delta) / n:
        return
    cuts.append(cut)
    _mdlp_recurse(pairs[:split_idx], cuts)
    _mdlp_recurse(pairs[split_idx:], cuts)


def discretize(values: Sequence[Optional[float]], cuts: Sequence[float]) -> list:
    """Map numeric values to bin indices; None stays a category of its own."""
    out = []
    for v in values:
        if v is None:
            out.append("?")
            continue
        bin_idx = 0
        for cut in cuts:
            if v > cut:
                bin_idx += 1
            else:
                break
        out.append(bin_idx)
    return out


def symmetric_uncertainty(xs: Sequence, ys: Sequence) -> float:
    """2 * information gain / (H(X) + H(Y)), in [0, 1]."""
    hx = _entropy_of(xs)
    hy = _entropy_of(ys)
    if hx + hy == 0.0:
        return 0.0
    hxy = _entropy_of(list(zip(xs, ys)))
    gain = hx + hy - hxy
    return max(0.0, 2.0 * gain / (hx + hy))


class _CorrelationCache:
    def __init__(self, columns: list[list], labels: Sequence) -> None:
        self.columns = columns
        self.labels = list(labels)
        self._class_su: dict[int, float] = {}
        self._pair_su: dict[tuple[int, int], float] = {}

    def class_su(self, i: int) -> float:
        if i not in self._class_su:
            self._class_su[i] = symmetric_uncertainty(self.columns[i], self.labels)
        return self._class_su[i]

    def pair_su(self, i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        if key not in self._pair_su:
            self._pair_su[key] = symmetric_uncertainty(
                self.columns[key[0]], self.columns[key[1]]
            )
        return self._pair_su[key]


def _merit(subset: tuple[int, ...], cache: _CorrelationCache) -> float:
    k = len(subset)
    if k == 0:
        return 0.0
    rcf = sum(cache.class_su(i) for i in subset) / k
    if k == 1:
        return rcf
    pair_sum = 0.0
    pair_count = 0
    for a in range(k):
        for b in range(a + 1, k):
            pair_sum += cache.pair_su(subset[a], subset[b])
            pair_count += 1
    rff = pair_sum / pair_count
    denominator = math.sqrt(k + k * (k - 1) * rff)
    if denominator == 0.0:
        return 0.0
    return k * rcf / denominator


def select_attributes(
    schema: Sequence[tuple[str, str]],
    rows: Sequence[Sequence],
    labels: Sequence,
    max_stale: int = 5,
) -> list[str]:
    """Best-first CFS over the given training matrix; returns attribute names."""
    if len(set(labels)) < 2:
        raise TraceForgeError("attribute selection requires at least two classes")

    columns: list[list] = []
    for idx, (_name, kind) in enumerate(schema):
        col = [row[idx] for row in rows]
        if kind == "numeric":
            cuts = mdlp_cuts(col, labels)
            col = discretize(col, cuts)
        else:
            col = ["?" if v is None else v for v in col]
        columns.append(col)

    cache = _CorrelationCache(columns, labels)
    all_attrs = tuple(range(len(schema)))

    start: tuple[int, ...] = ()
    open_list: list[tuple[float, tuple[int, ...]]] = [(0.0, start)]
    seen: set[tuple[int, ...]] = {start}
    best_subset, best_merit = start, 0.0
    stale = 0

    while open_list and stale < max_stale:
        open_list.sort(key=lambda item: (-item[0], item[1]))
        merit, subset = open_list.pop(0)
        improved = False
        for attr in all_attrs:
            if attr in subset:
                continue
            child = tuple(sorted(subset + (attr,)))
            if child in seen:
                continue
            seen.add(child)
            child_merit = _merit(child, cache)
            open_list.append((child_merit, child))
            if child_merit > best_merit + 1e-10:
                best_subset, best_merit = child, child_merit
                improved = True
        stale = 0 if improved else stale + 1

    return [schema[i][0] for i in sorted(best_subset)]
