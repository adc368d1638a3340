"""Supervised link classifiers: naive Bayes, a gain-ratio decision tree with
pessimistic-error pruning, and a bagged random forest.

All three consume the same tabular datasets (numeric and categorical columns,
None for missing) and emit a link-likelihood score in [0, 1]; the predicted
class is Linked exactly when the score reaches 0.5. Missing values are
first-class: naive Bayes skips the attribute's factor, trees route fractional
instance weight down every branch, and unseen categorical values at
prediction time are routed the same way as missing ones.

Training is deterministic for a fixed seed: class imbalance is removed by
down-sampling the non-link majority, every repetition and every forest member
derives its own seeded generator, and split ties break on the lowest
attribute index, then the lowest threshold.
"""

from __future__ import annotations

import json
import math
import random
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import NormalDist
from typing import Optional, Sequence

from .model import TraceForgeError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

POSITIVE_LABEL = "Linked"
NEGATIVE_LABEL = "NonLinked"

MODEL_FORMAT_VERSION = 1

_EPS = 1e-12


@dataclass
class Dataset:
    """Attribute rows plus labels; schema names and types the columns."""

    schema: list[tuple[str, str]]
    rows: list[list]
    labels: list[str]

    def __post_init__(self) -> None:
        if len(self.rows) != len(self.labels):
            raise TraceForgeError(
                f"dataset has {len(self.rows)} rows but {len(self.labels)} labels"
            )

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for label in self.labels:
            counts[label] = counts.get(label, 0) + 1
        return counts


@dataclass(frozen=True)
class TreeParams:
    pruning_confidence: float = 0.25
    min_leaf: float = 2.0
    prune: bool = True
    laplace: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.pruning_confidence < 0.5):
            raise TraceForgeError("pruning confidence must be in (0, 0.5)")


@dataclass(frozen=True)
class ForestParams:
    trees: int = 100
    attrs_per_split: Optional[int] = None  # default floor(log2 m) + 1
    bootstrap: bool = True
    min_leaf: float = 1.0

    def __post_init__(self) -> None:
        if self.trees < 1:
            raise TraceForgeError("forest needs at least one tree")


@dataclass(frozen=True)
class ClassifierParams:
    kind: str = "random-forest"  # naive-bayes | decision-tree | random-forest
    tree: TreeParams = field(default_factory=TreeParams)
    forest: ForestParams = field(default_factory=ForestParams)
    rng_seed: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("naive-bayes", "decision-tree", "random-forest"):
            raise TraceForgeError(f"unknown classifier kind: {self.kind!r}")


def validate_row(schema: Sequence[tuple[str, str]], row: Sequence) -> None:
    if len(row) != len(schema):
        raise TraceForgeError(
            f"instance has {len(row)} values, schema expects {len(schema)}"
        )
    for (name, kind), value in zip(schema, row):
        if value is None:
            continue
        if kind == NUMERIC and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise TraceForgeError(f"attribute {name} expects a number, got {value!r}")


def subsample_balance(dataset: Dataset, seed: int, positive: str = POSITIVE_LABEL) -> Dataset:
    """Keep every positive instance; down-sample the rest to the same count."""
    pos_idx = [i for i, l in enumerate(dataset.labels) if l == positive]
    neg_idx = [i for i, l in enumerate(dataset.labels) if l != positive]
    if not pos_idx:
        raise TraceForgeError("cannot balance a dataset with no Linked instances")
    if len(neg_idx) < len(pos_idx):
        warnings.warn(
            f"only {len(neg_idx)} non-links for {len(pos_idx)} links; keeping all",
            stacklevel=2,
        )
        chosen = neg_idx
    else:
        chosen = random.Random(seed).sample(neg_idx, len(pos_idx))
    keep = sorted(pos_idx + chosen)
    return Dataset(
        schema=dataset.schema,
        rows=[dataset.rows[i] for i in keep],
        labels=[dataset.labels[i] for i in keep],
    )


# -- naive Bayes ---------------------------------------------------------------

_MIN_VARIANCE = 1e-9


class NaiveBayesModel:
    kind = "naive-bayes"

    def __init__(self, schema, positive, priors, numeric_stats, categorical_stats):
        self.schema = schema
        self.positive = positive
        self.priors = priors  # label -> instance count
        self.numeric_stats = numeric_stats  # attr -> label -> (n, mean, var)
        self.categorical_stats = categorical_stats  # attr -> (values, label -> value -> count)

    def predict_score(self, row: Sequence) -> float:
        validate_row(self.schema, row)
        total = sum(self.priors.values())
        n_classes = len(self.priors)
        log_post = {}
        for label, count in self.priors.items():
            logp = math.log((count + 1.0) / (total + n_classes))
            for idx, (_name, kind) in enumerate(self.schema):
                value = row[idx]
                if value is None:
                    continue
                if kind == NUMERIC:
                    stats = self.numeric_stats.get(idx, {}).get(label)
                    if stats is None:
                        continue
                    _n, mean, var = stats
                    var = max(var, _MIN_VARIANCE)
                    logp += -((value - mean) ** 2) / (2 * var) - 0.5 * math.log(
                        2 * math.pi * var
                    )
                else:
                    values, per_class = self.categorical_stats.get(idx, (set(), {}))
                    counts = per_class.get(label, {})
                    known = sum(counts.values())
                    logp += math.log(
                        (counts.get(value, 0) + 1.0) / (known + max(len(values), 1))
                    )
            log_post[label] = logp
        peak = max(log_post.values())
        norm = {l: math.exp(v - peak) for l, v in log_post.items()}
        z = sum(norm.values())
        return norm.get(self.positive, 0.0) / z

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "schema": [list(pair) for pair in self.schema],
            "positive": self.positive,
            "priors": self.priors,
            "numeric": {
                str(i): {l: list(s) for l, s in per.items()}
                for i, per in self.numeric_stats.items()
            },
            "categorical": {
                str(i): {
                    "values": sorted(values, key=repr),
                    "per_class": {
                        l: sorted(([v, c] for v, c in counts.items()), key=repr)
                        for l, counts in per.items()
                    },
                }
                for i, (values, per) in self.categorical_stats.items()
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NaiveBayesModel":
        numeric = {
            int(i): {l: tuple(s) for l, s in per.items()}
            for i, per in obj["numeric"].items()
        }
        categorical = {}
        for i, entry in obj["categorical"].items():
            values = set(_dejson_value(v) for v in entry["values"])
            per = {
                l: {_dejson_value(v): c for v, c in pairs}
                for l, pairs in entry["per_class"].items()
            }
            categorical[int(i)] = (values, per)
        return cls(
            schema=[tuple(p) for p in obj["schema"]],
            positive=obj["positive"],
            priors=dict(obj["priors"]),
            numeric_stats=numeric,
            categorical_stats=categorical,
        )


def _dejson_value(v):
    return v


def _train_naive_bayes(dataset: Dataset, positive: str) -> NaiveBayesModel:
    priors: dict[str, int] = {}
    numeric_stats: dict[int, dict[str, tuple]] = {}
    categorical_stats: dict[int, tuple[set, dict[str, dict]]] = {}
    for label in dataset.labels:
        priors[label] = priors.get(label, 0) + 1
    for idx, (_name, kind) in enumerate(dataset.schema):
        if kind == NUMERIC:
            per: dict[str, tuple] = {}
            for label in priors:
                values = [
                    row[idx]
                    for row, l in zip(dataset.rows, dataset.labels)
                    if l == label and row[idx] is not None
                ]
                if not values:
                    continue
                n = len(values)
                mean = sum(values) / n
                var = sum((v - mean) ** 2 for v in values) / n
                per[label] = (n, mean, var)
            numeric_stats[idx] = per
        else:
            values = set()
            per_class: dict[str, dict] = {label: {} for label in priors}
            for row, label in zip(dataset.rows, dataset.labels):
                v = row[idx]
                if v is None:
                    continue
                values.add(v)
                per_class[label][v] = per_class[label].get(v, 0) + 1
            categorical_stats[idx] = (values, per_class)
    return NaiveBayesModel(
        schema=list(dataset.schema),
        positive=positive,
        priors=priors,
        numeric_stats=numeric_stats,
        categorical_stats=categorical_stats,
    )


# -- decision trees -------------------------------------------------------------

class _Leaf:
    __slots__ = ("dist", "total")

    def __init__(self, dist: dict[str, float]):
        self.dist = dist
        self.total = sum(dist.values())


class _Split:
    __slots__ = ("attr", "kind", "threshold", "values", "children", "fractions", "dist", "total")

    def __init__(self, attr, kind, threshold, values, children, fractions, dist):
        self.attr = attr
        self.kind = kind
        self.threshold = threshold
        self.values = values  # categorical branch values, aligned with children
        self.children = children
        self.fractions = fractions  # training weight share per branch
        self.dist = dist
        self.total = sum(dist.values())


def _entropy(dist: dict[str, float], total: float) -> float:
    if total <= 0:
        return 0.0
    ent = 0.0
    for w in dist.values():
        if w > 0:
            p = w / total
            ent -= p * math.log2(p)
    return ent


@dataclass
class _SplitEval:
    attr: int
    gain: float
    gain_ratio: float
    threshold: Optional[float]
    groups: list  # (branch_key, indices, weight)
    known_weight: float


class _TreeGrower:
    def __init__(self, schema, rows, labels, min_leaf: float, rng=None, k_attrs=None):
        self.schema = schema
        self.rows = rows
        self.labels = labels
        self.min_leaf = min_leaf
        self.rng = rng
        self.k_attrs = k_attrs

    def grow(self, indices: list[int], weights: list[float]):
        dist: dict[str, float] = {}
        for i, w in zip(indices, weights):
            dist[self.labels[i]] = dist.get(self.labels[i], 0.0) + w
        total = sum(weights)
        if len(dist) <= 1 or total < 2 * self.min_leaf:
            return _Leaf(dist)
        choice = self._choose_split(indices, weights, dist, total)
        if choice is None:
            return _Leaf(dist)

        children = []
        fractions = [bw / choice.known_weight for _key, _idx, bw in choice.groups]
        missing = [
            (i, w) for i, w in zip(indices, weights) if self.rows[i][choice.attr] is None
        ]
        # branch index/weight lists; missing weight spreads over the branches
        weight_of = {i: w for i, w in zip(indices, weights)}
        for (_key, branch_indices, _bw), fraction in zip(choice.groups, fractions):
            child_idx = list(branch_indices)
            child_weights = [weight_of[i] for i in branch_indices]
            for i, w in missing:
                if w * fraction > _EPS:
                    child_idx.append(i)
                    child_weights.append(w * fraction)
            if child_idx:
                children.append(self.grow(child_idx, child_weights))
            else:
                children.append(_Leaf(dict(dist)))
        if choice.threshold is not None:
            return _Split(choice.attr, NUMERIC, choice.threshold, None, children, fractions, dist)
        return _Split(
            choice.attr,
            CATEGORICAL,
            None,
            [key for key, _idx, _w in choice.groups],
            children,
            fractions,
            dist,
        )

    # -- split search ------------------------------------------------------

    def _choose_split(self, indices, weights, dist, total):
        attr_order = list(range(len(self.schema)))
        if self.rng is not None:
            attr_order = self.rng.sample(attr_order, len(attr_order))
            first_round = attr_order[: self.k_attrs]
            rest = attr_order[self.k_attrs :]
        else:
            first_round, rest = attr_order, []

        candidates = self._evaluate_attrs(first_round, indices, weights, dist, total)
        if not candidates:
            for attr in rest:
                candidates = self._evaluate_attrs([attr], indices, weights, dist, total)
                if candidates:
                    break
        if not candidates:
            return None
        # gain-ratio selection restricted to candidates with at least average
        # gain, so a tiny-gain/tiny-split-info attribute cannot dominate
        if len(candidates) > 1:
            avg_gain = sum(c.gain for c in candidates) / len(candidates)
            eligible = [c for c in candidates if c.gain >= avg_gain - _EPS]
        else:
            eligible = candidates
        return min(
            eligible,
            key=lambda c: (
                -c.gain_ratio,
                c.attr,
                c.threshold if c.threshold is not None else 0.0,
            ),
        )

    def _evaluate_attrs(self, attrs, indices, weights, dist, total):
        out = []
        for attr in attrs:
            kind = self.schema[attr][1]
            evaluated = (
                self._eval_numeric(attr, indices, weights, total)
                if kind == NUMERIC
                else self._eval_categorical(attr, indices, weights, total)
            )
            if evaluated is not None:
                out.append(evaluated)
        return out

    def _eval_numeric(self, attr, indices, weights, total):
        known = [
            (self.rows[i][attr], self.labels[i], w)
            for i, w in zip(indices, weights)
            if self.rows[i][attr] is not None
        ]
        if len(known) < 2:
            return None
        known.sort(key=lambda t: t[0])
        known_weight = sum(w for _v, _l, w in known)
        if known_weight <= 0:
            return None
        missing_weight = total - known_weight

        right: dict[str, float] = {}
        for _v, label, w in known:
            right[label] = right.get(label, 0.0) + w
        known_entropy = _entropy(right, known_weight)
        left: dict[str, float] = {}
        left_w = 0.0

        best = None
        for pos in range(len(known) - 1):
            v, label, w = known[pos]
            left[label] = left.get(label, 0.0) + w
            right[label] -= w
            left_w += w
            if v == known[pos + 1][0]:
                continue
            right_w = known_weight - left_w
            if min(left_w, right_w) < self.min_leaf:
                continue
            info = (
                left_w * _entropy(left, left_w) + right_w * _entropy(right, right_w)
            ) / known_weight
            gain_known = known_entropy - info
            if gain_known <= _EPS:
                continue
            gain = (known_weight / total) * gain_known
            split_info = _proportion_entropy([left_w, right_w, missing_weight], total)
            if split_info <= _EPS:
                continue
            ratio = gain / split_info
            threshold = (v + known[pos + 1][0]) / 2.0
            key = (ratio, -threshold)
            if best is None or key > best[0]:
                best = (key, gain, ratio, threshold, left_w, right_w)
        if best is None:
            return None
        _key, gain, ratio, threshold, left_w, right_w = best
        left_idx = [i for i in indices if self.rows[i][attr] is not None and self.rows[i][attr] <= threshold]
        right_idx = [i for i in indices if self.rows[i][attr] is not None and self.rows[i][attr] > threshold]
        groups = [("le", left_idx, left_w), ("gt", right_idx, right_w)]
        return _SplitEval(attr, gain, ratio, threshold, groups, known_weight)

    def _eval_categorical(self, attr, indices, weights, total):
        groups: dict = {}
        group_weights: dict = {}
        known_weight = 0.0
        for i, w in zip(indices, weights):
            v = self.rows[i][attr]
            if v is None:
                continue
            groups.setdefault(v, []).append(i)
            group_weights[v] = group_weights.get(v, 0.0) + w
            known_weight += w
        if len(groups) < 2 or known_weight <= 0:
            return None
        if sum(1 for w in group_weights.values() if w >= self.min_leaf) < 2:
            return None
        missing_weight = total - known_weight

        weight_of = {i: w for i, w in zip(indices, weights)}
        known_dist: dict[str, float] = {}
        info = 0.0
        for v, members in groups.items():
            branch: dict[str, float] = {}
            for i in members:
                branch[self.labels[i]] = branch.get(self.labels[i], 0.0) + weight_of[i]
                known_dist[self.labels[i]] = known_dist.get(self.labels[i], 0.0) + weight_of[i]
            info += group_weights[v] * _entropy(branch, group_weights[v])
        info /= known_weight
        gain_known = _entropy(known_dist, known_weight) - info
        if gain_known <= _EPS:
            return None
        gain = (known_weight / total) * gain_known
        split_info = _proportion_entropy(
            list(group_weights.values()) + [missing_weight], total
        )
        if split_info <= _EPS:
            return None
        ordered = sorted(groups, key=repr)
        eval_groups = [(v, groups[v], group_weights[v]) for v in ordered]
        return _SplitEval(attr, gain, gain / split_info, None, eval_groups, known_weight)


def _proportion_entropy(parts: list[float], total: float) -> float:
    ent = 0.0
    for w in parts:
        if w > 0:
            p = w / total
            ent -= p * math.log2(p)
    return ent


def _added_errors(n: float, e: float, cf: float) -> float:
    """Extra errors granted by the upper confidence bound (pessimistic)."""
    if n <= 0:
        return 0.0
    if e < 1e-9:
        return n * (1.0 - cf ** (1.0 / n))
    if e < 1.0:
        base = n * (1.0 - cf ** (1.0 / n))
        return base + e * (_added_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1.0 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (
        1 + z * z / n
    )
    return r * n - e


def _leaf_errors(dist: dict[str, float]) -> tuple[float, float]:
    total = sum(dist.values())
    if not dist:
        return 0.0, 0.0
    return total, total - max(dist.values())


def _pessimistic_subtree_errors(node, cf: float) -> float:
    if isinstance(node, _Leaf):
        n, e = _leaf_errors(node.dist)
        return e + _added_errors(n, e, cf)
    return sum(_pessimistic_subtree_errors(child, cf) for child in node.children)


def _prune(node, cf: float):
    if isinstance(node, _Leaf):
        return node
    node.children = [_prune(child, cf) for child in node.children]
    n, e = _leaf_errors(node.dist)
    as_leaf = e + _added_errors(n, e, cf)
    subtree = _pessimistic_subtree_errors(node, cf)
    if as_leaf <= subtree + 0.1:
        return _Leaf(dict(node.dist))
    return node


def _walk_score(node, row, positive: str, laplace: bool, weight: float = 1.0) -> float:
    if isinstance(node, _Leaf):
        if node.total <= 0:
            return weight * 0.5
        pos = node.dist.get(positive, 0.0)
        p = (pos + 1.0) / (node.total + 2.0) if laplace else pos / node.total
        return weight * p
    value = row[node.attr]
    if node.kind == NUMERIC and value is not None:
        child = node.children[0] if value <= node.threshold else node.children[1]
        return _walk_score(child, row, positive, laplace, weight)
    if node.kind == CATEGORICAL and value is not None and value in node.values:
        child = node.children[node.values.index(value)]
        return _walk_score(child, row, positive, laplace, weight)
    # missing or unseen category: spread the instance over all branches
    return sum(
        _walk_score(child, row, positive, laplace, weight * fraction)
        for child, fraction in zip(node.children, node.fractions)
        if fraction > 0
    )


def _node_to_json(node) -> dict:
    if isinstance(node, _Leaf):
        return {"leaf": True, "dist": sorted(node.dist.items())}
    out = {
        "leaf": False,
        "attr": node.attr,
        "type": node.kind,
        "fractions": node.fractions,
        "children": [_node_to_json(c) for c in node.children],
    }
    if node.kind == NUMERIC:
        out["threshold"] = node.threshold
    else:
        out["values"] = node.values
    return out


def _node_from_json(obj: dict):
    if obj["leaf"]:
        return _Leaf({label: w for label, w in obj["dist"]})
    children = [_node_from_json(c) for c in obj["children"]]
    node = _Split(
        attr=obj["attr"],
        kind=obj["type"],
        threshold=obj.get("threshold"),
        values=obj.get("values"),
        children=children,
        fractions=obj["fractions"],
        dist={},
    )
    return node


class DecisionTreeModel:
    kind = "decision-tree"

    def __init__(self, schema, positive, root, laplace: bool):
        self.schema = schema
        self.positive = positive
        self.root = root
        self.laplace = laplace

    def predict_score(self, row: Sequence) -> float:
        validate_row(self.schema, row)
        return _walk_score(self.root, row, self.positive, self.laplace)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "schema": [list(p) for p in self.schema],
            "positive": self.positive,
            "laplace": self.laplace,
            "root": _node_to_json(self.root),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DecisionTreeModel":
        return cls(
            schema=[tuple(p) for p in obj["schema"]],
            positive=obj["positive"],
            root=_node_from_json(obj["root"]),
            laplace=obj["laplace"],
        )


def _train_tree(dataset: Dataset, params: TreeParams, positive: str) -> DecisionTreeModel:
    grower = _TreeGrower(
        dataset.schema, dataset.rows, dataset.labels, min_leaf=params.min_leaf
    )
    indices = list(range(len(dataset.rows)))
    root = grower.grow(indices, [1.0] * len(indices))
    if params.prune:
        root = _prune(root, params.pruning_confidence)
    return DecisionTreeModel(list(dataset.schema), positive, root, params.laplace)


class RandomForestModel:
    kind = "random-forest"

    def __init__(self, schema, positive, roots, params: ForestParams):
        self.schema = schema
        self.positive = positive
        self.roots = roots
        self.params = params

    def predict_score(self, row: Sequence) -> float:
        """Mean of the member trees' leaf link fractions (fractional voting)."""
        validate_row(self.schema, row)
        total = sum(
            _walk_score(root, row, self.positive, laplace=False) for root in self.roots
        )
        return total / len(self.roots)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "schema": [list(p) for p in self.schema],
            "positive": self.positive,
            "trees": [_node_to_json(r) for r in self.roots],
            "forest": {
                "trees": self.params.trees,
                "attrs_per_split": self.params.attrs_per_split,
                "bootstrap": self.params.bootstrap,
                "min_leaf": self.params.min_leaf,
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RandomForestModel":
        return cls(
            schema=[tuple(p) for p in obj["schema"]],
            positive=obj["positive"],
            roots=[_node_from_json(t) for t in obj["trees"]],
            params=ForestParams(**obj["forest"]),
        )


def _train_forest(
    dataset: Dataset, params: ForestParams, seed: int, positive: str
) -> RandomForestModel:
    m = len(dataset.schema)
    k = params.attrs_per_split or (int(math.floor(math.log2(m))) + 1 if m > 1 else 1)
    k = min(k, m)
    n = len(dataset.rows)
    roots = []
    for t in range(params.trees):
        tree_rng = random.Random(seed * 1_000_003 + t)
        if params.bootstrap:
            indices = [tree_rng.randrange(n) for _ in range(n)]
        else:
            indices = list(range(n))
        grower = _TreeGrower(
            dataset.schema,
            dataset.rows,
            dataset.labels,
            min_leaf=params.min_leaf,
            rng=tree_rng,
            k_attrs=k,
        )
        roots.append(grower.grow(indices, [1.0] * len(indices)))
    return RandomForestModel(list(dataset.schema), positive, roots, params)


# -- public training API ---------------------------------------------------------

TrainedModel = NaiveBayesModel | DecisionTreeModel | RandomForestModel


def train(params: ClassifierParams, dataset: Dataset, positive: str = POSITIVE_LABEL) -> TrainedModel:
    counts = dataset.class_counts()
    if len(counts) < 2:
        raise TraceForgeError(
            f"training needs two classes, got {sorted(counts) or 'none'}"
        )
    for row in dataset.rows:
        validate_row(dataset.schema, row)
    if params.kind == "naive-bayes":
        return _train_naive_bayes(dataset, positive)
    if params.kind == "decision-tree":
        return _train_tree(dataset, params.tree, positive)
    return _train_forest(dataset, params.forest, params.rng_seed, positive)


def predict_score(model: TrainedModel, row: Sequence) -> float:
    return model.predict_score(row)


def predict_label(model: TrainedModel, row: Sequence, positive: str = POSITIVE_LABEL) -> str:
    return positive if model.predict_score(row) >= 0.5 else NEGATIVE_LABEL


@dataclass
class RepetitionBundle:
    """Models from repeated balanced sub-sampling; scores average over them."""

    models: list
    seeds: list[int]
    params: ClassifierParams
    attr_names: list[str]
    positive: str = POSITIVE_LABEL
    metadata: dict = field(default_factory=dict)

    def score(self, row: Sequence) -> float:
        return sum(m.predict_score(row) for m in self.models) / len(self.models)

    def member_scores(self, row: Sequence) -> list[float]:
        return [m.predict_score(row) for m in self.models]


def _train_one_repetition(args: tuple[ClassifierParams, Dataset, int]):
    params, dataset, seed = args
    balanced = subsample_balance(dataset, seed)
    return train(replace(params, rng_seed=seed), balanced)


def train_repetitions(
    params: ClassifierParams,
    dataset: Dataset,
    base_seed: int,
    repetitions: int = 10,
    jobs: int = 1,
) -> RepetitionBundle:
    """One model per sub-sampling repetition, seeds base_seed..base_seed+r-1.

    Repetitions are independent given their seeds, so jobs > 1 trains them
    in worker processes with identical results.
    """
    seeds = list(range(base_seed, base_seed + repetitions))
    work = [(params, dataset, seed) for seed in seeds]
    if jobs > 1 and repetitions > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(jobs, repetitions)) as pool:
            models = list(pool.map(_train_one_repetition, work))
    else:
        models = [_train_one_repetition(item) for item in work]
    return RepetitionBundle(
        models=models,
        seeds=seeds,
        params=params,
        attr_names=[name for name, _ in dataset.schema],
        metadata={"instances": len(dataset.rows), "classes": dataset.class_counts()},
    )


# -- persistence -----------------------------------------------------------------

def _model_from_json(obj: dict):
    kind = obj["kind"]
    if kind == "naive-bayes":
        return NaiveBayesModel.from_json(obj)
    if kind == "decision-tree":
        return DecisionTreeModel.from_json(obj)
    if kind == "random-forest":
        return RandomForestModel.from_json(obj)
    raise TraceForgeError(f"unknown model kind in file: {kind!r}")


def save_bundle(bundle: RepetitionBundle, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "classifier": {
            "kind": bundle.params.kind,
            "rng_seed": bundle.params.rng_seed,
            "tree": {
                "pruning_confidence": bundle.params.tree.pruning_confidence,
                "min_leaf": bundle.params.tree.min_leaf,
                "prune": bundle.params.tree.prune,
                "laplace": bundle.params.tree.laplace,
            },
            "forest": {
                "trees": bundle.params.forest.trees,
                "attrs_per_split": bundle.params.forest.attrs_per_split,
                "bootstrap": bundle.params.forest.bootstrap,
                "min_leaf": bundle.params.forest.min_leaf,
            },
        },
        "seeds": bundle.seeds,
        "attr_names": bundle.attr_names,
        "positive": bundle.positive,
        "metadata": bundle.metadata,
        "models": [m.to_json() for m in bundle.models],
    }
    path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    return path


def load_bundle(path: str | Path) -> RepetitionBundle:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    version = obj.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise TraceForgeError(f"unsupported model format version: {version!r}")
    cls_obj = obj["classifier"]
    params = ClassifierParams(
        kind=cls_obj["kind"],
        rng_seed=cls_obj["rng_seed"],
        tree=TreeParams(**cls_obj["tree"]),
        forest=ForestParams(**cls_obj["forest"]),
    )
    return RepetitionBundle(
        models=[_model_from_json(m) for m in obj["models"]],
        seeds=list(obj["seeds"]),
        params=params,
        attr_names=list(obj["attr_names"]),
        positive=obj["positive"],
        metadata=obj.get("metadata", {}),
    )
