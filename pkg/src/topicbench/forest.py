"""Random forest classifier built from scratch, plus grid-search tuning,
stratified k-fold cross-validation, and the four evaluation metrics.

Trees use axis-aligned threshold splits chosen to minimize gini or entropy
impurity over a per-split random feature subset. Prediction is a soft vote:
the mean of the per-tree leaf class frequencies, so class probabilities are
available for the explanation layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import LABELS, TopicLabel
from .errors import StratificationError, ValidationError

N_CLASSES = len(LABELS)
_LABEL_INDEX = {label: i for i, label in enumerate(LABELS)}


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 300
    criterion: str = "gini"  # or "entropy"
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    features_per_split: str = "sqrt"  # or "all"
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValidationError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.criterion not in ("gini", "entropy"):
            raise ValidationError(f"criterion must be gini or entropy, got {self.criterion!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValidationError(f"max_depth must be >= 1 when set, got {self.max_depth}")
        if self.features_per_split not in ("sqrt", "all"):
            raise ValidationError(
                f"features_per_split must be sqrt or all, got {self.features_per_split!r}"
            )


@dataclass
class Tree:
    """Flat array representation; feature == -1 marks a leaf."""

    feature: np.ndarray  # int32 (n_nodes,)
    threshold: np.ndarray  # float64 (n_nodes,)
    left: np.ndarray  # int32 (n_nodes,)
    right: np.ndarray  # int32 (n_nodes,)
    leaf_counts: np.ndarray  # float64 (n_nodes, n_classes); class counts at leaves

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        cur = np.zeros(n, dtype=np.int32)
        while True:
            feat = self.feature[cur]
            active = feat >= 0
            if not active.any():
                break
            safe_feat = np.where(active, feat, 0)
            go_left = X[np.arange(n), safe_feat] <= self.threshold[cur]
            nxt = np.where(go_left, self.left[cur], self.right[cur])
            cur = np.where(active, nxt, cur)
        counts = self.leaf_counts[cur]
        return counts / counts.sum(axis=1, keepdims=True)


@dataclass
class ForestModel:
    trees: list[Tree]
    classes: tuple[TopicLabel, ...]
    params: ForestParams
    fingerprint: str = ""
    n_features: int = 0


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: dict[TopicLabel, dict[str, float]]
    confusion: np.ndarray  # (4, 4) counts, rows = true, cols = predicted

    def to_records(self) -> list[tuple[str, str, float]]:
        """Structured rows (scope, metric, value) for delimited export."""
        rows = [
            ("macro", "accuracy", self.accuracy),
            ("macro", "precision", self.precision),
            ("macro", "recall", self.recall),
            ("macro", "f1", self.f1),
        ]
        for label, metrics in self.per_class.items():
            for name, value in metrics.items():
                rows.append((label.value, name, value))
        return rows


# ---------------------------------------------------------------------------
# Tree construction
# ---------------------------------------------------------------------------


def _weighted_impurity(cl, cr, nl, nr, criterion):
    """cl, cr: (..., classes) counts; nl, nr: broadcastable sample counts."""
    if criterion == "gini":
        # n_child * gini(child) == n_child - sum(c^2)/n_child
        left = nl - (cl * cl).sum(axis=-1) / nl
        right = nr - (cr * cr).sum(axis=-1) / nr
        return left + right
    with np.errstate(divide="ignore", invalid="ignore"):
        pl = cl / nl[..., None]
        pr = cr / nr[..., None]
        hl = np.where(cl > 0, -pl * np.log2(pl, where=pl > 0), 0.0).sum(axis=-1)
        hr = np.where(cr > 0, -pr * np.log2(pr, where=pr > 0), 0.0).sum(axis=-1)
    return nl * hl + nr * hr


def _best_split(X, y, idx, feats, min_leaf, criterion):
    """Best (feature, threshold, score) over the candidate features, or None.

    Candidate thresholds are midpoints between distinct consecutive sorted
    values; positions that violate min_samples_leaf are excluded. Zero-gain
    splits are allowed (required e.g. to separate XOR-like layouts)."""
    n = idx.size
    sub = X[np.ix_(idx, feats)]
    order = np.argsort(sub, axis=0, kind="stable")
    sorted_vals = np.take_along_axis(sub, order, axis=0)
    sorted_y = y[idx][order]  # (n, m)
    onehot = sorted_y[:, :, None] == np.arange(N_CLASSES)[None, None, :]
    cum = np.cumsum(onehot, axis=0).astype(np.float64)  # (n, m, C)

    counts_left = cum[:-1]  # split after row i -> left size i+1
    counts_right = cum[-1][None, :, :] - counts_left
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left

    scores = _weighted_impurity(counts_left, counts_right, n_left, n_right, criterion)
    invalid = (sorted_vals[:-1] >= sorted_vals[1:]) | (n_left < min_leaf) | (n_right < min_leaf)
    scores = np.where(invalid, np.inf, scores)
    flat = np.argmin(scores)
    pos, j = np.unravel_index(flat, scores.shape)
    if not np.isfinite(scores[pos, j]):
        return None
    threshold = (sorted_vals[pos, j] + sorted_vals[pos + 1, j]) / 2.0
    return int(feats[j]), float(threshold), float(scores[pos, j])


def _grow_tree(X, y, sample_idx, params: ForestParams, rng: np.random.Generator) -> Tree:
    n_features = X.shape[1]
    if params.features_per_split == "sqrt":
        m = max(1, int(np.sqrt(n_features)))
    else:
        m = n_features

    feature, threshold, left, right, leaf_counts = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_counts.append(np.zeros(N_CLASSES))
        return len(feature) - 1

    def counts_of(idx):
        return np.bincount(y[idx], minlength=N_CLASSES).astype(np.float64)

    root = new_node()
    stack = [(root, sample_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = counts_of(idx)
        leaf_counts[node] = counts
        if (
            idx.size < 2 * params.min_samples_leaf
            or (params.max_depth is not None and depth >= params.max_depth)
            or np.count_nonzero(counts) <= 1
        ):
            continue
        feats = rng.permutation(n_features)[:m]
        found = _best_split(X, y, idx, feats, params.min_samples_leaf, params.criterion)
        if found is None and m < n_features:
            # the sampled subset was constant-valued; retry over all features
            found = _best_split(
                X, y, idx, np.arange(n_features), params.min_samples_leaf, params.criterion
            )
        if found is None:
            continue
        f, thr, _ = found
        go_left = X[idx, f] <= thr
        node_l, node_r = new_node(), new_node()
        feature[node] = f
        threshold[node] = thr
        left[node] = node_l
        right[node] = node_r
        stack.append((node_r, idx[~go_left], depth + 1))
        stack.append((node_l, idx[go_left], depth + 1))

    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        leaf_counts=np.asarray(leaf_counts, dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# Forest API
# ---------------------------------------------------------------------------


def _as_matrix(X) -> np.ndarray:
    values = X.values if hasattr(X, "values") else np.asarray(X, dtype=np.float64)
    return np.asarray(values, dtype=np.float64)


def _as_class_indices(y: Sequence[TopicLabel]) -> np.ndarray:
    try:
        return np.asarray([_LABEL_INDEX[label] for label in y], dtype=np.int64)
    except KeyError as exc:
        raise ValidationError(f"unknown label value: {exc.args[0]!r}") from None


def fit_forest(X, y: Sequence[TopicLabel], params: ForestParams, fingerprint: str = "") -> ForestModel:
    """Train params.n_estimators trees on bootstrap resamples (or the full
    data when bootstrap is off). Deterministic given params.seed: each tree
    owns a spawned child generator, so a parallel implementation would
    produce identical trees."""
    Xm = _as_matrix(X)
    yi = _as_class_indices(y)
    if Xm.shape[0] != yi.size:
        raise ValidationError(f"{Xm.shape[0]} rows but {yi.size} labels")
    if Xm.shape[0] < 2:
        raise ValidationError("need at least 2 training rows")
    if np.unique(yi).size < 2:
        raise ValidationError("need at least 2 distinct labels")
    if not np.isfinite(Xm).all():
        raise ValidationError("feature matrix contains non-finite values")

    seeds = np.random.SeedSequence(params.seed).spawn(params.n_estimators)
    trees = []
    n = Xm.shape[0]
    for seq in seeds:
        rng = np.random.default_rng(seq)
        if params.bootstrap:
            sample_idx = rng.integers(0, n, size=n)
        else:
            sample_idx = np.arange(n)
        trees.append(_grow_tree(Xm, yi, sample_idx, params, rng))
    return ForestModel(
        trees=trees,
        classes=LABELS,
        params=params,
        fingerprint=fingerprint,
        n_features=Xm.shape[1],
    )


def predict_proba_matrix(model: ForestModel, X) -> np.ndarray:
    """(n, 4) matrix of soft-vote probabilities; rows sum to 1."""
    Xm = _as_matrix(X)
    if Xm.ndim != 2 or Xm.shape[1] != model.n_features:
        raise ValidationError(
            f"expected {model.n_features} features, got shape {Xm.shape}"
        )
    acc = np.zeros((Xm.shape[0], N_CLASSES))
    for tree in model.trees:
        acc += tree.predict_proba(Xm)
    return acc / len(model.trees)


def predict_proba(model: ForestModel, x) -> np.ndarray:
    """Probability 4-vector for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError(f"expected a 1-D feature vector, got shape {x.shape}")
    return predict_proba_matrix(model, x[None, :])[0]


def predict(model: ForestModel, X) -> list[TopicLabel]:
    probs = predict_proba_matrix(model, X)
    return [model.classes[i] for i in probs.argmax(axis=1)]


# ---------------------------------------------------------------------------
# Stratified k-fold and grid search
# ---------------------------------------------------------------------------


def stratified_kfold(y: Sequence[TopicLabel], k: int, seed: int) -> list[np.ndarray]:
    """Partition indices into k folds with per-class counts differing by at
    most one across folds. Extras go to the currently smallest folds, so
    overall fold sizes stay balanced too."""
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    yi = _as_class_indices(y)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    extra_load = np.zeros(k, dtype=np.int64)
    for c in range(N_CLASSES):
        members = np.flatnonzero(yi == c)
        if members.size == 0:
            continue
        if members.size < k:
            raise StratificationError(
                f"class {LABELS[c].value!r} has {members.size} members; need >= k={k}"
            )
        members = members[rng.permutation(members.size)]
        base, rem = divmod(members.size, k)
        # assign the `rem` extras to the folds carrying the fewest extras
        order = np.lexsort((np.arange(k), extra_load))
        extra_folds = set(order[:rem].tolist())
        pos = 0
        for f in range(k):
            take = base + (1 if f in extra_folds else 0)
            folds[f].extend(members[pos : pos + take].tolist())
            pos += take
            if f in extra_folds:
                extra_load[f] += 1
    return [np.asarray(sorted(f), dtype=np.int64) for f in folds]


def _depth_key(params: ForestParams) -> float:
    return float("inf") if params.max_depth is None else params.max_depth


def grid_search(
    X,
    y: Sequence[TopicLabel],
    grid: Sequence[ForestParams],
    k: int,
    seed: int,
) -> tuple[ForestParams, list[float]]:
    """Evaluate each candidate by stratified k-fold macro-F1 and return the
    winner plus all per-candidate means. Ties break toward fewer estimators,
    then shallower depth, then gini."""
    if not grid:
        raise ValidationError("grid must be nonempty")
    Xm = _as_matrix(X)
    y = list(y)
    folds = stratified_kfold(y, k, seed)
    all_idx = np.arange(Xm.shape[0])
    scores: list[float] = []
    for candidate in grid:
        fold_scores = []
        for test_idx in folds:
            train_mask = np.ones(Xm.shape[0], dtype=bool)
            train_mask[test_idx] = False
            train_idx = all_idx[train_mask]
            model = fit_forest(Xm[train_idx], [y[i] for i in train_idx], candidate)
            pred = predict(model, Xm[test_idx])
            report = evaluate([y[i] for i in test_idx], pred)
            fold_scores.append(report.f1)
        scores.append(float(np.mean(fold_scores)))
    best_i = min(
        range(len(grid)),
        key=lambda i: (
            -scores[i],
            grid[i].n_estimators,
            _depth_key(grid[i]),
            grid[i].criterion != "gini",
            i,
        ),
    )
    return grid[best_i], scores


DEFAULT_GRID = tuple(
    ForestParams(n_estimators=n, criterion=c, max_depth=d)
    for c in ("gini", "entropy")
    for d in (8, 16, None)
    for n in (100, 300, 500)
)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(y_true: Sequence[TopicLabel], y_pred: Sequence[TopicLabel]) -> EvalReport:
    """Accuracy, one-vs-rest precision/recall/F1 per class, and macro
    averages over the classes observed in y_true or y_pred. F1 is 0 when
    precision + recall is 0."""
    ti = _as_class_indices(y_true)
    pi = _as_class_indices(y_pred)
    if ti.size != pi.size or ti.size == 0:
        raise ValidationError("y_true and y_pred must have equal nonzero length")

    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (ti, pi), 1)

    accuracy = float(np.trace(confusion) / ti.size)
    per_class: dict[TopicLabel, dict[str, float]] = {}
    observed = sorted(set(ti.tolist()) | set(pi.tolist()))
    macro_p, macro_r, macro_f = [], [], []
    for c in range(N_CLASSES):
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        precision = float(tp / (tp + fp)) if tp + fp > 0 else 0.0
        recall = float(tp / (tp + fn)) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[LABELS[c]] = {"precision": precision, "recall": recall, "f1": f1}
        if c in observed:
            macro_p.append(precision)
            macro_r.append(recall)
            macro_f.append(f1)
    return EvalReport(
        accuracy=accuracy,
        precision=float(np.mean(macro_p)),
        recall=float(np.mean(macro_r)),
        f1=float(np.mean(macro_f)),
        per_class=per_class,
        confusion=confusion,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_forest(model: ForestModel, path: str | Path) -> None:
    arrays = {}
    for i, tree in enumerate(model.trees):
        arrays[f"t{i}_feature"] = tree.feature
        arrays[f"t{i}_threshold"] = tree.threshold
        arrays[f"t{i}_left"] = tree.left
        arrays[f"t{i}_right"] = tree.right
        arrays[f"t{i}_leaf_counts"] = tree.leaf_counts
    meta = {
        "n_trees": len(model.trees),
        "n_features": model.n_features,
        "fingerprint": model.fingerprint,
        "params": {
            "n_estimators": model.params.n_estimators,
            "criterion": model.params.criterion,
            "max_depth": model.params.max_depth,
            "min_samples_leaf": model.params.min_samples_leaf,
            "features_per_split": model.params.features_per_split,
            "bootstrap": model.params.bootstrap,
            "seed": model.params.seed,
        },
    }
    np.savez(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_forest(path: str | Path) -> ForestModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        trees = [
            Tree(
                feature=data[f"t{i}_feature"],
                threshold=data[f"t{i}_threshold"],
                left=data[f"t{i}_left"],
                right=data[f"t{i}_right"],
                leaf_counts=data[f"t{i}_leaf_counts"],
            )
            for i in range(meta["n_trees"])
        ]
    return ForestModel(
        trees=trees,
        classes=LABELS,
        params=ForestParams(**meta["params"]),
        fingerprint=meta["fingerprint"],
        n_features=meta["n_features"],
    )
