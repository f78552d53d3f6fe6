"""CART-style trees: array encoding, split search, growing.

The split-search contract (shared by the forest and the boosted trainer and
relied on by the oracle tests): candidate thresholds are the midpoints of
consecutive sorted unique feature values; samples go left when
``x[feature] < threshold`` and right otherwise; candidates are scanned in
ascending feature index, then ascending threshold, and only a strictly
larger criterion value displaces the incumbent, so ties resolve to the
lowest feature index and lowest threshold. A node splits only if the best
criterion value is strictly positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels


@dataclass
class DecisionTree:
    """Binary tree in parallel arrays; ``feature_index == -1`` marks leaves.

    ``leaf_value`` holds [p_bad, p_good] rows for classification trees and
    a scalar additive logit contribution for boosted regression trees.
    """

    feature_index: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_value: np.ndarray
    max_depth_reached: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.feature_index)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for every row of ``X``."""
        return _kernels.tree_apply(
            self.feature_index, self.threshold, self.left, self.right,
            np.ascontiguousarray(X, dtype=np.float64),
        )

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_value[self.apply(X)]


def gini_impurity(c0: int, c1: int) -> float:
    """1 - sum of squared class fractions; 0 for a pure node."""
    n = c0 + c1
    return 1.0 - ((c0 / n) * (c0 / n) + (c1 / n) * (c1 / n))


def best_split_gini(
    X: np.ndarray, y: np.ndarray, idx: np.ndarray, feature_ids: np.ndarray
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity decrease) under the tie contract.

    The criterion is the Gini impurity decrease
    ``imp(parent) - nL/n * imp(left) - nR/n * imp(right)``.
    Returns None when no candidate achieves a strictly positive decrease.
    """
    n = idx.size
    c1_total = int(y[idx].sum())
    c0_total = n - c1_total
    if c0_total == 0 or c1_total == 0:
        return None
    imp_parent = gini_impurity(c0_total, c1_total)

    best_gain = 0.0
    best: tuple[int, float, float] | None = None
    for f in feature_ids:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        boundaries = np.nonzero(vs[1:] != vs[:-1])[0]
        if boundaries.size == 0:
            continue
        ys = y[idx][order]
        c1L = np.cumsum(ys)[boundaries]
        nL = boundaries + 1
        nR = n - nL
        c0L = nL - c1L
        c1R = c1_total - c1L
        c0R = c0_total - c0L
        impL = 1.0 - ((c0L / nL) * (c0L / nL) + (c1L / nL) * (c1L / nL))
        impR = 1.0 - ((c0R / nR) * (c0R / nR) + (c1R / nR) * (c1R / nR))
        gains = imp_parent - (nL / n) * impL - (nR / n) * impR
        j = int(np.argmax(gains))
        if gains[j] > best_gain:
            best_gain = float(gains[j])
            thr = (vs[boundaries[j]] + vs[boundaries[j] + 1]) / 2.0
            best = (int(f), float(thr), best_gain)
    return best


def best_split_newton(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    idx: np.ndarray,
    feature_ids: np.ndarray,
    reg_lambda: float,
    gamma_split: float,
) -> tuple[int, float, float] | None:
    """Best split by second-order gain, same tie contract as the Gini search.

    Gain is ``0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma``.
    """
    n = idx.size
    G = float(g[idx].sum())
    H = float(h[idx].sum())
    parent_score = (G * G) / (H + reg_lambda)

    best_gain = 0.0
    best: tuple[int, float, float] | None = None
    for f in feature_ids:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        boundaries = np.nonzero(vs[1:] != vs[:-1])[0]
        if boundaries.size == 0:
            continue
        GL = np.cumsum(g[idx][order])[boundaries]
        HL = np.cumsum(h[idx][order])[boundaries]
        GR = G - GL
        HR = H - HL
        gains = 0.5 * (GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda)
                       - parent_score) - gamma_split
        j = int(np.argmax(gains))
        if gains[j] > best_gain:
            best_gain = float(gains[j])
            thr = (vs[boundaries[j]] + vs[boundaries[j] + 1]) / 2.0
            best = (int(f), float(thr), best_gain)
    return best


class _TreeBuilder:
    """Accumulates nodes in depth-first pre-order (left subtree first)."""

    def __init__(self, leaf_width: int):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf: list = []
        self.leaf_width = leaf_width
        self.max_depth = 0

    def add(self, depth: int) -> int:
        node_id = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf.append([0.0] * self.leaf_width if self.leaf_width > 1 else 0.0)
        self.max_depth = max(self.max_depth, depth)
        return node_id

    def finish(self) -> DecisionTree:
        leaf = np.array(self.leaf, dtype=np.float64)
        return DecisionTree(
            feature_index=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            leaf_value=leaf,
            max_depth_reached=self.max_depth,
        )


def grow_classification_tree(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    max_depth: int | None,
    min_samples_split: int,
    max_features: int,
    rng: np.random.Generator,
    importance: np.ndarray,
) -> DecisionTree:
    """Grow one Gini tree on ``idx`` rows; leaves hold class frequencies.

    ``rng`` is consumed in node visit order (pre-order, left child first):
    one feature-subset draw per node that is eligible for splitting. That
    order is part of the determinism contract.
    """
    n_features = X.shape[1]
    n_root = idx.size
    builder = _TreeBuilder(leaf_width=2)
    # stack entries: (idx, depth, parent_id, is_left); root has parent -1
    stack = [(idx, 0, -1, False)]
    while stack:
        node_idx, depth, parent, is_left = stack.pop()
        node_id = builder.add(depth)
        if parent >= 0:
            if is_left:
                builder.left[parent] = node_id
            else:
                builder.right[parent] = node_id

        n = node_idx.size
        c1 = int(y[node_idx].sum())
        c0 = n - c1
        split = None
        eligible = (
            n >= min_samples_split
            and c0 > 0 and c1 > 0
            and (max_depth is None or depth < max_depth)
        )
        if eligible:
            if max_features < n_features:
                feats = np.sort(rng.choice(n_features, size=max_features, replace=False))
            else:
                feats = np.arange(n_features)
            split = best_split_gini(X, y, node_idx, feats)
        if split is None:
            builder.leaf[node_id] = [c0 / n, c1 / n]
            continue
        f, thr, gain = split
        builder.feature[node_id] = f
        builder.threshold[node_id] = thr
        importance[f] += (n / n_root) * gain
        mask = X[node_idx, f] < thr
        # right pushed first so the left child is visited (and numbered) next
        stack.append((node_idx[~mask], depth + 1, node_id, False))
        stack.append((node_idx[mask], depth + 1, node_id, True))
    return builder.finish()


def grow_regression_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    max_depth: int,
    min_samples_split: int,
    reg_lambda: float,
    gamma_split: float,
    importance: np.ndarray,
) -> DecisionTree:
    """Grow one Newton tree on all rows; leaves hold -G/(H+lambda)."""
    n_features = X.shape[1]
    feats = np.arange(n_features)
    builder = _TreeBuilder(leaf_width=1)
    stack = [(np.arange(X.shape[0]), 0, -1, False)]
    while stack:
        node_idx, depth, parent, is_left = stack.pop()
        node_id = builder.add(depth)
        if parent >= 0:
            if is_left:
                builder.left[parent] = node_id
            else:
                builder.right[parent] = node_id

        split = None
        if node_idx.size >= min_samples_split and depth < max_depth:
            split = best_split_newton(X, g, h, node_idx, feats,
                                      reg_lambda, gamma_split)
        if split is None:
            G = float(g[node_idx].sum())
            H = float(h[node_idx].sum())
            builder.leaf[node_id] = -G / (H + reg_lambda)
            continue
        f, thr, gain = split
        builder.feature[node_id] = f
        builder.threshold[node_id] = thr
        importance[f] += gain
        mask = X[node_idx, f] < thr
        stack.append((node_idx[~mask], depth + 1, node_id, False))
        stack.append((node_idx[mask], depth + 1, node_id, True))
    return builder.finish()
