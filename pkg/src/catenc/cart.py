"""Single-feature CART over categorical levels.

Levels are ordered by target statistics (Breiman's trick: the best split on
the ordered axis equals the best subset split for regression and binary
targets), the tree is grown greedily and pruned by cost complexity with the
penalty chosen through internal 10-fold CV and the 1-SE rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_ROWS_FOR_SPLITTING = 20
MIN_NODE_SIZE = 7
MAX_DEPTH = 10
PRUNE_CV_FOLDS = 10


@dataclass
class _Node:
    start: int                 # [start, stop) range of ordered level positions
    stop: int
    n: float
    impurity: float            # SSE (regression) or Gini count (classification)
    prediction: float | int
    depth: int
    left: "_Node | None" = None
    right: "_Node | None" = None
    split_pos: int | None = None
    leaf_id: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class LevelTree:
    """Fitted tree: a permutation of level codes plus threshold splits."""

    ordered_levels: list[int]       # level codes in split order
    root: _Node
    leaf_of_level: dict[int, int]   # level code -> terminal id (1..K)
    leaf_counts: dict[int, float]   # terminal id -> training observations
    alpha: float

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_counts)


def order_levels(codes: np.ndarray, y: np.ndarray, task_kind: str,
                 n_classes: int = 0, first_seen: list[int] | None = None
                 ) -> list[int]:
    """Target-based ordering of level codes.

    Regression sorts by level mean, binary by positive-class proportion,
    multiclass by level scores on the first principal component of the
    count-weighted covariance of the level-by-class proportion matrix.
    Ties keep first-appearance order.
    """
    uniq, inv = np.unique(codes, return_inverse=True)
    counts = np.bincount(inv).astype(float)
    if first_seen is None:
        first_seen = list(uniq)
    appearance = {c: r for r, c in enumerate(first_seen)}

    if task_kind == "regression":
        score = np.bincount(inv, weights=y) / counts
    elif task_kind == "binary":
        score = np.bincount(inv, weights=(y == 1).astype(float)) / counts
    else:
        P = np.zeros((len(uniq), n_classes))
        for c in range(n_classes):
            P[:, c] = np.bincount(inv, weights=(y == c).astype(float),
                                  minlength=len(uniq)) / counts
        wts = counts / counts.sum()
        pbar = wts @ P
        D = P - pbar
        cov = (D * wts[:, None]).T @ D
        eigval, eigvec = np.linalg.eigh(cov)
        v = eigvec[:, -1]
        score = P @ v
    order = sorted(range(len(uniq)),
                   key=lambda i: (score[i], appearance[int(uniq[i])]))
    return [int(uniq[i]) for i in order]


def _level_stats(codes, y, ordered, task_kind, n_classes):
    """Per ordered-level aggregates enabling O(1) impurity via prefix sums."""
    pos = {c: i for i, c in enumerate(ordered)}
    idx = np.array([pos[int(c)] for c in codes])
    L = len(ordered)
    n = np.bincount(idx, minlength=L).astype(float)
    if task_kind == "regression":
        s = np.bincount(idx, weights=y, minlength=L)
        s2 = np.bincount(idx, weights=y * y, minlength=L)
        return {"n": n, "sum": s, "sumsq": s2}
    cls = np.zeros((L, n_classes))
    for c in range(n_classes):
        cls[:, c] = np.bincount(idx, weights=(y == c).astype(float),
                                minlength=L)
    return {"n": n, "cls": cls}


def _range_impurity(stats, a, b, task_kind):
    n = stats["n"][a:b].sum()
    if n <= 0:
        return 0.0, 0.0
    if task_kind == "regression":
        s = stats["sum"][a:b].sum()
        s2 = stats["sumsq"][a:b].sum()
        return n, max(s2 - s * s / n, 0.0)
    counts = stats["cls"][a:b].sum(axis=0)
    return n, n - float(np.sum(counts ** 2)) / n


def _range_prediction(stats, a, b, task_kind):
    if task_kind == "regression":
        n = stats["n"][a:b].sum()
        return stats["sum"][a:b].sum() / n
    counts = stats["cls"][a:b].sum(axis=0)
    return int(np.argmax(counts))


def _grow(stats, a, b, depth, task_kind):
    n, imp = _range_impurity(stats, a, b, task_kind)
    node = _Node(a, b, n, imp, _range_prediction(stats, a, b, task_kind), depth)
    if depth >= MAX_DEPTH or imp <= 1e-12:
        return node
    best = None
    for cut in range(a + 1, b):
        nl, il = _range_impurity(stats, a, cut, task_kind)
        nr, ir = _range_impurity(stats, cut, b, task_kind)
        if nl < MIN_NODE_SIZE or nr < MIN_NODE_SIZE:
            continue
        total = il + ir
        if best is None or total < best[0] - 1e-12:
            best = (total, cut)
    if best is None or best[0] >= imp - 1e-12:
        return node
    node.split_pos = best[1]
    node.left = _grow(stats, a, best[1], depth + 1, task_kind)
    node.right = _grow(stats, best[1], b, depth + 1, task_kind)
    return node


def _subtree_risk_leaves(node):
    if node.is_leaf:
        return node.impurity, 1
    rl, ll = _subtree_risk_leaves(node.left)
    rr, lr = _subtree_risk_leaves(node.right)
    return rl + rr, ll + lr


def _collapse(node):
    node.left = node.right = None
    node.split_pos = None


def _clone(node):
    c = _Node(node.start, node.stop, node.n, node.impurity, node.prediction,
              node.depth, split_pos=node.split_pos)
    if not node.is_leaf:
        c.left = _clone(node.left)
        c.right = _clone(node.right)
    return c


def _pruning_path(root):
    """Weakest-link cost-complexity path: list of (alpha_k, pruned tree)."""
    tree = _clone(root)
    path = [(0.0, _clone(tree))]
    while not tree.is_leaf:
        # find internal node with smallest g = (R(node) - R(subtree)) / (k - 1)
        best = [math.inf, None]

        def visit(node):
            if node.is_leaf:
                return
            risk, leaves = _subtree_risk_leaves(node)
            g = (node.impurity - risk) / (leaves - 1)
            if g < best[0] - 1e-12:
                best[0], best[1] = g, node
            visit(node.left)
            visit(node.right)

        visit(tree)
        # collapse every node attaining the minimal g
        gmin = best[0]

        def collapse_min(node):
            if node.is_leaf:
                return
            risk, leaves = _subtree_risk_leaves(node)
            g = (node.impurity - risk) / (leaves - 1)
            if g <= gmin + 1e-12:
                _collapse(node)
                return
            collapse_min(node.left)
            collapse_min(node.right)

        collapse_min(tree)
        path.append((max(gmin, 0.0), _clone(tree)))
    return path


def _prune_at(root, alpha):
    """Prune a clone of root at complexity alpha (collapse while g <= alpha)."""
    tree = _clone(root)
    changed = True
    while changed:
        changed = False

        def visit(node):
            nonlocal changed
            if node.is_leaf:
                return
            risk, leaves = _subtree_risk_leaves(node)
            g = (node.impurity - risk) / (leaves - 1)
            if g <= alpha + 1e-12:
                _collapse(node)
                changed = True
                return
            visit(node.left)
            visit(node.right)

        visit(tree)
    return tree


def _predict_position(node, pos):
    while not node.is_leaf:
        node = node.left if pos < node.split_pos else node.right
    return node


def _holdout_risk(tree, ordered, codes, y, task_kind, fallback_pred):
    pos = {c: i for i, c in enumerate(ordered)}
    risk = 0.0
    for c, yi in zip(codes, y):
        p = pos.get(int(c))
        if p is None:
            pred = fallback_pred
        else:
            pred = _predict_position(tree, p).prediction
        if task_kind == "regression":
            risk += (yi - pred) ** 2
        else:
            risk += float(pred != yi)
    return risk


def grow_and_prune(codes: np.ndarray, y: np.ndarray, task_kind: str,
                   seed: int, n_classes: int = 0,
                   first_seen: list[int] | None = None) -> LevelTree:
    """Grow the ordered-axis tree and select the subtree by 10-fold CV with
    the 1-SE rule. Fewer than 20 rows yields the root-only tree."""
    codes = np.asarray(codes)
    y = np.asarray(y, dtype=float if task_kind == "regression" else int)
    ordered = order_levels(codes, y, task_kind, n_classes, first_seen)
    stats = _level_stats(codes, y, ordered, task_kind, n_classes)
    root = _grow(stats, 0, len(ordered), 0, task_kind)

    if len(codes) < MIN_ROWS_FOR_SPLITTING or root.is_leaf:
        chosen, alpha = _prune_at(root, math.inf), math.inf
    else:
        path = _pruning_path(root)
        alphas = [a for a, _ in path]
        # candidate penalties: geometric midpoints of consecutive path alphas
        betas = [0.0]
        for a, b in zip(alphas[:-1], alphas[1:]):
            betas.append(math.sqrt(max(a, 1e-12) * max(b, 1e-12)))
        betas.append(math.inf)

        rng = np.random.default_rng(seed)
        n = len(codes)
        folds = rng.permutation(n) % PRUNE_CV_FOLDS
        risks = np.zeros((PRUNE_CV_FOLDS, len(betas)))
        for f in range(PRUNE_CV_FOLDS):
            tr = folds != f
            te = folds == f
            if not te.any() or not tr.any():
                continue
            sub_ordered = order_levels(codes[tr], y[tr], task_kind, n_classes,
                                       first_seen)
            sub_stats = _level_stats(codes[tr], y[tr], sub_ordered, task_kind,
                                     n_classes)
            sub_root = _grow(sub_stats, 0, len(sub_ordered), 0, task_kind)
            fb = _range_prediction(sub_stats, 0, len(sub_ordered), task_kind)
            for k, beta in enumerate(betas):
                pruned = _prune_at(sub_root, beta)
                risks[f, k] = _holdout_risk(pruned, sub_ordered, codes[te],
                                            y[te], task_kind, fb)
        mean = risks.mean(axis=0)
        se = risks.std(axis=0, ddof=1) / math.sqrt(PRUNE_CV_FOLDS)
        kmin = int(np.argmin(mean))
        threshold = mean[kmin] + se[kmin]
        # largest penalty (smallest tree) still within one SE of the best
        kchosen = max(k for k in range(len(betas)) if mean[k] <= threshold)
        alpha = betas[kchosen]
        chosen = _prune_at(root, alpha)

    # assign dense terminal ids 1..K left to right
    leaf_counts: dict[int, float] = {}
    leaf_of_level: dict[int, int] = {}
    next_id = [0]

    def number(node):
        if node.is_leaf:
            next_id[0] += 1
            node.leaf_id = next_id[0]
            leaf_counts[node.leaf_id] = node.n
            for p in range(node.start, node.stop):
                leaf_of_level[ordered[p]] = node.leaf_id
            return
        number(node.left)
        number(node.right)

    number(chosen)
    return LevelTree(ordered, chosen, leaf_of_level, leaf_counts, alpha)


def assign_leaf(tree: LevelTree, level_code: int) -> int:
    """Terminal id for a level; unseen levels go to the terminal node with
    the largest training count (ties: smallest id)."""
    leaf = tree.leaf_of_level.get(int(level_code))
    if leaf is not None:
        return leaf
    return max(tree.leaf_counts, key=lambda k: (tree.leaf_counts[k], -k))
