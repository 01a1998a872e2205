"""Independent oracles used to freeze expected values: dense-covariance
likelihoods, zoom grid searches, and brute-force enumerations. These must
not share code paths with the library."""

import itertools
import math

import numpy as np


# ---------------------------------------------------------------------------
# Gaussian random-intercept model, dense covariance


def _design(codes):
    codes = np.asarray(codes)
    uniq = np.unique(codes)
    return (codes[:, None] == uniq[None, :]).astype(float)


def dense_gaussian_deviance(codes, y, sigma2, tau2, Z=None):
    """-2 log N(y; beta0*1, sigma2*I + tau2*Z Z^T) with beta0 profiled by GLS.

    Returns (deviance, beta0).
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if Z is None:
        Z = _design(codes)
    V = sigma2 * np.eye(n) + tau2 * (Z @ Z.T)
    ones = np.ones(n)
    Vi_ones = np.linalg.solve(V, ones)
    beta0 = float(Vi_ones @ y) / float(Vi_ones @ ones)
    r = y - beta0
    sign, logdet = np.linalg.slogdet(V)
    assert sign > 0
    dev = n * math.log(2 * math.pi) + logdet + float(r @ np.linalg.solve(V, r))
    return dev, beta0


def dense_gaussian_modes(codes, y, beta0, sigma2, tau2):
    """BLUP conditional modes u = tau2 * Z^T V^{-1} (y - beta0)."""
    codes = np.asarray(codes)
    y = np.asarray(y, dtype=float)
    uniq = np.unique(codes)
    Z = (codes[:, None] == uniq[None, :]).astype(float)
    V = sigma2 * np.eye(len(y)) + tau2 * (Z @ Z.T)
    return uniq, tau2 * (Z.T @ np.linalg.solve(V, y - beta0))


def _batched_deviance(y, K, eye, sigma2s, tau2s):
    """Deviance on every (sigma2, tau2) pair at once via stacked solves."""
    n = len(y)
    V = sigma2s[:, None, None] * eye + tau2s[:, None, None] * K
    ones = np.ones(n)
    rhs = np.stack([np.broadcast_to(ones, (len(sigma2s), n)),
                    np.broadcast_to(y, (len(sigma2s), n))], axis=2)
    sol = np.linalg.solve(V, rhs)
    Vi_ones, Vi_y = sol[:, :, 0], sol[:, :, 1]
    beta0 = (Vi_ones @ y) / (Vi_ones @ ones)
    # r^T V^{-1} r expands in the two precomputed solves
    quad = (y @ Vi_y.T) - 2 * beta0 * (Vi_y @ ones) \
        + beta0 ** 2 * (Vi_ones @ ones)
    sign, logdet = np.linalg.slogdet(V)
    assert np.all(sign > 0)
    return n * math.log(2 * math.pi) + logdet + quad


def _zoom_2d(codes, y, lo1, hi1, lo2, hi2, zoom_iters, Z):
    y = np.asarray(y, dtype=float)
    K = Z @ Z.T
    eye = np.eye(len(y))
    for _ in range(zoom_iters):
        g1 = np.linspace(lo1, hi1, 13)
        g2 = np.linspace(lo2, hi2, 13)
        ls, lt = np.meshgrid(g1, g2, indexing="ij")
        dev = _batched_deviance(y, K, eye, 10 ** ls.ravel(), 10 ** lt.ravel())
        i, j = np.unravel_index(int(np.argmin(dev)), (13, 13))
        # keep two gridpoints on each side: narrow diagonal valleys can
        # otherwise slip out of the window between iterations; when the
        # argmin sits on the window edge, shift without shrinking so the
        # window can walk along a flat valley instead of collapsing short
        def window(g, k, lo, hi):
            if k in (0, 12):
                width = hi - lo
                return g[k] - width / 2, g[k] + width / 2
            return g[max(k - 2, 0)], g[min(k + 2, 12)]

        lo1, hi1 = window(g1, i, lo1, hi1)
        lo2, hi2 = window(g2, j, lo2, hi2)
    sigma2 = 10 ** ((lo1 + hi1) / 2)
    tau2 = 10 ** ((lo2 + hi2) / 2)
    dev, _ = dense_gaussian_deviance(codes, y, sigma2, tau2, Z=Z)
    return dev, sigma2, tau2


def gaussian_grid_oracle(codes, y, zoom_iters=24):
    """2-D zoom grid search over (log10 sigma2, log10 tau2), beta0 profiled
    via dense GLS. A second pass pinned near the tau2 = 0 boundary guards
    against interior local minima when the ML solution is degenerate.
    Returns (beta0, sigma2, tau2, level codes, modes)."""
    Z = _design(codes)
    interior = _zoom_2d(codes, y, -6.0, 3.0, -10.0, 3.0, zoom_iters, Z)
    boundary = _zoom_2d(codes, y, -6.0, 3.0, -10.0, -9.9, zoom_iters, Z)
    _, sigma2, tau2 = min(interior, boundary)
    _, beta0 = dense_gaussian_deviance(codes, y, sigma2, tau2)
    uniq, modes = dense_gaussian_modes(codes, y, beta0, sigma2, tau2)
    return beta0, sigma2, tau2, uniq, modes


# ---------------------------------------------------------------------------
# Binomial penalized modes, zoom grid over (beta0, u_1, u_2)


def binomial_penalized_loglik(codes, y, beta0, u_by_level, tau2):
    codes = np.asarray(codes)
    y = np.asarray(y, dtype=float)
    uniq = np.unique(codes)
    u = np.array([u_by_level[int(c)] for c in uniq])
    eta = beta0 + np.array([u_by_level[int(c)] for c in codes])
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    return ll - float(np.sum(u ** 2)) / (2 * tau2)


def binomial_mode_grid_oracle(codes, y, tau2, zoom_iters=18, half_width=6.0):
    """3-D zoom grid maximizing the penalized binomial log-likelihood for a
    two-level grouping factor. Returns (beta0, {level: u})."""
    codes = np.asarray(codes)
    y = np.asarray(y, dtype=float)
    uniq = [int(c) for c in np.unique(codes)]
    assert len(uniq) == 2
    c1, c2 = uniq
    # two groups share a linear predictor, so the penalized log-likelihood
    # reduces to group sufficient statistics and vectorizes over the grid
    n1 = float(np.sum(codes == c1))
    n2 = float(np.sum(codes == c2))
    s1 = float(np.sum(y[codes == c1]))
    s2 = float(np.sum(y[codes == c2]))
    lo = np.array([-half_width] * 3)
    hi = np.array([half_width] * 3)
    for _ in range(zoom_iters):
        b0 = np.linspace(lo[0], hi[0], 11)[:, None, None]
        u1 = np.linspace(lo[1], hi[1], 11)[None, :, None]
        u2 = np.linspace(lo[2], hi[2], 11)[None, None, :]
        eta1 = b0 + u1
        eta2 = b0 + u2
        ll = (s1 * eta1 - n1 * np.logaddexp(0.0, eta1)
              + s2 * eta2 - n2 * np.logaddexp(0.0, eta2)
              - (u1 ** 2 + u2 ** 2) / (2 * tau2))
        i, j, k = np.unravel_index(np.argmax(ll), ll.shape)
        centers = np.array([b0[i, 0, 0], u1[0, j, 0], u2[0, 0, k]])
        width = (hi - lo) / 10.0
        lo = centers - width
        hi = centers + width
    c = (lo + hi) / 2
    return c[0], {c1: c[1], c2: c[2]}


# ---------------------------------------------------------------------------
# Metric brute forces


def auc_pair_counting(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels != 1]
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def aunu_brute(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    aucs = [auc_pair_counting(scores[:, c], (labels == c).astype(int))
            for c in range(scores.shape[1])]
    return sum(aucs) / len(aucs)


def paired_ttest(diffs):
    """Textbook paired t statistic (no correction)."""
    diffs = np.asarray(diffs, dtype=float)
    J = len(diffs)
    s2 = diffs.var(ddof=1)
    return diffs.mean() / math.sqrt(s2 / J)


# ---------------------------------------------------------------------------
# Trees: brute force over level bipartitions


def best_subset_split_sse(codes, y):
    """Minimal total SSE over all 2^(L-1)-1 level bipartitions."""
    codes = np.asarray(codes)
    y = np.asarray(y, dtype=float)
    uniq = list(np.unique(codes))
    best = None
    for r in range(1, len(uniq)):
        for left in itertools.combinations(uniq, r):
            mask = np.isin(codes, left)
            yl, yr = y[mask], y[~mask]
            sse = float(np.sum((yl - yl.mean()) ** 2)
                        + np.sum((yr - yr.mean()) ** 2))
            if best is None or sse < best:
                best = sse
    return best


def best_subset_split_gini(codes, y):
    """Minimal weighted Gini (count scale) over all level bipartitions."""
    codes = np.asarray(codes)
    y = np.asarray(y)
    uniq = list(np.unique(codes))
    classes = np.unique(y)

    def gini(part):
        n = len(part)
        if n == 0:
            return 0.0
        counts = np.array([(part == c).sum() for c in classes], dtype=float)
        return n - float(np.sum(counts ** 2)) / n

    best = None
    for r in range(1, len(uniq)):
        for left in itertools.combinations(uniq, r):
            mask = np.isin(codes, left)
            val = gini(y[mask]) + gini(y[~mask])
            if best is None or val < best:
                best = val
    return best


# ---------------------------------------------------------------------------
# Weak orders: independent enumeration via set partitions


def all_weak_orders(items):
    """Every ordered partition of items, as tier-id tuples (1 = top)."""
    items = list(items)

    def partitions(xs):
        if not xs:
            yield []
            return
        first, rest = xs[0], xs[1:]
        for part in partitions(rest):
            for i in range(len(part)):
                yield part[:i] + [[first] + part[i]] + part[i + 1:]
            yield [[first]] + part

    seen = set()
    for part in partitions(items):
        for ordering in itertools.permutations(part):
            tiers = {}
            for t, block in enumerate(ordering, start=1):
                for x in block:
                    tiers[x] = t
            vec = tuple(tiers[x] for x in items)
            if vec not in seen:
                seen.add(vec)
                yield vec


def weak_order_distance(tiers, beats):
    tiers = np.asarray(tiers)
    dom = tiers[:, None] < tiers[None, :]
    return int(np.sum(dom != beats))
