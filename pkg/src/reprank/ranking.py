"""Reputation/quality ranking algorithms on bipartite rating networks.

Four methods share one synchronous fixed-point schedule:

  mean  quality = plain mean rating, reputations all 1, no iteration
  ir    reputation = (user MSE against current qualities + eps)^(-beta)
  cr    reputation = Pearson correlation between a user's ratings and the
        current qualities of the items they rated (negative values clamped)
  rr    cr extended with a penalty factor (item quality scaled by the top
        rater reputation), a log-degree damping factor, and a nonlinear
        redistribution of reputation mass with exponent theta

Iteration alternates a full quality update (from the previous reputations)
with a full reputation update (from the new qualities) and stops when the
mean squared change of the quality vector drops below delta. Items nobody
rated keep a NaN quality sentinel and are excluded from the residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import RatingGraph

ALGORITHMS = ("mean", "ir", "cr", "rr")


@dataclass(frozen=True)
class RankingConfig:
    algorithm: str = "rr"
    beta: float = 1.0           # ir error exponent
    epsilon: float = 1e-8       # ir regularizer
    theta: float = 5.0          # rr redistribution exponent
    delta: float = 1e-4         # convergence threshold on the quality residual
    max_iterations: int = 1000

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        if not self.beta >= 0:
            raise ValueError("beta must be >= 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.theta > 0:
            raise ValueError("theta must be > 0")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class RankingResult:
    reputations: np.ndarray   # per user
    qualities: np.ndarray     # per item, NaN where unrated
    iterations_used: int
    converged: bool
    final_residual: float


def residual(q_new: np.ndarray, q_old: np.ndarray) -> float:
    """Mean squared difference between consecutive quality vectors."""
    q_new = np.asarray(q_new, dtype=np.float64)
    q_old = np.asarray(q_old, dtype=np.float64)
    if q_new.shape != q_old.shape or q_new.ndim != 1:
        raise ValueError("quality vectors must be 1-D of equal length")
    if q_new.size == 0:
        return 0.0
    d = q_new - q_old
    return float(np.sum(d * d) / q_new.size)


def _masked_residual(q_new, q_old, rated, num_items):
    # unrated entries hold a constant NaN sentinel; they contribute zero
    d = q_new[rated] - q_old[rated]
    return float(np.sum(d * d) / num_items) if num_items else 0.0


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


def rank_mean(graph: RatingGraph) -> RankingResult:
    """Quality = arithmetic mean rating; every reputation is 1."""
    counts = graph.item_degrees.astype(np.float64)
    sums = np.bincount(graph.items, weights=graph.ratings,
                       minlength=graph.num_items)
    q = np.full(graph.num_items, np.nan)
    rated = counts > 0
    q[rated] = sums[rated] / counts[rated]
    return RankingResult(
        reputations=np.ones(graph.num_users),
        qualities=q,
        iterations_used=1,
        converged=True,
        final_residual=0.0,
    )


def _weighted_quality(graph, rep, plain_mean, rated):
    """Reputation-weighted mean rating per item.

    Items whose raters carry zero total reputation fall back to the plain
    mean for this step. Returns (q, weight_sums).
    """
    w = rep[graph.users]
    wtot = np.bincount(graph.items, weights=w, minlength=graph.num_items)
    wsum = np.bincount(graph.items, weights=w * graph.ratings,
                       minlength=graph.num_items)
    q = plain_mean.copy()
    pos = wtot > 0
    q[pos] = wsum[pos] / wtot[pos]
    q[~rated] = np.nan
    return q, wtot


def _plain_mean(graph):
    counts = graph.item_degrees.astype(np.float64)
    sums = np.bincount(graph.items, weights=graph.ratings,
                       minlength=graph.num_items)
    rated = counts > 0
    q = np.full(graph.num_items, np.nan)
    q[rated] = sums[rated] / counts[rated]
    return q, rated


def rank_ir(graph: RatingGraph, config: RankingConfig | None = None) -> RankingResult:
    """Iterative refinement: reputation is an inverse power of rating MSE."""
    cfg = config or RankingConfig(algorithm="ir")
    _require(not (graph.user_degrees == 0).any(),
             "ir requires every user to have rated at least one item")

    k_user = graph.user_degrees.astype(np.float64)
    plain_mean, rated = _plain_mean(graph)
    num_items = graph.num_items

    rep = np.ones(graph.num_users)
    q_prev = None
    q = plain_mean
    res = float("inf")
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iterations + 1):
        q, _ = _weighted_quality(graph, rep, plain_mean, rated)
        d = graph.ratings - q[graph.items]
        mse = np.bincount(graph.users, weights=d * d,
                          minlength=graph.num_users) / k_user
        rep = (mse + cfg.epsilon) ** (-cfg.beta)
        if q_prev is not None:
            res = _masked_residual(q, q_prev, rated, num_items)
            if res < cfg.delta:
                converged = True
                break
        q_prev = q

    return RankingResult(rep, q, iterations, converged, res)


def _degenerate_users(graph, q):
    """Users whose rating vector or quality sub-vector is constant.

    Exact max == min tests; mean subtraction alone cannot certify zero
    variance in floating point.
    """
    starts = graph.user_ptr[:-1]
    r = graph.ratings
    qs = q[graph.items]
    r_spread = np.maximum.reduceat(r, starts) > np.minimum.reduceat(r, starts)
    q_spread = np.maximum.reduceat(qs, starts) > np.minimum.reduceat(qs, starts)
    return ~(r_spread & q_spread)


def _pearson_by_user(graph, q):
    """Pearson correlation of (ratings, current qualities) per user.

    Degenerate users (either vector constant) get 0.
    """
    k = graph.user_degrees.astype(np.float64)
    u = graph.users
    qs = q[graph.items]
    r_mean = np.bincount(u, weights=graph.ratings, minlength=graph.num_users) / k
    q_mean = np.bincount(u, weights=qs, minlength=graph.num_users) / k
    dr = graph.ratings - r_mean[u]
    dq = qs - q_mean[u]
    num = np.bincount(u, weights=dr * dq, minlength=graph.num_users)
    ss_r = np.bincount(u, weights=dr * dr, minlength=graph.num_users)
    ss_q = np.bincount(u, weights=dq * dq, minlength=graph.num_users)
    bad = _degenerate_users(graph, q)
    den = np.sqrt(ss_r * ss_q)
    bad |= den == 0.0
    corr = np.zeros(graph.num_users)
    good = ~bad
    corr[good] = num[good] / den[good]
    np.clip(corr, -1.0, 1.0, out=corr)
    return corr


def _validate_cr_rr(graph: RatingGraph) -> None:
    _require(not (graph.user_degrees == 0).any(),
             "every user must have rated at least one item")
    _require(not (graph.item_degrees == 0).any(),
             "every item must have at least one rating")


def rank_cr(
    graph: RatingGraph,
    config: RankingConfig | None = None,
    *,
    trace: list | None = None,
) -> RankingResult:
    """Correlation-based ranking: reputation is the clamped Pearson match
    between a user's ratings and the current item qualities.

    Kept as its own plain loop rather than delegating to rank_rr so the
    claimed degeneracy (rr with both factors off and theta 1) stays a
    cross-check between two code paths.
    """
    cfg = config or RankingConfig(algorithm="cr")
    _validate_cr_rr(graph)

    plain_mean, rated = _plain_mean(graph)
    num_items = graph.num_items
    rep = graph.user_degrees / num_items if num_items else np.zeros(0)
    rep = rep.astype(np.float64)

    q_prev = None
    q = plain_mean
    res = float("inf")
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iterations + 1):
        q, _ = _weighted_quality(graph, rep, plain_mean, rated)
        rep = np.maximum(_pearson_by_user(graph, q), 0.0)
        if trace is not None:
            trace.append((q.copy(), rep.copy()))
        if q_prev is not None:
            res = _masked_residual(q, q_prev, rated, num_items)
            if res < cfg.delta:
                converged = True
                break
        q_prev = q

    return RankingResult(rep, q, iterations, converged, res)


def rank_rr(
    graph: RatingGraph,
    config: RankingConfig | None = None,
    *,
    use_penalty: bool = True,
    use_damping: bool = True,
    trace: list | None = None,
) -> RankingResult:
    """Reputation redistribution ranking.

    Quality is the reputation-weighted mean scaled by the top rater
    reputation (penalty factor); trust is log-degree-damped Pearson
    correlation, clamped at 0; reputation mass is then redistributed
    through the power theta. The keyword switches exist to exercise the
    degenerate path (both off, theta=1 reproduces rank_cr); `trace`
    collects per-iteration (qualities, reputations) copies.
    """
    cfg = config or RankingConfig(algorithm="rr")
    _validate_cr_rr(graph)

    plain_mean, rated = _plain_mean(graph)
    num_items = graph.num_items
    rep = graph.user_degrees / num_items if num_items else np.zeros(0)
    rep = rep.astype(np.float64)

    if use_damping:
        logk = np.log10(graph.user_degrees.astype(np.float64))
        top = logk.max() if logk.size else 0.0
        damping = logk / top if top > 0 else np.zeros_like(logk)
    else:
        damping = None

    item_starts = graph.item_ptr[:-1]
    users_by_item = graph.users[graph.by_item]

    q_prev = None
    q = plain_mean
    res = float("inf")
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iterations + 1):
        q, wtot = _weighted_quality(graph, rep, plain_mean, rated)
        if use_penalty:
            # scale only where the weighted mean applied; fallback items
            # already hold the plain mean
            penalty = np.maximum.reduceat(rep[users_by_item], item_starts)
            pos = wtot > 0
            q[pos] *= penalty[pos]

        trust = np.maximum(_pearson_by_user(graph, q), 0.0)
        if damping is not None:
            trust *= damping
        powered = trust ** cfg.theta
        mass = powered.sum()
        rep = powered * (trust.sum() / mass) if mass > 0 else np.zeros_like(trust)

        if trace is not None:
            trace.append((q.copy(), rep.copy()))
        if q_prev is not None:
            res = _masked_residual(q, q_prev, rated, num_items)
            if res < cfg.delta:
                converged = True
                break
        q_prev = q

    return RankingResult(rep, q, iterations, converged, res)


def rank(graph: RatingGraph, config: RankingConfig) -> RankingResult:
    """Dispatch on config.algorithm."""
    if config.algorithm == "mean":
        return rank_mean(graph)
    if config.algorithm == "ir":
        return rank_ir(graph, config)
    if config.algorithm == "cr":
        return rank_cr(graph, config)
    return rank_rr(graph, config)
