"""Ex post outcome and utility evaluation for the four sealed-bid auctions.

Conventions shared by every rule:
  * bids and valuations live in [0,1] per coordinate;
  * exact bid ties never win in the single-item auction (strict inequality);
  * multi-unit rank ties follow a stable sort by (bid desc, agent asc,
    slot asc), so any deterministic outcome is reproducible;
  * utilities are quasilinear, (allocation . valuation - payment) / scale,
    which keeps them inside [-1, 1] for the default scale.
"""
from dataclasses import dataclass

import numpy as np

from .model import GameConfig, MechanismSpec

__all__ = [
    "Outcome",
    "eval_fpsb",
    "winner_determination",
    "assignment_value",
    "multiunit_allocation",
    "eval_discriminatory",
    "eval_uniform_price",
    "eval",
    "MechanismSpec",
]


@dataclass(frozen=True)
class Outcome:
    """Allocation indicators, payments, and normalized utilities per agent."""
    allocation: np.ndarray  # (n_agents, bid_dim) 0/1 indicators
    payments: np.ndarray    # (n_agents,)
    utilities: np.ndarray   # (n_agents,) in [-1, 1]


def eval_fpsb(theta_i: float, bids, i: int) -> float:
    """Single-item first-price utility for agent i.

    The highest bid wins and pays itself; exact ties lose for everyone.
    """
    bids = np.asarray(bids, dtype=np.float64)
    own = bids[i]
    others = np.delete(bids, i)
    if own > others.max():
        return float(theta_i) - float(own)
    return 0.0


def assignment_value(bids: np.ndarray, choice) -> float:
    """Total accepted bid of an XOR assignment (-1 = no accepted bundle).

    Accumulated from the last agent backwards so the branch-and-bound solver
    and the exhaustive oracle produce bit-identical floats for every
    candidate assignment.
    """
    total = 0.0
    for agent in range(len(choice) - 1, -1, -1):
        opt = choice[agent]
        if opt >= 0:
            total = float(bids[agent, opt]) + total
    return total


def winner_determination(bids, items: int) -> np.ndarray:
    """Optimal item-disjoint XOR assignment of bundles to agents.

    Each agent submits one bid per bundle (indexed by item subsets); at most
    one bundle per agent is accepted and accepted bundles must not share
    items. Returns the bundle index per agent, -1 when no bid is accepted.
    Ties break toward the option order (-1, 0, 1, ...) scanning agents by
    index, matching exhaustive enumeration order.
    """
    bids = np.asarray(bids, dtype=np.float64)
    n_bundles = 1 << items
    if bids.ndim != 2 or bids.shape[1] != n_bundles:
        raise ValueError(
            f"bid vectors must have length {n_bundles} for {items} items, "
            f"got shape {bids.shape}")
    n = bids.shape[0]
    memo = {}

    def best(agent: int, used: int) -> float:
        if agent == n:
            return 0.0
        key = (agent, used)
        cached = memo.get(key)
        if cached is not None:
            return cached
        value = best(agent + 1, used)  # decline every bundle
        for bundle in range(n_bundles):
            if bundle & used:
                continue
            cand = float(bids[agent, bundle]) + best(agent + 1, used | bundle)
            if cand > value:
                value = cand
        memo[key] = value
        return value

    choice = np.full(n, -1, dtype=np.intp)
    used = 0
    for agent in range(n):
        target = best(agent, used)
        if best(agent + 1, used) == target:
            continue
        for bundle in range(n_bundles):
            if bundle & used:
                continue
            if float(bids[agent, bundle]) + best(agent + 1, used | bundle) == target:
                choice[agent] = bundle
                used |= bundle
                break
    return choice


def _check_monotone_rows(bids: np.ndarray):
    if np.any(np.diff(bids, axis=1) > 0.0):
        raise ValueError("non-monotone bid vector")


def multiunit_allocation(bids) -> np.ndarray:
    """Units won per agent when the m highest of all n*m bids win.

    Rank of an agent's mu-th bid = mu + senior opponents' bids >= it
    + junior opponents' bids > it, reproducing a stable sort by
    (bid desc, agent asc, slot asc). Requires non-increasing rows.
    """
    bids = np.asarray(bids, dtype=np.float64)
    n, m = bids.shape
    _check_monotone_rows(bids)
    wins = np.zeros(n, dtype=np.intp)
    for i in range(n):
        for mu in range(m):
            b = bids[i, mu]
            rank = mu
            for j in range(n):
                if j == i:
                    continue
                if j < i:
                    rank += int(np.count_nonzero(bids[j] >= b))
                else:
                    rank += int(np.count_nonzero(bids[j] > b))
            if rank < m:
                wins[i] += 1
            else:
                break  # ranks increase with mu, later slots cannot win
    return wins


def eval_discriminatory(theta_i, bids, i: int, scale: float = None) -> float:
    """Pay-as-bid multi-unit utility: winners pay the sum of winning bids."""
    bids = np.asarray(bids, dtype=np.float64)
    theta_i = np.asarray(theta_i, dtype=np.float64)
    m = bids.shape[1]
    if scale is None:
        scale = float(m)
    m_i = int(multiunit_allocation(bids)[i])
    pay = float(np.sum(bids[i, :m_i]))
    value = float(np.sum(theta_i[:m_i]))
    return (value - pay) / scale


def _uniform_clearing_price(bids: np.ndarray, i: int, m_i: int) -> float:
    m = bids.shape[1]
    own_next = float(bids[i, m_i]) if m_i < m else 0.0
    opp = np.sort(np.delete(bids, i, axis=0).ravel())[::-1]
    pos = m - m_i  # 0-indexed slot of the (m - m_i + 1)-th competing bid
    opp_next = float(opp[pos]) if pos < opp.size else 0.0
    return max(own_next, opp_next)


def eval_uniform_price(theta_i, bids, i: int, scale: float = None) -> float:
    """Uniform-price multi-unit utility.

    Allocation matches the discriminatory rule; every won unit is paid at
    p = max(own highest losing bid, competitors' (m - m_i + 1)-th bid), with
    out-of-range positions contributing 0.
    """
    bids = np.asarray(bids, dtype=np.float64)
    theta_i = np.asarray(theta_i, dtype=np.float64)
    m = bids.shape[1]
    if scale is None:
        scale = float(m)
    m_i = int(multiunit_allocation(bids)[i])
    price = _uniform_clearing_price(bids, i, m_i)
    value = float(np.sum(theta_i[:m_i]))
    return (value - float(m_i) * price) / scale


def eval(config: GameConfig, theta, bids) -> Outcome:
    """Dispatch full-profile evaluation for the configured mechanism."""
    theta = np.asarray(theta, dtype=np.float64)
    bids = np.asarray(bids, dtype=np.float64)
    n = config.n_agents
    mech = config.mechanism
    want = (n, mech.bid_dim)
    if bids.shape != want:
        raise ValueError(f"bid profile shaped {bids.shape}, expected {want}")
    if theta.shape != (n, config.val_dim):
        raise ValueError(
            f"valuation profile shaped {theta.shape}, expected {(n, config.val_dim)}")
    H = config.utility_scale
    alloc = np.zeros((n, mech.bid_dim), dtype=np.float64)
    pay = np.zeros(n, dtype=np.float64)

    if mech.kind == "first_price_single_item":
        flat = bids[:, 0]
        top = flat.max()
        winners = np.flatnonzero(flat == top)
        if winners.size == 1 and n > 1:
            w = winners[0]
            alloc[w, 0] = 1.0
            pay[w] = flat[w]
    elif mech.kind == "first_price_combinatorial":
        choice = winner_determination(bids, mech.items)
        for agent, bundle in enumerate(choice):
            if bundle >= 0:
                alloc[agent, bundle] = 1.0
                pay[agent] = bids[agent, bundle]
    else:
        wins = multiunit_allocation(bids)
        for agent in range(n):
            m_i = int(wins[agent])
            alloc[agent, :m_i] = 1.0
            if mech.kind == "discriminatory":
                pay[agent] = np.sum(bids[agent, :m_i])
            else:
                pay[agent] = float(m_i) * _uniform_clearing_price(bids, agent, m_i)

    utilities = (np.sum(alloc * theta, axis=1) - pay) / H
    return Outcome(allocation=alloc, payments=pay, utilities=utilities)
