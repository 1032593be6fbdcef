"""Pure-numpy compute kernels (fallback backend).

Every function here has a compiled twin in the optional extension module.
The contract between the two backends is bit-exactness: identical float64
and int64 outputs element by element. To make that achievable, kernels only
produce per-sample values or exact integer counts; averaging over records is
done by the caller through a single reduction path shared by both backends.
"""
import numpy as np

NAME = "python"


def fpsb_win_counts(sorted_opp_max, bids):
    """Number of samples whose opponent max bid lies strictly below each bid.

    sorted_opp_max must be ascending. Exact integer counts.
    """
    sorted_opp_max = np.ascontiguousarray(sorted_opp_max, dtype=np.float64)
    bids = np.ascontiguousarray(bids, dtype=np.float64)
    return np.searchsorted(sorted_opp_max, bids, side="left").astype(np.int64)


def fpsb_point_utils(vals, own, opp_max):
    """Per-sample first-price utility (v - b when strictly winning, else 0)."""
    vals = np.asarray(vals, dtype=np.float64)
    own = np.asarray(own, dtype=np.float64)
    opp_max = np.asarray(opp_max, dtype=np.float64)
    return np.where(own > opp_max, vals - own, 0.0)


def fpsb_dev_utils(theta, opp_max, bids):
    """Per-sample utilities of constant deviation bids: (K, N) matrix."""
    theta = np.asarray(theta, dtype=np.float64)
    opp_max = np.asarray(opp_max, dtype=np.float64)
    bids = np.asarray(bids, dtype=np.float64)
    win = bids[:, None] > opp_max[None, :]
    return np.where(win, theta[None, :] - bids[:, None], 0.0)


def _multiunit_wins(own_rows, opp, senior, m_units):
    # own_rows (R, m); opp (R, n1, m); senior (n1,) bool-ish
    own_rows = np.asarray(own_rows, dtype=np.float64)
    opp = np.asarray(opp, dtype=np.float64)
    sen = np.asarray(senior).astype(bool)
    r, m = own_rows.shape
    cmp_ge = opp[:, :, :, None] >= own_rows[:, None, None, :]
    cmp_gt = opp[:, :, :, None] > own_rows[:, None, None, :]
    ahead = np.where(sen[None, :, None, None], cmp_ge, cmp_gt)
    counts = ahead.sum(axis=(1, 2))
    ranks = counts + np.arange(m, dtype=np.int64)[None, :]
    return (ranks < m_units).sum(axis=1).astype(np.int64)


def multiunit_wins_rows(own, opp, senior, m_units):
    """Units won per record for record-specific own bid vectors."""
    return _multiunit_wins(own, opp, senior, int(m_units))


def multiunit_wins_fixed(own, opp, senior, m_units):
    """Units won per record for one fixed own bid vector against all records."""
    opp = np.asarray(opp, dtype=np.float64)
    own_rows = np.broadcast_to(np.asarray(own, dtype=np.float64),
                               (opp.shape[0], len(own)))
    return _multiunit_wins(own_rows, opp, senior, int(m_units))


def multiunit_pay_disc_rows(own, wins):
    """Pay-as-bid payment: sum of the first wins[r] own bids per record."""
    own = np.asarray(own, dtype=np.float64)
    wins = np.asarray(wins, dtype=np.int64)
    prefix = np.concatenate(
        [np.zeros((own.shape[0], 1)), np.cumsum(own, axis=1)], axis=1)
    return np.take_along_axis(prefix, wins[:, None], axis=1)[:, 0]


def multiunit_pay_disc_fixed(own, wins):
    own = np.asarray(own, dtype=np.float64)
    wins = np.asarray(wins, dtype=np.int64)
    prefix = np.concatenate([[0.0], np.cumsum(own)])
    return prefix[wins]


def _competitor_next(opp, wins, m_units):
    """(m - wins + 1)-th highest competing bid per record, 0 out of range."""
    opp = np.asarray(opp, dtype=np.float64)
    wins = np.asarray(wins, dtype=np.int64)
    flat = opp.reshape(opp.shape[0], -1)
    width = flat.shape[1]
    asc = np.sort(flat, axis=1)
    pos_desc = m_units - wins           # 0-indexed from the top
    in_range = pos_desc < width
    idx_asc = np.clip(width - 1 - pos_desc, 0, width - 1)
    picked = np.take_along_axis(asc, idx_asc[:, None], axis=1)[:, 0]
    return np.where(in_range, picked, 0.0)


def multiunit_pay_unif_rows(own, opp, wins, m_units):
    """Uniform-price payment wins * max(own next bid, competitors' next bid)."""
    own = np.asarray(own, dtype=np.float64)
    wins = np.asarray(wins, dtype=np.int64)
    m = own.shape[1]
    own_padded = np.concatenate([own, np.zeros((own.shape[0], 1))], axis=1)
    own_next = np.take_along_axis(
        own_padded, np.minimum(wins, m)[:, None], axis=1)[:, 0]
    comp_next = _competitor_next(opp, wins, int(m_units))
    price = np.maximum(own_next, comp_next)
    return wins.astype(np.float64) * price


def multiunit_pay_unif_fixed(own, opp, wins, m_units):
    opp = np.asarray(opp, dtype=np.float64)
    own_rows = np.broadcast_to(np.asarray(own, dtype=np.float64),
                               (opp.shape[0], len(own)))
    return multiunit_pay_unif_rows(own_rows, opp, wins, m_units)
