"""Bid-mapping strategies with certified forward/inverse Lipschitz constants.

A strategy maps observations in [0,1] to bids in [0,1], coordinatewise for
multi-dimensional observations. Certification means both the map and its
inverse have finite Lipschitz constants; strategies that fail this (for
example power maps with exponent above one, whose inverse slope blows up at
zero) are still usable for estimation but every dispersion-based guarantee is
flagged as invalid.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Strategy",
    "Identity",
    "LinearShade",
    "Power",
    "PiecewiseLinearMonotone",
    "StrategyProfile",
    "lipschitz_constants",
    "pushforward_density_bound",
    "strategy_from_dict",
    "profile_from_config",
    "FLAG_UNCERTIFIED",
]

FLAG_UNCERTIFIED = "uncertified: dispersion constants invalid"


class Strategy:
    """Base class: strictly monotone coordinatewise bid map on [0,1]."""

    family = "abstract"

    def apply(self, o):
        raise NotImplementedError

    def inverse(self, x):
        raise NotImplementedError

    def lipschitz_constants(self):
        """Return (L_fwd, L_inv); raises ValueError when not bi-Lipschitz."""
        raise NotImplementedError

    @property
    def certified(self) -> bool:
        try:
            self.lipschitz_constants()
            return True
        except ValueError:
            return False

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        d = {"family": self.family}
        p = self.params()
        if p:
            d["params"] = p
        return d

    def __repr__(self):
        return f"{type(self).__name__}({self.params()})"


class Identity(Strategy):
    family = "identity"

    def apply(self, o):
        return np.asarray(o, dtype=np.float64)

    def inverse(self, x):
        return np.asarray(x, dtype=np.float64)

    def lipschitz_constants(self):
        return (1.0, 1.0)


class LinearShade(Strategy):
    """b = c * o with shading factor c in (0, 1]."""

    family = "linear_shade"

    def __init__(self, c: float):
        c = float(c)
        if not (0.0 < c <= 1.0):
            raise ValueError("shading factor must lie in (0, 1]")
        self.c = c

    def apply(self, o):
        return self.c * np.asarray(o, dtype=np.float64)

    def inverse(self, x):
        return np.asarray(x, dtype=np.float64) / self.c

    def lipschitz_constants(self):
        return (self.c, 1.0 / self.c)

    def params(self):
        return {"c": self.c}


class Power(Strategy):
    """b = o ** p with p >= 1. For p > 1 the inverse slope is unbounded at
    zero, so the strategy cannot be certified."""

    family = "power"

    def __init__(self, p: float):
        p = float(p)
        if p < 1.0:
            raise ValueError("exponent must be at least 1")
        self.p = p

    def apply(self, o):
        return np.asarray(o, dtype=np.float64) ** self.p

    def inverse(self, x):
        return np.asarray(x, dtype=np.float64) ** (1.0 / self.p)

    def lipschitz_constants(self):
        if self.p == 1.0:
            return (1.0, 1.0)
        raise ValueError(
            "not bi-Lipschitz: inverse slope of the power map is unbounded at 0")

    def params(self):
        return {"p": self.p}


class PiecewiseLinearMonotone(Strategy):
    """Piecewise-linear monotone map through (xs, ys) breakpoints.

    xs must be strictly increasing from 0 to 1; ys non-decreasing in [0,1].
    Zero-slope segments are representable but not certifiable.
    """

    family = "piecewise_linear"

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ValueError("xs and ys must be 1-D of equal length >= 2")
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("xs must be strictly increasing")
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValueError("xs must start at 0 and end at 1")
        if np.any(np.diff(ys) < 0.0):
            raise ValueError("ys must be non-decreasing")
        if ys[0] < 0.0 or ys[-1] > 1.0:
            raise ValueError("ys must stay inside [0, 1]")
        self.xs = xs
        self.ys = ys

    def apply(self, o):
        return np.interp(np.asarray(o, dtype=np.float64), self.xs, self.ys)

    def inverse(self, x):
        if np.any(np.diff(self.ys) <= 0.0):
            raise ValueError("not invertible: zero slope segment")
        return np.interp(np.asarray(x, dtype=np.float64), self.ys, self.xs)

    def lipschitz_constants(self):
        slopes = np.diff(self.ys) / np.diff(self.xs)
        if np.any(slopes <= 0.0):
            raise ValueError("not bi-Lipschitz: zero slope segment")
        return (float(slopes.max()), float(1.0 / slopes.min()))

    def params(self):
        return {"xs": self.xs.tolist(), "ys": self.ys.tolist()}


def lipschitz_constants(s: Strategy):
    """Forward/inverse Lipschitz constants of a strategy (module-level alias)."""
    return s.lipschitz_constants()


def pushforward_density_bound(kappa: float, strategies, dim: int = 1) -> float:
    """Density bound for observations pushed through bi-Lipschitz bid maps.

    A kappa-bounded density composed with maps of inverse Lipschitz constants
    L_1, ..., L_k over a dim-dimensional coordinatewise action stays below
    kappa * prod(L_j ** dim). Pass one strategy for a single marginal, or a
    pair for a joint two-agent marginal.
    """
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    if isinstance(strategies, Strategy):
        strategies = [strategies]
    bound = float(kappa)
    for s in strategies:
        _, l_inv = s.lipschitz_constants()
        bound *= l_inv ** dim
    return bound


@dataclass(frozen=True)
class StrategyProfile:
    """One strategy per agent; aggregate constants are always recomputed."""
    strategies: tuple

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if len(self.strategies) < 2:
            raise ValueError("profile needs at least two agents")

    def __len__(self):
        return len(self.strategies)

    def __getitem__(self, i) -> Strategy:
        return self.strategies[i]

    @property
    def certified(self) -> bool:
        return all(s.certified for s in self.strategies)

    @property
    def l_inv_max(self) -> float:
        worst = 1.0
        for s in self.strategies:
            _, l_inv = s.lipschitz_constants()
            worst = max(worst, l_inv)
        return worst

    def l_fwd(self, agent: int) -> float:
        return self.strategies[agent].lipschitz_constants()[0]

    def apply_all(self, obs: np.ndarray) -> np.ndarray:
        """Map observations (N, n_agents, dim) to bids of the same shape."""
        obs = np.asarray(obs, dtype=np.float64)
        bids = np.empty_like(obs)
        for i, s in enumerate(self.strategies):
            bids[:, i, :] = s.apply(obs[:, i, :])
        return bids

    def to_config(self) -> list:
        return [dict(agent=i, **s.to_dict())
                for i, s in enumerate(self.strategies)]


_FAMILIES = {
    "identity": lambda p: Identity(),
    "linear_shade": lambda p: LinearShade(p["c"]),
    "power": lambda p: Power(p["p"]),
    "piecewise_linear": lambda p: PiecewiseLinearMonotone(p["xs"], p["ys"]),
}


def strategy_from_dict(d: dict) -> Strategy:
    family = d.get("family")
    if family not in _FAMILIES:
        raise ValueError(f"unknown strategy family: {family!r}")
    return _FAMILIES[family](d.get("params", {}))


def profile_from_config(entries, n_agents: int) -> StrategyProfile:
    """Build a profile from a list of {"agent": i, "family": ..., "params": ...}."""
    slots = [None] * n_agents
    for entry in entries:
        i = int(entry["agent"])
        if not (0 <= i < n_agents):
            raise ValueError(f"strategy entry for unknown agent {i}")
        if slots[i] is not None:
            raise ValueError(f"duplicate strategy entry for agent {i}")
        slots[i] = strategy_from_dict(entry)
    missing = [i for i, s in enumerate(slots) if s is None]
    if missing:
        raise ValueError(f"missing strategy for agents {missing}")
    return StrategyProfile(tuple(slots))
