"""Prior models: independent product samplers, a correlated common-value
demo model, and externally supplied data.

Each model declares the density bounds (kappa) and per-cell conditional
total-variation radii (tau) that the certified error terms consume. For the
built-in families these are derived analytically or by quadrature; for
external data they must be declared by the user and are flagged as such.

Sampling uses a counter-based generator (Philox) with one spawned stream per
agent plus one shared stream, so datasets are reproducible across platforms
and may be regenerated in parallel without changing results.
"""
import math
from dataclasses import dataclass

import numpy as np

from .model import Cell, Dataset, Partition

__all__ = [
    "Uniform",
    "Beta",
    "IndependentProduct",
    "CorrelatedCommonValue",
    "ExternalDataOnly",
    "TvProfile",
    "sample_dataset",
    "tv_radius",
    "tv_profile",
    "tv_integral_bound",
    "prior_from_dict",
    "FLAG_DECLARED_TAU",
]

FLAG_DECLARED_TAU = "tau declared, not derived"


class Uniform:
    """Uniform marginal on [a, b] inside [0, 1]."""

    kind = "uniform"

    def __init__(self, a: float = 0.0, b: float = 1.0):
        a, b = float(a), float(b)
        if not (0.0 <= a < b <= 1.0):
            raise ValueError("uniform support must satisfy 0 <= a < b <= 1")
        self.a = a
        self.b = b

    @property
    def density_max(self) -> float:
        return 1.0 / (self.b - self.a)

    def density(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.a) & (x <= self.b)
        return np.where(inside, 1.0 / (self.b - self.a), 0.0)

    def sample(self, rng, size):
        return self.a + (self.b - self.a) * rng.random(size)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b}


class Beta:
    """Beta(alpha, beta) marginal with alpha, beta >= 1 (bounded density)."""

    kind = "beta"

    def __init__(self, alpha: float, beta: float):
        alpha, beta = float(alpha), float(beta)
        if alpha < 1.0 or beta < 1.0:
            raise ValueError(
                "beta marginal needs alpha, beta >= 1 for a bounded density")
        self.alpha = alpha
        self.beta = beta
        self._log_norm = (math.lgamma(alpha) + math.lgamma(beta)
                          - math.lgamma(alpha + beta))

    @property
    def density_max(self) -> float:
        a, b = self.alpha, self.beta
        if a == 1.0 and b == 1.0:
            return 1.0
        if a == 1.0:
            return b  # decreasing density, peak at 0
        if b == 1.0:
            return a  # increasing density, peak at 1
        mode = (a - 1.0) / (a + b - 2.0)
        return float(self.density(mode))

    def density(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_pdf = ((self.alpha - 1.0) * np.log(x)
                       + (self.beta - 1.0) * np.log1p(-x) - self._log_norm)
            pdf = np.exp(log_pdf)
        inside = (x >= 0.0) & (x <= 1.0)
        return np.where(inside, np.nan_to_num(pdf, posinf=0.0), 0.0)

    def sample(self, rng, size):
        return rng.beta(self.alpha, self.beta, size)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta}


def _order_statistic_factor(m: int) -> int:
    # density of any order statistic of m iid draws is at most
    # m * C(m-1, k) * f_max; the central binomial coefficient covers every k
    return m * math.comb(m - 1, (m - 1) // 2)


class IndependentProduct:
    """Independent private values: per-agent, per-coordinate 1-D marginals.

    With sort_desc=True each agent's coordinates are sorted in decreasing
    order after sampling (marginal-value vectors for the multi-unit
    auctions); the declared density bound then carries an order-statistic
    factor.
    """

    kind = "independent_product"

    def __init__(self, marginals, sort_desc: bool = False):
        self.marginals = [list(per_agent) for per_agent in marginals]
        if len(self.marginals) < 2:
            raise ValueError("need marginals for at least two agents")
        dims = {len(per_agent) for per_agent in self.marginals}
        if len(dims) != 1:
            raise ValueError("all agents must share the observation dimension")
        self.dim = dims.pop()
        if self.dim < 1:
            raise ValueError("observation dimension must be positive")
        self.sort_desc = bool(sort_desc)

    @property
    def n_agents(self) -> int:
        return len(self.marginals)

    def kappa_agent(self, agent: int) -> float:
        worst = max(m.density_max for m in self.marginals[agent])
        if self.sort_desc and self.dim > 1:
            worst *= _order_statistic_factor(self.dim)
        return worst

    def kappa_opponents(self, agent: int) -> float:
        """Bound on any opponent's per-coordinate observation density."""
        return max(self.kappa_agent(j)
                   for j in range(self.n_agents) if j != agent)

    def kappa_pair(self, i: int, j: int) -> float:
        """Bound on the joint density of two agents' coordinates."""
        return self.kappa_agent(i) * self.kappa_agent(j)

    def sample(self, n_records: int, seed: int):
        streams = _agent_streams(seed, self.n_agents)
        obs = np.empty((n_records, self.n_agents, self.dim), dtype=np.float64)
        for i in range(self.n_agents):
            for d, marginal in enumerate(self.marginals[i]):
                obs[:, i, d] = marginal.sample(streams[i], n_records)
        if self.sort_desc:
            obs = np.sort(obs, axis=2)[:, :, ::-1].copy()
        return obs, obs.copy()

    def tv_radius(self, cell: Cell) -> float:
        # conditioning on an independent coordinate leaves opponents unchanged
        return 0.0

    def to_dict(self):
        return {
            "kind": self.kind,
            "marginals": [[m.to_dict() for m in per_agent]
                          for per_agent in self.marginals],
            "sort_desc": self.sort_desc,
        }


class CorrelatedCommonValue:
    """Correlated demo model: one common value, noisy per-agent observations.

    The common value theta is Uniform[0,1] and every agent values the good at
    theta. Raw signals are independent Uniform[0, 2*theta] per agent, stored
    rescaled by 1/2 so observations live in [0, theta] inside [0,1].

    Closed conditional structure (all for the stored scale):
      * observation marginal density  -log(s) with CDF s*(1 - log(s));
      * value posterior given s:      1/(theta * (-log s)) on (s, 1];
      * opponent observation density given s_i = s:
        (1/max(s, t) - 1) / (-log s), maximized at t <= s.
    """

    kind = "correlated_common_value"

    def __init__(self, n_agents: int = 2):
        if n_agents < 2:
            raise ValueError("need at least two agents")
        self.n_agents = int(n_agents)
        self.dim = 1

    def sample(self, n_records: int, seed: int):
        streams = _agent_streams(seed, self.n_agents + 1)
        common = streams[self.n_agents]
        theta = common.random(n_records)
        obs = np.empty((n_records, self.n_agents, 1), dtype=np.float64)
        for i in range(self.n_agents):
            obs[:, i, 0] = theta * streams[i].random(n_records)
        vals = np.repeat(theta[:, None, None], self.n_agents, axis=1)
        return obs, vals

    def marginal_density(self, s):
        s = np.asarray(s, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.where((s > 0.0) & (s < 1.0), -np.log(s), 0.0)

    def marginal_cdf(self, s):
        s = np.asarray(s, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = s * (1.0 - np.log(s))
        return np.where(s <= 0.0, 0.0, np.where(s >= 1.0, 1.0, val))

    def posterior_density(self, s: float):
        """Density of the common value given a stored observation s."""
        if not (0.0 < s < 1.0):
            raise ValueError("posterior defined for observations in (0, 1)")
        c = -math.log(s)

        def pdf(theta):
            theta = np.asarray(theta, dtype=np.float64)
            return np.where(theta > s, 1.0 / (theta * c), 0.0)

        return pdf

    def opponent_density_bound(self, s: float) -> float:
        """Sup over t of the conditional opponent observation density at s_i=s."""
        if s <= 0.0:
            return math.inf
        if s >= 1.0:
            return 0.0
        return (1.0 / s - 1.0) / (-math.log(s))

    def kappa_cell(self, cell: Cell) -> float:
        """Conditional opponent density bound over a 1-D observation cell.

        The pointwise bound decreases in the conditioning observation, so the
        cell supremum sits at the lower edge; a cell touching 0 has no finite
        bound.
        """
        lo = float(cell.lo[0])
        if lo <= 0.0:
            return math.inf
        return self.opponent_density_bound(lo)

    def tv_pair(self, s_lo: float, s_hi: float, panels: int = 4096) -> float:
        """TV distance between value posteriors at two observations.

        Piecewise midpoint quadrature aligned with the support edges, where
        the integrand is smooth.
        """
        if not (0.0 < s_lo < s_hi < 1.0):
            raise ValueError("tv_pair needs 0 < s_lo < s_hi < 1")
        c_lo = -math.log(s_lo)
        c_hi = -math.log(s_hi)
        # on (s_lo, s_hi] only the low posterior has mass
        mid1 = s_lo + (np.arange(panels) + 0.5) * (s_hi - s_lo) / panels
        part1 = float(np.sum(1.0 / (mid1 * c_lo))) * (s_hi - s_lo) / panels
        # on (s_hi, 1] the high posterior dominates pointwise
        mid2 = s_hi + (np.arange(panels) + 0.5) * (1.0 - s_hi) / panels
        gap = 1.0 / (mid2 * c_hi) - 1.0 / (mid2 * c_lo)
        part2 = float(np.sum(gap)) * (1.0 - s_hi) / panels
        return 0.5 * (part1 + part2)

    def tv_radius(self, cell: Cell, panels: int = 4096, sweep: int = 16) -> float:
        """Certified TV radius of a 1-D cell.

        The radius bounds the TV distance between the joint conditional laws
        of (value, opponent observations) at any two observations in the
        cell. Given the value, opponent observations are independent of the
        conditioning observation, so mixing through that common kernel cannot
        increase TV and the value-posterior distance is an upper bound.

        Cells touching 0 or 1 get radius 1 (the posterior family degenerates
        at both ends: unbounded density at 0, a point mass in the limit at
        1). Elsewhere the radius is the maximum over a sweep x sweep grid of
        observation pairs, evaluated by quadrature; the maximum is attained
        at the cell's extreme corner pair.
        """
        lo = float(cell.lo[0])
        hi = float(cell.hi[0])
        if lo <= 0.0 or hi >= 1.0:
            return 1.0
        if lo == hi:
            return 0.0
        points = np.linspace(lo, hi, sweep)
        worst = 0.0
        for a_idx in range(sweep):
            for b_idx in range(a_idx + 1, sweep):
                worst = max(worst, self.tv_pair(points[a_idx],
                                                points[b_idx], panels))
        return worst

    def to_dict(self):
        return {"kind": self.kind, "n_agents": self.n_agents}


class ExternalDataOnly:
    """Marker model for datasets produced outside the package.

    Carries no sampler; tau and kappa must be declared in the partition file
    and are reported as declared rather than derived.
    """

    kind = "external"

    def sample(self, n_records: int, seed: int):
        raise ValueError(
            "external prior carries no sampler; provide a dataset file")

    def tv_radius(self, cell: Cell) -> float:
        raise ValueError(
            "external prior requires user-declared tau values per cell")

    def to_dict(self):
        return {"kind": self.kind}


def _agent_streams(seed: int, count: int):
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def sample_dataset(prior, profile, n_records: int, seed: int) -> Dataset:
    """Draw n_records joint samples and map observations to bids."""
    if n_records < 1:
        raise ValueError("need at least one record")
    obs, vals = prior.sample(n_records, seed)
    bids = profile.apply_all(obs)
    return Dataset(obs, vals, bids, seed=int(seed))


def tv_radius(prior, cell: Cell) -> float:
    """Certified conditional-TV radius of a cell under the given prior."""
    if cell.lo == cell.hi:
        return 0.0
    return prior.tv_radius(cell)


@dataclass(frozen=True)
class TvProfile:
    """Per-cell TV radii with their provenance ('derived' or 'declared')."""
    values: tuple
    sources: tuple

    def __post_init__(self):
        for t in self.values:
            if not (0.0 <= t <= 1.0):
                raise ValueError("tau must lie in [0,1]")

    @property
    def any_declared(self) -> bool:
        return any(s == "declared" for s in self.sources)


def tv_profile(prior, partition: Partition) -> TvProfile:
    """Resolve per-cell tau: declared values win, the rest are derived."""
    values, sources = [], []
    for k, cell in enumerate(partition.cells):
        if cell.tau is not None:
            values.append(float(cell.tau))
            sources.append("declared")
        else:
            try:
                values.append(float(tv_radius(prior, cell)))
            except ValueError as exc:
                raise ValueError(f"cell {k} has no tau and none can be "
                                 f"derived: {exc}") from exc
            sources.append("derived")
    return TvProfile(values=tuple(values), sources=tuple(sources))


def tv_integral_bound(g_sup: float, tau: float) -> float:
    """Bound on |integral of g d(mu - nu)| via the TV distance: 2*sup|g|*tau."""
    if g_sup < 0.0:
        raise ValueError("g_sup must be nonnegative")
    if not (0.0 <= tau <= 1.0):
        raise ValueError("tau must lie in [0,1]")
    return 2.0 * g_sup * tau


_MARGINALS = {
    "uniform": lambda d: Uniform(d.get("a", 0.0), d.get("b", 1.0)),
    "beta": lambda d: Beta(d["alpha"], d["beta"]),
}


def marginal_from_dict(d: dict):
    kind = d.get("kind")
    if kind not in _MARGINALS:
        raise ValueError(f"unknown marginal kind: {kind!r}")
    return _MARGINALS[kind](d)


def prior_from_dict(d: dict, n_agents: int = None):
    kind = d.get("kind")
    if kind == "independent_product":
        marginals = [[marginal_from_dict(m) for m in per_agent]
                     for per_agent in d["marginals"]]
        prior = IndependentProduct(marginals, sort_desc=d.get("sort_desc", False))
    elif kind == "correlated_common_value":
        prior = CorrelatedCommonValue(d.get("n_agents", n_agents or 2))
    elif kind == "external":
        prior = ExternalDataOnly()
    else:
        raise ValueError(f"unknown prior kind: {kind!r}")
    if n_agents is not None and hasattr(prior, "n_agents"):
        if prior.n_agents != n_agents:
            raise ValueError(
                f"prior declares {prior.n_agents} agents, game has {n_agents}")
    return prior
