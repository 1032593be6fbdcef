"""Certified error terms and their composition into per-agent bound reports.

Every formula here is an explicit finite-sample expression in natural logs.
Counts above the sample size are clamped (they carry no information) and
flagged; asymptotic pseudo-dimension and dispersion orders require a declared
constant factor and are flagged as such. Totals are left folds over the
stored terms so a reader can recompute them from the report to the last ulp.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .model import GameConfig

__all__ = [
    "FLAG_VACUOUS_DISPERSION",
    "FLAG_ASYMPTOTIC",
    "FLAG_WIDTH_RANGE",
    "FLAG_DEGRADED_BOUND",
    "PdimSpec",
    "InterimSpecs",
    "ExAnteSpecs",
    "AgentBound",
    "eps_pdim_interim",
    "eps_disp",
    "clamp_dispersion_count",
    "dispersion_count_fpsb",
    "dispersion_count_combinatorial",
    "dispersion_count_multiunit",
    "dispersion_count",
    "dispersion_width_limit",
    "eps_hoeffding",
    "eps_pdim_ex_ante",
    "pdim",
    "assemble_interim",
    "assemble_ex_ante",
    "all_vacuous",
]

FLAG_VACUOUS_DISPERSION = "vacuous dispersion"
FLAG_ASYMPTOTIC = "asymptotic order, declared constant"
FLAG_WIDTH_RANGE = "width outside certified dispersion range"
FLAG_DEGRADED_BOUND = ("degraded: mapped-width dispersion term omitted "
                       "(forward Lipschitz constant unknown)")

VACUOUS_THRESHOLD = 2.0


def _check_delta(delta: float):
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")


def _check_positive(name: str, value: float):
    if value <= 0:
        raise ValueError(f"{name} must be positive")


def eps_pdim_interim(n_records: int, d: float, n_agents: int, delta: float) -> float:
    """Uniform estimation error over valuation-bid queries (ex interim route)."""
    if n_records < 1:
        raise ValueError("n_records must be at least 1")
    if d < 1:
        raise ValueError("pseudo-dimension must be at least 1")
    _check_delta(delta)
    first = 4.0 * math.sqrt((2.0 * d / n_records)
                            * math.log(math.e * n_records / d))
    second = 2.0 * math.sqrt((2.0 / n_records)
                             * math.log(2.0 * n_agents / delta))
    return first + second


def eps_disp(x: float, n_records: int, count: float, lipschitz: float) -> float:
    """Grid-rounding slack for piecewise-Lipschitz utilities: the Lipschitz
    drift off the jump set plus the mass of samples whose jump lands within
    width x. count is clamped to n_records (see clamp_dispersion_count)."""
    if n_records < 1:
        raise ValueError("n_records must be at least 1")
    if x < 0:
        raise ValueError("width must be nonnegative")
    if count < 0:
        raise ValueError("dispersion count must be nonnegative")
    v = min(float(count), float(n_records))
    return ((n_records - v) / n_records) * lipschitz * x + 2.0 * v / n_records


def clamp_dispersion_count(count: float, n_records: int):
    """Clamp a dispersion count at the sample size.

    Returns (clamped value, clamped?). Counts above n_records are vacuous:
    eps_disp would report every sample as sitting on a jump.
    """
    if count > n_records:
        return float(n_records), True
    return float(count), False


def dispersion_count_fpsb(w: float, n_in_cell: int, n_agents: int,
                          kappa: float, l_inv_max: float, delta: float,
                          n_cells_max: int = 1) -> float:
    """High-probability bound on opponent bids per width-w interval,
    single-item first-price rule. Independent-prior variant: n_in_cell = N,
    n_cells_max = 1."""
    if w < 0:
        raise ValueError("w must be nonnegative")
    _check_positive("n_in_cell", n_in_cell)
    _check_positive("kappa", kappa)
    _check_positive("l_inv_max", l_inv_max)
    _check_delta(delta)
    n = n_agents
    nb = float(n_in_cell)
    width_term = (n - 1) * w * nb * kappa * l_inv_max
    log_union = math.log(2.0 * n * (n - 1) * n_cells_max / delta)
    conc_term = (n - 1) * math.sqrt(2.0 * nb * log_union)
    tail_term = 4.0 * (n - 1) * math.sqrt(nb * math.log(math.e * nb / 2.0))
    return width_term + conc_term + tail_term


def dispersion_count_combinatorial(w: float, n_in_cell: int, n_agents: int,
                                   items: int, kappa: float, l_inv_max: float,
                                   delta: float, n_cells_max: int = 1,
                                   constant: float = 1.0) -> float:
    """Combinatorial-auction analogue. Only the growth order (n+1)^(2l) *
    sqrt(n_in_cell * l) is known; the declared constant scales the whole
    expression and the result is flagged asymptotic by dispersion_count."""
    if w < 0:
        raise ValueError("w must be nonnegative")
    _check_positive("n_in_cell", n_in_cell)
    _check_positive("kappa", kappa)
    _check_positive("l_inv_max", l_inv_max)
    _check_positive("constant", constant)
    _check_delta(delta)
    n = n_agents
    nb = float(n_in_cell)
    scale = constant * float((n + 1) ** (2 * items))
    width_term = w * nb * kappa * l_inv_max ** (2 ** (items + 1))
    log_union = math.log(2.0 * n * (n - 1) * n_cells_max / delta)
    conc_term = math.sqrt(2.0 * nb * log_union)
    tail_term = 4.0 * math.sqrt(nb * items * math.log(math.e * nb / 2.0))
    return scale * (width_term + conc_term + tail_term)


def dispersion_count_multiunit(w: float, n_in_cell: int, n_agents: int,
                               units: int, kappa: float, l_inv_max: float,
                               delta: float, n_cells_max: int = 1,
                               constant: float = 1.0) -> float:
    """Multi-unit analogue (shared by the discriminatory and uniform-price
    rules); growth order n * m^2 * sqrt(n_in_cell), declared constant."""
    if w < 0:
        raise ValueError("w must be nonnegative")
    _check_positive("n_in_cell", n_in_cell)
    _check_positive("kappa", kappa)
    _check_positive("l_inv_max", l_inv_max)
    _check_positive("constant", constant)
    _check_delta(delta)
    n = n_agents
    nb = float(n_in_cell)
    scale = constant * n * units ** 2
    width_term = w * nb * kappa * l_inv_max
    log_union = math.log(2.0 * n * (n - 1) * n_cells_max / delta)
    conc_term = math.sqrt(2.0 * nb * log_union)
    tail_term = 4.0 * math.sqrt(nb * math.log(math.e * nb / 2.0))
    return scale * (width_term + conc_term + tail_term)


def dispersion_width_limit(config: GameConfig, n_in_cell: int, kappa: float,
                           l_inv_max: float) -> float:
    """Width scale up to which the dispersion count rows are stated to hold:
    1 / (kappa * l_inv^e * sqrt(n_in_cell)), with e = 2^(l+1) for the
    combinatorial rule and 1 otherwise."""
    if config.mechanism.kind == "first_price_combinatorial":
        expo = 2 ** (config.mechanism.items + 1)
    else:
        expo = 1
    return 1.0 / (kappa * l_inv_max ** expo * math.sqrt(n_in_cell))


def dispersion_count(config: GameConfig, w: float, n_in_cell: int,
                     kappa: float, l_inv_max: float, delta: float,
                     n_cells_max: int = 1, constant: float = 1.0):
    """Dispatch on the mechanism; returns (count, flags)."""
    kind = config.mechanism.kind
    flags = []
    # the exact single-item formula holds for any positive width; the
    # asymptotic rows are only stated at the width scale below
    if (kind != "first_price_single_item"
            and w > dispersion_width_limit(config, n_in_cell, kappa, l_inv_max)):
        flags.append(FLAG_WIDTH_RANGE)
    if kind == "first_price_single_item":
        v = dispersion_count_fpsb(w, n_in_cell, config.n_agents, kappa,
                                  l_inv_max, delta, n_cells_max)
    elif kind == "first_price_combinatorial":
        v = dispersion_count_combinatorial(
            w, n_in_cell, config.n_agents, config.mechanism.items, kappa,
            l_inv_max, delta, n_cells_max, constant)
        flags.append(FLAG_ASYMPTOTIC)
    elif kind in ("discriminatory", "uniform_price"):
        v = dispersion_count_multiunit(
            w, n_in_cell, config.n_agents, config.mechanism.units, kappa,
            l_inv_max, delta, n_cells_max, constant)
        flags.append(FLAG_ASYMPTOTIC)
    else:
        raise ValueError(f"unknown mechanism kind: {kind}")
    return v, tuple(flags)


def eps_hoeffding(n_records: int, n_agents: int, delta: float) -> float:
    """Monte-Carlo error of a bounded mean, union over agents."""
    if n_records < 1:
        raise ValueError("n_records must be at least 1")
    _check_delta(delta)
    return math.sqrt((2.0 / n_records) * math.log(2.0 * n_agents / delta))


def eps_pdim_ex_ante(n_in_cell: int, d: float, n_agents: int, delta: float,
                     n_cells_max: int = 1) -> float:
    """Uniform estimation error within one partition cell (ex ante route)."""
    if n_in_cell < 1:
        raise ValueError("n_in_cell must be at least 1")
    if d < 1:
        raise ValueError("pseudo-dimension must be at least 1")
    _check_delta(delta)
    first = 2.0 * math.sqrt((2.0 * d / n_in_cell)
                            * math.log(math.e * n_in_cell / d))
    second = math.sqrt((2.0 / n_in_cell)
                       * math.log(n_agents * n_cells_max / delta))
    return first + second


@dataclass(frozen=True)
class PdimSpec:
    """Pseudo-dimension of the one-agent utility class for a mechanism."""
    value: float
    kind: str       # "exact" or "asymptotic (constant declared)"
    constant: float = 1.0


def pdim(config: GameConfig, constant: float = 1.0) -> PdimSpec:
    """Pseudo-dimension per mechanism: exact for the single-item first-price
    rule, growth order with a declared constant otherwise (floored at 1)."""
    _check_positive("constant", constant)
    kind = config.mechanism.kind
    n = config.n_agents
    if kind == "first_price_single_item":
        return PdimSpec(2.0, "exact", 1.0)
    if kind == "first_price_combinatorial":
        items = config.mechanism.items
        raw = constant * items * (2 ** items) * math.log(n)
        return PdimSpec(max(1.0, raw), "asymptotic (constant declared)", constant)
    if kind in ("discriminatory", "uniform_price"):
        m = config.mechanism.units
        raw = constant * m * math.log(n * m)
        return PdimSpec(max(1.0, raw), "asymptotic (constant declared)", constant)
    raise ValueError(f"unknown mechanism kind: {kind}")


@dataclass(frozen=True)
class InterimSpecs:
    """Inputs needed to certify an ex interim estimate."""
    width: float
    delta: float            # per-event failure probability
    kappa: float            # opponent prior density bound
    l_inv_max: float        # max inverse-strategy Lipschitz constant
    l_fwd: float = None     # agent's own forward Lipschitz constant
    lipschitz: float = 1.0  # piecewise Lipschitz constant of the utility
    pdim_constant: float = 1.0
    disp_constant: float = 1.0
    extra_flags: tuple = ()


@dataclass(frozen=True)
class ExAnteSpecs:
    """Inputs needed to certify an ex ante estimate (per-cell tau/kappa)."""
    width: float
    delta: float
    taus: tuple             # per cell, None allowed only on empty cells
    kappas: tuple           # per cell
    l_inv_max: float
    lipschitz: float = 1.0
    pdim_constant: float = 1.0
    disp_constant: float = 1.0
    n_cells_max: int = 1    # max cell count across all agents' partitions
    tau_sources: tuple = ()
    extra_flags: tuple = ()


@dataclass
class AgentBound:
    """One agent's certified bound with its full term breakdown.

    payload is an insertion-ordered dict rendered verbatim into the report
    JSON; total is reproducible from the stored terms by a left fold.
    """
    agent: int
    mode: str
    total: float
    payload: dict
    flags: tuple = ()

    def to_dict(self) -> dict:
        out = dict(self.payload)
        out["flags"] = list(self.flags)
        return out


def _merge_flags(*groups):
    seen = []
    for group in groups:
        for flag in group:
            if flag not in seen:
                seen.append(flag)
    return tuple(seen)


def assemble_interim(estimate, specs: InterimSpecs, config: GameConfig) -> AgentBound:
    """Compose the ex interim certificate:

    total = empirical + eps_pdim + 3 * eps_disp(w) + eps_disp(l_fwd * w)

    at confidence 1 - 3 delta. Without a forward Lipschitz constant the
    mapped-width term cannot be evaluated; it is omitted and flagged.
    """
    _check_positive("width", specs.width)
    _check_delta(specs.delta)
    n = config.n_agents
    n_rec = estimate.n_records
    spec_d = pdim(config, specs.pdim_constant)
    flags = []
    if spec_d.kind != "exact":
        flags.append(FLAG_ASYMPTOTIC)

    e_pdim = eps_pdim_interim(n_rec, spec_d.value, n, specs.delta)

    disp_terms = []

    def disp_entry(width, multiplier):
        count_raw, d_flags = dispersion_count(
            config, width, n_rec, specs.kappa, specs.l_inv_max, specs.delta,
            n_cells_max=1, constant=specs.disp_constant)
        count, clamped = clamp_dispersion_count(count_raw, n_rec)
        if clamped:
            flags.append(FLAG_VACUOUS_DISPERSION)
        for f in d_flags:
            flags.append(f)
        value = eps_disp(width, n_rec, count, specs.lipschitz)
        disp_terms.append({
            "width": width,
            "count_raw": count_raw,
            "count": count,
            "value": value,
            "multiplier": multiplier,
        })
        return value

    d_w = disp_entry(specs.width, 3.0)
    if specs.l_fwd is not None:
        d_mapped = disp_entry(specs.l_fwd * specs.width, 1.0)
        total = estimate.value + e_pdim + 3.0 * d_w + d_mapped
    else:
        flags.append(FLAG_DEGRADED_BOUND)
        total = estimate.value + e_pdim + 3.0 * d_w
    confidence = 1.0 - 3.0 * specs.delta
    H = config.utility_scale
    payload = {
        "agent": estimate.agent,
        "mode": "ex_interim",
        "n_records": n_rec,
        "empirical": estimate.value,
        "argmax_valuation": list(estimate.argmax_pair[0]),
        "argmax_bid": list(estimate.argmax_pair[1]),
        "pdim_value": spec_d.value,
        "pdim_kind": spec_d.kind,
        "pdim_constant": spec_d.constant,
        "eps_pdim": e_pdim,
        "width": specs.width,
        "disp_terms": disp_terms,
        "delta": specs.delta,
        "confidence": confidence,
        "total": total,
        "total_denormalized": total * H,
        "utility_scale": H,
    }
    all_flags = _merge_flags(estimate.flags, flags, specs.extra_flags)
    return AgentBound(agent=estimate.agent, mode="ex_interim", total=total,
                      payload=payload, flags=all_flags)


def assemble_ex_ante(estimate, specs: ExAnteSpecs, config: GameConfig) -> AgentBound:
    """Compose the ex ante certificate:

    total = empirical + 2 * eps_hoeffding
          + sum_k weight_k * min(1, tau_k + eps_pdim_cell_k + eps_disp_cell_k)

    at confidence 1 - 4 delta. Empty cells contribute zero through their
    weight and skip the per-cell terms.
    """
    _check_positive("width", specs.width)
    _check_delta(specs.delta)
    n = config.n_agents
    n_rec = estimate.n_records
    n_cells = len(estimate.br_terms)
    if len(specs.taus) != n_cells or len(specs.kappas) != n_cells:
        raise ValueError("per-cell tau/kappa lists must match the partition size")
    spec_d = pdim(config, specs.pdim_constant)
    flags = []
    if spec_d.kind != "exact":
        flags.append(FLAG_ASYMPTOTIC)

    e_hoeff = eps_hoeffding(n_rec, n, specs.delta)
    sources = specs.tau_sources or tuple("" for _ in range(n_cells))

    cells = []
    cell_sum = 0.0
    for k in range(n_cells):
        term = estimate.br_terms[k]
        n_cell = term["n_records"]
        entry = {
            "cell": k,
            "n_records": n_cell,
            "weight": term["weight"],
            "tau": specs.taus[k],
            "tau_source": sources[k] or None,
            "best_bid": (list(term["best_bid"])
                         if term["best_bid"] is not None else None),
            "br_mean": term["br_mean"],
        }
        if n_cell == 0:
            entry.update({"kappa": None, "eps_pdim": None,
                          "disp_count_raw": None, "disp_count": None,
                          "eps_disp": None, "inner_sum": None,
                          "clamped": False, "contribution": 0.0})
            cells.append(entry)
            continue
        tau = specs.taus[k]
        if tau is None:
            raise ValueError(f"cell {k} has no tau")
        kappa = specs.kappas[k]
        e_pdim_cell = eps_pdim_ex_ante(n_cell, spec_d.value, n, specs.delta,
                                       specs.n_cells_max)
        count_raw, d_flags = dispersion_count(
            config, specs.width, n_cell, kappa, specs.l_inv_max, specs.delta,
            n_cells_max=specs.n_cells_max, constant=specs.disp_constant)
        count, clamped = clamp_dispersion_count(count_raw, n_cell)
        if clamped:
            flags.append(FLAG_VACUOUS_DISPERSION)
        for f in d_flags:
            flags.append(f)
        e_disp_cell = eps_disp(specs.width, n_cell, count, specs.lipschitz)
        inner = tau + e_pdim_cell + e_disp_cell
        contribution = term["weight"] * min(1.0, inner)
        entry.update({
            "kappa": kappa,
            "eps_pdim": e_pdim_cell,
            "disp_count_raw": count_raw,
            "disp_count": count,
            "eps_disp": e_disp_cell,
            "inner_sum": inner,
            "clamped": inner > 1.0,
            "contribution": contribution,
        })
        cells.append(entry)
        cell_sum += contribution

    total = estimate.value + 2.0 * e_hoeff + cell_sum
    confidence = 1.0 - 4.0 * specs.delta
    H = config.utility_scale
    payload = {
        "agent": estimate.agent,
        "mode": "ex_ante",
        "n_records": n_rec,
        "empirical": estimate.value,
        "current_utility": estimate.current_utility,
        "eps_hoeffding": e_hoeff,
        "hoeffding_multiplier": 2.0,
        "pdim_value": spec_d.value,
        "pdim_kind": spec_d.kind,
        "pdim_constant": spec_d.constant,
        "width": specs.width,
        "n_cells_max": specs.n_cells_max,
        "cells": cells,
        "cell_sum": cell_sum,
        "delta": specs.delta,
        "confidence": confidence,
        "total": total,
        "total_denormalized": total * H,
        "utility_scale": H,
    }
    all_flags = _merge_flags(estimate.flags, flags, specs.extra_flags)
    return AgentBound(agent=estimate.agent, mode="ex_ante", total=total,
                      payload=payload, flags=all_flags)


def all_vacuous(agent_bounds) -> bool:
    """True when every agent's normalized total exceeds the trivial bound 2:
    the run succeeded but certifies nothing."""
    bounds_list = list(agent_bounds)
    if not bounds_list:
        return False
    return all(b.total > VACUOUS_THRESHOLD for b in bounds_list)
