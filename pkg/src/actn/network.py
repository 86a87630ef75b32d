"""Tensor networks and exact contraction.

A network is a collection of :class:`~actn.tensor.Tensor` objects. Any leg
name appearing on two tensors is a bond; a name appearing once is an open
leg. The network value is ``sign * exp(log_scale) * raw`` where ``raw`` is
the contraction of the stored tensors, so magnitudes far outside double
range can be carried without overflow.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from actn.tensor import DimensionError, Tensor, contract


@dataclass(frozen=True)
class ContractionReport:
    """Result of contracting a closed network.

    ``value_sign`` is 0 when the network contracts to exactly zero, in which
    case ``value_log`` is ``-inf``.
    """

    value_log: float
    value_sign: int
    max_bond_reached: int = 1
    cumulative_discarded_weight: float = 0.0
    max_intermediate_order: int = 0

    @property
    def value(self) -> float:
        if self.value_sign == 0:
            return 0.0
        return self.value_sign * math.exp(self.value_log)


def relative_error(estimate: ContractionReport, reference: ContractionReport) -> float:
    """``|est - ref| / |ref|`` computed from log-magnitude form.

    Falls back to the absolute error when the reference is zero.
    """
    if reference.value_sign == 0:
        return abs(estimate.value)
    if estimate.value_sign == 0:
        return 1.0
    ratio = math.exp(estimate.value_log - reference.value_log)
    return abs(estimate.value_sign * ratio - reference.value_sign)


def report_from_value(value: float, **kwargs) -> ContractionReport:
    if value == 0:
        return ContractionReport(-math.inf, 0, **kwargs)
    return ContractionReport(math.log(abs(value)), int(np.sign(value)), **kwargs)


class TensorNetwork:
    """An immutable multigraph of tensors joined through shared leg names.

    ``tags`` optionally labels each tensor (e.g. ``"copy"``, ``"add"``) for
    inspection; it plays no role in contraction.
    """

    def __init__(
        self,
        tensors: Iterable[Tensor] = (),
        log_scale: float = 0.0,
        sign: int = 1,
        tags: Sequence[str] | None = None,
    ):
        tensors = tuple(tensors)
        tags = tuple(tags) if tags is not None else ("",) * len(tensors)
        if len(tags) != len(tensors):
            raise ValueError("one tag per tensor required")
        if sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {sign}")
        self.tensors = tensors
        self.tags = tags
        self.log_scale = float(log_scale)
        self.sign = int(sign)
        self._check()

    def _check(self):
        seen: dict[str, int] = {}
        counts: Counter[str] = Counter()
        for t in self.tensors:
            for name, d in zip(t.legs, t.data.shape):
                counts[name] += 1
                if counts[name] > 2:
                    raise ValueError(f"leg {name!r} appears on more than two tensors")
                if seen.setdefault(name, d) != d:
                    raise DimensionError(f"bond {name!r}: {seen[name]} != {d}")

    def __len__(self):
        return len(self.tensors)

    def __repr__(self):
        return f"TensorNetwork({len(self.tensors)} tensors, open={self.open_legs})"

    @property
    def open_legs(self) -> list[str]:
        counts = Counter(n for t in self.tensors for n in t.legs)
        out = []
        for t in self.tensors:
            out.extend(n for n in t.legs if counts[n] == 1)
        return out

    @property
    def bonds(self) -> dict[str, tuple[int, int]]:
        owners: dict[str, list[int]] = {}
        for i, t in enumerate(self.tensors):
            for n in t.legs:
                owners.setdefault(n, []).append(i)
        return {n: (o[0], o[1]) for n, o in owners.items() if len(o) == 2}

    def leg_dim(self, leg: str) -> int:
        for t in self.tensors:
            if leg in t.legs:
                return t.dim(leg)
        raise KeyError(leg)

    def leg_names(self) -> set[str]:
        return {n for t in self.tensors for n in t.legs}

    def add(self, tensor: Tensor, tag: str = "") -> TensorNetwork:
        return TensorNetwork(self.tensors + (tensor,), self.log_scale, self.sign, self.tags + (tag,))

    def combine(self, other: TensorNetwork) -> TensorNetwork:
        """Disjoint union (bonds form wherever leg names coincide)."""
        return TensorNetwork(
            self.tensors + other.tensors,
            self.log_scale + other.log_scale,
            self.sign * other.sign,
            self.tags + other.tags,
        )

    def replace(self, index: int, tensor: Tensor) -> TensorNetwork:
        tensors = list(self.tensors)
        tensors[index] = tensor
        return TensorNetwork(tensors, self.log_scale, self.sign, self.tags)

    def scaled(self, factor: float) -> TensorNetwork:
        if factor == 0:
            return TensorNetwork(self.tensors, -math.inf, 0, self.tags)
        sign = self.sign * (1 if factor > 0 else -1)
        return TensorNetwork(self.tensors, self.log_scale + math.log(abs(factor)), sign, self.tags)

    def select(self, leg: str, index: int) -> TensorNetwork:
        """Fix an open leg to a single index."""
        if leg not in self.open_legs:
            raise KeyError(f"{leg!r} is not an open leg")
        for i, t in enumerate(self.tensors):
            if leg in t.legs:
                return self.replace(i, t.select(leg, index))
        raise AssertionError("unreachable")


def _greedy_pair(live: dict[int, Tensor], owners: dict[str, set[int]], priority):
    best = None
    for leg, ids in owners.items():
        if len(ids) != 2:
            continue
        i, j = sorted(ids)
        a, b = live[i], live[j]
        shared = set(a.legs) & set(b.legs)
        size = 1
        for n, d in zip(a.legs, a.data.shape):
            if n not in shared:
                size *= d
        for n, d in zip(b.legs, b.data.shape):
            if n not in shared:
                size *= d
        key = (size, priority(leg), i, j)
        if best is None or key < best:
            best = key
    if best is not None:
        return best[2], best[3]
    # no bonds left: disconnected pieces, take the two smallest
    ids = sorted(live, key=lambda k: (live[k].size, k))
    return tuple(sorted(ids[:2]))


def greedy_contract(
    tensors: Sequence[Tensor], shuffle_seed: int | None = None
) -> tuple[Tensor, float, int, int]:
    """Contract tensors pairwise along a greedy path.

    Each step contracts the bonded pair whose result has the fewest
    elements, ties broken by the lexicographically smallest shared leg name
    (or by a seeded random ranking of leg names when ``shuffle_seed`` is
    given). Intermediates are rescaled to unit max-magnitude.

    Returns ``(tensor, log_scale, max_bond, max_order)``; the true value is
    ``tensor * exp(log_scale)``.
    """
    if not tensors:
        return Tensor((), 1.0), 0.0, 1, 0
    if shuffle_seed is None:
        priority = lambda leg: leg  # noqa: E731
    else:
        names = sorted({n for t in tensors for n in t.legs})
        ranks = np.random.Generator(np.random.Philox(shuffle_seed)).permutation(len(names))
        rank_of = dict(zip(names, ranks.tolist()))
        priority = rank_of.__getitem__

    log_scale = 0.0
    live: dict[int, Tensor] = {}
    owners: dict[str, set[int]] = {}
    max_bond = 1
    max_order = 0

    def push(k, t):
        nonlocal log_scale, max_bond, max_order
        peak = float(np.max(np.abs(t.data))) if t.size else 0.0
        if peak > 0 and peak != 1.0:
            t = t.scale(1.0 / peak)
            log_scale += math.log(peak)
        live[k] = t
        for n in t.legs:
            owners.setdefault(n, set()).add(k)
        if t.data.shape:
            max_bond = max(max_bond, max(t.data.shape))
        max_order = max(max_order, t.ndim)
        return peak

    for k, t in enumerate(tensors):
        if push(k, t) == 0.0:
            return _zero_like(tensors), -math.inf, max_bond, max_order
    next_id = len(tensors)
    while len(live) > 1:
        i, j = _greedy_pair(live, owners, priority)
        a, b = live.pop(i), live.pop(j)
        for n in a.legs:
            owners[n].discard(i)
        for n in b.legs:
            owners[n].discard(j)
        c = contract(a, b)
        for n in set(a.legs) & set(b.legs):
            del owners[n]
        if push(next_id, c) == 0.0:
            return _zero_like(tensors), -math.inf, max_bond, max_order
        next_id += 1
    (result,) = live.values()
    return result, log_scale, max_bond, max_order


def _zero_like(tensors):
    counts = Counter(n for t in tensors for n in t.legs)
    dims = {n: d for t in tensors for n, d in zip(t.legs, t.data.shape)}
    legs = [n for t in tensors for n in t.legs if counts[n] == 1]
    return Tensor(legs, np.zeros([dims[n] for n in legs]))


def contract_network(tn: TensorNetwork, shuffle_seed: int | None = None) -> Tensor:
    """Contract to a single tensor over the open legs, scale applied.

    Only for results that fit in double precision; use
    :func:`contract_exact` for closed networks.
    """
    t, log, _, _ = greedy_contract(tn.tensors, shuffle_seed)
    factor = tn.sign * math.exp(log + tn.log_scale) if tn.sign else 0.0
    return t.scale(factor)


def contract_exact(tn: TensorNetwork, shuffle_seed: int | None = None) -> ContractionReport:
    """Exactly contract a network with no open legs."""
    open_legs = tn.open_legs
    if open_legs:
        raise ValueError(f"network still has open legs {open_legs}; integrate or fix them first")
    t, log, max_bond, max_order = greedy_contract(tn.tensors, shuffle_seed)
    raw = float(t.data)
    if raw == 0.0 or tn.sign == 0 or math.isinf(log):
        return ContractionReport(-math.inf, 0, max_bond, 0.0, max_order)
    return ContractionReport(
        value_log=tn.log_scale + log + math.log(abs(raw)),
        value_sign=tn.sign * (1 if raw > 0 else -1),
        max_bond_reached=max_bond,
        max_intermediate_order=max_order,
    )


def _fresh(name: str, taken: set[str]) -> str:
    candidate = name + "'"
    while candidate in taken:
        candidate += "'"
    return candidate


def insert_projector_pair(
    tn: TensorNetwork, bond: Sequence[str], p_left: Tensor, p_right: Tensor
) -> TensorNetwork:
    """Cut the bond legs ``bond`` and splice ``p_left``/``p_right`` into the cut.

    Each leg in ``bond`` must join two tensors; the one listed first in the
    network is taken as the left side. ``p_left`` connects to the left side
    through legs named exactly as in ``bond``; ``p_right`` also names its
    outer legs after ``bond`` and is attached to the right side. Any other
    legs of the pair are joined to each other.
    """
    bonds = tn.bonds
    taken = tn.leg_names() | set(p_left.legs) | set(p_right.legs)
    renames: dict[int, dict[str, str]] = {}
    right_map: dict[str, str] = {}
    for leg in bond:
        if leg not in bonds:
            raise KeyError(f"{leg!r} is not a bond of the network")
        for p in (p_left, p_right):
            if leg not in p.legs:
                raise ValueError(f"projector is missing leg {leg!r}")
            if p.dim(leg) != tn.leg_dim(leg):
                raise DimensionError(f"projector leg {leg!r}: {p.dim(leg)} != {tn.leg_dim(leg)}")
        fresh = _fresh(leg, taken)
        taken.add(fresh)
        right_map[leg] = fresh
        renames.setdefault(bonds[leg][1], {})[leg] = fresh
    inner = [n for n in p_left.legs if n not in bond]
    if sorted(inner) != sorted(n for n in p_right.legs if n not in bond):
        raise ValueError("p_left and p_right must share their inner legs")
    clash = set(inner) & tn.leg_names()
    if clash:
        raise ValueError(f"projector inner legs {sorted(clash)} already exist in the network")
    tensors = [t.rename(renames[i]) if i in renames else t for i, t in enumerate(tn.tensors)]
    tensors += [p_left, p_right.rename(right_map)]
    tags = tn.tags + ("projector_left", "projector_right")
    return TensorNetwork(tensors, tn.log_scale, tn.sign, tags)
