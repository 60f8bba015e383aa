"""
Completion at desk scale: coherent towers of truncations of free modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .series import DimensionError, PrecisionError, Series

__all__ = [
    "Tower",
    "IncoherentTowerError",
    "project",
    "tower_of",
    "is_coherent",
    "complete",
    "kernel_order_check",
    "factor_by_monomials",
]

Vector = tuple[Series, ...]


class IncoherentTowerError(ValueError):
    pass


@dataclass(frozen=True)
class Tower:
    levels: tuple[int, ...]
    stages: tuple[Vector, ...]

    def __post_init__(self):
        levels = tuple(self.levels)
        stages = tuple(tuple(s) for s in self.stages)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "stages", stages)
        if not levels or len(levels) != len(stages):
            raise DimensionError("a tower needs one stage per level")
        if any(a >= b for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be strictly increasing")
        rank = len(stages[0])
        if any(len(s) != rank for s in stages):
            raise DimensionError("stages disagree on rank")
        for p, stage in zip(levels, stages):
            if any(x.prec != p for x in stage):
                raise PrecisionError(f"stage at level {p} has entries of another precision")

    @property
    def top(self) -> int:
        return self.levels[-1]

    @property
    def rank(self) -> int:
        return len(self.stages[0])


def project(s: Series, prec: int) -> Series:
    return s.project(prec)


def tower_of(v: Sequence[Series], levels: Sequence[int]) -> Tower:
    """The tower of projections of one vector."""
    return Tower(tuple(levels), tuple(tuple(x.project(p) for x in v) for p in levels))


def is_coherent(t: Tower) -> tuple[bool, int | None]:
    """Check each adjacent pair; on failure return the first bad (lower) level."""
    for (p, lo), hi in zip(zip(t.levels, t.stages), t.stages[1:]):
        if tuple(x.project(p) for x in hi) != lo:
            return False, p
    return True, None


def complete(t: Tower) -> Vector:
    ok, level = is_coherent(t)
    if not ok:
        raise IncoherentTowerError(f"tower is incoherent at level {level}")
    return t.stages[-1]


def _minimal_monomial(e: tuple[int, ...], i: int) -> tuple[int, ...]:
    # greedily take the degree-i divisor from the first variables
    out, left = [], i
    for k in e:
        take = min(k, left)
        out.append(take)
        left -= take
    return tuple(out)


def factor_by_monomials(s: Series, i: int) -> dict[tuple[int, ...], Series] | None:
    """Write ``s = sum m * q_m`` over degree-``i`` monomials ``m``.

    Quotients are known to ``s.prec - i``.  Returns ``None`` when some term
    has degree below ``i``.
    """
    if i > s.prec:
        raise PrecisionError(f"order {i} beyond precision {s.prec}")
    quotients: dict[tuple[int, ...], dict] = {}
    for e, c in s.items():
        if sum(e) < i:
            return None
        m = _minimal_monomial(e, i)
        q = tuple(a - b for a, b in zip(e, m))
        quotients.setdefault(m, {})[q] = c
    return {m: Series(s.nvars, s.prec - i, qs) for m, qs in quotients.items()}


def _rebuild(parts: dict, nvars: int, prec: int) -> Series:
    acc = Series.zero(nvars, prec)
    for m, q in parts.items():
        term = q
        for j, k in enumerate(m):
            term = term.shift(j, k, cap=prec)
        acc = acc + term
    return acc


def kernel_order_check(t: Tower, i: int) -> bool:
    """Is the top stage in ``b^i M`` (equivalently: killed by truncation below degree ``i``)?

    Both readings are computed independently; they must agree.
    """
    if i > t.top:
        raise PrecisionError(f"order {i} beyond top precision {t.top}")
    stage = complete(t)
    vanishes = all(x.has_order_at_least(i) for x in stage)
    factored = True
    for x in stage:
        parts = factor_by_monomials(x, i)
        if parts is None or _rebuild(parts, x.nvars, x.prec) != x:
            factored = False
            break
    if vanishes != factored:
        raise AssertionError(f"kernel readings disagree at order {i}")
    return factored
