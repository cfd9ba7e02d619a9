"""Integer partitions and Faa di Bruno weights.

Raw moments of a variable with log-characteristic function ``H`` follow
from

    E[X^n] = n! * sum over partitions of n of prod_r h_r^{q_r} / q_r!,

where ``q_r`` is the multiplicity of part ``r`` and ``h_r`` are the scaled
Taylor coefficients of ``H``. This module enumerates the partitions and
evaluates one summand.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import CapacityError, ContractError, DomainError

__all__ = ["PARTITION_CAP", "PartitionMultiset", "enumerate_partitions",
           "faa_di_bruno_weight"]

#: Largest partition order accepted by default (p(24) = 1575).
PARTITION_CAP = 24

_LOG_SPACE_THRESHOLD = 1e100


@dataclass(frozen=True)
class PartitionMultiset:
    """Partition of ``order`` stored as part multiplicities.

    Attributes
    ----------
    order : int
        The integer being partitioned.
    multiplicities : tuple of int
        ``multiplicities[r - 1]`` is the number of parts equal to ``r``;
        the tuple has length ``order`` and satisfies
        ``sum(r * q_r) == order``.
    """

    order: int
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        q = self.multiplicities
        if len(q) != self.order or any(m < 0 for m in q):
            raise ContractError("multiplicities must be non-negative with length == order")
        if sum((r + 1) * m for r, m in enumerate(q)) != self.order:
            raise ContractError("multiplicities do not sum to the order")


def _parts(n: int, largest: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _parts(n - first, first):
            yield (first,) + rest


def enumerate_partitions(n: int, cap: int = PARTITION_CAP) -> Iterator[PartitionMultiset]:
    """Yield every partition of ``n`` exactly once.

    Order is deterministic: partitions are generated as non-increasing
    part lists in reverse lexicographic order, starting at ``(n,)``.

    Parameters
    ----------
    n : int
        Order, ``1 <= n <= cap``.
    cap : int, optional
        Upper bound on ``n``.

    Raises
    ------
    DomainError
        If ``n < 1``.
    CapacityError
        If ``n > cap``.
    """
    if n < 1:
        raise DomainError(f"partition order must be >= 1, got {n}")
    if n > cap:
        raise CapacityError(f"partition order {n} exceeds cap {cap}")
    for parts in _parts(n, n):
        q = [0] * n
        for p in parts:
            q[p - 1] += 1
        yield PartitionMultiset(n, tuple(q))


def faa_di_bruno_weight(p: PartitionMultiset, h_values: Sequence):
    """Summand ``prod_r h_r^{q_r} / q_r!`` for one partition.

    Parameters
    ----------
    p : PartitionMultiset
    h_values : sequence
        ``h_values[r - 1]`` holds ``h_r``; at least ``p.order`` entries.
        Entries may be float, complex or arbitrary-precision numbers.

    Returns
    -------
    number
        Same numeric kind as the inputs. For plain float/complex inputs
        with any used ``|h_r| > 1e100`` the product is formed in log space
        and exponentiated once at the end.
    """
    if len(h_values) < p.order:
        raise ContractError(f"need {p.order} coefficients, got {len(h_values)}")
    used = [(h_values[r], q) for r, q in enumerate(p.multiplicities) if q]
    plain = all(isinstance(h, (int, float, complex)) for h, _ in used)
    if plain and any(abs(h) > _LOG_SPACE_THRESHOLD for h, _ in used):
        if any(h == 0 for h, _ in used):
            return 0.0
        logsum = sum(q * cmath.log(h) - math.lgamma(q + 1) for h, q in used)
        real = all(isinstance(h, (int, float)) for h, _ in used)
        try:
            val = cmath.exp(logsum)
        except OverflowError:
            sign = cmath.exp(1j * logsum.imag)
            return math.copysign(math.inf, sign.real) if real else complex(math.inf, math.inf)
        return val.real if real else val
    out = 1
    for h, q in used:
        out = out * h ** q / math.factorial(q)
    return out
