"""Shared report plumbing: tail certification for "goes to infinity"
claims, valuation serialization, and canonical JSON/CSV emission.

Finite evidence for an asymptotic statement is always parameterized: a
sequence is certified as increasing when it is nondecreasing on a tail
that starts no later than a configured fraction of the observed range
and its last value meets a configured threshold.  Reports record the
parameters alongside the verdict.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .field import INF

ValueLike = Fraction | int | float  # finite values or INF


@dataclass(frozen=True)
class TailPolicy:
    """Certification parameters for divergence-to-infinity claims."""

    threshold: Fraction = Fraction(4)
    tail_fraction: Fraction = Fraction(1, 2)

    def max_tail_start(self, count: int) -> int:
        return int(self.tail_fraction * (count - 1))


@dataclass(frozen=True)
class TailCertificate:
    monotone_tail: int
    last_value: ValueLike
    threshold: Fraction
    max_tail_start: int
    passes: bool

    def to_json_dict(self) -> dict:
        return {
            "monotone_tail": self.monotone_tail,
            "last_value": fmt_val(self.last_value),
            "threshold": fmt_val(self.threshold),
            "max_tail_start": self.max_tail_start,
            "passes": self.passes,
        }


def certify_tail(values, policy: TailPolicy) -> TailCertificate:
    """Certify a finite sequence as operationally divergent: nondecreasing
    from index ``monotone_tail`` and at least ``threshold`` at the end."""
    vals = list(values)
    if not vals:
        return TailCertificate(0, INF, policy.threshold, 0, False)
    tail = len(vals) - 1
    for i in range(len(vals) - 2, -1, -1):
        if vals[i] <= vals[i + 1]:
            tail = i
        else:
            break
    start_max = policy.max_tail_start(len(vals))
    passes = (len(vals) == 1 or tail <= start_max) and vals[-1] >= policy.threshold
    return TailCertificate(tail, vals[-1], policy.threshold, start_max, passes)


def fmt_val(v) -> str:
    """Serialize a valuation-like quantity: Fraction, int, or infinity."""
    if v is INF or v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return str(Fraction(v))


def canonical_json_bytes(obj) -> bytes:
    """Byte-stable JSON: sorted keys, fixed separators, trailing newline."""
    return (json.dumps(obj, sort_keys=True, indent=1, separators=(",", ": "))
            + "\n").encode()


def csv_bytes(header, rows) -> bytes:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(x) for x in row))
    return ("\n".join(lines) + "\n").encode()


def write_report(path, obj) -> None:
    with open(path, "wb") as fh:
        fh.write(canonical_json_bytes(obj))


def write_csv(path, header, rows) -> None:
    with open(path, "wb") as fh:
        fh.write(csv_bytes(header, rows))
