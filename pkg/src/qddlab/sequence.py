"""Pulse-sequence descriptions, timing fractions, and schedule compilation.

A sequence is a stack of nesting levels, innermost first, each an
``(axis, order)`` pair. A single level is the classic unequal-interval
sequence: order-N uses pulse times proportional to sin^2(j*pi/(2N+2)), so
the normalized gap lengths are

    s_j = sin((2j-1)*theta) / sin(theta),   theta = pi/(2N+2),

with s_1 = s_{N+1} = 1 (the minimum interval) and sum_j s_j = csc^2(theta).
Nesting substitutes the whole inner sequence into every free-evolution slot
of the level above, scaling its base interval by the slot's fraction.

Compiled schedules are precision-free: every gap is stored symbolically as
a product of per-level fraction indices and is only evaluated to numbers by
the evolution engine (or by the JSON exporter at a fixed 40 digits). Because
the fractions are index-symmetric (s_j = s_{N+2-j}), indices are stored
canonically as min(j, N+2-j); equal gaps therefore compare equal as keys,
which the propagator cache relies on.

Pulses are ideal and instantaneous, so a pulse meeting another pulse with no
gap in between collapses to their product; global phases are dropped
throughout, making the label set {I, X, Y, Z} closed under merging.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

from .errors import (AdjacentAxisError, InvalidOrder, OrderError,
                     SequenceSyntaxError)
from .precision import PrecisionContext

MAX_DEPTH = 4

#: phase-free Pauli label product (Klein four-group)
_LABEL_MUL = {
    ("I", "I"): "I", ("I", "X"): "X", ("I", "Y"): "Y", ("I", "Z"): "Z",
    ("X", "I"): "X", ("X", "X"): "I", ("X", "Y"): "Z", ("X", "Z"): "Y",
    ("Y", "I"): "Y", ("Y", "X"): "Z", ("Y", "Y"): "I", ("Y", "Z"): "X",
    ("Z", "I"): "Z", ("Z", "X"): "Y", ("Z", "Y"): "X", ("Z", "Z"): "I",
}


def label_mul(a: str, b: str) -> str:
    """Product of two pulse labels with the global phase dropped."""
    return _LABEL_MUL[(a, b)]


def udd_fractions(n: int, ctx: PrecisionContext):
    """Normalized gap lengths (s_1 .. s_{N+1}) of an order-``n`` sequence."""
    if n < 1:
        raise InvalidOrder(f"sequence order must be >= 1, got {n}")
    ctx.activate()
    theta = ctx.pi() / (2 * n + 2)
    sin0 = ctx.sin(theta)
    return [ctx.sin((2 * j - 1) * theta) / sin0 for j in range(1, n + 2)]


def total_normalized_time(orders, ctx: PrecisionContext):
    """Product over levels of csc^2(pi/(2N+2)): the gap-sum identity."""
    ctx.activate()
    acc = ctx.real(1)
    for n in orders:
        s = ctx.sin(ctx.pi() / (2 * n + 2))
        acc = acc * (1 / (s * s))
    return acc


@dataclass(frozen=True)
class SequenceLevel:
    axis: str   # "X" or "Z"
    order: int


@dataclass(frozen=True)
class SequenceSpec:
    """Nested sequence description; ``levels`` runs innermost to outermost."""

    levels: tuple

    def __post_init__(self):
        if not 1 <= len(self.levels) <= MAX_DEPTH:
            raise OrderError(f"nesting depth must be 1..{MAX_DEPTH}")
        for lv in self.levels:
            if lv.axis not in ("X", "Z"):
                raise OrderError(f"unknown pulse axis {lv.axis!r}")
            if lv.order < 1:
                raise OrderError(f"sequence order must be >= 1, got {lv.order}")
        for a, b in zip(self.levels, self.levels[1:]):
            if a.axis == b.axis:
                raise AdjacentAxisError(
                    f"adjacent levels share axis {a.axis!r}")

    @property
    def depth(self) -> int:
        return len(self.levels)

    def to_text(self) -> str:
        """Canonical grammar text; parse(to_text()) round-trips."""
        if self.depth == 1:
            lv = self.levels[0]
            return f"UDD({lv.axis},{lv.order})"
        if (self.depth == 2 and self.levels[0].axis == "Z"
                and self.levels[1].axis == "X"):
            return f"QDD({self.levels[0].order},{self.levels[1].order})"
        outer_first = reversed(self.levels)
        return "NEST(" + ", ".join(f"{lv.axis}:{lv.order}" for lv in outer_first) + ")"

    def __str__(self):
        return self.to_text()


def qdd(n1: int, n2: int) -> SequenceSpec:
    """Inner Z sequence of order ``n1`` nested in an outer X sequence of ``n2``."""
    return SequenceSpec((SequenceLevel("Z", n1), SequenceLevel("X", n2)))


def udd(axis: str, n: int) -> SequenceSpec:
    return SequenceSpec((SequenceLevel(axis.upper(), n),))


_HEAD = re.compile(r"\s*([A-Za-z]+)\s*\(")
_INT = re.compile(r"\s*(\d+)\s*")
_AXIS = re.compile(r"\s*([A-Za-z])\s*")
_NEST_ITEM = re.compile(r"\s*([A-Za-z])\s*:\s*(\d+)\s*")


def parse(text: str) -> SequenceSpec:
    """Parse sequence text: ``UDD(axis,N)``, ``QDD(N1,N2)`` or
    ``NEST(axis:N, ...)`` with levels listed outermost first."""
    m = _HEAD.match(text)
    if not m:
        raise SequenceSyntaxError("expected UDD(, QDD( or NEST(", 0)
    head = m.group(1).upper()
    pos = m.end()
    rest = text[pos:]

    def expect_close(p):
        m2 = re.match(r"\s*\)\s*$", text[p:])
        if not m2:
            raise SequenceSyntaxError("expected ')'", p)

    if head == "UDD":
        ma = _AXIS.match(text, pos)
        if not ma or ma.group(1).upper() not in ("X", "Z"):
            raise SequenceSyntaxError("expected axis X or Z", pos)
        pos = ma.end()
        if not text[pos:pos + 1] == ",":
            raise SequenceSyntaxError("expected ','", pos)
        mi = _INT.match(text, pos + 1)
        if not mi:
            raise SequenceSyntaxError("expected an integer order", pos + 1)
        expect_close(mi.end())
        order = int(mi.group(1))
        if order < 1:
            raise OrderError(f"sequence order must be >= 1, got {order}")
        return udd(ma.group(1), order)

    if head == "QDD":
        mi = _INT.match(text, pos)
        if not mi:
            raise SequenceSyntaxError("expected an integer order", pos)
        if not text[mi.end():mi.end() + 1] == ",":
            raise SequenceSyntaxError("expected ','", mi.end())
        mj = _INT.match(text, mi.end() + 1)
        if not mj:
            raise SequenceSyntaxError("expected an integer order", mi.end() + 1)
        expect_close(mj.end())
        n1, n2 = int(mi.group(1)), int(mj.group(1))
        if n1 < 1 or n2 < 1:
            raise OrderError("sequence orders must be >= 1")
        return qdd(n1, n2)

    if head == "NEST":
        levels_outer_first = []
        while True:
            mi = _NEST_ITEM.match(text, pos)
            if not mi:
                raise SequenceSyntaxError("expected 'axis:N'", pos)
            axis = mi.group(1).upper()
            if axis not in ("X", "Z"):
                raise SequenceSyntaxError(f"unknown axis {mi.group(1)!r}", pos)
            levels_outer_first.append(SequenceLevel(axis, int(mi.group(2))))
            pos = mi.end()
            nxt = text[pos:pos + 1]
            if nxt == ",":
                pos += 1
                continue
            expect_close(pos)
            break
        return SequenceSpec(tuple(reversed(levels_outer_first)))

    raise SequenceSyntaxError(f"unknown sequence kind {m.group(1)!r}", m.start(1))


# --- compiled schedules -------------------------------------------------------

@dataclass(frozen=True)
class PulseEvent:
    """One free-evolution gap followed by one (possibly composite) pulse.

    ``delay`` is a tuple of (order, canonical_index) pairs, innermost level
    first; its numeric value is the product of the referenced fractions,
    in units of the minimum interval.
    """

    delay: tuple
    pulse: str


@dataclass(frozen=True)
class Checkpoint:
    """Snapshot marker inside an event: taken after ``after`` is applied.

    Merging can fuse an inner sequence's trailing pulse with the outer pulse
    that follows at zero gap, so a snapshot boundary may sit in the middle
    of a composite label; ``after`` is the leading factor belonging to the
    inner sequence ("I" when the inner part contributes no trailing pulse).
    """

    event: int
    after: str


@dataclass(frozen=True)
class PulseSchedule:
    spec: Optional[SequenceSpec]
    events: tuple
    checkpoints: dict     # checkpoint index j -> Checkpoint

    @property
    def n_events(self) -> int:
        return len(self.events)

    def pulse_count(self) -> int:
        """Number of non-identity (merged) pulse events."""
        return sum(1 for e in self.events if e.pulse != "I")

    def delay_values(self, ctx: PrecisionContext):
        """Evaluate every gap, in units of the minimum interval."""
        tables = {}
        for lv in (self.spec.levels if self.spec else ()):
            tables.setdefault(lv.order, udd_fractions(lv.order, ctx))
        out = []
        for ev in self.events:
            acc = ctx.real(1)
            for order, j in ev.delay:
                acc = acc * tables[order][j - 1]
            out.append(acc)
        return out

    def total_time(self, ctx: PrecisionContext):
        vals = self.delay_values(ctx)
        acc = ctx.real(0)
        for v in vals:
            acc = acc + v
        return acc

    def to_json(self) -> str:
        """Interop/golden export: 40-digit decimal gaps plus checkpoint map."""
        ctx = PrecisionContext(40)
        vals = self.delay_values(ctx)
        first = {}
        for j in sorted(self.checkpoints):
            first.setdefault(self.checkpoints[j].event, j)
        events = []
        for idx, (ev, v) in enumerate(zip(self.events, vals)):
            item = {"delay_in_tau": ctx.fmt(v, 40), "pulse": ev.pulse}
            if idx in first:
                item["checkpoint"] = first[idx]
            events.append(item)
        doc = {
            "sequence": self.spec.to_text() if self.spec else "FREE",
            "events": events,
            "checkpoints": {str(j): {"event": cp.event, "after": cp.after}
                            for j, cp in sorted(self.checkpoints.items())},
        }
        return json.dumps(doc, indent=1)


def _canonical(order: int, j: int) -> int:
    return min(j, order + 2 - j)


def compile_spec(spec: SequenceSpec) -> PulseSchedule:
    """Flatten a nested spec into a pulse schedule with snapshot markers.

    Construction is bottom-up: the innermost level yields one event per gap
    with its axis pulse after each of the first N gaps and the trailing
    pulse (axis if N is odd, identity otherwise) after the last. Each outer
    level then replaces every one of its gaps with a copy of the inner
    event list (gap keys extended by the slot index) and merges its own
    boundary pulse into the final event of that copy.

    For depth-2 specs, snapshot markers 1..N2+2 are attached: marker j <=
    N2+1 sits right after the j-th inner sequence (before the outer pulse
    that follows, which may live in the same merged event), and marker
    N2+2 is the end of the schedule. For even N2 the last two coincide.
    """
    events = None
    for level in spec.levels:
        n = level.order
        if events is None:
            events = []
            for j in range(1, n + 2):
                pulse = level.axis if j <= n else ("I" if n % 2 == 0 else level.axis)
                events.append(PulseEvent(((n, _canonical(n, j)),), pulse))
        else:
            wrapped = []
            for j in range(1, n + 2):
                slot = [PulseEvent(ev.delay + ((n, _canonical(n, j)),), ev.pulse)
                        for ev in events]
                boundary = level.axis if j <= n else ("I" if n % 2 == 0 else level.axis)
                last = slot[-1]
                slot[-1] = PulseEvent(last.delay, label_mul(boundary, last.pulse))
                wrapped.extend(slot)
            events = wrapped

    checkpoints = {}
    if spec.depth == 2:
        inner, outer = spec.levels
        inner_len = inner.order + 1
        inner_trailing = inner.axis if inner.order % 2 == 1 else "I"
        for j in range(1, outer.order + 2):
            checkpoints[j] = Checkpoint(event=j * inner_len - 1, after=inner_trailing)
        last = len(events) - 1
        checkpoints[outer.order + 2] = Checkpoint(event=last, after=events[last].pulse)
        if outer.order % 2 == 0:
            # no trailing outer pulse: the last two markers coincide exactly
            checkpoints[outer.order + 1] = checkpoints[outer.order + 2]

    return PulseSchedule(spec=spec, events=tuple(events), checkpoints=checkpoints)


def free_schedule() -> PulseSchedule:
    """A single minimum interval with no pulses (free-evolution baseline)."""
    return PulseSchedule(spec=None, events=(PulseEvent((), "I"),), checkpoints={})


def pulse_count(spec: SequenceSpec) -> int:
    return compile_spec(spec).pulse_count()
