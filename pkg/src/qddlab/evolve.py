"""Evolution engine: schedule + Hamiltonian + minimum interval -> unitaries.

Free-evolution propagators are built from the model's cached Hermitian
eigendecomposition, U(t) = V diag(exp(-i*lambda*t)) V^dagger, one matrix
product each, and are memoized per distinct symbolic gap so the symmetric
timing fractions are exponentiated only once. Pulses act as sigma_axis (x) I
up to a dropped global phase; on the 2x2 block structure of the accumulated
product this is a row-block swap and/or sign flip, which costs O(dim^2)
instead of a full product.

Every stored unitary is checked against tol_u = 100 * eps * dim; a failure
means the digit budget cannot support the requested product length and is
reported as PrecisionExhausted rather than silently degraded accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import PrecisionExhausted
from .mpmatrix import CMatrix, unitary_tolerance
from .model import HamiltonianModel
from .precision import PrecisionContext
from .sequence import PulseSchedule, udd_fractions


@dataclass(frozen=True)
class EvolutionResult:
    u_final: CMatrix
    u_checkpoints: dict      # checkpoint index -> CMatrix
    tau: object
    ctx: PrecisionContext


def propagator(model: HamiltonianModel, t) -> CMatrix:
    """exp(-i H t) from the cached eigendecomposition; exactly I at t = 0."""
    ctx = model.ctx
    ctx.activate()
    n = model.dim
    t = ctx.real(t)
    if t == ctx.real(0):
        return CMatrix.identity(ctx, n)
    v = model.eigenvectors
    phases = []
    for lam in model.eigenvalues:
        ang = lam * t
        phases.append(ctx.cplx(ctx.cos(ang), -ctx.sin(ang)))
    data = list(v.flat)
    for i in range(n):
        row = i * n
        for j in range(n):
            data[row + j] = data[row + j] * phases[j]
    w = CMatrix(ctx, n, n, data, _raw=True)
    return w @ v.adjoint()


def apply_pulse(label: str, m: CMatrix) -> CMatrix:
    """(sigma_label (x) I) @ m, global phase dropped, via block operations."""
    if label == "I":
        return m
    ctx = m.ctx
    ctx.activate()
    half = m.rows // 2
    cols = m.cols
    top = m.flat[:half * cols]
    bot = m.flat[half * cols:]
    if label == "X":
        data = list(bot) + list(top)
    elif label == "Z":
        data = list(top) + [-x for x in bot]
    elif label == "Y":
        mi = ctx.cplx(0, -1)
        pi_ = ctx.cplx(0, 1)
        data = [mi * x for x in bot] + [pi_ * x for x in top]
    else:
        raise ValueError(f"unknown pulse label {label!r}")
    return CMatrix(ctx, m.rows, cols, data, _raw=True)


def run(model: HamiltonianModel, schedule: PulseSchedule, tau, *,
        with_checkpoints: bool = True) -> EvolutionResult:
    """Evolve through a compiled schedule at minimum interval ``tau``.

    Events are applied in time order (gap, then pulse); checkpoint markers
    snapshot the accumulated product mid-event where merging fused an inner
    trailing pulse with the outer pulse that follows. Snapshots are stored
    only when ``with_checkpoints`` is set (sweeps over final errors skip
    them to avoid per-snapshot unitarity products).
    """
    ctx = model.ctx
    ctx.activate()
    tau = ctx.real(tau)
    n = model.dim
    tol = unitary_tolerance(ctx, n)

    tables = {}
    for lv in (schedule.spec.levels if schedule.spec else ()):
        tables.setdefault(lv.order, udd_fractions(lv.order, ctx))

    cp_by_event = {}
    if with_checkpoints:
        for j, cp in schedule.checkpoints.items():
            cp_by_event.setdefault(cp.event, []).append((j, cp.after))

    cache = {}
    acc = CMatrix.identity(ctx, n)
    checkpoints = {}
    for idx, ev in enumerate(schedule.events):
        prop = cache.get(ev.delay)
        if prop is None:
            value = ctx.real(1)
            for order, j in ev.delay:
                value = value * tables[order][j - 1]
            prop = propagator(model, value * tau)
            cache[ev.delay] = prop
        acc = prop @ acc
        marks = cp_by_event.get(idx)
        if marks:
            for j, after in sorted(marks, key=lambda t: t[0]):
                snap = apply_pulse(after, acc)
                resid = snap.unitary_residual()
                if resid > tol:
                    raise PrecisionExhausted(
                        f"checkpoint {j} unitarity residual {float(resid):.3e} "
                        f"exceeds tol_u at {ctx.digits} digits")
                checkpoints[j] = snap
        acc = apply_pulse(ev.pulse, acc)

    resid = acc.unitary_residual()
    if resid > tol:
        raise PrecisionExhausted(
            f"final unitarity residual {float(resid):.3e} exceeds tol_u "
            f"at {ctx.digits} digits")
    return EvolutionResult(u_final=acc, u_checkpoints=checkpoints, tau=tau, ctx=ctx)
