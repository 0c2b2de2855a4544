"""Error measures on evolved unitaries.

The per-axis error of a unitary u on qubit (x) bath space is the norm of the
coefficient block multiplying that Pauli axis in the expansion
u = sum_nu sigma_nu (x) B_nu. Two norms are supported: ``"nuclear"`` (sum of
singular values; the default) and ``"hilbert_schmidt"`` (root sum of squared
singular values). They bound each other within a factor of the bath
dimension, so any power-law exponent fitted from either is the same.

The overall storage-fidelity distance to the identity minimizes the
Frobenius distance between u and I (x) Phi over unitary bath operators Phi.
Writing M = Tr_S u, the optimum of Re Tr(Phi^dagger M) over unitaries is the
nuclear norm of M (polar decomposition), which gives the closed form

    D(u, I) = sqrt(2 - 2 ||M||_nuclear / dim(u)),

clamped into [0, sqrt(2)]. Both measures ignore a global phase of u.
"""
from __future__ import annotations

from .errors import BadDimension, MissingCheckpoint
from .evolve import EvolutionResult
from .model import pauli_block
from .mpmatrix import CMatrix, norms

NORM_KINDS = ("nuclear", "hilbert_schmidt")

AXES = ("x", "y", "z")


def single_axis_error(u: CMatrix, mu: str, norm_kind: str = "nuclear"):
    """Norm of the sigma_mu coefficient block of ``u``."""
    if mu not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {mu!r}")
    if norm_kind not in NORM_KINDS:
        raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {norm_kind!r}")
    block = pauli_block(u, mu)
    if norm_kind == "nuclear":
        return norms(block).nuclear
    return block.frobenius_norm()


def distance_to_identity(u: CMatrix):
    """Minimal Frobenius distance from ``u`` to I (x) Phi over unitary Phi,
    normalized by sqrt(dim)."""
    if u.rows != u.cols or u.rows % 2 != 0:
        raise BadDimension("expected a square matrix on qubit (x) bath space")
    ctx = u.ctx
    ctx.activate()
    d = u.rows // 2
    m = u.cols
    flat = u.flat
    data = [flat[i * m + j] + flat[(d + i) * m + (d + j)]
            for i in range(d) for j in range(d)]
    traced = CMatrix(ctx, d, d, data, _raw=True)
    nuc = norms(traced).nuclear
    val = ctx.real(2) - 2 * nuc / ctx.real(u.rows)
    zero = ctx.real(0)
    if val < zero:
        val = zero
    dist = ctx.sqrt(val)
    root2 = ctx.sqrt(ctx.real(2))
    return dist if dist <= root2 else root2


def intermediate_errors(result: EvolutionResult, norm_kind: str = "nuclear"):
    """Per-axis errors at every stored checkpoint: map (j, axis) -> value."""
    if not result.u_checkpoints:
        raise MissingCheckpoint("evolution result carries no checkpoints")
    out = {}
    for j, u in sorted(result.u_checkpoints.items()):
        for mu in AXES:
            out[(j, mu)] = single_axis_error(u, mu, norm_kind)
    return out
