"""Builders for observables and measurement-dilation unitaries.

Conventions pinned here (and echoed in report headers):
  - spin directions live in a single fixed plane, parameterized by one
    angle; angle 0 is the diagonal (z-like) observable, pi/2 the bit flip
  - eigenvectors use real entries: up(phi) = (cos phi/2, sin phi/2),
    down(phi) = (-sin phi/2, cos phi/2)
  - the "OK" combination carries the minus sign on the second pointer
    basis vector: OK = (o1 - o2)/sqrt(2), fail = (o1 + o2)/sqrt(2)
  - dilations act as |b_i>|ready> -> |b_i>|name(b_i)>; away from the
    ready sector each named branch applies the same fixed cyclic
    permutation of pointer states, so every dilation is deterministic
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    ConfigurationError,
    OperatorMatrix,
    RegisterLayout,
    subset_vector,
)

CONVENTIONS = {
    "rng": "philox4x64-v1",
    "spin_plane": "single plane; angle 0 = diagonal observable, pi/2 = bit flip",
    "eigenvectors": "real entries, up(phi)=(cos phi/2, sin phi/2)",
    "okfail_sign": "OK carries the minus on the second pointer basis vector",
    "dilation_completion": "fixed cyclic pointer permutation per named branch",
}


def spin_observable(angle: float, register: str) -> OperatorMatrix:
    """2x2 hermitian spin component along a planar direction, eigenvalues +-1."""
    c, s = math.cos(angle), math.sin(angle)
    return OperatorMatrix((register,), np.array([[c, s], [s, -c]]), "hermitian")


def spin_basis(angle: float) -> tuple[np.ndarray, np.ndarray]:
    """(up, down) eigenvectors of spin_observable(angle), real convention."""
    h = angle / 2.0
    up = np.array([math.cos(h), math.sin(h)], dtype=np.complex128)
    down = np.array([-math.sin(h), math.cos(h)], dtype=np.complex128)
    return up, down


def pointer_observable(
    layout: RegisterLayout,
    kind: str,
    plus: Mapping[str, str],
    minus: Mapping[str, str],
) -> OperatorMatrix:
    """Rank-2 hermitian observable on a (system, lab-record) pointer subspace.

    `plus` and `minus` name the two correlated product states, e.g.
    plus={"p1": "up", "X": "up"}. kind "z" gives |p><p| - |m><m|
    (eigenvalues +1/-1 on the branches); kind "x" gives the swap
    |p><m| + |m><p| (eigenvalues +-1 on the symmetric/antisymmetric
    combinations). Both are 0 on the orthogonal complement.
    """
    if set(plus) != set(minus):
        raise ConfigurationError("plus and minus branches must name the same registers")
    labels = tuple(l for l in layout.labels if l in plus)
    p = subset_vector(layout, labels, [(1.0, plus)])
    m = subset_vector(layout, labels, [(1.0, minus)])
    if kind == "z":
        mat = np.outer(p, p.conj()) - np.outer(m, m.conj())
    elif kind == "x":
        mat = np.outer(p, m.conj()) + np.outer(m, p.conj())
    else:
        raise ConfigurationError(f"pointer observable kind must be 'z' or 'x', got {kind!r}")
    return OperatorMatrix(labels, mat, "hermitian")


def eigenspace_projector(op: OperatorMatrix, eigenvalue: float, tol: float = 1e-9) -> OperatorMatrix:
    """Hermitian projector onto the eigenspace of `op` at `eigenvalue`."""
    if op.kind != "hermitian":
        raise ConfigurationError("eigenspace projector needs a hermitian operator")
    vals, vecs = np.linalg.eigh(op.matrix)
    keep = np.abs(vals - eigenvalue) <= tol
    if not keep.any():
        raise ConfigurationError(f"operator has no eigenvalue near {eigenvalue}")
    v = vecs[:, keep]
    return OperatorMatrix(op.acts_on, v @ v.conj().T, "hermitian")


def okfail_transform(
    layout: RegisterLayout,
    outcome1: Mapping[str, str],
    outcome2: Mapping[str, str],
) -> OperatorMatrix:
    """Self-inverse unitary rotating the two pointer branches into their
    even/odd combinations: o1 -> (o1+o2)/sqrt2, o2 -> (o1-o2)/sqrt2.

    Projecting on the o1 (o2) slot after the transform measures the
    fail (OK) combination of the original branches.
    """
    if set(outcome1) != set(outcome2):
        raise ConfigurationError("both outcomes must name the same registers")
    labels = tuple(l for l in layout.labels if l in outcome1)
    v1 = subset_vector(layout, labels, [(1.0, outcome1)])
    v2 = subset_vector(layout, labels, [(1.0, outcome2)])
    root = 1.0 / math.sqrt(2.0)
    u = np.eye(v1.size, dtype=np.complex128)
    u = u - np.outer(v1, v1.conj()) - np.outer(v2, v2.conj())
    u = u + np.outer(root * (v1 + v2), v1.conj()) + np.outer(root * (v1 - v2), v2.conj())
    return OperatorMatrix(labels, u, "unitary")


@dataclass(frozen=True)
class MeasurementDilation:
    """Unitary measurement model: copy an orthonormal basis of the measured
    register(s) into a pointer register starting from its `ready` state.

    `basis` lists (pointer outcome name, amplitude vector over the measured
    subset space). Vectors may span only a subspace; the complement is
    completed deterministically and leaves the pointer untouched.
    """

    measured: tuple[str, ...]
    pointer: str
    basis: tuple[tuple[str, np.ndarray], ...]
    ready: str = "ready"

    def __post_init__(self):
        object.__setattr__(self, "measured", tuple(self.measured))
        object.__setattr__(
            self,
            "basis",
            tuple((name, np.asarray(vec, dtype=np.complex128).reshape(-1)) for name, vec in self.basis),
        )


def _completion(vectors: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Deterministic orthonormal completion by Gram-Schmidt over identity columns."""
    basis = [v.copy() for v in vectors]
    for k in range(dim):
        cand = np.zeros(dim, dtype=np.complex128)
        cand[k] = 1.0
        for b in basis:
            cand = cand - np.vdot(b, cand) * b
        norm = np.linalg.norm(cand)
        if norm > 1e-7:
            basis.append(cand / norm)
        if len(basis) == dim:
            break
    return basis[len(vectors):]


def _cycle(dim: int, shift: int) -> np.ndarray:
    c = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim):
        c[(j + shift) % dim, j] = 1.0
    return c


def dilation_unitary(layout: RegisterLayout, d: MeasurementDilation) -> OperatorMatrix:
    """Build the recording unitary for a measurement dilation.

    Acts on measured + pointer registers as
    sum_i |b_i><b_i| (x) C_i, where C_i is the pointer cycle sending
    `ready` to the branch's outcome name (identity for completion
    vectors). Block-diagonal in the measured basis, so measured-basis
    populations are never disturbed.
    """
    measured_dim = layout.subset_dim(d.measured)
    pointer_reg = layout.register(d.pointer)
    ready_idx = layout.basis_index(d.pointer, d.ready)
    vecs = [vec for _, vec in d.basis]
    for vec in vecs:
        if vec.size != measured_dim:
            raise ConfigurationError("dilation basis vector has wrong dimension")
    gram = np.array([[np.vdot(a, b) for b in vecs] for a in vecs])
    if np.abs(gram - np.eye(len(vecs))).max() > 1e-12:
        raise ConfigurationError("dilation basis is not orthonormal within 1e-12")
    k = pointer_reg.dim
    mat = np.zeros((measured_dim * k, measured_dim * k), dtype=np.complex128)
    for name, vec in d.basis:
        shift = (layout.basis_index(d.pointer, name) - ready_idx) % k
        mat += np.kron(np.outer(vec, vec.conj()), _cycle(k, shift))
    for vec in _completion(vecs, measured_dim):
        mat += np.kron(np.outer(vec, vec.conj()), np.eye(k))
    return OperatorMatrix(d.measured + (d.pointer,), mat, "unitary")


def basis_record_dilation(
    layout: RegisterLayout,
    measured: str,
    pointer: str,
    name_map: Mapping[str, str],
    ready: str = "ready",
) -> MeasurementDilation:
    """Dilation recording the computational basis of one register
    (basis name -> pointer outcome name)."""
    reg = layout.register(measured)
    basis = []
    for basis_name, pointer_name in name_map.items():
        vec = np.zeros(reg.dim, dtype=np.complex128)
        vec[layout.basis_index(measured, basis_name)] = 1.0
        basis.append((pointer_name, vec))
    return MeasurementDilation((measured,), pointer, tuple(basis), ready)


def spin_record_dilation(
    layout: RegisterLayout,
    particle: str,
    pointer: str,
    angle: float,
    up_name: str,
    down_name: str,
    ready: str = "ready",
) -> MeasurementDilation:
    """Dilation recording the +-1 spin basis along `angle` of a qubit register."""
    up, down = spin_basis(angle)
    return MeasurementDilation(
        (particle,), pointer, ((up_name, up), (down_name, down)), ready
    )


def pair_record_dilation(
    layout: RegisterLayout,
    measured: Sequence[str],
    pointer: str,
    branches: Sequence[tuple[str, Sequence[tuple[complex, Mapping[str, str]]]]],
    ready: str = "ready",
) -> MeasurementDilation:
    """Dilation recording an (possibly entangled) basis of a register pair.

    `branches` lists (pointer outcome name, superposition terms over the
    measured registers).
    """
    measured = tuple(measured)
    basis = tuple(
        (name, subset_vector(layout, measured, terms)) for name, terms in branches
    )
    return MeasurementDilation(measured, pointer, basis, ready)
