"""Dense statevector engine over labeled qudit registers.

A composite system is a `RegisterLayout`: an ordered list of named
registers, each with named basis states. States are dense complex
amplitude vectors over the product basis. Operators act on a subset of
registers and are expanded with identities on the rest.

All values are immutable after construction (amplitude and matrix arrays
are marked read-only) and safe to share across threads; every operation
returns a new value. Tolerances: 1e-12 for exact algebraic identities,
1e-9 for composed analytic results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .rng import trial_generator

EXACT_TOL = 1e-12
ANALYTIC_TOL = 1e-9
ZERO_PROBABILITY = 1e-12
MAX_TOTAL_DIM = 1 << 20


class ConfigurationError(ValueError):
    """Unknown registers or basis names, mismatched layouts, bad arguments."""


class ContractError(ValueError):
    """A numerical contract was violated (norm, unitarity, commutation)."""


class UndefinedConditionalError(ContractError):
    """Conditioning or collapsing on a zero-probability event."""


@dataclass(frozen=True)
class Register:
    """One subsystem: a label plus named basis states (dimension >= 2)."""

    label: str
    basis: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        if len(self.basis) < 2:
            raise ConfigurationError(f"register {self.label!r} needs dimension >= 2")
        if len(set(self.basis)) != len(self.basis):
            raise ConfigurationError(f"register {self.label!r} has duplicate basis names")

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered registers defining a product space of total dimension <= 2^20."""

    registers: tuple[Register, ...]

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple(self.registers))
        labels = [r.label for r in self.registers]
        if len(set(labels)) != len(labels):
            raise ConfigurationError("register labels must be unique")
        if self.total_dim > MAX_TOTAL_DIM:
            raise ConfigurationError(f"total dimension {self.total_dim} exceeds {MAX_TOTAL_DIM}")

    @classmethod
    def of(cls, *specs: tuple[str, Sequence[str]]) -> "RegisterLayout":
        return cls(tuple(Register(label, tuple(names)) for label, names in specs))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(r.dim for r in self.registers)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(r.label for r in self.registers)

    def axis(self, label: str) -> int:
        for i, r in enumerate(self.registers):
            if r.label == label:
                return i
        raise ConfigurationError(f"unknown register {label!r}")

    def register(self, label: str) -> Register:
        return self.registers[self.axis(label)]

    def basis_index(self, label: str, name: str) -> int:
        reg = self.register(label)
        try:
            return reg.basis.index(name)
        except ValueError:
            raise ConfigurationError(
                f"register {label!r} has no basis state {name!r} (has {reg.basis})"
            ) from None

    def subset_dim(self, labels: Sequence[str]) -> int:
        return math.prod(self.register(l).dim for l in labels)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm complex amplitude vector over a layout's product basis."""

    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape != (self.layout.total_dim,):
            raise ConfigurationError(
                f"amplitude length {amps.size} != total dimension {self.layout.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > EXACT_TOL:
            raise ContractError(f"state norm {norm!r} is not 1 within {EXACT_TOL}")
        object.__setattr__(self, "amplitudes", _readonly(amps.copy()))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Square complex matrix on a subset of registers.

    `kind` is one of "hermitian", "unitary", "general"; the flagged
    property is verified at construction.
    """

    acts_on: tuple[str, ...]
    matrix: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        object.__setattr__(self, "acts_on", tuple(self.acts_on))
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ConfigurationError("operator matrix must be square")
        if self.kind not in ("hermitian", "unitary", "general"):
            raise ConfigurationError(f"unknown operator kind {self.kind!r}")
        if self.kind == "hermitian" and np.abs(mat - mat.conj().T).max() > EXACT_TOL:
            raise ContractError("operator flagged hermitian is not self-adjoint within 1e-12")
        if self.kind == "unitary":
            gram = mat.conj().T @ mat
            if np.abs(gram - np.eye(mat.shape[0])).max() > EXACT_TOL:
                raise ContractError("operator flagged unitary fails U†U = I within 1e-12")
        object.__setattr__(self, "matrix", _readonly(mat.copy()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ProjectorSpec:
    """Projector onto product basis states matching every clause.

    Each clause restricts one register to a set of basis names; the
    projector keeps exactly the product states allowed by all clauses.
    Always diagonal in the product basis, hence idempotent and hermitian,
    and any two ProjectorSpec projectors commute.
    """

    clauses: tuple[tuple[str, frozenset[str]], ...]

    def __post_init__(self):
        norm = tuple(
            (label, frozenset([names] if isinstance(names, str) else names))
            for label, names in self.clauses
        )
        object.__setattr__(self, "clauses", norm)

    @classmethod
    def where(cls, assignments: Mapping[str, object]) -> "ProjectorSpec":
        """Build from {register: name} or {register: set of names}."""
        return cls(tuple(assignments.items()))

    def mask(self, layout: RegisterLayout) -> np.ndarray:
        m = np.ones(layout.dims, dtype=bool)
        for label, names in self.clauses:
            reg = layout.register(label)
            allowed = np.zeros(reg.dim, dtype=bool)
            for name in names:
                allowed[layout.basis_index(label, name)] = True
            shape = [1] * len(layout.dims)
            shape[layout.axis(label)] = reg.dim
            m = m & allowed.reshape(shape)
        return m.reshape(-1)

    def registers(self) -> frozenset[str]:
        return frozenset(label for label, _ in self.clauses)


Projector = ProjectorSpec | OperatorMatrix


# ---------------------------------------------------------------------------
# state and operator construction

def build_basis_state(layout: RegisterLayout, names: Mapping[str, str]) -> StateVector:
    """Product basis state with every register set to the named basis state."""
    missing = set(layout.labels) - set(names)
    if missing:
        raise ConfigurationError(f"no basis name given for registers {sorted(missing)}")
    extra = set(names) - set(layout.labels)
    if extra:
        raise ConfigurationError(f"unknown registers {sorted(extra)}")
    idx = 0
    for reg in layout.registers:
        idx = idx * reg.dim + layout.basis_index(reg.label, names[reg.label])
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    amps[idx] = 1.0
    return StateVector(layout, amps)


def superpose(terms: Sequence[tuple[complex, StateVector]]) -> StateVector:
    """Linear combination of same-layout states; coefficients must already
    give a unit-norm result within 1e-9 (a single exact renormalization is
    then applied)."""
    if not terms:
        raise ConfigurationError("superpose needs at least one term")
    layout = terms[0][1].layout
    acc = np.zeros(layout.total_dim, dtype=np.complex128)
    for coeff, state in terms:
        if state.layout != layout:
            raise ConfigurationError("superpose terms must share one layout")
        acc = acc + complex(coeff) * state.amplitudes
    norm = np.linalg.norm(acc)
    if norm <= ZERO_PROBABILITY:
        raise ContractError("superposition is the zero vector")
    if abs(norm - 1.0) > ANALYTIC_TOL:
        raise ContractError(f"superposition norm {norm!r} is not 1 within {ANALYTIC_TOL}")
    return StateVector(layout, acc / norm)


def dagger(op: OperatorMatrix) -> OperatorMatrix:
    """Conjugate transpose; kind is preserved."""
    return OperatorMatrix(op.acts_on, op.matrix.conj().T, op.kind)


def subset_vector(
    layout: RegisterLayout,
    labels: Sequence[str],
    terms: Sequence[tuple[complex, Mapping[str, str]]],
) -> np.ndarray:
    """Amplitude vector over the product space of `labels` (in the given
    order) from (coefficient, {register: basis name}) terms."""
    labels = tuple(labels)
    dims = [layout.register(l).dim for l in labels]
    vec = np.zeros(math.prod(dims), dtype=np.complex128)
    for coeff, names in terms:
        if set(names) != set(labels):
            raise ConfigurationError(f"term must name exactly registers {labels}")
        idx = 0
        for l, d in zip(labels, dims):
            idx = idx * d + layout.basis_index(l, names[l])
        vec[idx] += complex(coeff)
    return vec


def subspace_projector(
    layout: RegisterLayout, labels: Sequence[str], vectors: Sequence[np.ndarray]
) -> OperatorMatrix:
    """Hermitian projector onto the span of orthonormal subset-space vectors."""
    labels = tuple(labels)
    dim = layout.subset_dim(labels)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    vecs = [np.asarray(v, dtype=np.complex128).reshape(-1) for v in vectors]
    gram = np.array([[np.vdot(a, b) for b in vecs] for a in vecs])
    if np.abs(gram - np.eye(len(vecs))).max() > 1e-10:
        raise ConfigurationError("projector vectors must be orthonormal")
    for v in vecs:
        if v.size != dim:
            raise ConfigurationError("projector vector has wrong dimension")
        mat += np.outer(v, v.conj())
    return OperatorMatrix(labels, mat, "hermitian")


# ---------------------------------------------------------------------------
# applying operators

def _apply_matrix(state: StateVector, labels: Sequence[str], matrix: np.ndarray) -> np.ndarray:
    layout = state.layout
    labels = tuple(labels)
    axes = [layout.axis(l) for l in labels]
    sub_dim = layout.subset_dim(labels)
    if matrix.shape != (sub_dim, sub_dim):
        raise ConfigurationError(
            f"operator dimension {matrix.shape[0]} != register subset dimension {sub_dim}"
        )
    psi = np.moveaxis(state.tensor(), axes, range(len(axes)))
    tail_shape = psi.shape[len(axes):]
    psi = matrix @ psi.reshape(sub_dim, -1)
    psi = psi.reshape([layout.register(l).dim for l in labels] + list(tail_shape))
    return np.moveaxis(psi, range(len(axes)), axes).reshape(-1)


def apply_operator(state: StateVector, op: OperatorMatrix) -> StateVector:
    """Unitary evolution: op (tensor identity on untouched registers) applied
    to the state. Norm drift beyond 1e-12 is an error."""
    if op.kind != "unitary":
        raise ContractError("evolution requires an operator flagged unitary")
    out = _apply_matrix(state, op.acts_on, op.matrix)
    norm = np.linalg.norm(out)
    if abs(norm - 1.0) > EXACT_TOL:
        raise ContractError(f"unitary application drifted norm to {norm!r}")
    return StateVector(state.layout, out / norm)


def _projected(state: StateVector, proj: Projector) -> np.ndarray:
    if isinstance(proj, ProjectorSpec):
        return np.where(proj.mask(state.layout), state.amplitudes, 0.0)
    mat = proj.matrix
    if np.abs(mat - mat.conj().T).max() > EXACT_TOL:
        raise ContractError("projector matrix is not hermitian")
    if np.abs(mat @ mat - mat).max() > 1e-10:
        raise ContractError("projector matrix is not idempotent")
    return _apply_matrix(state, proj.acts_on, mat)


def born_probability(state: StateVector, proj: Projector) -> float:
    """Squared norm of the projected state, clamped to [0, 1]."""
    p = float(np.linalg.norm(_projected(state, proj)) ** 2)
    return min(max(p, 0.0), 1.0)


def _registers_of(proj: Projector) -> frozenset[str]:
    if isinstance(proj, ProjectorSpec):
        return proj.registers()
    return frozenset(proj.acts_on)


def _check_commuting(state: StateVector, condition: Projector, target: Projector) -> None:
    if isinstance(condition, ProjectorSpec) and isinstance(target, ProjectorSpec):
        return  # both diagonal in the product basis
    if not (_registers_of(condition) & _registers_of(target)):
        return  # disjoint registers
    layout = state.layout
    labels = [l for l in layout.labels if l in (_registers_of(condition) | _registers_of(target))]
    a = _full_matrix_on(layout, labels, condition)
    b = _full_matrix_on(layout, labels, target)
    if np.abs(a @ b - b @ a).max() > 1e-10:
        raise ContractError("condition and target projectors do not commute")


def _full_matrix_on(layout: RegisterLayout, labels: Sequence[str], proj: Projector) -> np.ndarray:
    """Matrix of `proj` expanded to the product space of `labels` (layout order)."""
    labels = tuple(labels)
    if isinstance(proj, ProjectorSpec):
        sub = RegisterLayout(tuple(layout.register(l) for l in labels))
        return np.diag(proj.mask(sub).astype(np.complex128))
    own = list(proj.acts_on)
    if not set(own) <= set(labels):
        raise ConfigurationError("projector acts outside the given registers")
    rest = [l for l in labels if l not in own]
    rest_dim = math.prod(layout.register(l).dim for l in rest) if rest else 1
    mat = np.kron(proj.matrix, np.eye(rest_dim, dtype=np.complex128))
    dims = [layout.register(l).dim for l in own + rest]
    n = len(dims)
    perm = [(own + rest).index(l) for l in labels]
    tensor = mat.reshape(dims + dims)
    tensor = np.transpose(tensor, perm + [p + n for p in perm])
    full = math.prod(dims)
    return tensor.reshape(full, full)


def conditional_probability(state: StateVector, condition: Projector, target: Projector) -> float:
    """P(target AND condition) / P(condition) for commuting projectors."""
    p_cond = born_probability(state, condition)
    if p_cond <= ZERO_PROBABILITY:
        raise UndefinedConditionalError("conditioning on a zero-probability event")
    _check_commuting(state, condition, target)
    conditioned = StateVector(state.layout, _projected(state, condition) / math.sqrt(p_cond))
    return born_probability(conditioned, target)


def project_collapse(state: StateVector, proj: Projector) -> StateVector:
    """Projected and renormalized state; zero-probability projection is an error."""
    out = _projected(state, proj)
    norm = np.linalg.norm(out)
    if norm**2 <= ZERO_PROBABILITY:
        raise UndefinedConditionalError("projection has zero probability")
    return StateVector(state.layout, out / norm)


# ---------------------------------------------------------------------------
# sampling and comparison

def _check_partition(state: StateVector, partition: Sequence[Projector]) -> list[float]:
    probs = [born_probability(state, p) for p in partition]
    if abs(sum(probs) - 1.0) > ANALYTIC_TOL:
        raise ContractError(
            f"partition probabilities sum to {sum(probs)!r}; not exhaustive on this state"
        )
    if all(isinstance(p, ProjectorSpec) for p in partition):
        masks = [p.mask(state.layout) for p in partition]
        for i in range(len(masks)):
            for j in range(i + 1, len(masks)):
                if (masks[i] & masks[j]).any():
                    raise ContractError("partition projectors overlap")
    else:
        branches = [_projected(state, p) for p in partition]
        for i in range(len(branches)):
            for j in range(i + 1, len(branches)):
                if abs(np.vdot(branches[i], branches[j])) > 1e-10:
                    raise ContractError("partition branches are not orthogonal")
    return probs


def sample_outcome(
    state: StateVector,
    partition: Sequence[Projector],
    seed: int,
    trial: int = 0,
    stream: int = 0,
) -> tuple[int, StateVector]:
    """Draw one outcome with Born weights; deterministic given
    (seed, trial, stream). Returns (outcome index, collapsed state)."""
    probs = _check_partition(state, partition)
    edges = np.cumsum(probs)
    u = trial_generator(seed, trial, stream).random()
    k = int(np.searchsorted(edges, u, side="right"))
    k = min(k, len(partition) - 1)
    return k, project_collapse(state, partition[k])


def fidelity(s1: StateVector, s2: StateVector) -> float:
    """|<s1|s2>|^2 over a shared layout."""
    if s1.layout != s2.layout:
        raise ConfigurationError("fidelity requires a shared layout")
    return float(abs(np.vdot(s1.amplitudes, s2.amplitudes)) ** 2)


def expectation(state: StateVector, op: OperatorMatrix) -> float:
    """Real expectation value of a hermitian operator."""
    if op.kind != "hermitian":
        raise ContractError("expectation requires a hermitian operator")
    val = np.vdot(state.amplitudes, _apply_matrix(state, op.acts_on, op.matrix))
    if abs(val.imag) > 1e-10:
        raise ContractError(f"expectation of hermitian operator came out complex: {val!r}")
    return float(val.real)
