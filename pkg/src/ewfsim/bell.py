"""CHSH functionals and joint-distribution feasibility for four +-1 variables.

Feasibility asks whether a probability distribution over the 16 sign
assignments of (a, b, c, d) reproduces the given cycle correlations
(a,b), (b,c), (c,d), (a,d) and any supplied single-variable marginals.
The decision is made by a small phase-1 simplex over the 16 enumerated
assignments (exact at this scale, Bland's rule, no LP dependency); an
independent support-enumeration route is provided as a brute-force
cross-check. Infeasibility certificates are violated CHSH sign variants
(or, with marginals, a negative pair probability).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ConfigurationError, ContractError

VARIABLES = ("a", "b", "c", "d")
PAIR_KEYS = (("a", "b"), ("b", "c"), ("c", "d"), ("a", "d"))
# one minus sign per variant, on the named pair; "minus-ad" is the usual form
VARIANTS = {
    "minus-ab": (-1.0, 1.0, 1.0, 1.0),
    "minus-bc": (1.0, -1.0, 1.0, 1.0),
    "minus-cd": (1.0, 1.0, -1.0, 1.0),
    "minus-ad": (1.0, 1.0, 1.0, -1.0),
}
DEFAULT_VARIANT = "minus-ad"

# rows = sign assignments of (a, b, c, d), +1 listed first
ASSIGNMENTS = np.array(list(itertools.product((1, -1), repeat=4)), dtype=float)

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class CorrelationSet:
    """The four cycle correlations, each in [-1, 1], plus optional marginals."""

    values: Mapping[tuple[str, str], float]
    marginals: Mapping[str, float] | None = None

    def __post_init__(self):
        vals = {tuple(k): float(v) for k, v in self.values.items()}
        for key in vals:
            if key not in PAIR_KEYS:
                raise ConfigurationError(f"unknown pair label {key}; expected one of {PAIR_KEYS}")
        for key, v in vals.items():
            if not -1.0 <= v <= 1.0:
                raise ConfigurationError(f"correlation {key} = {v} outside [-1, 1]")
        object.__setattr__(self, "values", vals)
        if self.marginals is not None:
            margs = {str(k): float(v) for k, v in self.marginals.items()}
            for var, v in margs.items():
                if var not in VARIABLES:
                    raise ConfigurationError(f"unknown variable {var!r} in marginals")
                if not -1.0 <= v <= 1.0:
                    raise ConfigurationError(f"marginal {var} = {v} outside [-1, 1]")
            object.__setattr__(self, "marginals", margs)

    @classmethod
    def from_items(
        cls,
        items: Sequence[tuple[tuple[str, str], float]],
        marginals: Sequence[tuple[str, float]] | None = None,
    ) -> "CorrelationSet":
        """Build from (pair, value) items; inconsistent duplicates are an error."""
        vals: dict[tuple[str, str], float] = {}
        for key, v in items:
            key = tuple(key)
            if key in vals and abs(vals[key] - float(v)) > 1e-12:
                raise ConfigurationError(f"inconsistent duplicate constraint for pair {key}")
            vals[key] = float(v)
        margs: dict[str, float] | None = None
        if marginals is not None:
            margs = {}
            for var, v in marginals:
                if var in margs and abs(margs[var] - float(v)) > 1e-12:
                    raise ConfigurationError(f"inconsistent duplicate marginal for {var!r}")
                margs[var] = float(v)
        return cls(vals, margs)

    @classmethod
    def cycle(cls, ab: float, bc: float, cd: float, ad: float, **marginals: float) -> "CorrelationSet":
        return cls(dict(zip(PAIR_KEYS, (ab, bc, cd, ad))), marginals or None)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: np.ndarray | None = None
    violated_name: str | None = None
    violated_value: float | None = None


def chsh_value(corrs: CorrelationSet, variant: str = DEFAULT_VARIANT) -> float:
    """Signed CHSH combination of the four cycle correlations."""
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown variant {variant!r}; have {sorted(VARIANTS)}")
    missing = [k for k in PAIR_KEYS if k not in corrs.values]
    if missing:
        raise ConfigurationError(f"missing pair correlations: {missing}")
    signs = VARIANTS[variant]
    return float(sum(s * corrs.values[k] for s, k in zip(signs, PAIR_KEYS)))


def chsh_all(corrs: CorrelationSet) -> dict[str, float]:
    """All four sign variants plus the maximum absolute value."""
    out = {name: chsh_value(corrs, name) for name in VARIANTS}
    out["max_abs"] = max(abs(v) for v in out.values())
    return out


def _constraints(corrs: CorrelationSet) -> tuple[np.ndarray, np.ndarray, list[str]]:
    rows = [np.ones(16)]
    rhs = [1.0]
    names = ["normalization"]
    for x, y in PAIR_KEYS:
        if (x, y) in corrs.values:
            ix, iy = VARIABLES.index(x), VARIABLES.index(y)
            rows.append(ASSIGNMENTS[:, ix] * ASSIGNMENTS[:, iy])
            rhs.append(corrs.values[(x, y)])
            names.append(f"corr({x},{y})")
    if corrs.marginals:
        for var in VARIABLES:
            if var in corrs.marginals:
                rows.append(ASSIGNMENTS[:, VARIABLES.index(var)])
                rhs.append(corrs.marginals[var])
                names.append(f"marginal({var})")
    return np.array(rows), np.array(rhs), names


def _phase1_simplex(M: np.ndarray, q: np.ndarray, tol: float = 1e-11) -> tuple[float, np.ndarray]:
    """Minimize the total artificial-variable mass of {p >= 0, Mp = q}.

    Returns (optimum, p). optimum ~ 0 means feasible with witness p.
    Dense tableau simplex with Bland's rule, so termination is guaranteed.
    """
    m, n = M.shape
    flip = np.where(q < 0, -1.0, 1.0)
    tab = np.hstack([M * flip[:, None], np.eye(m), (q * flip)[:, None]])
    basis = list(range(n, n + m))
    cost = np.concatenate([np.zeros(n), np.ones(m)])
    while True:
        lam = cost[basis] @ tab[:, :-1]
        reduced = cost - lam
        entering = -1
        for j in range(n + m):
            if j not in basis and reduced[j] < -tol:
                entering = j
                break
        if entering < 0:
            break
        col = tab[:, entering]
        best_ratio, leave = math.inf, -1
        for i in range(m):
            if col[i] > tol:
                ratio = tab[i, -1] / col[i]
                if ratio < best_ratio - tol or (
                    abs(ratio - best_ratio) <= tol and (leave < 0 or basis[i] < basis[leave])
                ):
                    best_ratio, leave = ratio, i
        if leave < 0:
            break  # unbounded cannot happen for phase 1; defensive
        tab[leave] /= tab[leave, entering]
        for i in range(m):
            if i != leave and abs(tab[i, entering]) > 1e-14:
                tab[i] -= tab[i, entering] * tab[leave]
        basis[leave] = entering
    p = np.zeros(n)
    art = 0.0
    for i, j in enumerate(basis):
        if j < n:
            p[j] = tab[i, -1]
        else:
            art += tab[i, -1]
    return float(art), p


def _certificate(corrs: CorrelationSet, gap: float) -> tuple[str, float]:
    best_name, best_value = None, 0.0
    for name in VARIANTS:
        v = chsh_value(corrs, name)
        if abs(v) > abs(best_value):
            best_name, best_value = name, v
    if best_name is not None and abs(best_value) > 2.0:
        return best_name, best_value
    # marginal-induced infeasibility: some pair probability would be negative;
    # scaled so the reported value exceeds 2 exactly when violated
    if corrs.marginals:
        for x, y in PAIR_KEYS:
            if x in corrs.marginals and y in corrs.marginals and (x, y) in corrs.values:
                mx, my, c = corrs.marginals[x], corrs.marginals[y], corrs.values[(x, y)]
                for sx in (1, -1):
                    for sy in (1, -1):
                        g = 1.0 + sx * mx + sy * my + sx * sy * c
                        if g < -FEAS_TOL:
                            return f"positivity({x}{sx:+d},{y}{sy:+d})", 2.0 - 2.0 * g
    return "infeasibility-gap", 2.0 + gap


def fine_joint_exists(corrs: CorrelationSet) -> FeasibilityResult:
    """Decide whether some distribution over the 16 sign assignments
    reproduces the given correlations (and marginals, if any).

    Feasible: returns a validated witness distribution. Infeasible:
    names a violated inequality with value > 2.
    """
    M, q, _ = _constraints(corrs)
    gap, p = _phase1_simplex(M, q)
    if gap > FEAS_TOL:
        name, value = _certificate(corrs, gap)
        return FeasibilityResult(False, None, name, value)
    p = np.where(p < 0, 0.0, p)
    total = p.sum()
    if total <= 0:
        raise ContractError("feasible system produced an empty witness")
    p = p / total
    repro = M @ p
    if np.abs(repro - q).max() > FEAS_TOL:
        raise ContractError(
            f"witness fails to reproduce constraints (max error {np.abs(repro - q).max():.3e})"
        )
    return FeasibilityResult(True, p, None, None)


_BRUTE_CACHE: dict[tuple, tuple] = {}


def joint_feasible_bruteforce(corrs: CorrelationSet) -> bool:
    """Independent brute-force feasibility: enumerate all candidate supports
    up to the constraint count and test each basic solution directly.

    Exists as a cross-check for fine_joint_exists; shares no code with the
    simplex route.
    """
    M, q, names = _constraints(corrs)
    m = M.shape[0]
    sig = tuple(names)
    if sig not in _BRUTE_CACHE:
        per_size = []
        for k in range(1, m + 1):
            subs = np.array(list(itertools.combinations(range(16), k)))
            A = M[:, subs].transpose(1, 0, 2)  # (n_subs, m, k)
            per_size.append((subs, A, np.linalg.pinv(A)))
        _BRUTE_CACHE[sig] = tuple(per_size)
    for subs, A, pinv in _BRUTE_CACHE[sig]:
        x = pinv @ q
        resid = A @ x[..., None]
        ok = (x >= -FEAS_TOL).all(axis=1) & (
            np.abs(resid[..., 0] - q) <= FEAS_TOL
        ).all(axis=1)
        if ok.any():
            return True
    return False


def correlation_from_samples(
    records: Sequence[Mapping[str, int | None]], pair: tuple[str, str]
) -> tuple[float, float]:
    """(mean product, standard error) of a +-1 outcome pair over trial records.

    Rows missing either entry are skipped; at least two complete rows are
    required.
    """
    x, y = pair
    products = [
        float(row[x]) * float(row[y])
        for row in records
        if row.get(x) is not None and row.get(y) is not None
    ]
    n = len(products)
    if n < 2:
        raise ConfigurationError(f"need at least 2 trials with both {x} and {y}; have {n}")
    arr = np.asarray(products)
    est = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(n))
    return est, stderr
