"""Dense linear-program solver: minimize c.v under linear constraints and bounds.

Self-contained two-phase primal simplex on the standard-form conversion,
Bland's rule for anti-cycling. Desk-scale problems only (hundreds of
variables); no sparse or revised machinery. `solve` is pure and deterministic:
identical programs yield identical solutions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "LinearProgram",
    "LPSolution",
    "LPStatus",
    "SimplexError",
    "solve",
    "format_lp",
    "FEASIBILITY_TOL",
]

FEASIBILITY_TOL = 1e-7
PIVOT_TOL = 1e-9
MAX_ITERATIONS = 50_000


class SimplexError(RuntimeError):
    """Iteration cap hit or a numeric pathology; distinct from the three statuses."""


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """minimize c.v  s.t.  a_ub@v <= b_ub,  a_eq@v == b_eq,  lo <= v <= hi.

    Bounds may be -inf/+inf per component. Treat instances as immutable once
    built; `solve` never mutates them.
    """

    c: np.ndarray
    a_ub: np.ndarray = field(default=None)  # type: ignore[assignment]
    b_ub: np.ndarray = field(default=None)  # type: ignore[assignment]
    a_eq: np.ndarray = field(default=None)  # type: ignore[assignment]
    b_eq: np.ndarray = field(default=None)  # type: ignore[assignment]
    lo: np.ndarray = field(default=None)  # type: ignore[assignment]
    hi: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=np.float64))
        n = self.c.shape[0]
        if n < 1:
            raise ValueError("objective must have at least one variable")
        if not np.all(np.isfinite(self.c)):
            raise ValueError("objective coefficients must be finite")
        self.a_ub, self.b_ub = self._rows(self.a_ub, self.b_ub, n, "a_ub")
        self.a_eq, self.b_eq = self._rows(self.a_eq, self.b_eq, n, "a_eq")
        self.lo = self._bound(self.lo, n, -np.inf)
        self.hi = self._bound(self.hi, n, np.inf)
        if np.any(self.lo > self.hi):
            raise ValueError("every variable needs lo <= hi")

    @staticmethod
    def _rows(a, b, n, name):
        if a is None:
            return np.zeros((0, n)), np.zeros(0)
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_1d(np.asarray(b, dtype=np.float64))
        if a.shape != (b.shape[0], n):
            raise ValueError(f"{name} shape {a.shape} inconsistent with rhs {b.shape} and n={n}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError(f"{name}: coefficients and rhs must be finite")
        return a, b

    @staticmethod
    def _bound(v, n, default):
        if v is None:
            return np.full(n, default)
        v = np.atleast_1d(np.asarray(v, dtype=np.float64))
        if v.shape != (n,):
            raise ValueError(f"bound vector shape {v.shape}, expected ({n},)")
        if np.any(np.isnan(v)):
            raise ValueError("bounds may be infinite but not NaN")
        return v

    @property
    def n(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None


def max_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest constraint or bound violation of a candidate point."""
    v = 0.0
    if lp.a_ub.shape[0]:
        v = max(v, float(np.max(lp.a_ub @ x - lp.b_ub)))
    if lp.a_eq.shape[0]:
        v = max(v, float(np.max(np.abs(lp.a_eq @ x - lp.b_eq))))
    v = max(v, float(np.max(lp.lo - x, initial=0.0)))
    v = max(v, float(np.max(x - lp.hi, initial=0.0)))
    return v


def _standard_form(lp: LinearProgram):
    """Rewrite over nonnegative variables y: A y = b (b >= 0 after sign fix).

    Returns (A_eqrows_without_slacks..., handled below) plus the y -> x map.
    Substitutions per variable: finite lo shifts, finite-hi-only mirrors,
    doubly-free splits into a difference of two nonnegatives. Finite [lo, hi]
    adds an upper-bound inequality row in y.
    """
    n = lp.n
    col_pos = np.zeros(n, dtype=np.int64)
    col_neg = np.full(n, -1, dtype=np.int64)
    sign = np.zeros(n)
    offset = np.zeros(n)
    extra_ub = []  # (col, rhs) upper bounds in y space
    ny = 0
    for j in range(n):
        lo, hi = lp.lo[j], lp.hi[j]
        if np.isfinite(lo):
            col_pos[j], sign[j], offset[j] = ny, 1.0, lo
            ny += 1
            if np.isfinite(hi):
                extra_ub.append((col_pos[j], hi - lo))
        elif np.isfinite(hi):
            col_pos[j], sign[j], offset[j] = ny, -1.0, hi
            ny += 1
        else:
            col_pos[j], sign[j], offset[j] = ny, 1.0, 0.0
            col_neg[j] = ny + 1
            ny += 2

    def to_y_rows(a: np.ndarray, b: np.ndarray):
        m = a.shape[0]
        ya = np.zeros((m, ny))
        yb = b - a @ offset
        for j in range(n):
            ya[:, col_pos[j]] += sign[j] * a[:, j]
            if col_neg[j] >= 0:
                ya[:, col_neg[j]] -= a[:, j]
        return ya, yb

    ub_a, ub_b = to_y_rows(lp.a_ub, lp.b_ub)
    if extra_ub:
        bnd_a = np.zeros((len(extra_ub), ny))
        bnd_b = np.zeros(len(extra_ub))
        for i, (col, rhs) in enumerate(extra_ub):
            bnd_a[i, col] = 1.0
            bnd_b[i] = rhs
        ub_a = np.vstack([ub_a, bnd_a])
        ub_b = np.concatenate([ub_b, bnd_b])
    eq_a, eq_b = to_y_rows(lp.a_eq, lp.b_eq)

    m_ub = ub_a.shape[0]
    a_full = np.vstack(
        [
            np.hstack([ub_a, np.eye(m_ub)]),
            np.hstack([eq_a, np.zeros((eq_a.shape[0], m_ub))]),
        ]
    )
    b_full = np.concatenate([ub_b, eq_b])
    neg = b_full < 0
    a_full[neg] *= -1.0
    b_full[neg] *= -1.0

    cy = np.zeros(ny + m_ub)
    for j in range(n):
        cy[col_pos[j]] += sign[j] * lp.c[j]
        if col_neg[j] >= 0:
            cy[col_neg[j]] -= lp.c[j]

    def y_to_x(y: np.ndarray) -> np.ndarray:
        x = offset + sign * y[col_pos]
        split = col_neg >= 0
        if np.any(split):
            x[split] -= y[col_neg[split]]
        return x

    return a_full, b_full, cy, y_to_x


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int):
    piv = tab[row] / tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0.0
    tab -= np.outer(factors, piv)
    tab[row] = piv
    tab[:, col] = 0.0
    tab[row, col] = 1.0
    basis[row] = col


def _iterate(tab, basis, active_cols, iterations_left, phase: int) -> tuple[str, int]:
    """Bland-rule simplex loop on an objective-row tableau.

    Last tableau row holds z_j - c_j; a column with positive entry improves the
    minimization. Entering: lowest improving column index. Leaving: minimum
    ratio, ties broken by lowest basis variable index.
    """
    m = tab.shape[0] - 1
    while True:
        improving = np.nonzero(tab[-1, :active_cols] > FEASIBILITY_TOL)[0]
        if improving.size == 0:
            return "optimal", iterations_left
        if iterations_left <= 0:
            raise SimplexError(f"iteration cap {MAX_ITERATIONS} exceeded")
        col = int(improving[0])
        column = tab[:m, col]
        rows = np.nonzero(column > PIVOT_TOL)[0]
        if rows.size == 0:
            if phase == 1:
                raise SimplexError("phase-1 objective unbounded; numeric pathology")
            return "unbounded", iterations_left
        ratios = tab[:m, -1][rows] / column[rows]
        best = np.min(ratios)
        tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = int(tied[np.argmin(basis[tied])])
        _pivot(tab, basis, row, col)
        iterations_left -= 1


def solve(lp: LinearProgram) -> LPSolution:
    """Two-phase simplex. Optimal solutions satisfy every constraint to 1e-7.

    Raises SimplexError on iteration-cap exhaustion or when the computed point
    fails the independent feasibility re-check (numeric pathology), so a
    reported Optimal is always trustworthy.
    """
    a, b, cy, y_to_x = _standard_form(lp)
    m, n_real = a.shape
    if m == 0:
        # No rows at all: only nonnegativity. Bounded iff no improving column.
        if np.any(cy < -FEASIBILITY_TOL):
            return LPSolution(LPStatus.UNBOUNDED)
        x = y_to_x(np.zeros(n_real))
        return LPSolution(LPStatus.OPTIMAL, x, float(lp.c @ x))

    # Phase 1: artificial basis, minimize the artificial total.
    tab = np.zeros((m + 1, n_real + m + 1))
    tab[:m, :n_real] = a
    tab[:m, n_real : n_real + m] = np.eye(m)
    tab[:m, -1] = b
    tab[-1, :n_real] = a.sum(axis=0)
    tab[-1, -1] = b.sum()
    basis = np.arange(n_real, n_real + m, dtype=np.int64)

    _, left = _iterate(tab, basis, n_real, MAX_ITERATIONS, phase=1)
    if tab[-1, -1] > FEASIBILITY_TOL:
        return LPSolution(LPStatus.INFEASIBLE)

    # Drive leftover artificials out of the basis; drop redundant rows.
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] < n_real:
            continue
        candidates = np.nonzero(np.abs(tab[i, :n_real]) > PIVOT_TOL)[0]
        if candidates.size:
            _pivot(tab, basis, i, int(candidates[0]))
        else:
            keep[i] = False
    rows = np.concatenate([np.nonzero(keep)[0], [m]])
    tab = tab[rows][:, list(range(n_real)) + [n_real + m]]
    basis = basis[keep]
    mm = basis.shape[0]

    # Phase 2 objective row: z_j - c_j over the surviving tableau.
    tab[-1, :] = cy[basis] @ tab[:mm, :]
    tab[-1, :n_real] -= cy

    status, _ = _iterate(tab, basis, n_real, left, phase=2)
    if status == "unbounded":
        return LPSolution(LPStatus.UNBOUNDED)

    y = np.zeros(n_real)
    y[basis] = np.maximum(tab[:mm, -1], 0.0)
    x = y_to_x(y)
    if max_violation(lp, x) > FEASIBILITY_TOL:
        raise SimplexError(
            f"optimal point violates constraints by {max_violation(lp, x):.3e}; numeric pathology"
        )
    return LPSolution(LPStatus.OPTIMAL, x, float(lp.c @ x))


def _terms(coeffs: np.ndarray) -> str:
    parts = []
    for j, cj in enumerate(coeffs):
        if cj == 0.0:
            continue
        op = "-" if cj < 0 else ("+" if parts else "")
        parts.append(f"{op} {abs(cj):.12g}*x{j}".strip())
    return " ".join(parts) if parts else "0"


def format_lp(lp: LinearProgram) -> str:
    """Plain-text dump, one constraint per line (see FORMATS.md)."""
    lines = [f"minimize: {_terms(lp.c)}", "subject to:"]
    for row, rhs in zip(lp.a_ub, lp.b_ub):
        lines.append(f"  {_terms(row)} <= {rhs:.12g}")
    for row, rhs in zip(lp.a_eq, lp.b_eq):
        lines.append(f"  {_terms(row)} == {rhs:.12g}")
    lines.append("bounds:")
    for j in range(lp.n):
        lines.append(f"  {lp.lo[j]:.12g} <= x{j} <= {lp.hi[j]:.12g}")
    return "\n".join(lines) + "\n"
