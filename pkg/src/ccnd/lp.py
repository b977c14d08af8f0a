"""Dense bounded-variable revised simplex with warm starts.

Models are stated as ``min c^T x`` subject to row constraints ``a_i x (<=|==|>=) b_i``
and variable bounds ``l <= x <= u``. Every row gets a logical (slack) column so
that ``A x + s = b``; the slack bounds encode the row sense. Row duals are
returned as the sensitivity ``d objective / d b_i``, so ``>=`` rows carry
nonnegative duals and ``<=`` rows nonpositive ones.

A :class:`Basis` returned by one solve can seed a later solve of a model that
differs in right-hand sides, variable bounds, or appended rows. Primal
feasibility is then usually lost while dual feasibility is kept, and the dual
simplex restores optimality in a handful of pivots.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

LE, EQ, GE = -1, 0, 1
_SENSE_CODES = {"<=": LE, "==": EQ, "=": EQ, ">=": GE, LE: LE, EQ: EQ, GE: GE}

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
KKT_TOL = 1e-7
GAP_TOL = 1e-6
REFACTOR_EVERY = 100
BLAND_AFTER = 1000

_BASIC, _AT_LOWER, _AT_UPPER, _FREE = 0, 1, 2, 3


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


class LpError(RuntimeError):
    """Raised when a model is malformed or a warm basis does not fit it."""


def sense_code(sense) -> int:
    try:
        return _SENSE_CODES[sense]
    except KeyError:
        raise LpError(f"unknown row sense {sense!r}") from None


@dataclass(frozen=True, eq=False)
class LpModel:
    """A linear program in row form; the matrix is stored dense."""

    objective: np.ndarray
    matrix: np.ndarray
    senses: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        obj = np.asarray(self.objective, dtype=float)
        n = obj.shape[0]
        mat = np.asarray(self.matrix, dtype=float).reshape(-1, n)
        m = mat.shape[0]
        senses = np.array([sense_code(s) for s in np.asarray(self.senses).ravel()], dtype=np.int8)
        rhs = np.asarray(self.rhs, dtype=float).ravel()
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()

        if senses.shape != (m,) or rhs.shape != (m,):
            raise LpError("senses and rhs must have one entry per row")
        for name, arr in (("objective", obj), ("matrix", mat), ("rhs", rhs)):
            if not np.all(np.isfinite(arr)):
                raise LpError(f"{name} contains NaN or infinite entries")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise LpError("bounds contain NaN")
        if np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise LpError("lower bound +inf or upper bound -inf")

        for name, arr in (("objective", obj), ("matrix", mat), ("senses", senses),
                          ("rhs", rhs), ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, arr)

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def full_matrix(self) -> np.ndarray:
        return np.hstack([self.matrix, np.eye(self.num_rows)])

    def with_rhs(self, rhs) -> LpModel:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != self.rhs.shape:
            raise LpError(f"rhs shape {rhs.shape} does not match {self.rhs.shape}")
        return _derive(self, rhs=rhs)

    def with_bounds(self, lower, upper) -> LpModel:
        return _derive(self, lower=lower, upper=upper)

    def with_rows(self, rows, senses, rhs) -> LpModel:
        rows = np.asarray(rows, dtype=float).reshape(-1, self.num_vars)
        return LpModel(
            self.objective,
            np.vstack([self.matrix, rows]),
            np.concatenate([self.senses, [sense_code(s) for s in senses]]),
            np.concatenate([self.rhs, np.asarray(rhs, dtype=float)]),
            self.lower,
            self.upper,
        )


def _derive(model: LpModel, **changes) -> LpModel:
    # Shares the matrix object (and its cached full matrix) with the parent,
    # which lets a warm basis keep its factorization.
    new = LpModel(
        model.objective,
        model.matrix,
        model.senses,
        changes.get("rhs", model.rhs),
        changes.get("lower", model.lower),
        changes.get("upper", model.upper),
    )
    object.__setattr__(new, "matrix", model.matrix)
    if "full_matrix" in model.__dict__:
        new.__dict__["full_matrix"] = model.__dict__["full_matrix"]
    return new


class LpBuilder:
    """Incremental construction of an :class:`LpModel` from sparse rows."""

    def __init__(self):
        self._cost: list[float] = []
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._rows: list[dict[int, float]] = []
        self._senses: list[int] = []
        self._rhs: list[float] = []

    @property
    def num_vars(self) -> int:
        return len(self._cost)

    @property
    def num_rows(self) -> int:
        return len(self._rows)

    def add_var(self, cost: float = 0.0, lower: float = 0.0, upper: float = math.inf) -> int:
        self._cost.append(float(cost))
        self._lower.append(float(lower))
        self._upper.append(float(upper))
        return len(self._cost) - 1

    def add_row(self, coefficients: dict[int, float], sense, rhs: float) -> int:
        row: dict[int, float] = {}
        for idx, coef in coefficients.items():
            row[idx] = row.get(idx, 0.0) + float(coef)
        self._rows.append(row)
        self._senses.append(sense_code(sense))
        self._rhs.append(float(rhs))
        return len(self._rows) - 1

    def build(self) -> LpModel:
        n = len(self._cost)
        mat = np.zeros((len(self._rows), n))
        for i, row in enumerate(self._rows):
            for j, coef in row.items():
                if not 0 <= j < n:
                    raise LpError(f"row {i} references variable {j} outside 0..{n - 1}")
                mat[i, j] = coef
        return LpModel(self._cost, mat, self._senses, self._rhs, self._lower, self._upper)


@dataclass(frozen=True, eq=False)
class Basis:
    """Terminal simplex state; opaque to callers apart from ``basic``."""

    basic: np.ndarray
    status: np.ndarray
    num_vars: int
    _inverse: np.ndarray | None = field(default=None, repr=False)
    _matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_rows(self) -> int:
        return self.basic.shape[0]


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    primal: np.ndarray
    dual: np.ndarray
    objective: float
    basis: Basis
    iterations: int
    reduced_costs: np.ndarray
    dual_objective: float = math.nan

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve(model: LpModel, warm: Basis | None = None) -> LpSolution:
    """Solve ``model``, optionally warm starting from a previous basis."""
    return _Simplex(model, warm).run()


def resolve_rhs(model: LpModel, new_rhs, warm: Basis) -> LpSolution:
    """Re-solve ``model`` with a different right-hand side from a kept basis."""
    new_rhs = np.asarray(new_rhs, dtype=float)
    if new_rhs.shape != (model.num_rows,):
        raise LpError(f"rhs of length {new_rhs.shape} for a model with {model.num_rows} rows")
    if warm.num_rows != model.num_rows or warm.num_vars != model.num_vars:
        raise LpError("warm basis was produced by a model of a different shape")
    return solve(model.with_rhs(new_rhs), warm)


def kkt_residuals(model: LpModel, sol: LpSolution) -> tuple[float, float, float]:
    """Return (primal residual, dual residual, relative duality gap)."""
    x = sol.primal
    act = model.matrix @ x
    viol = np.zeros(model.num_rows)
    le = model.senses == LE
    ge = model.senses == GE
    eq = model.senses == EQ
    viol[le] = np.maximum(act[le] - model.rhs[le], 0.0)
    viol[ge] = np.maximum(model.rhs[ge] - act[ge], 0.0)
    viol[eq] = np.abs(act[eq] - model.rhs[eq])
    bound_viol = np.maximum(np.maximum(model.lower - x, x - model.upper), 0.0)
    primal_res = float(max(viol.max(initial=0.0), bound_viol.max(initial=0.0)))

    y = sol.dual
    d = model.objective - model.matrix.T @ y
    dual_res = 0.0
    dual_res = max(dual_res, float(np.maximum(y[le], 0.0).max(initial=0.0)))
    dual_res = max(dual_res, float(np.maximum(-y[ge], 0.0).max(initial=0.0)))
    # A positive reduced cost needs a finite lower bound, a negative one a finite upper bound.
    pos_unbacked = (d > 0) & ~np.isfinite(model.lower)
    neg_unbacked = (d < 0) & ~np.isfinite(model.upper)
    if pos_unbacked.any():
        dual_res = max(dual_res, float(d[pos_unbacked].max()))
    if neg_unbacked.any():
        dual_res = max(dual_res, float(-d[neg_unbacked].min()))

    gap = abs(sol.objective - sol.dual_objective) / (1.0 + abs(sol.objective))
    return primal_res, dual_res, gap


def dual_objective(model: LpModel, y: np.ndarray) -> float:
    d = model.objective - model.matrix.T @ y
    lo = np.where(np.isfinite(model.lower), model.lower, 0.0)
    hi = np.where(np.isfinite(model.upper), model.upper, 0.0)
    return float(model.rhs @ y + np.where(d > 0, d * lo, d * hi).sum())


def to_lp_text(model: LpModel, names: list[str] | None = None) -> str:
    """Render ``model`` in the CPLEX LP text format (debugging aid)."""
    names = names or [f"x{j}" for j in range(model.num_vars)]

    def expr(coefs) -> str:
        terms = [f"{'-' if c < 0 else '+'} {abs(c):.12g} {names[j]}" for j, c in enumerate(coefs) if c != 0]
        return " ".join(terms) if terms else "0 " + names[0]

    ops = {LE: "<=", EQ: "=", GE: ">="}
    lines = ["Minimize", f" obj: {expr(model.objective)}", "Subject To"]
    for i in range(model.num_rows):
        lines.append(f" r{i}: {expr(model.matrix[i])} {ops[int(model.senses[i])]} {model.rhs[i]:.12g}")
    lines.append("Bounds")
    for j in range(model.num_vars):
        lo, hi = model.lower[j], model.upper[j]
        lo_s = "-inf" if lo == -math.inf else f"{lo:.12g}"
        hi_s = "+inf" if hi == math.inf else f"{hi:.12g}"
        lines.append(f" {lo_s} <= {names[j]} <= {hi_s}")
    lines.append("End")
    return "\n".join(lines) + "\n"


class _Singular(Exception):
    pass


class _Simplex:
    def __init__(self, model: LpModel, warm: Basis | None):
        self.model = model
        n, m = model.num_vars, model.num_rows
        self.n, self.m = n, m
        self.A = model.full_matrix
        self.b = model.rhs
        self.cost = np.concatenate([model.objective, np.zeros(m)])
        slack_lo = np.where(model.senses == GE, -math.inf, 0.0)
        slack_hi = np.where(model.senses == LE, math.inf, 0.0)
        self.lo = np.concatenate([model.lower, slack_lo])
        self.hi = np.concatenate([model.upper, slack_hi])
        self.fixed = self.lo == self.hi
        self.iterations = 0
        self.limit = 10 * (m + n) ** 2 + 1000
        self.since_refactor = 0
        self.degenerate_run = 0
        self.bland = False

        if not self._load_warm(warm):
            self._slack_basis()

    def _slack_basis(self):
        n, m = self.n, self.m
        self.basic = np.arange(n, n + m)
        self.status = np.empty(n + m, dtype=np.int8)
        self.status[:n] = np.where(
            np.isfinite(self.lo[:n]), _AT_LOWER, np.where(np.isfinite(self.hi[:n]), _AT_UPPER, _FREE)
        )
        self.status[n:] = _BASIC
        self.binv = np.eye(m)
        self.since_refactor = 0

    def _load_warm(self, warm: Basis | None) -> bool:
        if warm is None or warm.num_vars != self.n or warm.num_rows > self.m:
            return False
        n, m, m_old = self.n, self.m, warm.num_rows
        basic = np.concatenate([warm.basic, np.arange(n + m_old, n + m)])
        status = np.concatenate([warm.status, np.full(m - m_old, _BASIC, dtype=np.int8)])
        # Nonbasic statuses must point at finite bounds of the new model.
        nb = status != _BASIC
        at_lo = nb & (status == _AT_LOWER) & ~np.isfinite(self.lo)
        at_hi = nb & (status == _AT_UPPER) & ~np.isfinite(self.hi)
        free = nb & (status == _FREE) & (np.isfinite(self.lo) | np.isfinite(self.hi))
        for mask in (at_lo, at_hi, free):
            idx = np.flatnonzero(mask)
            status[idx] = np.where(
                np.isfinite(self.lo[idx]), _AT_LOWER, np.where(np.isfinite(self.hi[idx]), _AT_UPPER, _FREE)
            )
        self.basic, self.status = basic, status

        inv = None
        if warm._inverse is not None and warm._matrix is not None:
            old = warm._matrix
            cur = self.model.matrix
            same = old is cur or (old.shape[0] <= cur.shape[0] and np.array_equal(old, cur[:m_old]))
            if same:
                inv = warm._inverse
                if m > m_old:
                    rows = self.A[m_old:, warm.basic]
                    inv = np.block([[inv, np.zeros((m_old, m - m_old))], [-rows @ inv, np.eye(m - m_old)]])
                else:
                    inv = inv.copy()
        if inv is None:
            try:
                self.binv = np.eye(m)
                self._refactor()
            except _Singular:
                return False
        else:
            self.binv = inv
            self.since_refactor = 0
        return True

    # -- linear algebra ----------------------------------------------------
    def _refactor(self):
        B = self.A[:, self.basic]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise _Singular from None
        if not np.all(np.isfinite(self.binv)):
            raise _Singular
        self.since_refactor = 0

    def _compute_x(self):
        x = np.where(
            self.status == _AT_LOWER, self.lo, np.where(self.status == _AT_UPPER, self.hi, 0.0)
        )
        x[self.basic] = 0.0
        x = np.where(np.isfinite(x), x, 0.0)
        x[self.basic] = self.binv @ (self.b - self.A @ x)
        self.x = x

    def _pivot(self, r: int, q: int, alpha: np.ndarray):
        self.basic[r] = q
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            try:
                self._refactor()
            except _Singular:
                pass
            else:
                self._compute_x()
                return
        piv_row = self.binv[r] / alpha[r]
        self.binv -= np.outer(alpha, piv_row)
        self.binv[r] = piv_row

    def _reduced_costs(self, cost: np.ndarray):
        y = self.binv.T @ cost[self.basic]
        d = cost - self.A.T @ y
        d[self.basic] = 0.0
        return y, d

    def _infeasibility(self):
        xb = self.x[self.basic]
        lo, hi = self.lo[self.basic], self.hi[self.basic]
        return np.maximum(np.maximum(lo - xb, xb - hi), 0.0)

    def _dual_feasible(self, d: np.ndarray) -> bool:
        st = self.status
        bad = (
            ((st == _AT_LOWER) & (d < -OPT_TOL))
            | ((st == _AT_UPPER) & (d > OPT_TOL))
            | ((st == _FREE) & (np.abs(d) > OPT_TOL))
        ) & ~self.fixed
        return not bad.any()

    def _tick(self, theta: float):
        self.iterations += 1
        if theta <= FEAS_TOL:
            self.degenerate_run += 1
            if self.degenerate_run >= BLAND_AFTER:
                self.bland = True
        else:
            self.degenerate_run = 0

    # -- primal simplex ----------------------------------------------------
    def _primal(self, phase1: bool) -> LpStatus | None:
        """Run primal iterations; phase 1 minimises the sum of infeasibilities.

        Returns OPTIMAL/UNBOUNDED for phase 2, None (now feasible) or
        INFEASIBLE for phase 1, and ITERATION_LIMIT on overrun.
        """
        st = self.status
        while True:
            if self.iterations >= self.limit:
                return LpStatus.ITERATION_LIMIT
            xb = self.x[self.basic]
            lo_b, hi_b = self.lo[self.basic], self.hi[self.basic]
            if phase1:
                below = xb < lo_b - FEAS_TOL
                above = xb > hi_b + FEAS_TOL
                if not (below.any() or above.any()):
                    return None
                cost = np.zeros(self.n + self.m)
                cost[self.basic[below]] = -1.0
                cost[self.basic[above]] = 1.0
            else:
                cost = self.cost
            _, d = self._reduced_costs(cost)

            movable = ~self.fixed & (st != _BASIC)
            inc = movable & ((st == _AT_LOWER) | (st == _FREE)) & (d < -OPT_TOL)
            dec = movable & ((st == _AT_UPPER) | (st == _FREE)) & (d > OPT_TOL)
            cand = inc | dec
            if not cand.any():
                return LpStatus.INFEASIBLE if phase1 else LpStatus.OPTIMAL
            if self.bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                q = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            direction = 1.0 if inc[q] else -1.0

            alpha = self.binv @ self.A[:, q]
            delta = -direction * alpha
            theta = math.inf
            ratios = np.full(self.m, math.inf)
            targets = np.zeros(self.m)
            down = delta < -PIVOT_TOL
            up = delta > PIVOT_TOL
            if phase1:
                feas = ~below & ~above
                m1 = down & feas & np.isfinite(lo_b)
                ratios[m1] = (xb[m1] - lo_b[m1]) / -delta[m1]
                targets[m1] = lo_b[m1]
                m2 = up & feas & np.isfinite(hi_b)
                ratios[m2] = (hi_b[m2] - xb[m2]) / delta[m2]
                targets[m2] = hi_b[m2]
                m3 = up & below
                ratios[m3] = (lo_b[m3] - xb[m3]) / delta[m3]
                targets[m3] = lo_b[m3]
                m4 = down & above
                ratios[m4] = (xb[m4] - hi_b[m4]) / -delta[m4]
                targets[m4] = hi_b[m4]
            else:
                m1 = down & np.isfinite(lo_b)
                ratios[m1] = (xb[m1] - lo_b[m1]) / -delta[m1]
                targets[m1] = lo_b[m1]
                m2 = up & np.isfinite(hi_b)
                ratios[m2] = (hi_b[m2] - xb[m2]) / delta[m2]
                targets[m2] = hi_b[m2]
            ratios = np.maximum(ratios, 0.0)
            r = -1
            if np.isfinite(ratios).any():
                tmin = ratios.min()
                ties = np.flatnonzero(ratios <= tmin + 1e-12)
                if self.bland:
                    r = int(ties[np.argmin(self.basic[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(alpha[ties]))])
                theta = float(ratios[r])
            flip = self.hi[q] - self.lo[q]
            if math.isfinite(flip) and flip <= theta:
                self._tick(flip)
                self.x[self.basic] += delta * flip
                if direction > 0:
                    st[q] = _AT_UPPER
                    self.x[q] = self.hi[q]
                else:
                    st[q] = _AT_LOWER
                    self.x[q] = self.lo[q]
                continue
            if r < 0:
                if phase1:
                    # Numerical trouble: an improving phase-1 ray cannot exist.
                    self._refactor()
                    self._compute_x()
                    self.bland = True
                    self.iterations += 1
                    continue
                return LpStatus.UNBOUNDED

            self._tick(theta)
            self.x[self.basic] += delta * theta
            self.x[q] += direction * theta
            p = int(self.basic[r])
            self.x[p] = targets[r]
            st[p] = _AT_LOWER if targets[r] == self.lo[p] else _AT_UPPER
            st[q] = _BASIC
            self._pivot(r, q, alpha)

    # -- dual simplex ------------------------------------------------------
    def _dual(self) -> LpStatus:
        st = self.status
        while True:
            if self.iterations >= self.limit:
                return LpStatus.ITERATION_LIMIT
            infeas = self._infeasibility()
            if infeas.max(initial=0.0) <= FEAS_TOL:
                return LpStatus.OPTIMAL
            _, d = self._reduced_costs(self.cost)
            if self.bland:
                rows = np.flatnonzero(infeas > FEAS_TOL)
                r = int(rows[np.argmin(self.basic[rows])])
            else:
                r = int(np.argmax(infeas))
            p = int(self.basic[r])
            to_lower = self.x[p] < self.lo[p]
            row = self.binv[r] @ self.A
            nb = (st != _BASIC) & ~self.fixed
            can_inc = nb & ((st == _AT_LOWER) | (st == _FREE))
            can_dec = nb & ((st == _AT_UPPER) | (st == _FREE))
            if to_lower:
                elig = (can_inc & (row < -PIVOT_TOL)) | (can_dec & (row > PIVOT_TOL))
            else:
                elig = (can_inc & (row > PIVOT_TOL)) | (can_dec & (row < -PIVOT_TOL))
            if not elig.any():
                return LpStatus.INFEASIBLE
            idx = np.flatnonzero(elig)
            ratios = np.abs(d[idx]) / np.abs(row[idx])
            rmin = ratios.min()
            ties = idx[ratios <= rmin + 1e-12]
            if self.bland:
                q = int(ties[0])
            else:
                q = int(ties[np.argmax(np.abs(row[ties]))])
            alpha = self.binv @ self.A[:, q]
            target = self.lo[p] if to_lower else self.hi[p]
            step = (self.x[p] - target) / alpha[r]
            self._tick(float(rmin))
            self.x[self.basic] -= alpha * step
            self.x[q] += step
            self.x[p] = target
            st[p] = _AT_LOWER if to_lower else _AT_UPPER
            st[q] = _BASIC
            self._pivot(r, q, alpha)

    # -- driver --------------------------------------------------------------
    def _optimize(self) -> LpStatus:
        self._compute_x()
        if self._infeasibility().max(initial=0.0) > FEAS_TOL:
            _, d = self._reduced_costs(self.cost)
            if self._dual_feasible(d):
                status = self._dual()
                if status is LpStatus.ITERATION_LIMIT:
                    return status
                if status is LpStatus.OPTIMAL:
                    return self._primal(phase1=False)
            status = self._primal(phase1=True)
            if status is not None:
                return status
        return self._primal(phase1=False)

    def run(self) -> LpSolution:
        status = self._optimize()
        if status is LpStatus.OPTIMAL:
            # Clean up drift with a fresh factorization; resume if it exposed trouble.
            for _ in range(3):
                try:
                    self._refactor()
                except _Singular:
                    self._slack_basis()
                self._compute_x()
                if self._infeasibility().max(initial=0.0) <= KKT_TOL:
                    _, d = self._reduced_costs(self.cost)
                    if self._dual_feasible(d):
                        break
                status = self._optimize()
                if status is not LpStatus.OPTIMAL:
                    break
        return self._result(status)

    def _result(self, status: LpStatus) -> LpSolution:
        n = self.n
        y, d = self._reduced_costs(self.cost)
        x = self.x[:n].copy()
        if status is LpStatus.OPTIMAL:
            # Snap nonbasic structurals onto their bounds exactly.
            x = np.clip(x, self.model.lower, self.model.upper)
            objective = float(self.model.objective @ x)
            dual_obj = dual_objective(self.model, y)
        else:
            objective = math.inf if status is LpStatus.INFEASIBLE else -math.inf
            if status is LpStatus.ITERATION_LIMIT:
                objective = math.nan
            dual_obj = math.nan
            y = np.zeros(self.m) if status is not LpStatus.OPTIMAL else y
        basis = Basis(
            basic=self.basic.copy(),
            status=self.status.copy(),
            num_vars=n,
            _inverse=self.binv.copy(),
            _matrix=self.model.matrix,
        )
        return LpSolution(
            status=status,
            primal=x,
            dual=y,
            objective=objective,
            basis=basis,
            iterations=self.iterations,
            reduced_costs=d[:n],
            dual_objective=dual_obj,
        )
