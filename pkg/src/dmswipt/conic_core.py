"""Solver-agnostic conic programs over complex Hermitian matrix, complex
vector, and real scalar variables.

Complex Hermitian PSD blocks ride through the real symmetric embedding

    lift(X) = [[Re X, -Im X], [Im X, Re X]],

which preserves positive semidefiniteness in both directions.  The
coefficient-side embedding ``embed_hermitian`` folds in a factor 1/2 so
that pairing an embedded coefficient with the unscaled lifted variable
reproduces the complex trace exactly:

    Tr(C X) = <embed_hermitian(C), lift(X)>_F     (C, X Hermitian).

Programs are declared with :class:`ConicProgram` and dispatched by
:func:`solve` to interior-point and first-order backends in a
configurable order.  The first backend reporting a clean optimum (or a
clean infeasibility or unboundedness certificate) wins; if every backend
finishes with only reduced-accuracy answers, the best of those is
returned with ``reduced_accuracy`` set rather than failing outright.
Dense data only; the problem sizes here are a few thousand embedded
rows at most.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import cvxpy as cp
import numpy as np

from ._errors import DegenerateSolutionError, SolverFailureError

__all__ = [
    "MatrixVar",
    "VecVar",
    "ScalarVar",
    "LinearFunc",
    "Constraint",
    "SocBlock",
    "SocConstraint",
    "ConicProgram",
    "SolverOptions",
    "SolverResult",
    "RankOneExtraction",
    "embed_hermitian",
    "lift_hermitian",
    "unembed_hermitian",
    "solve",
    "rank_one_extract",
    "charnes_cooper_recover",
    "dump_program",
]


def _check_hermitian(matrix: np.ndarray, what: str):
    scale = max(1.0, float(np.abs(matrix).max(initial=0.0)))
    if np.abs(matrix - matrix.conj().T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError(f"{what} must be Hermitian")


def embed_hermitian(matrix: np.ndarray) -> np.ndarray:
    """Coefficient embedding with the 1/2 trace-compensation folded in."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    re, im = matrix.real, matrix.imag
    return 0.5 * np.block([[re, -im], [im, re]])


def lift_hermitian(matrix: np.ndarray) -> np.ndarray:
    """Unscaled lifting of a Hermitian point into variable space."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    re, im = matrix.real, matrix.imag
    return np.block([[re, -im], [im, re]])


def unembed_hermitian(lifted: np.ndarray, dim: int) -> np.ndarray:
    """Recover the complex Hermitian matrix from a lifted variable value.

    Averages the two real diagonal blocks and the two skew blocks, which
    also projects out any structure-breaking component a real solver may
    have introduced.
    """
    a = lifted[:dim, :dim]
    d = lifted[dim:, dim:]
    b = lifted[:dim, dim:]
    c = lifted[dim:, :dim]
    out = 0.5 * (a + d) + 0.5j * (c - b)
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True)
class MatrixVar:
    """Complex Hermitian PSD matrix variable of side ``dim``."""

    name: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("matrix variable dimension must be positive")


@dataclass(frozen=True)
class VecVar:
    """Complex vector variable of length ``dim``."""

    name: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("vector variable dimension must be positive")


@dataclass(frozen=True)
class ScalarVar:
    """Real scalar variable, optionally bounded below."""

    name: str
    lower: float = None


@dataclass(frozen=True)
class LinearFunc:
    """Real-valued linear functional of the declared variables.

    Matrix terms contribute Tr(C X) with C Hermitian (the trace is then
    automatically real), vector terms contribute Re(c^H x), scalar terms
    a x, plus a real constant.
    """

    matrix_terms: tuple = ()
    vec_terms: tuple = ()
    scalar_terms: tuple = ()
    constant: float = 0.0

    def __post_init__(self):
        for _, coeff in self.matrix_terms:
            _check_hermitian(np.asarray(coeff), "matrix coefficient")

    @classmethod
    def trace(cls, name: str, coeff: np.ndarray) -> "LinearFunc":
        return cls(matrix_terms=((name, np.asarray(coeff, dtype=np.complex128)),))

    @classmethod
    def vec(cls, name: str, coeff: np.ndarray) -> "LinearFunc":
        return cls(vec_terms=((name, np.asarray(coeff, dtype=np.complex128)),))

    @classmethod
    def scalar(cls, name: str, coeff: float = 1.0) -> "LinearFunc":
        return cls(scalar_terms=((name, float(coeff)),))

    @classmethod
    def const(cls, value: float) -> "LinearFunc":
        return cls(constant=float(value))

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = LinearFunc.const(other)
        return LinearFunc(
            matrix_terms=self.matrix_terms + other.matrix_terms,
            vec_terms=self.vec_terms + other.vec_terms,
            scalar_terms=self.scalar_terms + other.scalar_terms,
            constant=self.constant + other.constant,
        )

    __radd__ = __add__

    def __mul__(self, factor: float):
        factor = float(factor)
        return LinearFunc(
            matrix_terms=tuple((n, factor * c) for n, c in self.matrix_terms),
            vec_terms=tuple((n, factor * c) for n, c in self.vec_terms),
            scalar_terms=tuple((n, factor * c) for n, c in self.scalar_terms),
            constant=factor * self.constant,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = LinearFunc.const(other)
        return self + (-other)

    def references(self):
        for name, _ in self.matrix_terms:
            yield name
        for name, _ in self.vec_terms:
            yield name
        for name, _ in self.scalar_terms:
            yield name

    @property
    def has_variables(self) -> bool:
        return bool(self.matrix_terms or self.vec_terms or self.scalar_terms)

    def value(self, assignment: dict) -> float:
        total = self.constant
        for name, coeff in self.matrix_terms:
            total += float(np.trace(coeff @ assignment[name]).real)
        for name, coeff in self.vec_terms:
            total += float(np.real(np.vdot(coeff, assignment[name])))
        for name, coeff in self.scalar_terms:
            total += coeff * float(assignment[name])
        return total


@dataclass(frozen=True)
class Constraint:
    """``func == rhs`` or ``func <= rhs`` depending on ``sense``."""

    func: LinearFunc
    rhs: float
    sense: str = "le"

    def __post_init__(self):
        if self.sense not in ("le", "eq"):
            raise ValueError("sense must be 'le' or 'eq'")


def le(func: LinearFunc, rhs: float) -> Constraint:
    return Constraint(func=func, rhs=float(rhs), sense="le")


def ge(func: LinearFunc, rhs: float) -> Constraint:
    return Constraint(func=-func, rhs=-float(rhs), sense="le")


def eq(func: LinearFunc, rhs: float) -> Constraint:
    return Constraint(func=func, rhs=float(rhs), sense="eq")


@dataclass(frozen=True)
class SocBlock:
    """A bundle of cone rows of the form ``matrix @ x`` for vector var x."""

    var: str
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.complex128))

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SocConstraint:
    """``norm([blocks; affine_rows]) <= bound``.

    The reported cone dimension counts block rows plus affine rows that
    actually reference variables; constant rows are excluded, matching
    the convention of the complexity accounting.
    """

    blocks: tuple = ()
    affine_rows: tuple = ()
    bound: LinearFunc = field(default_factory=lambda: LinearFunc.const(0.0))

    @property
    def dimension(self) -> int:
        dim = sum(blk.rows for blk in self.blocks)
        dim += sum(1 for row in self.affine_rows if row.has_variables)
        return dim


@dataclass(frozen=True)
class ConicProgram:
    """Declared conic program; all referenced variables must be declared."""

    matrix_vars: tuple = ()
    vec_vars: tuple = ()
    scalar_vars: tuple = ()
    sense: str = "maximize"
    objective: LinearFunc = field(default_factory=lambda: LinearFunc.const(0.0))
    eq_constraints: tuple = ()
    ineq_constraints: tuple = ()
    soc_constraints: tuple = ()

    def __post_init__(self):
        if self.sense not in ("maximize", "minimize"):
            raise ValueError("sense must be 'maximize' or 'minimize'")
        names = {}
        for var in self.matrix_vars + self.vec_vars + self.scalar_vars:
            if var.name in names:
                raise ValueError(f"duplicate variable name {var.name!r}")
            names[var.name] = var
        self._validate_func(self.objective, names)
        for con in self.eq_constraints + self.ineq_constraints:
            self._validate_func(con.func, names)
        for soc in self.soc_constraints:
            for blk in soc.blocks:
                var = names.get(blk.var)
                if not isinstance(var, VecVar):
                    raise ValueError(f"SOC block references unknown vector {blk.var!r}")
                if blk.matrix.shape[1] != var.dim:
                    raise ValueError(f"SOC block shape mismatch on {blk.var!r}")
            for row in soc.affine_rows:
                self._validate_func(row, names)
            self._validate_func(soc.bound, names)

    def _validate_func(self, func: LinearFunc, names: dict):
        for name, coeff in func.matrix_terms:
            var = names.get(name)
            if not isinstance(var, MatrixVar):
                raise ValueError(f"trace term references unknown matrix {name!r}")
            if np.asarray(coeff).shape != (var.dim, var.dim):
                raise ValueError(f"trace coefficient shape mismatch on {name!r}")
        for name, coeff in func.vec_terms:
            var = names.get(name)
            if not isinstance(var, VecVar):
                raise ValueError(f"vector term references unknown vector {name!r}")
            if np.asarray(coeff).shape != (var.dim,):
                raise ValueError(f"vector coefficient shape mismatch on {name!r}")
        for name, _ in func.scalar_terms:
            if not isinstance(names.get(name), ScalarVar):
                raise ValueError(f"scalar term references unknown scalar {name!r}")

    def soc_dimensions(self):
        """Cone dimensions in declaration order (constant rows excluded)."""
        return [soc.dimension for soc in self.soc_constraints]

    @property
    def num_linear_constraints(self) -> int:
        return len(self.eq_constraints) + len(self.ineq_constraints)

    def slacks(self, assignment: dict) -> np.ndarray:
        """Constraint slacks at a candidate point (negative = violated).

        Order: equalities (as -|residual|), inequalities, SOC cones,
        scalar lower bounds.
        """
        out = []
        for con in self.eq_constraints:
            out.append(-abs(con.func.value(assignment) - con.rhs))
        for con in self.ineq_constraints:
            out.append(con.rhs - con.func.value(assignment))
        for soc in self.soc_constraints:
            total = 0.0
            for blk in soc.blocks:
                total += float(np.linalg.norm(blk.matrix @ assignment[blk.var]) ** 2)
            for row in soc.affine_rows:
                total += row.value(assignment) ** 2
            out.append(soc.bound.value(assignment) - np.sqrt(total))
        for var in self.scalar_vars:
            if var.lower is not None:
                out.append(float(assignment[var.name]) - var.lower)
        return np.asarray(out)


@dataclass(frozen=True)
class SolverOptions:
    """Backend order and accuracy targets.

    First-order backends cannot reliably reach 1e-8 on these problems,
    so their tolerance floors at 1e-6; interior-point backends receive
    the stated tolerances directly.  ``max_iterations`` applies to
    interior-point backends; first-order backends get 50x.
    """

    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    max_iterations: int = 200
    verbose: bool = False
    backends: tuple = ("scs", "clarabel")

    def with_backends(self, *backends: str) -> "SolverOptions":
        return replace(self, backends=tuple(backends))


@dataclass(frozen=True)
class SolverResult:
    """Outcome of one conic solve.

    ``values`` maps variable names to complex matrices, complex vectors,
    or floats, and is present exactly when ``status == 'optimal'``.
    ``iterations`` is the backend's deterministic iteration count;
    ``solve_time_ms`` is wall time and varies run to run.
    """

    status: str
    values: dict = None
    objective: float = None
    solve_time_ms: float = 0.0
    iterations: int = 0
    backend: str = ""
    raw_status: str = ""
    reduced_accuracy: bool = False


_CLEAN_TERMINAL = {cp.INFEASIBLE: "infeasible", cp.UNBOUNDED: "unbounded"}
_WEAK_TERMINAL = {
    cp.INFEASIBLE_INACCURATE: "infeasible",
    cp.UNBOUNDED_INACCURATE: "unbounded",
}


def _backend_solve(problem: cp.Problem, backend: str, options: SolverOptions):
    if backend == "scs":
        eps = max(min(options.abs_tol, options.rel_tol), 1e-6)
        problem.solve(
            solver=cp.SCS,
            verbose=options.verbose,
            eps_abs=eps,
            eps_rel=eps,
            max_iters=options.max_iterations * 50,
        )
    elif backend == "clarabel":
        problem.solve(
            solver=cp.CLARABEL,
            verbose=options.verbose,
            tol_gap_abs=options.abs_tol,
            tol_gap_rel=options.rel_tol,
            tol_feas=options.abs_tol,
            max_iter=options.max_iterations,
        )
    else:
        raise ValueError(f"unknown backend {backend!r}")


def solve(program: ConicProgram, options: SolverOptions = None) -> SolverResult:
    """Dispatch a :class:`ConicProgram` to the configured backends.

    Backends are tried in order.  A clean optimum or a clean
    infeasibility or unboundedness certificate returns immediately.
    Reduced-accuracy outcomes are remembered; if no backend produces a
    clean answer the best remembered one is returned with
    ``reduced_accuracy`` set.  If nothing usable came back at all the
    result status is ``numerical_failure``.
    """
    options = options or SolverOptions()
    cvx_vars = {}
    constraints = []
    for var in program.matrix_vars:
        cvx_vars[var.name] = cp.Variable((2 * var.dim, 2 * var.dim), PSD=True)
    for var in program.vec_vars:
        cvx_vars[var.name] = cp.Variable(var.dim, complex=True)
    for var in program.scalar_vars:
        v = cp.Variable()
        cvx_vars[var.name] = v
        if var.lower is not None:
            constraints.append(v >= var.lower)

    def build_expr(func: LinearFunc):
        expr = func.constant
        for name, coeff in func.matrix_terms:
            expr = expr + cp.sum(cp.multiply(embed_hermitian(coeff), cvx_vars[name]))
        for name, coeff in func.vec_terms:
            expr = expr + cp.real(cp.sum(cp.multiply(np.conj(coeff), cvx_vars[name])))
        for name, coeff in func.scalar_terms:
            expr = expr + coeff * cvx_vars[name]
        return expr

    for con in program.eq_constraints:
        constraints.append(build_expr(con.func) == con.rhs)
    for con in program.ineq_constraints:
        constraints.append(build_expr(con.func) <= con.rhs)
    for soc in program.soc_constraints:
        parts = [blk.matrix @ cvx_vars[blk.var] for blk in soc.blocks]
        for row in soc.affine_rows:
            parts.append(cp.reshape(build_expr(row), (1,), order="C"))
        constraints.append(cp.norm(cp.hstack(parts), 2) <= build_expr(soc.bound))

    objective_expr = build_expr(program.objective)
    if program.sense == "maximize":
        objective = cp.Maximize(objective_expr)
    else:
        objective = cp.Minimize(objective_expr)
    problem = cp.Problem(objective, constraints)

    def snapshot(backend, raw, reduced):
        values = {}
        for var in program.matrix_vars:
            values[var.name] = unembed_hermitian(np.asarray(cvx_vars[var.name].value), var.dim)
        for var in program.vec_vars:
            values[var.name] = np.asarray(cvx_vars[var.name].value, dtype=np.complex128)
        for var in program.scalar_vars:
            values[var.name] = float(cvx_vars[var.name].value)
        stats = problem.solver_stats
        iters = int(stats.num_iters) if stats and stats.num_iters is not None else 0
        return SolverResult(
            status="optimal",
            values=values,
            objective=float(problem.value),
            solve_time_ms=(time.perf_counter() - t_start) * 1e3,
            iterations=iters,
            backend=backend,
            raw_status=raw,
            reduced_accuracy=reduced,
        )

    t_start = time.perf_counter()
    best_inaccurate = None
    weak_terminal = None
    failures = []
    for backend in options.backends:
        try:
            _backend_solve(problem, backend, options)
        except cp.error.SolverError as exc:
            failures.append(f"{backend}: {exc}")
            continue
        except BaseException as exc:
            # native solver cores can panic instead of reporting failure;
            # treat that as this backend giving up, let the rest through
            if type(exc).__name__ != "PanicException":
                raise
            failures.append(f"{backend}: panic {exc}")
            continue
        raw = problem.status
        if raw == cp.OPTIMAL:
            return snapshot(backend, raw, reduced=False)
        if raw == cp.OPTIMAL_INACCURATE:
            if best_inaccurate is None:
                best_inaccurate = snapshot(backend, raw, reduced=True)
            continue
        if raw in _CLEAN_TERMINAL:
            return SolverResult(
                status=_CLEAN_TERMINAL[raw],
                solve_time_ms=(time.perf_counter() - t_start) * 1e3,
                iterations=_iters(problem),
                backend=backend,
                raw_status=raw,
            )
        if raw in _WEAK_TERMINAL:
            if weak_terminal is None:
                weak_terminal = SolverResult(
                    status=_WEAK_TERMINAL[raw],
                    solve_time_ms=(time.perf_counter() - t_start) * 1e3,
                    iterations=_iters(problem),
                    backend=backend,
                    raw_status=raw,
                    reduced_accuracy=True,
                )
            continue
        failures.append(f"{backend}: status {raw}")
    if best_inaccurate is not None:
        return best_inaccurate
    if weak_terminal is not None:
        return weak_terminal
    return SolverResult(
        status="numerical_failure",
        solve_time_ms=(time.perf_counter() - t_start) * 1e3,
        backend="",
        raw_status="; ".join(failures) or "no backend attempted",
    )


def _iters(problem: cp.Problem) -> int:
    stats = problem.solver_stats
    return int(stats.num_iters) if stats and stats.num_iters is not None else 0


@dataclass(frozen=True)
class RankOneExtraction:
    """Dominant rank-one factor of a PSD matrix and the quality measure."""

    vector: np.ndarray
    residual_ratio: float
    within_threshold: bool


def solve_with_margins(build, margins, options: SolverOptions, validate):
    """Solve ``build(margin)`` over a widening slack ladder.

    Re-solves that pin a constraint at another problem's optimum sit on
    the boundary of feasibility, where a backend can fail outright or
    return a low-accuracy solution that is numerical garbage.  Each rung
    trades a vanishing amount of optimality for numerical room.  Returns
    the first (result, margin) whose status is optimal and whose values
    pass ``validate(values, margin)``; raises
    :class:`~dmswipt._errors.SolverFailureError` when the ladder is
    exhausted.
    """
    failures = []
    for margin in margins:
        result = solve(build(margin), options)
        if result.status == "optimal":
            if validate(result.values, margin):
                return result, margin
            failures.append(f"margin {margin:g}: {result.raw_status} failed validation")
        else:
            failures.append(f"margin {margin:g}: {result.status}")
    raise SolverFailureError("repair ladder exhausted: " + "; ".join(failures))


def psd_clamp(matrix: np.ndarray) -> np.ndarray:
    """Nearest positive semidefinite matrix in Frobenius norm.

    Hermitizes, then zeroes negative eigenvalues.  Cleans the numerical
    dust that interior-point solutions leave on covariance iterates.
    """
    sym = 0.5 * (matrix + matrix.conj().T)
    w, v = np.linalg.eigh(sym)
    if w[0] >= 0.0:
        return sym
    return (v * np.maximum(w, 0.0)) @ v.conj().T


def rank_one_extract(matrix: np.ndarray, threshold: float = 1e-4) -> RankOneExtraction:
    """Dominant eigenpair factorization sqrt(lambda1) u1.

    ``residual_ratio`` is lambda2 / lambda1 (zero for 1x1 input or a zero
    matrix).  The phase of the returned vector is normalized so its
    largest-magnitude entry is real positive.
    """
    matrix = 0.5 * (np.asarray(matrix, dtype=np.complex128) + np.asarray(matrix).conj().T)
    w, v = np.linalg.eigh(matrix)
    lam1 = float(w[-1])
    if lam1 <= 0.0:
        return RankOneExtraction(
            vector=np.zeros(matrix.shape[0], dtype=np.complex128),
            residual_ratio=0.0,
            within_threshold=True,
        )
    lam2 = float(max(w[-2], 0.0)) if w.shape[0] > 1 else 0.0
    vec = np.sqrt(lam1) * v[:, -1]
    pivot = np.argmax(np.abs(vec))
    phase = vec[pivot] / abs(vec[pivot])
    vec = vec * np.conj(phase)
    ratio = lam2 / lam1
    return RankOneExtraction(vector=vec, residual_ratio=ratio, within_threshold=ratio <= threshold)


def charnes_cooper_recover(Q: np.ndarray, Upsilon: np.ndarray, tau: float):
    """Undo the fractional-program change of variables (Q, Upsilon, tau).

    Returns (Q / tau, Upsilon / tau), Hermitized.  A nonpositive tau
    means the solver returned a degenerate scaling and the solution
    cannot be mapped back.
    """
    if tau <= 0.0:
        raise DegenerateSolutionError(f"nonpositive scale tau = {tau!r}")
    w_tilde = np.asarray(Q, dtype=np.complex128) / tau
    omega = np.asarray(Upsilon, dtype=np.complex128) / tau
    w_tilde = 0.5 * (w_tilde + w_tilde.conj().T)
    omega = 0.5 * (omega + omega.conj().T)
    return w_tilde, omega


def dump_program(program: ConicProgram, path: str):
    """Write a plain-text dump of the program for offline inspection.

    Lists every variable, the objective, and each constraint with the
    Frobenius norms of its embedded coefficients and its scalar bounds,
    using stable field names so dumps can be diffed across runs.
    """

    def describe(func: LinearFunc):
        parts = []
        for name, coeff in func.matrix_terms:
            parts.append(f"trace[{name}] fro={np.linalg.norm(embed_hermitian(coeff)):.9e}")
        for name, coeff in func.vec_terms:
            parts.append(f"vec[{name}] norm={np.linalg.norm(coeff):.9e}")
        for name, coeff in func.scalar_terms:
            parts.append(f"scalar[{name}] coeff={coeff:.9e}")
        parts.append(f"const={func.constant:.9e}")
        return " ".join(parts)

    lines = []
    for var in program.matrix_vars:
        lines.append(f"matrix_var name={var.name} dim={var.dim} embedded_dim={2 * var.dim}")
    for var in program.vec_vars:
        lines.append(f"vec_var name={var.name} dim={var.dim}")
    for var in program.scalar_vars:
        lower = "none" if var.lower is None else f"{var.lower:.9e}"
        lines.append(f"scalar_var name={var.name} lower={lower}")
    lines.append(f"objective sense={program.sense} {describe(program.objective)}")
    for i, con in enumerate(program.eq_constraints):
        lines.append(f"eq[{i}] {describe(con.func)} rhs={con.rhs:.9e}")
    for i, con in enumerate(program.ineq_constraints):
        lines.append(f"ineq[{i}] {describe(con.func)} rhs={con.rhs:.9e}")
    for i, soc in enumerate(program.soc_constraints):
        blocks = " ".join(
            f"block[{blk.var}] rows={blk.rows} fro={np.linalg.norm(blk.matrix):.9e}"
            for blk in soc.blocks
        )
        rows = " ".join(f"row[{j}] {describe(r)}" for j, r in enumerate(soc.affine_rows))
        lines.append(
            f"soc[{i}] dim={soc.dimension} {blocks} {rows} bound: {describe(soc.bound)}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
