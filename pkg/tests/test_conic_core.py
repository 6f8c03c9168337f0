"""Solver-layer regression suite: analytic conic problems with known
optima, the Hermitian embedding identities, rank-one extraction, and the
fractional-program recovery map."""
import numpy as np
import pytest

from dmswipt._errors import DegenerateSolutionError
from dmswipt.conic_core import (
    ConicProgram,
    LinearFunc,
    MatrixVar,
    ScalarVar,
    SocBlock,
    SocConstraint,
    SolverOptions,
    VecVar,
    charnes_cooper_recover,
    dump_program,
    embed_hermitian,
    eq,
    ge,
    le,
    lift_hermitian,
    psd_clamp,
    rank_one_extract,
    solve,
    unembed_hermitian,
)

TOL = 1e-6


ACCURATE = SolverOptions().with_backends("clarabel", "scs")


def _solve(prog):
    result = solve(prog, ACCURATE)
    assert result.status == "optimal", result.raw_status
    return result


def _basis(n, i, j):
    out = np.zeros((n, n), dtype=np.complex128)
    out[i, j] = 1.0
    if i != j:
        out[j, i] = 1.0
    return out


def test_embedding_trace_identity():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = 0.5 * (a + a.conj().T)
        x = x @ x.conj().T
        lhs = float(np.trace(embed_hermitian(a) @ lift_hermitian(x)).real)
        assert lhs == pytest.approx(float(np.trace(a @ x).real), rel=1e-12)
        np.testing.assert_allclose(
            unembed_hermitian(lift_hermitian(x), n), x, atol=1e-13
        )


def test_psd_clamp_projects_and_preserves():
    rng = np.random.default_rng(1)
    b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    psd = b @ b.conj().T
    assert psd_clamp(psd) is psd or np.allclose(psd_clamp(psd), psd)
    dented = psd - 1.5 * min(np.linalg.eigvalsh(psd)) * np.eye(4)
    dented = psd.copy()
    dented[0, 0] = -1.0
    clamped = psd_clamp(0.5 * (dented + dented.conj().T))
    eigs = np.linalg.eigvalsh(clamped)
    assert eigs[0] >= -1e-12


def test_p1_diagonal_floor():
    prog = ConicProgram(
        matrix_vars=(MatrixVar("X", 2),),
        sense="minimize",
        objective=LinearFunc.trace("X", np.eye(2)),
        ineq_constraints=(ge(LinearFunc.trace("X", _basis(2, 0, 0)), 1.0),),
    )
    assert _solve(prog).objective == pytest.approx(1.0, abs=TOL)


def test_p2_norm_of_constants():
    prog = ConicProgram(
        scalar_vars=(ScalarVar("t", lower=0.0),),
        sense="minimize",
        objective=LinearFunc.scalar("t"),
        soc_constraints=(
            SocConstraint(
                affine_rows=(LinearFunc.const(3.0), LinearFunc.const(4.0)),
                bound=LinearFunc.scalar("t"),
            ),
        ),
    )
    assert _solve(prog).objective == pytest.approx(5.0, abs=TOL)


def test_p3_largest_eigenvalue():
    a = np.array([[2.0, 1.0], [1.0, 2.0]], dtype=np.complex128)
    prog = ConicProgram(
        matrix_vars=(MatrixVar("X", 2),),
        sense="maximize",
        objective=LinearFunc.trace("X", a),
        eq_constraints=(eq(LinearFunc.trace("X", np.eye(2)), 1.0),),
    )
    assert _solve(prog).objective == pytest.approx(3.0, abs=TOL)


def test_p4_complex_least_squares():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    x_star, residual, _, _ = np.linalg.lstsq(a, b, rcond=None)
    best = float(np.linalg.norm(a @ x_star - b))

    eqs = []
    for i in range(3):
        e_i = np.zeros(3, dtype=np.complex128)
        e_i[i] = 1.0
        row = a[i].conj()
        re_func = LinearFunc.vec("r", e_i) - LinearFunc.vec("x", row)
        im_func = LinearFunc.vec("r", 1j * e_i) - LinearFunc.vec("x", 1j * row)
        eqs.append(eq(re_func, -b[i].real))
        eqs.append(eq(im_func, -b[i].imag))
    prog = ConicProgram(
        vec_vars=(VecVar("x", 2), VecVar("r", 3)),
        scalar_vars=(ScalarVar("t", lower=0.0),),
        sense="minimize",
        objective=LinearFunc.scalar("t"),
        eq_constraints=tuple(eqs),
        soc_constraints=(
            SocConstraint(
                blocks=(SocBlock("r", np.eye(3, dtype=np.complex128)),),
                bound=LinearFunc.scalar("t"),
            ),
        ),
    )
    result = _solve(prog)
    assert result.objective == pytest.approx(best, abs=1e-5)
    np.testing.assert_allclose(result.values["x"], x_star, atol=1e-4)


def test_p5_infeasible_trace():
    prog = ConicProgram(
        matrix_vars=(MatrixVar("X", 2),),
        sense="minimize",
        objective=LinearFunc.trace("X", np.eye(2)),
        eq_constraints=(eq(LinearFunc.trace("X", np.eye(2)), -1.0),),
    )
    assert solve(prog, ACCURATE).status == "infeasible"


def test_p6_unbounded_trace():
    prog = ConicProgram(
        matrix_vars=(MatrixVar("X", 2),),
        sense="maximize",
        objective=LinearFunc.trace("X", np.eye(2)),
    )
    assert solve(prog, ACCURATE).status == "unbounded"


def test_p7_smallest_eigenvalue():
    a = np.array([[4.0, 1.0 + 1j], [1.0 - 1j, 3.0]], dtype=np.complex128)
    lam_min = float(np.linalg.eigvalsh(a)[0])
    prog = ConicProgram(
        matrix_vars=(MatrixVar("X", 2),),
        sense="minimize",
        objective=LinearFunc.trace("X", a),
        eq_constraints=(eq(LinearFunc.trace("X", np.eye(2)), 1.0),),
    )
    assert _solve(prog).objective == pytest.approx(lam_min, abs=TOL)


def test_p8_mixed_cone_with_matrix_rows():
    prog = ConicProgram(
        matrix_vars=(MatrixVar("X", 2),),
        scalar_vars=(ScalarVar("t", lower=0.0),),
        sense="minimize",
        objective=LinearFunc.scalar("t"),
        ineq_constraints=(ge(LinearFunc.trace("X", _basis(2, 1, 1)), 3.0),),
        soc_constraints=(
            SocConstraint(
                affine_rows=(
                    LinearFunc.trace("X", _basis(2, 0, 0)),
                    LinearFunc.const(2.0),
                ),
                bound=LinearFunc.scalar("t"),
            ),
        ),
    )
    result = _solve(prog)
    assert result.objective == pytest.approx(2.0, abs=TOL)
    assert result.values["X"][1, 1].real >= 3.0 - 1e-6


def test_p9_fractional_normalization():
    prog = ConicProgram(
        scalar_vars=(ScalarVar("q", lower=0.0), ScalarVar("tau", lower=0.0)),
        sense="maximize",
        objective=LinearFunc.scalar("q", 3.0),
        eq_constraints=(
            eq(LinearFunc.scalar("q") + LinearFunc.scalar("tau"), 1.0),
        ),
        ineq_constraints=(
            le(LinearFunc.scalar("q") - LinearFunc.scalar("tau"), 0.0),
        ),
    )
    assert _solve(prog).objective == pytest.approx(1.5, abs=TOL)


def test_p10_scalar_linear_program():
    prog = ConicProgram(
        scalar_vars=(ScalarVar("x", lower=0.0),),
        sense="maximize",
        objective=LinearFunc.scalar("x"),
        ineq_constraints=(le(LinearFunc.scalar("x"), 5.0),),
    )
    assert _solve(prog).objective == pytest.approx(5.0, abs=TOL)


def test_p11_hyperbolic_cone():
    # || (2, x - y) || <= x + y encodes x y >= 1 on x, y >= 0
    prog = ConicProgram(
        scalar_vars=(ScalarVar("x", lower=0.0), ScalarVar("y", lower=0.0)),
        sense="minimize",
        objective=LinearFunc.scalar("x") + LinearFunc.scalar("y"),
        soc_constraints=(
            SocConstraint(
                affine_rows=(
                    LinearFunc.const(2.0),
                    LinearFunc.scalar("x") - LinearFunc.scalar("y"),
                ),
                bound=LinearFunc.scalar("x") + LinearFunc.scalar("y"),
            ),
        ),
    )
    assert _solve(prog).objective == pytest.approx(2.0, abs=TOL)


def test_both_backends_agree_on_p3():
    a = np.array([[2.0, 1.0], [1.0, 2.0]], dtype=np.complex128)
    prog = ConicProgram(
        matrix_vars=(MatrixVar("X", 2),),
        sense="maximize",
        objective=LinearFunc.trace("X", a),
        eq_constraints=(eq(LinearFunc.trace("X", np.eye(2)), 1.0),),
    )
    for backend in ("clarabel", "scs"):
        result = solve(prog, SolverOptions(backends=(backend,)))
        assert result.status == "optimal"
        assert result.backend == backend
        assert result.objective == pytest.approx(3.0, abs=1e-5)


def test_rank_one_extract_clean_noisy_and_zero():
    rng = np.random.default_rng(6)
    v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    pure = np.outer(v, v.conj())
    ex = rank_one_extract(pure, 1e-4)
    assert ex.within_threshold
    assert ex.residual_ratio < 1e-12
    np.testing.assert_allclose(np.outer(ex.vector, ex.vector.conj()), pure, atol=1e-10)
    # phase convention pins the largest entry to the positive real axis
    pivot = np.argmax(np.abs(ex.vector))
    assert abs(ex.vector[pivot].imag) < 1e-12 and ex.vector[pivot].real > 0

    noisy = pure + 1e-3 * np.eye(5)
    ex_noisy = rank_one_extract(noisy, 1e-6)
    assert not ex_noisy.within_threshold
    assert ex_noisy.residual_ratio > 1e-6

    ex_zero = rank_one_extract(np.zeros((3, 3)), 1e-4)
    assert ex_zero.within_threshold
    np.testing.assert_allclose(ex_zero.vector, 0.0)


def test_charnes_cooper_recover_and_degenerate_tau():
    rng = np.random.default_rng(7)
    q = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    q = q @ q.conj().T
    y = np.eye(3, dtype=np.complex128)
    w, om = charnes_cooper_recover(q, y, 0.25)
    np.testing.assert_allclose(w, q / 0.25, atol=1e-12)
    np.testing.assert_allclose(om, y / 0.25, atol=1e-12)
    assert np.allclose(w, w.conj().T)
    with pytest.raises(DegenerateSolutionError):
        charnes_cooper_recover(q, y, 0.0)


def test_rejects_non_hermitian_coefficient():
    with pytest.raises(ValueError, match="Hermitian"):
        ConicProgram(
            matrix_vars=(MatrixVar("X", 2),),
            sense="minimize",
            objective=LinearFunc.trace("X", np.array([[1.0, 2.0], [0.0, 1.0]])),
        )


def test_rejects_undeclared_variable():
    with pytest.raises(ValueError, match="unknown"):
        ConicProgram(
            matrix_vars=(MatrixVar("X", 2),),
            sense="minimize",
            objective=LinearFunc.trace("Y", np.eye(2)),
        )


def test_dump_program_smoke(tmp_path):
    prog = ConicProgram(
        matrix_vars=(MatrixVar("X", 2),),
        sense="minimize",
        objective=LinearFunc.trace("X", np.eye(2)),
        ineq_constraints=(ge(LinearFunc.trace("X", _basis(2, 0, 0)), 1.0),),
    )
    path = tmp_path / "prog.npz"
    dump_program(prog, str(path))
    assert path.exists() and path.stat().st_size > 0
