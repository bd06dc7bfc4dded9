import numpy as np
import pytest

from corptax import model as M
from corptax.model import IDX, NVAR, VARS, ModelError, ModelSpec
from corptax.newton import SolverError
from corptax.scenarios import ETA_2017, POLICY_2017, POLICY_TCJA
from corptax.steady_state import solve_steady_state
from corptax.taxcode import TaxPolicy
from corptax.transition import (
    HorizonError, finite_difference_jacobian, flat_path, initial_guess, jacobian_structure,
    make_problem, solve_transition, stacked_jacobian, terminal_gap,
)

RATE_CUT = TaxPolicy.make(0.21, POLICY_2017.rate_dbal, POLICY_2017.tau_indiv)


def ext_spec():
    return ModelSpec(POLICY_2017, variant="extended", eta=ETA_2017)


def relative_gap(A, B):
    return np.max(np.abs(A - B) / np.maximum(np.abs(B), 1.0))


@pytest.mark.parametrize("variant", ["baseline", "extended"])
def test_null_reform_is_flat(variant):
    spec = ModelSpec(POLICY_2017, variant=variant)
    pre = solve_steady_state(spec)
    path = solve_transition(make_problem(pre, spec, terminal=pre, horizon=80))
    flat = flat_path(pre, 80)
    assert flat.residual < 1e-12
    assert relative_gap(path.X, flat.X) < 1e-9


def test_horizon_doubling_leaves_early_path_unchanged(ss2017_ext):
    post = solve_steady_state(ss2017_ext.spec.with_policy(POLICY_TCJA))
    paths = [solve_transition(make_problem(ss2017_ext, post.spec, horizon=T, terminal=post)) for T in (300, 600)]
    assert relative_gap(paths[1].X[:20], paths[0].X[:20]) < 1e-6


@pytest.mark.parametrize("variant", ["baseline", "extended"])
def test_jacobian_matches_finite_differences(variant):
    spec = ModelSpec(POLICY_2017, variant=variant)
    pre = solve_steady_state(spec)
    problem = make_problem(pre, spec.with_policy(POLICY_TCJA), horizon=4)
    rng = np.random.default_rng(7)
    base = initial_guess(problem, ramp=4).ravel()
    for _ in range(3):
        z = base * (1.0 + 0.02 * rng.uniform(-1, 1, base.size))
        Jcs = stacked_jacobian(problem, z).toarray()
        Jfd = finite_difference_jacobian(problem, z)
        err = np.abs(Jcs - Jfd) / np.maximum(np.abs(Jfd), 1.0)
        assert err.max() < 1e-6


def test_jacobian_structure_small_horizon(ss2017, ss2017_ext):
    for pre in (ss2017, ss2017_ext):
        problem = make_problem(pre, pre.spec.with_policy(POLICY_TCJA), horizon=3)
        s = jacobian_structure(problem)
        assert (s.n_diagonal_blocks, s.n_upper_blocks, s.n_lower_blocks) == (3, 2, 2)
        assert s.block_size == NVAR
        J = stacked_jacobian(problem, initial_guess(problem).ravel())
        outside = J.multiply(~s.full_pattern().toarray())
        assert outside.nnz == 0 or np.max(np.abs(outside.toarray())) == 0.0


def test_old_vintage_decays_geometrically(tcja):
    kb = tcja.reform["kb"]
    rate = tcja.pre.spec.policy.rate_dbal
    np.testing.assert_allclose(kb[1:], (1.0 - rate) * kb[:-1], rtol=1e-12)
    assert tcja.reform["ka"][0] == pytest.approx(0.0, abs=1e-14)


def test_goods_markets_clear_every_period(tcja):
    path = tcja.reform
    Xm, Xp = path.problem.shifted(path.X)
    r = M.residuals(path.spec, path.problem.vintage, Xm, path.X, Xp, path.t)
    for eq in ("goods_c", "goods_p"):
        assert np.max(np.abs(r[:, M.EQUATIONS.index(eq)])) < 1e-9
    assert path.residual < 1e-9


def test_tail_settles_at_terminal_state(tcja):
    gap = terminal_gap(tcja.reform.problem, tcja.reform.X)
    T = tcja.reform.X.shape[0]
    assert gap[int(0.9 * T):].max() < 1e-6


def test_vintage_collapse_matches_single_stock(ss2017_ext):
    """With one schedule for both vintages the split is pure bookkeeping."""
    post_spec = ss2017_ext.spec.with_policy(RATE_CUT)
    post = solve_steady_state(post_spec)
    split = solve_transition(make_problem(ss2017_ext, post_spec, True, 200, terminal=post))
    moved = solve_transition(make_problem(ss2017_ext, post_spec, False, 200, terminal=post))
    keep = [IDX[v] for v in VARS if v not in ("kb", "ka", "lam_b")]
    assert relative_gap(split.X[:, keep], moved.X[:, keep]) < 1e-9
    # single-stock recursion driven by the solved investment path
    rate = POLICY_2017.rate_dbal
    kpi = np.empty(200)
    prev_k, prev_i = ss2017_ext["kb"] + ss2017_ext["ka"], ss2017_ext["i"]
    for t in range(200):
        kpi[t] = (1.0 - rate) * (prev_i + prev_k)
        prev_k, prev_i = kpi[t], split["i"][t]
    np.testing.assert_allclose(split["kb"] + split["ka"], kpi, rtol=1e-9)
    np.testing.assert_allclose(split["ID"], rate * (split["i"] + kpi), rtol=1e-9)


def test_short_horizon_is_rejected_with_variable_name(ss2017_ext):
    with pytest.raises(HorizonError, match="too short.*in [a-z_]+"):
        solve_transition(make_problem(ss2017_ext, ss2017_ext.spec.with_policy(POLICY_TCJA), horizon=80))


def test_newton_failure_carries_trace(ss2017_ext):
    problem = make_problem(ss2017_ext, ss2017_ext.spec.with_policy(POLICY_TCJA), horizon=100)
    with pytest.raises(SolverError) as info:
        solve_transition(problem, max_iter=1)
    assert "trace" in str(info.value)
    assert len(info.value.trace) == 1


def test_problem_validation(ss2017, ss2017_ext):
    with pytest.raises(ModelError):
        make_problem(ss2017, ss2017.spec, horizon=1, terminal=ss2017)
    with pytest.raises(ModelError):
        make_problem(ss2017, ss2017.spec.with_policy(POLICY_TCJA), terminal=ss2017)
    full = TaxPolicy.make(0.21, 1.0, POLICY_2017.tau_indiv)
    with pytest.raises(ModelError, match="full expensing"):
        make_problem(ss2017, ss2017.spec.with_policy(full), new_investment_only=False)


def test_path_table_columns(tcja):
    table = tcja.reform.table()
    assert list(table)[:NVAR + 1] == ["period", *VARS]
    assert all(len(col) == tcja.reform.X.shape[0] for col in table.values())
    assert np.all(table["D"] == 1.0)
