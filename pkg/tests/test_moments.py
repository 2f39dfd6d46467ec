import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ridgesplit.errors import DegenerateMomentError, NotPositiveDefiniteError
from ridgesplit.moments import (MomentKind, analytic_reference, bounds_sweep, convergence_fit,
                                deterministic_bounds_check, loglog_slope, mc_trace_moment,
                                mc_trace_moments, trace_functionals)
from ridgesplit.rng import RngSeed, sample_gaussian_rows, sample_spd_covariance


def test_reference_values():
    ref = analytic_reference(MomentKind.P1_1, 3, 20)
    assert ref.value == pytest.approx(0.1875) and ref.exact
    ref = analytic_reference(MomentKind.P1_2, 4, 100)
    assert ref.value == pytest.approx(0.0016) and ref.error_order == 3
    ref = analytic_reference(MomentKind.L5_10, 2, 10_000)
    assert ref.value == 4 and ref.error_order == 1
    assert analytic_reference(MomentKind.L5_8, 3, 200).value == pytest.approx(600 / 196)
    assert analytic_reference(MomentKind.P1_3, 3, 30).value == pytest.approx(3 / 900)
    orders = {k: analytic_reference(k, 3, 50).error_order
              for k in ("L5_5", "L5_6", "L5_7", "L5_11", "L5_12")}
    assert orders == {"L5_5": 2, "L5_6": 4, "L5_7": 4, "L5_11": 2, "L5_12": 2}
    assert all(analytic_reference(k, 3, 50).value == 0 for k in orders)


def test_degenerate_p_rejected():
    with pytest.raises(DegenerateMomentError):
        analytic_reference(MomentKind.P1_1, 3, 4)
    with pytest.raises(DegenerateMomentError):
        mc_trace_moment(MomentKind.P1_1, 3, 4, 1.0, np.eye(3), 200, RngSeed(1))


def test_functionals_against_literal_formulas(spd3):
    x = sample_gaussian_rows(15, spd3, RngSeed(3))
    w = x.T @ x
    vals = trace_functionals(w[None], spd3, 2.0, 15, list(MomentKind))
    winv = np.linalg.inv(w)
    r2 = np.linalg.matrix_power(np.linalg.inv(w + 2.0 * np.eye(3)), 2)
    s = spd3
    expected = {
        "P1_1": np.trace(s @ winv), "P1_2": np.trace(s @ winv) ** 2,
        "P1_3": np.trace(s @ winv @ s @ winv), "L5_5": np.trace(s @ r2),
        "L5_6": np.trace(s @ r2 @ s @ r2), "L5_7": np.trace(s @ r2) ** 2,
        "L5_8": 15 * np.trace(s @ w @ r2), "L5_9": 225 * np.trace(s @ w @ r2 @ s @ w @ r2),
        "L5_10": 225 * np.trace(s @ w @ r2) ** 2, "L5_11": 15 * np.trace(s @ r2 @ s @ w @ r2),
        "L5_12": 15 * np.trace(s @ r2) * np.trace(s @ w @ r2),
    }
    for kind, val in vals.items():
        assert val[0] == pytest.approx(expected[kind.value], rel=1e-10)


def test_scalar_inverse_chi_square_mean():
    est = mc_trace_moment(MomentKind.P1_1, 1, 4, 0.0, [[1.0]], 100_000, RngSeed(12))
    assert abs(est.mean - 0.5) <= 3 * est.stderr


def test_p1_1_exact_on_random_sigma(spd3):
    est = mc_trace_moment(MomentKind.P1_1, 3, 20, 2.0, spd3, 100_000, RngSeed(13))
    assert abs(est.mean - 0.1875) <= 3 * est.stderr
    assert est.trials == 100_000 and est.scale_power == 0


def test_l5_8_exact_without_ridge(spd3):
    # at alpha = 0, W (W + 0)^-2 = W^-1 and the reference is exact
    est = mc_trace_moment(MomentKind.L5_8, 3, 200, 0.0, spd3, 100_000, RngSeed(14))
    assert abs(est.mean - 600 / 196) <= 3 * est.stderr


def test_l5_8_with_ridge_converges(spd3):
    """At alpha = 2 the reference carries an O(1/p) bias, bounded along the ladder."""
    ladder = [100, 200, 400]
    ests = [mc_trace_moment(MomentKind.L5_8, 3, p, 2.0, spd3, 50_000, RngSeed(15)) for p in ladder]
    refs = [3 * p / (p - 4) for p in ladder]
    fit = convergence_fit(ladder, [e.mean for e in ests], [e.stderr for e in ests], refs, 1)
    assert fit.passed
    i = ladder.index(200)
    assert abs(ests[i].mean - 600 / 196) <= 3 * ests[i].stderr + fit.constant / 200
    assert ests[i].scale_power == 1


def test_sigma_invariance_of_prop1(spd3):
    kinds = [MomentKind.P1_1, MomentKind.P1_2, MomentKind.P1_3]
    ident = mc_trace_moments(kinds, 3, 30, 0.0, np.eye(3), 40_000, RngSeed(16))
    rand = mc_trace_moments(kinds, 3, 30, 0.0, spd3, 40_000, RngSeed(17))
    for k in kinds:
        se = np.hypot(ident[k].stderr, rand[k].stderr)
        assert abs(ident[k].mean - rand[k].mean) <= 3 * se


def test_determinism(spd3):
    a = mc_trace_moment(MomentKind.L5_9, 3, 30, 2.0, spd3, 2000, RngSeed(18))
    b = mc_trace_moment(MomentKind.L5_9, 3, 30, 2.0, spd3, 2000, RngSeed(18))
    assert a == b


def test_stderr_definition(spd3):
    est = mc_trace_moment(MomentKind.L5_5, 3, 30, 2.0, spd3, 1500, RngSeed(19))
    chol = np.linalg.cholesky(spd3)
    vals = []
    # rebuild the per-trial values from the same blocked streams
    from ridgesplit import rng as rngmod
    stream = rngmod.point_stream(rngmod.STREAM_MOMENTS, 30, salt=3)
    for k, size in rngmod.block_sizes(1500):
        x = rngmod.gaussian_rows(RngSeed(19, stream, k).generator(), (size, 30), chol)
        w = np.swapaxes(x, 1, 2) @ x
        vals.append(trace_functionals(w, spd3, 2.0, 30, [MomentKind.L5_5])[MomentKind.L5_5])
    vals = np.concatenate(vals)
    assert est.mean == pytest.approx(vals.mean(), rel=1e-12)
    assert est.stderr == pytest.approx(vals.std(ddof=1) / np.sqrt(1500), rel=1e-12)


def test_decay_slope_l5_5(spd3):
    ladder = [50, 100, 200]
    means = [mc_trace_moment(MomentKind.L5_5, 3, p, 2.0, spd3, 5000, RngSeed(20)).mean for p in ladder]
    assert -2.5 <= loglog_slope(ladder, means) <= -1.5


def test_loglog_slope_exact():
    ps = np.array([10.0, 20.0, 40.0])
    assert loglog_slope(ps, 7 * ps**-3) == pytest.approx(-3.0)


def test_convergence_fit_flags_growth():
    ps = [100, 200, 400]
    ok = convergence_fit(ps, [1 + 5 / p for p in ps], [1e-4] * 3, [1.0] * 3, 1)
    assert ok.passed and ok.constant == pytest.approx(5 - 3e-4 * 100, rel=1e-6)
    bad = convergence_fit(ps, [1 + 5 / np.sqrt(p) for p in ps], [1e-4] * 3, [1.0] * 3, 1)
    assert not bad.passed
    assert ok.leading == pytest.approx(5.0, rel=1e-6) and abs(ok.correction) < 1e-6
    single = convergence_fit([100, 200], [1.05, 1.025], [1e-3] * 2, [1.0] * 2, 1)
    assert single.passed is None


def test_convergence_fit_absorbs_next_order():
    # a sign change of the error between rungs is still O(1/p)
    ps = [20, 40, 80, 160]
    means = [9 + 4 / p - 150 / p**2 for p in ps]
    fit = convergence_fit(ps, means, [1e-3] * 4, [9.0] * 4, 1)
    assert fit.passed and fit.leading == pytest.approx(4.0)


def test_bounds_identity_case():
    x = sample_gaussian_rows(8, np.eye(3), RngSeed(21))
    assert deterministic_bounds_check(x, 2.0, np.eye(3), np.eye(3))
    assert np.trace(np.eye(3) @ np.eye(3)) == 3 <= 9


def test_bounds_small_alpha_square_design():
    x = sample_gaussian_rows(5, np.eye(5), RngSeed(22))
    assert np.trace(np.linalg.inv(x.T @ x + 0.1 * np.eye(5))) <= 50
    assert deterministic_bounds_check(x, 0.1, np.eye(5), 2 * np.eye(5))


def test_bounds_reject_non_spd():
    with pytest.raises(NotPositiveDefiniteError):
        deterministic_bounds_check(np.ones((3, 2)), 1.0, [[1.0, 2.0], [2.0, 1.0]], np.eye(2))
    with pytest.raises(ValueError):
        deterministic_bounds_check(np.ones((3, 2)), 0.0, np.eye(2), np.eye(2))


def test_bounds_sweep_clean():
    assert bounds_sweep(2000, (0.1, 2.0, 100.0), RngSeed(23)) == 0


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 6), rows=st.integers(1, 12), alpha=st.floats(1e-3, 1e3),
       seed=st.integers(0, 2**32))
def test_bounds_property(n, rows, alpha, seed):
    x = sample_gaussian_rows(rows, np.eye(n), RngSeed(seed))
    s = sample_spd_covariance(n, "random", RngSeed(seed, 1))
    t = sample_spd_covariance(n, "random", RngSeed(seed, 2))
    assert deterministic_bounds_check(x, alpha, s, t)
