import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigtaylor.pathcore import (Horizon, Path, PartitionSeq, PathError, bump, bump_to, concat,
                                d1_distance, evaluate, insert_time, lambda_distance,
                                lipschitz_seminorm, quadratic_variation, random_lipschitz_path,
                                read_csv, refine, restrict, reverse_restrict, stop_extend, sup_norm,
                                write_csv)


def test_validation():
    with pytest.raises(PathError):
        Path([0.1, 1.0], [0, 1])
    with pytest.raises(PathError):
        Path([0, 1, 0.5], [0, 1, 2])
    with pytest.raises(PathError):
        Path([0, 1, 1, 1], [0, 1, 2, 3])
    with pytest.raises(PathError):
        Path([0, 1], [0, np.nan])
    X = Path([0, 1, 1], [0, 1, 2])
    assert X.has_jumps


def test_immutable():
    X = Path([0, 1], [0, 1])
    with pytest.raises(AttributeError):
        X.times = None
    with pytest.raises(ValueError):
        X.values[0] = 3.0


def test_concat_examples():
    X = Path([0, 1], [0, 1])
    Z = Path([0, 0.5], [5, 4])
    Y = concat(X, Z)
    assert Y.t_end == 1.5
    assert Y.x_end == pytest.approx(0.0)
    assert evaluate(Y, 1.25) == pytest.approx(0.5)
    # point paths are neutral
    assert concat(X, Path.point(3.0)) == X
    assert concat(Path.point(0.0), X).x_end == 1.0


def test_concat_horizon_cut():
    X = Path([0, 1], [0, 1])
    Z = Path([0, 1], [0, 2])
    Y = concat(X, Z, horizon=Horizon(1.5))
    assert Y.t_end == pytest.approx(1.5)
    assert Y.x_end == pytest.approx(2.0)


def test_concat_merges_double_jump():
    X = bump(Path([0, 1], [0, 1]), 0.5)
    Z = Path([0, 0, 1], [0, 1, 1])
    Y = concat(X, Z)
    assert np.sum(Y.jump_mask()) == 1
    assert Y.x_end == pytest.approx(2.5)


def test_stop_extend_and_bump():
    X = Path([0, 1], [0, 1])
    E = stop_extend(X, 0.5)
    assert E.t_end == 1.5 and E.x_end == 1.0
    with pytest.raises(PathError):
        stop_extend(X, 0.5, horizon=1.2)
    B = bump(X, 0.25)
    assert B.t_end == 1.0 and B.x_end == 1.25 and B.has_jumps
    # a second bump folds into the same jump
    BB = bump(B, 0.25)
    assert BB.times.size == B.times.size and BB.x_end == 1.5
    assert bump_to(X, -2.0).x_end == -2.0
    assert bump(X, 0.0) is X


def test_evaluate_left_right():
    X = Path([0, 1, 1, 2], [0, 1, 3, 3])
    assert evaluate(X, 1.0) == 3.0
    assert evaluate(X, 1.0, left=True) == 1.0
    assert evaluate(X, 0.5) == 0.5
    with pytest.raises(PathError):
        evaluate(X, 2.5)


def test_restrict_and_reverse():
    X = Path([0, 1, 2], [0, 2, 1])
    R = restrict(X, 0.5, 1.5)
    assert R.t_end == pytest.approx(1.0)
    assert R.x0 == pytest.approx(1.0) and R.x_end == pytest.approx(1.5)
    assert restrict(X, 1.0, 1.0).times.size == 1
    W = reverse_restrict(X, 2.0, 0.0)
    assert np.allclose(W.values, [1, 2, 0])
    assert np.allclose(W.times, [0, 1, 2])
    with pytest.raises(PathError):
        reverse_restrict(Path([0, 1, 1], [0, 0, 1]), 1.0, 0.0)


@given(st.integers(0, 2**31), st.integers(2, 12))
@settings(max_examples=40, deadline=None)
def test_reverse_twice_is_identity(seed, n):
    X = random_lipschitz_path(np.random.default_rng(seed), n)
    back = reverse_restrict(reverse_restrict(X, X.t_end, 0.0), X.t_end, 0.0)
    assert np.allclose(back.times, X.times, atol=1e-15)
    assert np.array_equal(back.values, X.values)


@given(st.integers(0, 2**31), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_refine_keeps_path(seed, factor):
    X = random_lipschitz_path(np.random.default_rng(seed), 5)
    Y = refine(X, factor)
    s = np.linspace(0, X.t_end, 37)
    assert np.allclose(evaluate(X, s), evaluate(Y, s), atol=1e-12)
    assert insert_time(X, 0.3 * X.t_end).t_end == X.t_end


def test_metrics():
    X = Path([0, 1], [0, 1])
    assert lambda_distance(X, X) == 0.0
    Y = Path([0, 0.5], [0, 0.5])
    # flat extension of Y differs by at most 0.5 at t = 1, plus 0.5 in time
    assert lambda_distance(X, Y) == pytest.approx(1.0)
    assert lambda_distance(X, bump(X, 0.3)) == pytest.approx(0.3)
    assert sup_norm(Path([0, 1], [2, -3])) == 3.0
    assert sup_norm(Path([0, 1], [2, -3]), relative=True) == 5.0
    assert lipschitz_seminorm(Path([0, 1, 2], [0, 3, 2])) == 3.0
    assert lipschitz_seminorm(bump(X, 1.0)) == float("inf")
    assert d1_distance(X, X) == 0.0
    assert d1_distance(X, Path([0, 1], [0, 0])) == pytest.approx(1.0)


def test_quadratic_variation():
    ps = PartitionSeq("dyadic", 0, 16)
    X = Path([0, 1], [0, 2])
    g, qv = quadratic_variation(X, ps, 10)
    assert qv[-1] == pytest.approx(4.0 / 2 ** 10)
    # Brownian-like sample path: qv near the time
    rng = np.random.default_rng(3)
    n = 2 ** 14
    t = np.linspace(0, 1, n + 1)
    B = Path(t, np.concatenate([[0], np.cumsum(rng.standard_normal(n)) / np.sqrt(n)]))
    _, qv = quadratic_variation(B, ps, 14)
    assert abs(qv[-1] - 1.0) < 0.05
    with pytest.raises(ValueError):
        ps.grid(17)
    assert PartitionSeq("uniform", 1, 10).mesh(4) == 0.25


def test_csv_round_trip(tmp_path):
    X = random_lipschitz_path(np.random.default_rng(1), 7)
    p = tmp_path / "x.csv"
    write_csv(X, p)
    assert read_csv(str(p)) == X
    with pytest.raises(PathError):
        read_csv("a,b\n0,1\n")
