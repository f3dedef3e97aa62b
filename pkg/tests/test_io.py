import numpy as np
import pytest

from lassolab import io
from lassolab.problem import gen_gaussian_matrix, gen_sparse_signal, lambda_inf, make_observation
from lassolab.solver import LassoConfig, solve_lasso


def test_matrix_round_trip(tmp_path):
    A = gen_gaussian_matrix(7, 11, 42)
    p = tmp_path / "A.csv"
    io.write_matrix(p, A)
    assert p.read_text().splitlines()[0] == "# 7,11,42"
    B = io.read_matrix(p)
    assert np.array_equal(A.entries, B.entries) and B.seed == 42


def test_matrix_header_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3,4\n")
    with pytest.raises(io.FormatError):
        io.read_matrix(p)
    p.write_text("# 3,2,0\n1,2\n3,4\n")
    with pytest.raises(io.FormatError):
        io.read_matrix(p)


def test_vector_round_trip(tmp_path):
    v = np.random.default_rng(0).standard_normal(9)
    p = tmp_path / "v.csv"
    io.write_vector(p, v)
    assert len(p.read_text().splitlines()) == 9
    assert np.array_equal(io.read_vector(p), v)


def test_solution_round_trip(tmp_path):
    A = gen_gaussian_matrix(20, 50, 1)
    obs = make_observation(A, gen_sparse_signal(50, 4, 1), 1e-2, 1)
    sol = solve_lasso(A, obs.y, LassoConfig(0.2 * lambda_inf(A, obs.y)))
    p = tmp_path / "sol.csv"
    io.write_solution(p, sol)
    lines = p.read_text().splitlines()
    assert sum(line.startswith("#") for line in lines) == len(io.SOLUTION_META)
    assert len(lines) == len(io.SOLUTION_META) + 1 + sol.s_lambda
    x, meta = io.read_solution(p)
    assert np.array_equal(x, sol.x)
    assert meta["lambda"] == sol.lam and meta["s_lambda"] == sol.s_lambda
    assert meta["duality_gap"] == sol.duality_gap


def test_format_cell():
    assert io.format_cell(True) == "1"
    assert io.format_cell(3) == "3"
    assert io.format_cell(np.float64(1 / 3)) == "0.333333333333"
    assert io.format_cell(None) == ""
