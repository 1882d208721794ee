import itertools

import pytest

from src.errors import IoError
from src.sat_solver import Cnf, DpllSolver, solve_cnf, write_dimacs


def satisfies(cnf, model):
    return all(any(model[abs(lit)] == (lit > 0) for lit in clause) for clause in cnf.clauses)


def pigeonhole(pigeons, holes):
    def var(p, h):
        return p * holes + h + 1

    cnf = Cnf(num_vars=pigeons * holes)
    for p in range(pigeons):
        cnf.add([var(p, h) for h in range(holes)])
    for h in range(holes):
        for p, q in itertools.combinations(range(pigeons), 2):
            cnf.add([-var(p, h), -var(q, h)])
    return cnf


def test_satisfiable_formula():
    cnf = Cnf(num_vars=3, clauses=[[1, 2], [-1, 3], [-2, -3], [2, 3]])
    model = solve_cnf(cnf)
    assert model is not None
    assert satisfies(cnf, model)


def test_contradicting_units():
    assert solve_cnf(Cnf(num_vars=1, clauses=[[1], [-1]])) is None


def test_empty_clause():
    assert solve_cnf(Cnf(num_vars=2, clauses=[[1, 2], []])) is None


@pytest.mark.parametrize("pigeons, holes, sat", [(3, 3, True), (4, 3, False), (5, 4, False)])
def test_pigeonhole(pigeons, holes, sat):
    cnf = pigeonhole(pigeons, holes)
    model = DpllSolver(cnf).solve()
    assert (model is not None) == sat
    if model is not None:
        assert satisfies(cnf, model)


def test_search_keeps_the_clause_database_fixed():
    solver = DpllSolver(pigeonhole(4, 3))
    before = sorted(sorted(c) for c in solver.clauses)
    assert solver.solve() is None
    assert solver.conflicts > 0
    assert sorted(sorted(c) for c in solver.clauses) == before


def test_model_covers_every_variable():
    model = solve_cnf(Cnf(num_vars=4, clauses=[[2]]))
    assert sorted(model) == [1, 2, 3, 4]
    assert model[2] is True


def test_dimacs_output(tmp_path):
    cnf = Cnf(num_vars=2)
    cnf.add([1, -2])
    path = tmp_path / "f.cnf"
    write_dimacs(cnf, path, comments=["colouring q=2"])
    assert path.read_text() == "c colouring q=2\np cnf 2 1\n1 -2 0\n"


def test_dimacs_unwritable(tmp_path):
    with pytest.raises(IoError):
        write_dimacs(Cnf(num_vars=1), tmp_path / "missing" / "f.cnf")
