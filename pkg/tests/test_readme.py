import pytest
import fuzzyheat as fh


def test_first_chunk():
    problem = fh.load_example(1)
    result = fh.solve_crisp(fh.crisp_core(problem))
    print(result.converged, result.iterations_used, result.final_delta)


def test_second_chunk():
    for example in (1, 2, 4):
        problem = fh.load_example(example)
        report = fh.classify(problem, problem.oracle.solution, check_consistency=False)
        print(example, report.verdict, report.notes)


def test_third_chunk():
    k = fh.make_triangular(0.5, 1.0, 1.5)
    c = fh.make_triangular(-1.5, -1.0, -0.5)
    print((k * c).cut(0.5))
