"""
The registered example problems.

Each example is a problem document shipped under ``fuzzyheat/data`` with an
``[oracle]`` table holding its closed-form solution, expected verdict and,
where known, the closed-form Seikkala endpoints.
"""
import logging
from importlib import resources

from fuzzyheat.errors import UsageError
from fuzzyheat.problem import load_problem

logger = logging.getLogger(__name__)

EXAMPLE_IDS = (1, 2, 3, 4, 5)


def example_ids():
    return EXAMPLE_IDS


def _check_id(example_id):
    try:
        number = int(example_id)
    except (TypeError, ValueError):
        raise UsageError(f"registry id must be an integer, got {example_id!r}") from None
    if number not in EXAMPLE_IDS:
        raise UsageError(f"unknown registry id {number}; choose one of {EXAMPLE_IDS}")
    return number


def example_source(example_id):
    """ the TOML text of a registered example """
    number = _check_id(example_id)
    resource = resources.files("fuzzyheat").joinpath("data", f"ex{number}.toml")
    return resource.read_text(encoding="utf-8")


def load_example(example_id):
    """
    Load a registered example.

    Parameters
    ----------
    example_id : int or str
        1 to 5

    Returns
    -------
    HeatLikeProblem
        With its oracle attached

    Raises
    ------
    UsageError
        For an id outside the registry
    """
    problem = load_problem(example_source(example_id))
    logger.debug("registry example %s: %s", example_id, problem.name)
    return problem
