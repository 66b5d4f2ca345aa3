__all__ = ["fuzzy", "expr", "grid", "problem", "vim", "signs", "bfs", "ss", "registry"]
__version__ = "0.3.0"

import logging

_handler = logging.StreamHandler()
_handler.setFormatter(logging.Formatter("[%(levelname)s] %(name)s: %(message)s"))
logger = logging.getLogger(__name__)
logger.addHandler(_handler)
logger.setLevel(logging.WARNING)

from fuzzyheat.fuzzy import AlphaLevelFuzzyNumber, Interval, TriangularFuzzy, make_triangular
from fuzzyheat.expr import parse
from fuzzyheat.grid import GridFunction, GridSpec
from fuzzyheat.problem import HeatLikeProblem, crisp_core, instantiate, load_problem, read_problem
from fuzzyheat.vim import VimConfig, solve_crisp
from fuzzyheat.bfs import classify
from fuzzyheat.ss import SsConfig, solve_levels
from fuzzyheat.registry import load_example

from . import bfs, expr, fuzzy, grid, problem, registry, signs, ss, vim
