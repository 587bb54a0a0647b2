"""
Deterministic adaptive cubature over phase boxes

Each cell is integrated with a tensor-product Gauss-Legendre rule of order p and
re-integrated with order p - 1; the difference is the cell's error estimate. The
worst cell is bisected along its widest (relative) dimension until the summed
error meets the tolerance or the cell budget runs out.
"""

import heapq
import itertools
import logging
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from models import Box
from utils.errors import NumericalToleranceError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_MAX_CELLS = 4000
DEFAULT_ABS_TOL = 1e-15

# Rule order per dimension, keyed by the box dimension
_DEFAULT_ORDERS = {1: 10, 2: 7, 3: 5, 4: 4}


class IntegrationResult(NamedTuple):
    value: Union[float, np.ndarray]
    error: float


def default_order(dim: int) -> int:
    return _DEFAULT_ORDERS.get(dim, 3)


@lru_cache(maxsize=64)
def _product_rule(order: int, dim: int):
    """Reference nodes on [-1, 1]^dim and their weights"""
    nodes, weights = leggauss(order)
    pts = np.array(list(itertools.product(nodes, repeat=dim)))
    wts = np.prod(np.array(list(itertools.product(weights, repeat=dim))), axis=1)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


class _Cell(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray
    value: np.ndarray
    error: float


def _as_box(box) -> Box:
    if isinstance(box, Box):
        return box
    try:
        return Box.from_intervals(box)
    except ValueError as e:
        raise ParameterError(f"invalid integration box: {e}")


def _evaluate_cell(f, lower, upper, order, dim, vector_valued) -> _Cell:
    hi_pts, hi_wts = _product_rule(order, dim)
    lo_pts, lo_wts = _product_rule(order - 1, dim)
    mid = 0.5 * (upper + lower)
    half = 0.5 * (upper - lower)
    jac = float(np.prod(half))
    pts = np.vstack([mid + half * hi_pts, mid + half * lo_pts])
    vals = np.asarray(f(pts), dtype=float)
    if vals.shape[0] != pts.shape[0]:
        raise ParameterError(f"integrand returned {vals.shape[0]} values for {pts.shape[0]} points")
    n_hi = hi_pts.shape[0]
    if vector_valued:
        q_hi = jac * (hi_wts @ vals[:n_hi])
        q_lo = jac * (lo_wts @ vals[n_hi:])
    else:
        q_hi = np.atleast_1d(jac * np.dot(hi_wts, vals[:n_hi]))
        q_lo = np.atleast_1d(jac * np.dot(lo_wts, vals[n_hi:]))
    if not np.all(np.isfinite(q_hi)):
        raise NumericalToleranceError("integrand is not finite on the box", estimate=q_hi, error_estimate=float("inf"))
    return _Cell(lower, upper, q_hi, float(np.max(np.abs(q_hi - q_lo))))


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    box: Union[Box, Sequence],
    rel_tol: float = 1e-6,
    abs_tol: float = DEFAULT_ABS_TOL,
    order: Optional[int] = None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> IntegrationResult:
    """
    Integrate a vectorised function over a box

    Args:
        f: Maps points of shape (n, d) to values of shape (n,) or (n, k)
        box: Box or sequence of (lower, upper) intervals
        rel_tol: Requested relative tolerance (against the largest component)
        abs_tol: Absolute floor for near-zero integrals
        order: Gauss-Legendre nodes per dimension (default depends on d)
        max_cells: Subdivision budget

    Returns:
        IntegrationResult(value, error); value is a float for scalar integrands

    Raises:
        ParameterError: If the box or tolerance is invalid
        NumericalToleranceError: If the budget is exhausted (carries the best estimate)
    """
    if rel_tol <= 0:
        raise ParameterError("rel_tol must be positive")
    box = _as_box(box)
    dim = box.dim
    order = order or default_order(dim)
    if order < 2:
        raise ParameterError("rule order must be at least 2")

    lower0 = np.asarray(box.lower, dtype=float)
    upper0 = np.asarray(box.upper, dtype=float)
    widths0 = upper0 - lower0

    centre = np.asarray(f(np.atleast_2d(0.5 * (lower0 + upper0))), dtype=float)
    vector_valued = centre.ndim == 2

    first = _evaluate_cell(f, lower0, upper0, order, dim, vector_valued)
    heap = [(-first.error, 0, first)]
    total = first.value.copy()
    total_err = first.error
    counter = 1

    while total_err > max(rel_tol * float(np.max(np.abs(total))), abs_tol):
        if len(heap) >= max_cells:
            value = total if vector_valued else float(total[0])
            raise NumericalToleranceError(
                f"cubature budget of {max_cells} cells exhausted (error {total_err:.3e})",
                estimate=value,
                error_estimate=total_err,
            )
        _, _, cell = heapq.heappop(heap)
        axis = int(np.argmax((cell.upper - cell.lower) / widths0))
        split = 0.5 * (cell.lower[axis] + cell.upper[axis])
        left_upper = cell.upper.copy()
        left_upper[axis] = split
        right_lower = cell.lower.copy()
        right_lower[axis] = split
        left = _evaluate_cell(f, cell.lower, left_upper, order, dim, vector_valued)
        right = _evaluate_cell(f, right_lower, cell.upper, order, dim, vector_valued)
        total = total - cell.value + left.value + right.value
        total_err = total_err - cell.error + left.error + right.error
        for child in (left, right):
            heapq.heappush(heap, (-child.error, counter, child))
            counter += 1

    # re-sum in a fixed order so the result does not depend on the refinement history
    cells = sorted((c for _, _, c in heap), key=lambda c: tuple(c.lower))
    total = np.sum([c.value for c in cells], axis=0)
    total_err = float(sum(c.error for c in cells))
    logger.debug("cubature d=%d finished with %d cells, error %.3e", dim, len(cells), total_err)
    value = total if vector_valued else float(total[0])
    return IntegrationResult(value, total_err)


def integrate_average(f, box, rel_tol: float = 1e-6, **kwargs) -> IntegrationResult:
    """Mean of f over the box (integral divided by the box volume)"""
    box = _as_box(box)
    result = integrate(f, box, rel_tol=rel_tol, **kwargs)
    return IntegrationResult(result.value / box.volume, result.error / box.volume)
