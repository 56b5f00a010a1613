"""Sampling grids, circle discretizations and the quadrature rules shared by every module."""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, NamedTuple, Sequence, TypeVar

import numpy as np

from app import config
from app.errors import DimensionError, DomainError, QuadratureError, ResolutionError
from app.schemas.domain_payload import Domain, GridSpec, QuadratureSpec

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# rows per chunk are derived from the node count only, never from the worker count
PAIR_CHUNK_ENTRIES = 1 << 20


class Sample(NamedTuple):
    points: np.ndarray
    weights: np.ndarray

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights)


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Map ``fn`` over ``items`` with the configured worker count, keeping input order."""
    items = list(items)
    if config.WORKER_COUNT <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=config.WORKER_COUNT) as executor:
        return list(executor.map(fn, items))


def sample_domain(domain: Domain, grid: GridSpec | int) -> Sample:
    """Midpoint tensor nodes of the bounding box that fall strictly inside the domain."""
    if isinstance(grid, int):
        if grid < 4:
            raise ResolutionError(f"points_per_axis must be >= 4, got {grid}")
        grid = GridSpec(points_per_axis=grid)
    count = grid.points_per_axis
    lower, upper = domain.bounds()
    spacing = (upper - lower) / count
    axes = [lower[i] + spacing[i] * (np.arange(count) + 0.5) for i in range(domain.dim)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.dim)
    if grid.jitter_seed is not None:
        rng = np.random.default_rng(grid.jitter_seed)
        mesh = mesh + (rng.random(mesh.shape) - 0.5) * spacing
    points = mesh[domain.contains(mesh)]
    weights = np.full(len(points), float(np.prod(spacing)))
    return Sample(points, weights)


def grid_spacing(domain: Domain, count: int) -> float:
    lower, upper = domain.bounds()
    return float(np.max(upper - lower)) / count


def circle_angles(count: int) -> np.ndarray:
    return 2 * np.pi * np.arange(count) / count


def sample_circle(center: Sequence[float], r: float, M: int) -> np.ndarray:
    """M equispaced points on the circle, counterclockwise from angle 0."""
    if M < 8:
        raise ResolutionError(f"a circle needs at least 8 samples, got {M}")
    if r <= 0:
        raise DomainError(f"circle radius must be positive, got {r}")
    center = np.asarray(center, dtype=float)
    if center.shape != (2,):
        raise DimensionError("circles are sampled in the plane only")
    theta = circle_angles(M)
    return center + r * np.column_stack([np.cos(theta), np.sin(theta)])


def sample_uniform(domain: Domain, count: int, rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample ``count`` uniform points from the domain interior."""
    lower, upper = domain.bounds()
    accepted = []
    total = 0
    while total < count:
        batch = lower + (upper - lower) * rng.random((2 * (count - total) + 16, domain.dim))
        batch = batch[domain.contains(batch)]
        accepted.append(batch)
        total += len(batch)
    return np.concatenate(accepted)[:count]


def _pair_values(values: np.ndarray) -> np.ndarray:
    return values.reshape(len(values), -1)


def tensor_pair_sums(
    points: np.ndarray,
    values: np.ndarray,
    weights: np.ndarray,
    exponent: float,
    kernel_power: float,
    cutoffs: Sequence[float],
) -> list[float]:
    """Sum of w_i w_j |v_i - v_j|^p / |x_i - x_j|^k over node pairs with |x_i - x_j| >= cutoff.

    One sum per cutoff. Chunks of rows are reduced in order with ``math.fsum``
    so the result does not depend on how many workers evaluated the chunks.
    """
    values = _pair_values(values)
    count = len(points)
    rows = max(1, PAIR_CHUNK_ENTRIES // max(count, 1))
    starts = list(range(0, count, rows))
    thresholds = np.asarray(cutoffs, dtype=float) * (1 - 1e-12)

    def chunk(start: int) -> tuple[np.ndarray, np.ndarray]:
        stop = min(start + rows, count)
        dist = np.linalg.norm(points[start:stop, None, :] - points[None, :, :], axis=-1)
        jump = np.linalg.norm(values[start:stop, None, :] - values[None, :, :], axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            term = jump ** exponent / np.where(dist > 0, dist, np.inf) ** kernel_power
        term *= weights[start:stop, None] * weights[None, :]
        sums = np.array([np.sum(term[dist >= cut]) for cut in thresholds])
        counts = np.array([np.count_nonzero(dist >= cut) for cut in thresholds])
        return sums, counts

    partials = parallel_map(chunk, starts)
    totals = [math.fsum(part[0][i] for part in partials) for i in range(len(thresholds))]
    pairs = [int(sum(part[1][i] for part in partials)) for i in range(len(thresholds))]
    if min(pairs) == 0:
        raise QuadratureError("no node pairs left after the diagonal exclusion")
    return totals


def monte_carlo_pair_sums(
    first: np.ndarray,
    second: np.ndarray,
    first_values: np.ndarray,
    second_values: np.ndarray,
    pair_weight: float,
    exponent: float,
    kernel_power: float,
    cutoffs: Sequence[float],
) -> list[float]:
    """Monte Carlo version of ``tensor_pair_sums`` over independently sampled pairs."""
    first_values = _pair_values(first_values)
    second_values = _pair_values(second_values)
    dist = np.linalg.norm(first - second, axis=1)
    jump = np.linalg.norm(first_values - second_values, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = jump ** exponent / np.where(dist > 0, dist, np.inf) ** kernel_power
    totals = []
    for cut in np.asarray(cutoffs, dtype=float) * (1 - 1e-12):
        mask = dist >= cut
        if not np.any(mask):
            raise QuadratureError("no sampled pairs left after the diagonal exclusion")
        totals.append(math.fsum(term[mask]) * pair_weight)
    return totals


def ball_quadrature(center: Sequence[float], radius: float, count: int) -> Sample:
    """Midpoint nodes inside B(center, radius); used for compactly supported integrands."""
    return sample_domain(Domain.ball(center, radius), GridSpec(points_per_axis=count))


def check_quadrature(domain: Domain, quad: QuadratureSpec) -> None:
    if quad.diagonal_exclusion_radius is not None and quad.diagonal_exclusion_radius >= domain.diameter():
        raise QuadratureError("the diagonal exclusion radius must be smaller than the domain diameter")
    logger.debug("quadrature %s with %d samples on %s", quad.scheme, quad.sample_count, domain.kind.value)
