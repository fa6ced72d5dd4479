"""
Error budgets of the TSD CNOT: Doppler dephasing, Rabi-amplitude fluctuation
and Rydberg decay.

Ensemble averages are deterministic quadratures. The Doppler average weights
the error on a 101 x 101 velocity grid by Gaussian velocity distributions of
both atoms and normalizes by the summed weights. The error grid itself does not
depend on temperature, so it is evaluated once per configuration and
re-weighted for every temperature.

The decay estimate is perturbative: Rydberg populations come from the unitary
dynamics and are integrated over time. No damping is applied during
propagation.

"""

import math
import time
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import jit
from tqdm import tqdm

from tsdgate import metrics
from tsdgate import qmodel
from tsdgate import sequence
from tsdgate import propagator

logger = logging.getLogger(__name__)

N_VELOCITIES = 101
V_MAX = 0.5
N_AMPLITUDE_OFFSETS = 5
SYMMETRY_ATOL = 1e-10
METRICS = ("rotation", "bell")
GRID_CACHE_SIZE = 8

# least recently used grid first
_GRID_CACHE = OrderedDict()


@jit(nopython=True)
def gaussian_weights(values, width):
    """exp(-v^2 / (2 width^2)); width 0 puts all weight on v = 0."""
    out = np.empty(values.shape[0])
    if width == 0.0:
        for i in range(values.shape[0]):
            out[i] = 1.0 if values[i] == 0.0 else 0.0
        return out
    for i in range(values.shape[0]):
        out[i] = math.exp(-values[i] ** 2 / (2.0 * width**2))
    return out


@jit(nopython=True)
def weighted_average(grid, row_weights, col_weights):
    """sum E_ij w_i w_j / sum w_i w_j in fixed order (ascending i, then j)."""
    numerator = 0.0
    denominator = 0.0
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            w = row_weights[i] * col_weights[j]
            numerator += grid[i, j] * w
            denominator += w
    return numerator / denominator


@dataclass(frozen=True)
class VelocityGrid:
    """Equally spaced velocities with Maxwell-Boltzmann weights.

    Attributes
    ----------
    values : ndarray
        Velocities in m/s.
    weights : ndarray
        Unnormalized Gaussian weights at ``values``.
    temperature : float
        Atomic temperature in K.
    """

    values: np.ndarray
    weights: np.ndarray
    temperature: float

    @classmethod
    def thermal(cls, temperature, n_points=N_VELOCITIES, v_max=V_MAX):
        """``n_points`` velocities from -v_max to v_max, weighted at ``temperature``.

        Parameters
        ----------
        temperature : float
            Temperature in K, >= 0. At 0 only v = 0 carries weight.
        n_points : int, default 101
            Odd, so that v = 0 is a grid point.
        v_max : float, default 0.5
            Grid edge in m/s.
        """
        if n_points < 3 or n_points % 2 == 0:
            raise ValueError(f"n_points must be odd and >= 3, got {n_points}")
        if not v_max > 0:
            raise ValueError(f"v_max must be > 0, got {v_max}")
        values = velocity_values(n_points, v_max)
        width = qmodel.physical_constants().velocity_width(temperature)
        return cls(values, gaussian_weights(values, width), temperature)

    @property
    def width(self):
        return qmodel.physical_constants().velocity_width(self.temperature)

    def __len__(self):
        return self.values.size


def velocity_values(n_points=N_VELOCITIES, v_max=V_MAX):
    """Symmetric velocity grid with an exact zero at the centre."""
    values = np.linspace(-v_max, v_max, n_points)
    values[n_points // 2] = 0.0
    return values


@dataclass(frozen=True)
class AmplitudeGrid:
    """Relative Rabi-amplitude offsets n sigma, n = -5..5, per target channel.

    Attributes
    ----------
    sigma : float
        Relative Gaussian width.
    n_max : int, default 5
    """

    sigma: float
    n_max: int = N_AMPLITUDE_OFFSETS

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.n_max * self.sigma >= 1:
            raise ValueError(
                f"sigma={self.sigma} drives the smallest Rabi frequency to <= 0"
            )

    @property
    def steps(self):
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def factors(self):
        """Multipliers 1 + n sigma."""
        return 1 + self.steps * self.sigma

    @property
    def weights(self):
        """Gaussian weights exp(-n^2/2); independent of sigma."""
        return gaussian_weights(self.steps.astype(float), 1.0)

    def pairs(self):
        """All (factor_1, factor_2) pairs with their weights, in fixed order."""
        factors, weights = self.factors, self.weights
        for i, f1 in enumerate(factors):
            for j, f2 in enumerate(factors):
                yield f1, f2, weights[i] * weights[j]


def _resolve_workers(workers):
    if workers is None:
        from tsdgate.config import resolve_workers

        return resolve_workers()
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def _evaluate_metric(gates, metric):
    if metric == "rotation":
        return metrics.rotation_errors(gates)
    return metrics.bell_error_from_gate(gates)


def _grid_key(cfg, case_id, epsilon, metric, case2_scope, values):
    return (cfg, case_id, float(epsilon), metric, case2_scope, values.tobytes())


def clear_cache():
    """Drop every cached error grid."""
    _GRID_CACHE.clear()


def cache_size():
    """Number of error grids currently cached (at most GRID_CACHE_SIZE)."""
    return len(_GRID_CACHE)


def _cache_store(key, grid):
    _GRID_CACHE[key] = grid
    _GRID_CACHE.move_to_end(key)
    while len(_GRID_CACHE) > GRID_CACHE_SIZE:
        _GRID_CACHE.popitem(last=False)


def doppler_error_grid(
    cfg,
    case_id=1,
    epsilon=0.0,
    *,
    metric="rotation",
    case2_scope="target",
    values=None,
    workers=None,
    progress=False,
    use_cache=True,
):
    """Gate error at every (v_c, v_t) pair of a velocity grid.

    The c0 block depends on v_t only and is evaluated once per target
    velocity; the c1 block is evaluated row by row (one control velocity per
    row), each row as a single stacked eigendecomposition.

    Parameters
    ----------
    cfg : GateChannelConfig
    case_id : {1, 2}
    epsilon : float
        Gap in s.
    metric : {"rotation", "bell"}
    case2_scope : {"target", "all"}
    values : ndarray, optional
        Velocities in m/s; defaults to the 101-point grid on [-0.5, 0.5].
    workers : int, optional
        Threads evaluating rows; defaults to the configured worker count.
    progress : bool, default False
        Show a tqdm progress bar over rows.
    use_cache : bool, default True
        Reuse and keep the grid in a least-recently-used cache holding at most
        GRID_CACHE_SIZE grids.

    Returns
    -------
    ndarray
        Shape (n, n); entry [i, j] is the error at (values[i], values[j]).
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    values = velocity_values() if values is None else np.asarray(values, dtype=float)
    key = _grid_key(cfg, case_id, epsilon, metric, case2_scope, values)
    if use_cache and key in _GRID_CACHE:
        _GRID_CACHE.move_to_end(key)
        return _GRID_CACHE[key]
    start = time.time()
    schedule = sequence.tsd_schedule(cfg, case_id, epsilon, case2_scope)
    c0_maps = sequence.c0_block_map(
        sequence.batched_block_propagators(cfg, schedule, 0.0, values, "c0")
    )

    def row(i):
        u_c1 = sequence.batched_block_propagators(cfg, schedule, values[i], values, "c1")
        gates = sequence.assemble_gate(c0_maps, sequence.c1_block_map(u_c1, cfg.c1_basis))
        return _evaluate_metric(gates, metric)

    n = values.size
    grid = np.empty((n, n))
    mirrored = np.allclose(values[::-1], -values, rtol=0, atol=1e-15)
    exploit = case_id == 1 and epsilon == 0 and mirrored and n > 2
    if exploit:
        centre = n // 2
        rows = list(range(centre, n))
        checked = centre - 1
        grid[checked] = row(checked)
    else:
        rows = list(range(n))
    with ThreadPoolExecutor(max_workers=_resolve_workers(workers)) as pool:
        results = pool.map(row, rows)
        for i, result in zip(rows, tqdm(results, total=len(rows), disable=not progress)):
            grid[i] = result
    if exploit:
        deviation = np.max(np.abs(grid[checked] - grid[n - 1 - checked][::-1]))
        if deviation <= SYMMETRY_ATOL:
            for i in range(centre):
                if i != checked:
                    grid[i] = grid[n - 1 - i][::-1]
            logger.debug("Velocity grid mirrored (deviation %.2e)", deviation)
        else:
            logger.debug(
                "Velocity symmetry broken (deviation %.2e); evaluating full grid",
                deviation,
            )
            remaining = [i for i in range(centre) if i != checked]
            with ThreadPoolExecutor(max_workers=_resolve_workers(workers)) as pool:
                for i, result in zip(remaining, pool.map(row, remaining)):
                    grid[i] = result
    grid.setflags(write=False)
    logger.info(
        "%s error grid %dx%d (case %d): Elapsed time: %.2f seconds",
        metric,
        n,
        n,
        case_id,
        time.time() - start,
    )
    if use_cache:
        _cache_store(key, grid)
    return grid


def doppler_error_grid_timedep(
    cfg, case_id=1, epsilon=0.0, *, metric="rotation", case2_scope="target", values=None,
    tol=propagator.DEFAULT_TOL, progress=False,
):
    """Reference evaluation of the error grid by direct time-dependent integration.

    Raises
    ------
    ConvergenceError
        Annotated with the offending (v_c, v_t) point.
    """
    values = velocity_values() if values is None else np.asarray(values, dtype=float)
    grid = np.empty((values.size, values.size))
    for i in tqdm(range(values.size), disable=not progress):
        for j in range(values.size):
            try:
                gate = sequence.gate_map(
                    cfg, values[i], values[j], case_id, epsilon,
                    override_ratio=True, case2_scope=case2_scope,
                    method="timedep", tol=tol,
                )
            except propagator.ConvergenceError as error:
                raise propagator.ConvergenceError(
                    f"{error} at (v_c, v_t) = ({values[i]:g}, {values[j]:g}) m/s",
                    error.distance,
                    error.steps,
                ) from error
            grid[i, j] = _evaluate_metric(gate[None], metric)[0]
    return grid


def _check_temperature(temperature):
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")


def doppler_average(grid, temperature, values=None):
    """Gaussian-weighted average of an error grid at ``temperature`` (K)."""
    _check_temperature(temperature)
    values = velocity_values(grid.shape[0]) if values is None else np.asarray(values)
    weights = VelocityGrid(
        values,
        gaussian_weights(values, qmodel.physical_constants().velocity_width(temperature)),
        temperature,
    ).weights
    return float(weighted_average(np.ascontiguousarray(grid), weights, weights))


def _doppler_error(cfg, temperature, case_id, epsilon, metric, n_points, v_max, **kwargs):
    _check_temperature(temperature)
    sequence.check_design_ratio(cfg, kwargs.pop("override_ratio", False))
    values = velocity_values(n_points, v_max)
    grid = doppler_error_grid(cfg, case_id, epsilon, metric=metric, values=values, **kwargs)
    return doppler_average(grid, temperature, values)


def doppler_averaged_rotation_error(
    cfg, temperature, case_id=1, epsilon=0.0, *, n_points=N_VELOCITIES, v_max=V_MAX,
    **kwargs,
):
    """Doppler-averaged rotation error at ``temperature`` in K.

    Keyword arguments ``case2_scope``, ``workers``, ``progress``,
    ``use_cache`` and ``override_ratio`` are passed through.
    """
    return _doppler_error(
        cfg, temperature, case_id, epsilon, "rotation", n_points, v_max, **kwargs
    )


def doppler_averaged_bell_error(
    cfg, temperature, case_id=1, epsilon=0.0, *, n_points=N_VELOCITIES, v_max=V_MAX,
    **kwargs,
):
    """Doppler-averaged Bell-state error for (|00> + |10>)/sqrt(2) inputs."""
    return _doppler_error(
        cfg, temperature, case_id, epsilon, "bell", n_points, v_max, **kwargs
    )


def doppler_scale(cfg, temperature):
    """Doppler phase k sigma_v t_pi picked up over one pulse by a one-sigma atom."""
    _check_temperature(temperature)
    width = qmodel.physical_constants().velocity_width(temperature)
    return cfg.wavevector_k * width * cfg.pulse_duration


def doppler_curvature(
    cfg, case_id=1, epsilon=0.0, *, metric="rotation", case2_scope="target",
    step=1e-3, override_ratio=False,
):
    """Small-temperature expansion of the Doppler-averaged error.

    With x = k v t_pi for either atom, the error near zero velocity is
    E(0) + (E_cc x_c^2 + E_tt x_t^2)/2 + ..., and the terms odd in a
    velocity average out. The Gaussian average is therefore
    E(0) + c s^2 + O(s^4) with s = ``doppler_scale(cfg, T)`` and
    c = (E_cc + E_tt)/2. Both second derivatives are central differences.

    Parameters
    ----------
    cfg : GateChannelConfig
    case_id : {1, 2}
    epsilon : float
        Gap in s.
    metric : {"rotation", "bell"}
    case2_scope : {"target", "all"}
    step : float, default 1e-3
        Difference step in units of x.
    override_ratio : bool, default False

    Returns
    -------
    (float, float)
        The zero-velocity error E(0) and the coefficient c.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    sequence.check_design_ratio(cfg, override_ratio)
    dv = step / (cfg.wavevector_k * cfg.pulse_duration)
    points = [(0.0, 0.0), (dv, 0.0), (-dv, 0.0), (0.0, dv), (0.0, -dv)]
    gates = np.stack(
        [
            sequence.gate_map(
                cfg, v_c, v_t, case_id, epsilon,
                override_ratio=True, case2_scope=case2_scope,
            )
            for v_c, v_t in points
        ]
    )
    errors = _evaluate_metric(gates, metric)
    baseline = float(errors[0])
    curvature = float((np.sum(errors[1:]) - 4 * baseline) / (2 * step**2))
    logger.debug("Doppler curvature (%s, case %d): %.6g", metric, case_id, curvature)
    return baseline, curvature


@dataclass
class SweepRow:
    """One cell of a sweep table.

    Attributes
    ----------
    coordinates : dict
        Axis name -> value in the units named by the key.
    error : float
    wall_time : float
        Seconds spent on the cell; excluded from comparisons.
    """

    coordinates: dict
    error: float
    wall_time: float = field(default=0.0, compare=False)


def temperature_sweep(
    cfg, temperatures, case_id=1, epsilon=0.0, *, metric="rotation",
    n_points=N_VELOCITIES, v_max=V_MAX, **kwargs
):
    """Doppler error for each temperature (K); the error grid is shared."""
    temperatures = list(temperatures)
    if not temperatures:
        raise ValueError("temperatures must not be empty")
    rows = []
    for temperature in temperatures:
        start = time.time()
        error = _doppler_error(
            cfg, temperature, case_id, epsilon, metric, n_points, v_max, **dict(kwargs)
        )
        rows.append(SweepRow({"temperature_uk": temperature * 1e6}, error, time.time() - start))
    return rows


def interaction_sweep(cfg, v_list, temperatures, case_id=1, epsilon=0.0, **kwargs):
    """Doppler rotation error on the product of interaction values and temperatures.

    Parameters
    ----------
    v_list : list of float
        Finite |rr> energies in rad/s.
    temperatures : list of float
        Temperatures in K.

    Returns
    -------
    list of SweepRow
        Ordered by V, then temperature.
    """
    v_list = list(v_list)
    temperatures = list(temperatures)
    if not v_list or not temperatures:
        raise ValueError("interaction_sweep needs non-empty V and temperature lists")
    rows = []
    for v_interaction in v_list:
        if not math.isfinite(v_interaction):
            raise ValueError("interaction_sweep needs finite V values")
        cfg_v = cfg.with_values(v_interaction=v_interaction)
        for row in temperature_sweep(cfg_v, temperatures, case_id, epsilon, **kwargs):
            row.coordinates = {
                "v_interaction_mhz": v_interaction / (2 * math.pi * 1e6),
                **row.coordinates,
            }
            rows.append(row)
    return rows


def amplitude_fluctuation_error(cfg, sigma, *, n_max=N_AMPLITUDE_OFFSETS):
    """Rotation error averaged over Gaussian fluctuations of both target Rabi frequencies.

    Each target channel takes omega_t (1 + n sigma) for n = -n_max..n_max, at
    zero velocity, and the errors of all pairs are averaged with weights
    exp(-(n1^2 + n2^2)/2).

    Parameters
    ----------
    cfg : GateChannelConfig
        Design-point configuration.
    sigma : float
        Relative Gaussian width.

    Returns
    -------
    float
    """
    sequence.check_design_ratio(cfg)
    grid = AmplitudeGrid(sigma, n_max)
    numerator = denominator = 0.0
    cache = {}
    for f1, f2, weight in grid.pairs():
        if (f1, f2) not in cache:
            cfg_k = cfg.with_values(omega_t=cfg.omega_t * f1, omega_t2=cfg.omega_t * f2)
            cache[(f1, f2)] = metrics.rotation_error(
                sequence.gate_map(cfg_k, override_ratio=True)
            )
        numerator += cache[(f1, f2)] * weight
        denominator += weight
    return numerator / denominator


def sigma_sweep(cfg, sigmas):
    """amplitude_fluctuation_error for each relative width."""
    sigmas = list(sigmas)
    if not sigmas:
        raise ValueError("sigmas must not be empty")
    rows = []
    for sigma in sigmas:
        start = time.time()
        error = amplitude_fluctuation_error(cfg, sigma)
        rows.append(SweepRow({"sigma": sigma}, error, time.time() - start))
    return rows


def decay_coefficient(cfg):
    """Mean Rydberg time integral over the four inputs in units of t_g = 2 pi/omega_c."""
    result = sequence.run_tsd_cnot(cfg, override_ratio=True, n_samples=2001)
    return result.mean_rydberg_integral() / (2 * math.pi / cfg.omega_c)


def decay_error(cfg, tau, *, result=None):
    """Rydberg-decay error (1/4 tau) sum over inputs of the Rydberg time integrals.

    At finite blockade strength the doubly excited |rr> population enters
    with weight 2, one decay channel per atom. It stays of order
    (omega_c/V)^2, so the correction is small for V >> omega_c.

    Parameters
    ----------
    cfg : GateChannelConfig
    tau : float
        Rydberg lifetime in s.
    result : GateResult, optional
        Reuse the populations of an earlier zero-velocity run.

    Returns
    -------
    float
    """
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if result is None:
        result = sequence.run_tsd_cnot(cfg, override_ratio=True, n_samples=2001)
    return result.mean_rydberg_integral() / tau


def tau_sweep(cfg, taus):
    """decay_error for each lifetime (s), sharing one propagation."""
    taus = list(taus)
    if not taus:
        raise ValueError("taus must not be empty")
    start = time.time()
    result = sequence.run_tsd_cnot(cfg, override_ratio=True, n_samples=2001)
    elapsed = time.time() - start
    return [
        SweepRow({"tau_us": tau * 1e6}, decay_error(cfg, tau, result=result), elapsed)
        for tau in taus
    ]


@dataclass(frozen=True)
class FidelityBudget:
    """Decay plus Doppler error of one operating point."""

    decay: float
    doppler: float

    @property
    def total_error(self):
        return self.decay + self.doppler

    @property
    def fidelity(self):
        return 1 - self.total_error


def fidelity_budget(cfg, temperature, tau, case_id=1, epsilon=0.0, *, metric="rotation", **kwargs):
    """Combined decay and Doppler budget at ``temperature`` (K) and lifetime ``tau`` (s)."""
    doppler = _doppler_error(
        cfg, temperature, case_id, epsilon, metric, N_VELOCITIES, V_MAX, **kwargs
    )
    return FidelityBudget(decay=decay_error(cfg, tau), doppler=doppler)
