"""Signal urgencies and hold/switch decisions.

A subedge's urgency grows exponentially with the time since its last green
and linearly with its load. The prediction-weighted ("cumulative") variant
convolves present and predicted loads with a decreasing triangular kernel
over the planning horizon, so near-future congestion counts for more than
far-future congestion.
"""

import math
from collections.abc import Sequence

import numpy as np


def subedge_urgency(load: float, T: float, t_max: float) -> float:
    """load * exp(T/t_max - 1): load/e when just served, the bare load at T=t_max."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if T < 0:
        raise ValueError("T must be non-negative")
    return load * math.exp(T / t_max - 1.0)


def configuration_urgency(member_urgencies: Sequence[float]) -> float:
    """Urgency of a configuration: the sum over its member subedges."""
    return float(sum(member_urgencies))


def triangle_kernel(t: float, t_max: float) -> float:
    """Weight 2*(1/t_max - t/t_max^2) at horizon offset t.

    The underlying line drops from 2/t_max at t=0 to 0 at t=t_max and
    encloses unit area over [0, t_max].
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if t < 0 or t > t_max:
        raise ValueError(f"kernel offset {t} outside [0, {t_max}]")
    return 2.0 * (1.0 / t_max - t / (t_max * t_max))


def kernel_weights(t_max: int) -> np.ndarray:
    """Discrete kernel samples at t = 0..t_max (length t_max+1).

    The discrete sum is (t_max+1)/t_max, not 1; the surplus is a factor
    common to every configuration and never affects an argmax.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    t = np.arange(t_max + 1, dtype=float)
    return 2.0 * (1.0 / t_max - t / (t_max * t_max))


def cumulative_urgency(predicted_loads: np.ndarray, T: float, t_max: int) -> float:
    """Kernel-weighted urgency over the horizon.

    `predicted_loads` must have t_max+1 entries, index 0 being the current
    observed load. The clock factor exp(T/t_max - 1) is held at the current
    clock for the whole horizon, so a constant profile reduces to the plain
    urgency times the discrete kernel mass (t_max+1)/t_max.
    """
    loads = np.asarray(predicted_loads, dtype=float)
    if loads.shape != (t_max + 1,):
        raise ValueError(f"profile length {loads.shape} != horizon {t_max + 1}")
    return math.exp(T / t_max - 1.0) * float(kernel_weights(t_max) @ loads)


def cumulative_configuration_urgency(profiles: Sequence[np.ndarray],
                                     clocks: Sequence[float],
                                     t_max: int) -> float:
    """Sum of member cumulative urgencies."""
    if len(profiles) != len(clocks):
        raise ValueError("one clock per profile required")
    return float(sum(cumulative_urgency(p, T, t_max) for p, T in zip(profiles, clocks)))


def select_configuration(urgencies: Sequence[float]) -> int:
    """Index of the highest urgency; ties go to the lowest index."""
    if len(urgencies) == 0:
        raise ValueError("no configurations to select from")
    return int(np.argmax(np.asarray(urgencies, dtype=float)))


def hold_or_switch(current: int, current_elapsed: float, urgencies: Sequence[float],
                   t_min: float, t_max: float) -> int:
    """Decide the next active configuration, honoring legal green bounds.

    Returns the configuration index to activate for the coming step; the
    current index means hold. Below t_min the current configuration is
    always held; at or beyond t_max a switch to the best other
    configuration is forced; in between, a switch happens as soon as some
    other configuration's urgency reaches the current one's.
    """
    if current_elapsed < 0:
        raise ValueError("elapsed time must be non-negative")
    if not 0 <= current < len(urgencies):
        raise ValueError("current index out of range")
    if current_elapsed < t_min:
        return current
    best, best_u = -1, -math.inf
    for i, u in enumerate(urgencies):
        if i != current and u > best_u:
            best, best_u = i, u
    if best < 0:  # nothing else to switch to
        return current
    if current_elapsed >= t_max:
        return best
    return best if best_u >= urgencies[current] else current
