"""Deterministic chaotic inflow synthesis.

Vehicle arrivals are generated from a 4-D autonomous hyperchaotic system
integrated with the explicit Euler method, rectified, and L1-normalized to
a target vehicle budget. Chaotic (rather than random) inflow is
deterministic per seed while remaining irregular like real traffic.
"""

import math
from dataclasses import dataclass

import numpy as np

# Channel order of the state vector (x, y, z, w) mapped onto inroads.
CHANNELS = ("n", "e", "s", "w")

DEFAULT_DT = 0.01
DEFAULT_T_SPAN = 2000.0


@dataclass(frozen=True)
class HyperchaosParams:
    a: float = 5.0
    b: float = 20.0
    c: float = 1.0
    d: float = 0.1
    e: float = 20.6
    h: float = 1.0
    k: float = 0.1

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "e", "h"):
            if getattr(self, name) <= 0:
                raise ValueError(f"parameter {name} must be positive")


def derivative(state, p: HyperchaosParams = HyperchaosParams()) -> np.ndarray:
    """Right-hand side of the hyperchaotic system at `state` = (x, y, z, w)."""
    x, y, z, w = (float(v) for v in state)
    return np.array([
        p.a * (y - x) - p.e * w,
        x * z - p.h * y,
        p.b - x * y - p.c * z,
        p.k * y - p.d * w,
    ])


def euler_integrate(h0, dt: float, steps: int,
                    p: HyperchaosParams = HyperchaosParams()) -> np.ndarray:
    """Explicit Euler trajectory: (steps+1, 4) array starting at h0.

    Raises ValueError naming the step index if the state leaves the finite
    range (the default attractor is bounded, so this signals bad inputs).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x, y, z, w = (float(v) for v in h0)
    out = np.empty((steps + 1, 4))
    out[0] = (x, y, z, w)
    a, b, c, d, e, h, k = p.a, p.b, p.c, p.d, p.e, p.h, p.k
    isfinite = math.isfinite
    for n in range(steps):
        dx = a * (y - x) - e * w
        dy = x * z - h * y
        dz = b - x * y - c * z
        dw = k * y - d * w
        x += dx * dt
        y += dy * dt
        z += dz * dt
        w += dw * dt
        if not (isfinite(x) and isfinite(y) and isfinite(z) and isfinite(w)):
            raise ValueError(f"trajectory diverged at step {n + 1}")
        out[n + 1, 0] = x
        out[n + 1, 1] = y
        out[n + 1, 2] = z
        out[n + 1, 3] = w
    return out


def _downsample(trajectory: np.ndarray, n: int) -> np.ndarray:
    """Uniform-stride reduction of the trajectory to n points."""
    total = trajectory.shape[0]
    if n > total:
        raise ValueError(f"cannot downsample {total} points to {n}")
    stride = total // n
    return trajectory[: n * stride : stride]


def _raw_series(seed: int, n_points: int, dt: float, t_span: float,
                p: HyperchaosParams) -> np.ndarray:
    rng = np.random.default_rng(seed)
    h0 = rng.random(4)  # uniform over the unit hypercube
    steps = int(round(t_span / dt))
    traj = euler_integrate(h0, dt, steps, p)
    return np.abs(_downsample(traj, n_points))


def make_inflow(seed: int, n_steps: int = 2000, total: float = 800.0,
                dt: float = DEFAULT_DT, t_span: float = DEFAULT_T_SPAN,
                p: HyperchaosParams = HyperchaosParams()) -> np.ndarray:
    """Chaotic inflow series of shape (n_steps, 4) whose entries sum to `total`.

    The initial state is drawn uniformly from the unit hypercube using
    `seed`; the trajectory is downsampled with a uniform stride, rectified
    channelwise, and scaled so the whole series carries `total` vehicles.
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    pts = _raw_series(seed, n_steps, dt, t_span, p)
    if total == 0:
        return np.zeros_like(pts)
    mass = pts.sum()
    if mass == 0:
        raise ValueError("degenerate trajectory: zero total mass")
    return pts * (total / mass)


def training_series(seed: int, n_points: int = 10000, total: float = 800.0,
                    dt: float = DEFAULT_DT, t_span: float = DEFAULT_T_SPAN,
                    p: HyperchaosParams = HyperchaosParams()) -> np.ndarray:
    """Long series for predictor pre-training; same pipeline as make_inflow."""
    return make_inflow(seed, n_steps=n_points, total=total, dt=dt, t_span=t_span, p=p)


def experiment_series(seed: int, sim_total: float, n_train: int = 8000,
                      n_sim: int = 2000, dt: float = DEFAULT_DT,
                      t_span: float = DEFAULT_T_SPAN,
                      p: HyperchaosParams = HyperchaosParams()) -> np.ndarray:
    """Series of n_train+n_sim points whose LAST n_sim entries sum to sim_total.

    The leading n_train points pre-train the predictor; the trailing n_sim
    points drive the simulation, so the simulated interval carries exactly
    the requested vehicle budget while both segments share one scale.
    """
    if sim_total < 0:
        raise ValueError("sim_total must be non-negative")
    pts = _raw_series(seed, n_train + n_sim, dt, t_span, p)
    if sim_total == 0:
        return np.zeros_like(pts)
    mass = pts[n_train:].sum()
    if mass == 0:
        raise ValueError("degenerate trajectory: zero mass on simulation segment")
    return pts * (sim_total / mass)


def write_inflow_csv(path, series: np.ndarray) -> None:
    """CSV with header t,n,e,s,w and shortest round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(CHANNELS) + "\n")
        for t, row in enumerate(series):
            fh.write(f"{t}," + ",".join(repr(float(v)) for v in row) + "\n")


def read_inflow_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "t," + ",".join(CHANNELS):
            raise ValueError(f"unexpected inflow CSV header: {header!r}")
        rows = [[float(v) for v in line.strip().split(",")[1:]] for line in fh if line.strip()]
    return np.array(rows)
