"""Single-intersection signal simulation with urgency-based controllers.

Vehicles arrive on the four inroads of a star intersection per a supplied
inflow series, queue in per-lane-group buffers, and discharge through the
active signal configuration at the parabolic flow-density rate, paying a
start-up delay whenever a lane group turns green. Quantities are
real-valued throughout; conservation (arrivals = discharged + remaining +
overflow dropped) holds to float accumulation error.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .chaos import experiment_series
from .predictor import PredictorModel, TrainConfig, train
from .road_graph import enumerate_configurations, four_star
from .stats import SampleSummary, TTestResult, t_test
from .urgency import hold_or_switch, kernel_weights, select_configuration

CONTROLLERS = ("elmopp", "naive-urgency", "fixed-cycle", "longest-queue")
BASELINES = ("fixed-cycle", "naive-urgency", "longest-queue")

APPROACHES = ("n", "e", "s", "w")  # inroad order, matching inflow channels


@dataclass(frozen=True)
class SimConfig:
    """Experiment configuration; defaults reproduce the reference setup.

    `inflow_budget` is the vehicle budget for the simulated interval; with
    `budget_per_inroad` (the default) the inflow series carries budget
    vehicles per inroad, i.e. 4x the budget in total, which matches the
    reference experiment's accounting of roughly a thousand vehicles per
    inroad. Set it False to interpret the budget as the grand total.
    """

    n_steps: int = 2000
    dt: float = 1.0
    inroad_capacity: float = 1000.0
    lane_split: tuple[float, float, float] = (0.25, 0.50, 0.25)
    jam_density: float = 1.0
    free_flow_speed: float = 10.0
    startup_delay: float = 1.5
    initial_per_inroad: float = 200.0
    inflow_budget: float = 800.0
    budget_per_inroad: bool = True
    controller: str = "elmopp"
    t_min: float = 10.0
    t_max: float = 120.0
    seed: int = 0
    pure_argmax: bool = False
    fixed_cycle_green: float = 30.0
    predictor_depth: int = 1
    predictor_units: int = 16
    n_train: int = 8000

    def total_inflow(self) -> float:
        return self.inflow_budget * (len(APPROACHES) if self.budget_per_inroad else 1)

    def horizon_steps(self) -> int:
        return int(round(self.t_max / self.dt))


def greenshield_outflow(load: float, v_f: float, k_j: float) -> float:
    """Outflow rate load * v_f * (1 - load/k_j); zero when empty or jammed."""
    if not 0 <= load <= k_j:
        raise ValueError(f"load {load} outside [0, {k_j}]")
    return load * v_f * (1.0 - load / k_j)


@dataclass
class TrialResult:
    throughput: float
    discharged: np.ndarray        # per-step discharge
    decisions: np.ndarray         # per-step active configuration index
    inroad_loads: np.ndarray      # per-step (4,) end-of-step inroad loads
    seed: int
    initial_vehicles: float
    inflow_vehicles: float
    dropped_vehicles: float
    discharged_vehicles: float
    remaining_vehicles: float
    discharged_by_inroad: np.ndarray = field(default_factory=lambda: np.zeros(4))
    activation_lengths: list[float] = field(default_factory=list)


class IntersectionSim:
    """Mutable state of one trial; single-writer, deterministic."""

    def __init__(self, cfg: SimConfig, model: PredictorModel | None = None):
        if cfg.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {cfg.controller!r}")
        if cfg.controller == "elmopp" and model is None:
            raise ValueError("the elmopp controller requires a predictor model")
        self.cfg = cfg
        self.model = model
        self.graph = four_star(cfg.inroad_capacity, cfg.lane_split)
        center = self.graph.vertices[0]
        cset = enumerate_configurations(self.graph, center)
        tails = [e.tail for e in self.graph.inroads(center)]
        order = {t: i for i, t in enumerate(APPROACHES)}
        assert sorted(tails, key=lambda t: order[t]) == list(APPROACHES)
        self.members: list[np.ndarray] = []
        for conf in cset.configurations:
            idx = sorted(order[tail] * 3 + lane for tail, lane in conf.members)
            self.members.append(np.array(idx, dtype=int))
        self.n_configs = len(self.members)

        split = np.asarray(cfg.lane_split)
        self.caps = np.tile(split, len(APPROACHES)) * cfg.inroad_capacity
        self.counts = np.repeat(np.full(len(APPROACHES), cfg.initial_per_inroad), 3) \
            * np.tile(split, len(APPROACHES))
        self.initial_vehicles = float(self.counts.sum())
        self.T = np.zeros(12)
        self.startup = np.zeros(12)
        self.current: int | None = None
        self.elapsed = 0.0
        self.kernel = kernel_weights(cfg.horizon_steps())
        self._split_over_caps = np.divide(
            np.tile(split, len(APPROACHES)), self.caps,
            out=np.zeros(12), where=self.caps > 0)
        self._prev_inflow: np.ndarray | None = None
        self._cycle_green = min(max(cfg.fixed_cycle_green, cfg.t_min), cfg.t_max)

        self.inflow_vehicles = 0.0
        self.dropped_vehicles = 0.0
        self.discharged_vehicles = 0.0
        self.discharged_by_sub = np.zeros(12)
        self.decisions: list[int] = []
        self.discharged_steps: list[float] = []
        self.load_trace: list[np.ndarray] = []
        self.activation_lengths: list[float] = []

    # --- scoring -----------------------------------------------------------

    def _loads(self) -> np.ndarray:
        return np.divide(self.counts, self.caps, out=np.zeros(12), where=self.caps > 0)

    def _clock_factor(self) -> np.ndarray:
        return np.exp(self.T / self.cfg.t_max - 1.0)

    def _config_sums(self, per_subedge: np.ndarray) -> np.ndarray:
        return np.array([per_subedge[m].sum() for m in self.members])

    def _scores(self, inflow_t: np.ndarray) -> np.ndarray:
        kind = self.cfg.controller
        if kind == "longest-queue":
            return self._config_sums(self.counts)
        if kind == "naive-urgency" or kind == "fixed-cycle":
            return self._config_sums(self._loads() * self._clock_factor())
        # prediction-weighted urgency over the planning horizon
        horizon = self.cfg.horizon_steps()
        loads = self._loads()
        preds = self.model.predict_horizon(inflow_t, horizon)       # (H, 4) veh/step
        cum = np.cumsum(preds, axis=0)
        per_sub = np.repeat(cum, 3, axis=1) * self._split_over_caps  # (H, 12)
        profiles = np.empty((12, horizon + 1))
        profiles[:, 0] = loads
        profiles[:, 1:] = np.clip(loads[:, None] + per_sub.T, 0.0, 1.0)
        u = self._clock_factor() * (profiles @ self.kernel)
        return self._config_sums(u)

    # --- stepping ------------------------------------------------------------

    def _decide(self, inflow_t: np.ndarray) -> int:
        if self.current is None:
            return select_configuration(self._scores(inflow_t))
        if self.cfg.controller == "fixed-cycle":
            if self.elapsed >= self._cycle_green:
                return (self.current + 1) % self.n_configs
            return self.current
        if self.cfg.pure_argmax:
            scores = self._scores(inflow_t)
            if scores[self.current] >= scores.max():
                return self.current
            return select_configuration(scores)
        if self.elapsed < self.cfg.t_min:
            return self.current  # decision is forced, skip the scoring work
        return hold_or_switch(self.current, self.elapsed, self._scores(inflow_t),
                              self.cfg.t_min, self.cfg.t_max)

    def step(self, inflow_t: np.ndarray) -> float:
        """Advance one timestep; returns vehicles discharged this step."""
        cfg = self.cfg
        inflow_t = np.asarray(inflow_t, dtype=float)

        # 1. arrivals, clamped at lane-group capacity; overflow is dropped
        arrivals = np.repeat(inflow_t, 3) * np.tile(np.asarray(cfg.lane_split), 4)
        add = np.minimum(arrivals, self.caps - self.counts)
        before = self.counts.copy()
        self.counts = self.counts + add
        realized = self.counts - before
        self.inflow_vehicles += float(arrivals.sum())
        self.dropped_vehicles += float(arrivals.sum() - realized.sum())

        # 2./3. controller decision and switch bookkeeping
        choice = self._decide(inflow_t)
        if choice != self.current:
            if self.current is not None:
                self.activation_lengths.append(self.elapsed)
                newly = np.setdiff1d(self.members[choice], self.members[self.current],
                                     assume_unique=True)
            else:
                newly = self.members[choice]
            self.startup[newly] = cfg.startup_delay
            self.current = choice
            self.elapsed = 0.0

        # 4. discharge the active lane groups, minus remaining start-up loss
        m = self.members[self.current]
        loads_m = np.divide(self.counts[m], self.caps[m],
                            out=np.zeros(len(m)), where=self.caps[m] > 0)
        q = loads_m * cfg.free_flow_speed * (1.0 - loads_m / cfg.jam_density)
        eff = cfg.dt - np.minimum(self.startup[m], cfg.dt)
        self.startup[m] = np.maximum(self.startup[m] - cfg.dt, 0.0)
        want = q * eff
        before_m = self.counts[m].copy()
        self.counts[m] = before_m - np.minimum(want, before_m)
        removed_by_sub = before_m - self.counts[m]
        removed = float(removed_by_sub.sum())
        self.discharged_vehicles += removed
        self.discharged_by_sub[m] += removed_by_sub

        # 5. clocks: inactive lane groups age, active ones stay reset
        self.T += cfg.dt
        self.T[m] = 0.0
        self.elapsed += cfg.dt

        self.decisions.append(self.current)
        self.discharged_steps.append(removed)
        self.load_trace.append(self.counts.reshape(4, 3).sum(axis=1) / cfg.inroad_capacity)

        # 6. feed the observation pair to the predictor
        if self.model is not None and self._prev_inflow is not None:
            self.model.online_update(self._prev_inflow, inflow_t)
        self._prev_inflow = inflow_t.copy()
        return removed

    def result(self) -> TrialResult:
        n = len(self.discharged_steps)
        total = float(np.sum(self.discharged_steps))
        return TrialResult(
            throughput=total / (n * self.cfg.dt) if n else 0.0,
            discharged=np.array(self.discharged_steps),
            decisions=np.array(self.decisions, dtype=int),
            inroad_loads=np.array(self.load_trace),
            seed=self.cfg.seed,
            initial_vehicles=self.initial_vehicles,
            inflow_vehicles=self.inflow_vehicles,
            dropped_vehicles=self.dropped_vehicles,
            discharged_vehicles=self.discharged_vehicles,
            remaining_vehicles=float(self.counts.sum()),
            discharged_by_inroad=self.discharged_by_sub.reshape(4, 3).sum(axis=1),
            activation_lengths=list(self.activation_lengths),
        )

    def quantity_tensor(self) -> np.ndarray:
        """Current vehicle counts as a (|V|, |V|, 3) tensor; outroads stay zero."""
        n = len(self.graph.vertices)
        Q = np.zeros((n, n, 3))
        center = self.graph.vertex_index(self.graph.vertices[0])
        for i, leaf in enumerate(APPROACHES):
            Q[self.graph.vertex_index(leaf), center, :] = self.counts[i * 3:(i + 1) * 3]
        return Q


def run_trial(cfg: SimConfig, inflow: np.ndarray,
              model: PredictorModel | None = None) -> TrialResult:
    """Run one deterministic trial over the given (n_steps, 4) inflow series."""
    inflow = np.asarray(inflow, dtype=float)
    if inflow.shape != (cfg.n_steps, 4):
        raise ValueError(f"inflow shape {inflow.shape} != ({cfg.n_steps}, 4)")
    sim = IntersectionSim(cfg, model)
    for t in range(cfg.n_steps):
        sim.step(inflow[t])
    return sim.result()


def baseline_controller(kind: str) -> SimConfig:
    """Configuration preset for one of the non-predictive baselines."""
    if kind not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; choose from {BASELINES}")
    return replace(SimConfig(), controller=kind)


# --- sweeps -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    controller: str
    total: float
    trial: int
    seed: int
    throughput: float


_PRETRAIN_TAG = 0x70726574


def derive_seed(master_seed: int, *key: int) -> int:
    """Stable per-cell seed derivation from the master seed."""
    ss = np.random.SeedSequence([int(master_seed), *[int(k) for k in key]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def pretrain_model(cfg: SimConfig, seed: int,
                   train_cfg: TrainConfig | None = None) -> PredictorModel:
    """Train a fresh predictor on the leading segment of an experiment series."""
    tc = train_cfg if train_cfg is not None else TrainConfig(units=cfg.predictor_units)
    series = experiment_series(seed, cfg.total_inflow(),
                               n_train=cfg.n_train, n_sim=cfg.n_steps)
    model = PredictorModel.new(seed, depth=cfg.predictor_depth,
                               hidden_size=tc.units, learning_rate=tc.learning_rate)
    train(model, series, tc)
    return model


def run_sweep(cfg: SimConfig, totals, trials: int, controllers,
              master_seed: int, train_cfg: TrainConfig | None = None,
              progress=None) -> list[SweepRow]:
    """Seed-paired sweep over vehicle budgets x trials x controllers.

    Every (total, trial) cell draws one inflow series shared by all
    controllers, so cross-controller comparisons are paired. One predictor
    is pre-trained per budget (the attractor dynamics are seed-independent)
    and cloned into each trial, where it keeps learning online.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for kind in controllers:
        if kind not in CONTROLLERS:
            raise ValueError(f"unknown controller {kind!r}")
    rows: list[SweepRow] = []
    for total in totals:
        base = replace(cfg, inflow_budget=float(total))
        model0 = None
        if "elmopp" in controllers:
            model0 = pretrain_model(base, derive_seed(master_seed, int(total), _PRETRAIN_TAG),
                                    train_cfg)
        for trial in range(trials):
            seed = derive_seed(master_seed, int(total), trial)
            series = experiment_series(seed, base.total_inflow(),
                                       n_train=base.n_train, n_sim=base.n_steps)
            sim_inflow = series[base.n_train:]
            for kind in controllers:
                trial_cfg = replace(base, controller=kind, seed=seed)
                model = model0.clone() if kind == "elmopp" else None
                res = run_trial(trial_cfg, sim_inflow, model)
                rows.append(SweepRow(controller=kind, total=float(total),
                                     trial=trial, seed=seed,
                                     throughput=res.throughput))
                if progress is not None:
                    progress(rows[-1])
    return rows


def sweep_summaries(rows: list[SweepRow]) -> dict[str, SampleSummary]:
    """Per-controller throughput summary over all sweep rows."""
    out: dict[str, SampleSummary] = {}
    for kind in dict.fromkeys(r.controller for r in rows):
        vals = [r.throughput for r in rows if r.controller == kind]
        mean = float(np.mean(vals))
        sd = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        out[kind] = SampleSummary(mean=mean, sd=sd, n=len(vals))
    return out


def sweep_ttests(rows: list[SweepRow], alpha: float = 0.05) -> list[tuple[str, TTestResult]]:
    """One-sided tests for every controller pair, greater mean first."""
    summaries = sweep_summaries(rows)
    kinds = list(summaries)
    results = []
    for i in range(len(kinds)):
        for j in range(i + 1, len(kinds)):
            a, b = kinds[i], kinds[j]
            if summaries[b].mean > summaries[a].mean:
                a, b = b, a
            df = summaries[a].n + summaries[b].n - 2
            results.append((f"{a}_vs_{b}", t_test(summaries[a], summaries[b], df, alpha)))
    return results


# --- delimited output -----------------------------------------------------------

def write_trial_csv(path, result: TrialResult) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("step,config_active,discharged,load_n,load_e,load_s,load_w\n")
        for t in range(len(result.discharged)):
            loads = ",".join(repr(float(v)) for v in result.inroad_loads[t])
            fh.write(f"{t},{result.decisions[t]},{result.discharged[t]!r},{loads}\n")


def write_sweep_csv(path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("controller,total_vehicles,trial,seed,throughput\n")
        for r in rows:
            fh.write(f"{r.controller},{r.total!r},{r.trial},{r.seed},{r.throughput!r}\n")


def read_sweep_csv(path) -> list[SweepRow]:
    rows: list[SweepRow] = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "controller,total_vehicles,trial,seed,throughput":
            raise ValueError(f"unexpected sweep CSV header: {header!r}")
        for line in fh:
            if not line.strip():
                continue
            kind, total, trial, seed, tp = line.strip().split(",")
            rows.append(SweepRow(controller=kind, total=float(total), trial=int(trial),
                                 seed=int(seed), throughput=float(tp)))
    return rows
