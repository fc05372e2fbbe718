"""Monte Carlo harness: sampled truths, synthetic measurements and per-run filters."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from kofx.core.exceptions import ContractViolation, KofxError
from kofx.filters.measurement import MeasurementModel
from kofx.filters.state import FilterRecord, FilterState, Observation
from kofx.moments.propagation import GaussianBelief
from kofx.reference.dynamics import Dynamics
from kofx.reference.statistics import MCReport, SampleMoments

logger = logging.getLogger(__name__)

FilterRunner = Callable[[List[Observation], FilterState, Sequence[float]], List[FilterRecord]]


def run_rng(seed: int, run: int) -> np.random.Generator:
    """Independent, reproducible stream for one run."""
    return np.random.default_rng(np.random.SeedSequence([seed, run]))


@dataclass(frozen=True, eq=False)
class TruthSetup:
    """Truth dynamics, initial belief and timeline shared by all runs."""

    dynamics: Dynamics
    belief: GaussianBelief
    t0: float
    epochs: Sequence[float]
    measurement: Union[MeasurementModel, None] = None
    measurement_epochs: Sequence[float] = ()

    def __post_init__(self) -> None:
        if self.measurement_epochs and self.measurement is None:
            raise ContractViolation("Measurement epochs need a measurement model")
        missing = set(self.measurement_epochs) - set(self.epochs)
        if missing:
            raise ContractViolation(f"Measurement epochs {sorted(missing)} are not report epochs")
        if any(t < self.t0 for t in self.epochs):
            raise ContractViolation("Report epochs precede the initial epoch")

    def initial_state(self) -> FilterState:
        return FilterState(self.t0, self.belief.mean, self.belief.covariance)


class Simulation(NamedTuple):
    """Truth states at the report epochs and the noisy observations."""

    truth: Any
    observations: List[Observation]


def simulate(setup: TruthSetup, rng: np.random.Generator) -> Simulation:
    """Draw an initial truth, integrate it and synthesize observations."""
    x0 = setup.belief.sample(rng, 1)[0]
    truth = setup.dynamics.trajectory(x0, setup.t0, setup.epochs)
    index = {t: k for k, t in enumerate(setup.epochs)}
    observations = []
    if setup.measurement is not None:
        for t in setup.measurement_epochs:
            y = setup.measurement.evaluate(truth[index[t]]) + setup.measurement.sample_noise(rng)
            observations.append(Observation(t, y))
    return Simulation(truth, observations)


class RunResult(NamedTuple):
    run: int
    errors: Any
    variances: Any
    failure: Union[str, None] = None


def _records_by_epoch(setup: TruthSetup, records: Sequence[FilterRecord]) -> List[FilterState]:
    by_epoch = {r.epoch: r.state for r in records}
    initial = setup.initial_state()
    states = []
    for t in setup.epochs:
        if t == setup.t0:
            states.append(initial)
        elif t in by_epoch:
            states.append(by_epoch[t])
        else:
            raise ContractViolation(f"Filter produced no record at epoch {t}")
    return states


def run_once(setup: TruthSetup, runner: FilterRunner, seed: int, run: int) -> RunResult:
    """One Monte Carlo run; toolkit errors are captured as a failure."""
    try:
        sim = simulate(setup, run_rng(seed, run))
        later = [t for t in setup.epochs if t > setup.t0]
        records = runner(sim.observations, setup.initial_state(), later)
        states = _records_by_epoch(setup, records)
    except KofxError as e:
        logger.warning(f"Monte Carlo run {run} failed: {e.message}")
        return RunResult(run, None, None, f"{e.code}: {e.message}")
    estimates = np.array([s.estimate for s in states])
    variances = np.array([np.diag(s.covariance) for s in states])
    return RunResult(run, estimates - sim.truth, variances)


def _execute(tasks: Callable[[int], Any], runs: int, workers: int) -> List[Any]:
    if workers <= 1:
        return [tasks(run) for run in range(runs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(tasks, range(runs)))


def monte_carlo(
    setup: TruthSetup,
    runner: FilterRunner,
    runs: int,
    seed: int = 0,
    method: str = "kof",
    workers: int = 1,
) -> MCReport:
    """Run ``runs`` independent trajectories and reduce them in run order."""
    if runs < 1:
        raise ContractViolation(f"Monte Carlo needs at least one run, got {runs}")
    logger.info(f"Monte Carlo {method}: {runs} runs, seed {seed}, {workers} worker(s)")
    results: List[RunResult] = _execute(lambda run: run_once(setup, runner, seed, run), runs, workers)
    ok = [r for r in results if r.failure is None]
    failures = {r.run: r.failure for r in results if r.failure is not None}
    if not ok:
        raise ContractViolation(f"All {runs} Monte Carlo runs of {method} failed", details={"failures": failures})
    return MCReport.from_samples(
        method,
        setup.epochs,
        np.stack([r.errors for r in ok]),
        np.stack([r.variances for r in ok]),
        failures,
    )


def _sample_truth(setup: TruthSetup, seed: int, run: int) -> Tuple[int, Any]:
    rng = run_rng(seed, run)
    x0 = setup.belief.sample(rng, 1)[0]
    return run, setup.dynamics.trajectory(x0, setup.t0, setup.epochs)


def sample_moments(setup: TruthSetup, samples: int, seed: int = 0, workers: int = 1) -> SampleMoments:
    """Central-moment summaries of ``samples`` propagated truths (no filtering)."""
    if samples < 1:
        raise ContractViolation(f"Need at least one sample, got {samples}")
    results = _execute(lambda run: _sample_truth(setup, seed, run), samples, workers)
    states = np.stack([traj for _, traj in sorted(results, key=lambda r: r[0])])
    return SampleMoments.from_states(setup.epochs, states)
