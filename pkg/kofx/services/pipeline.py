"""Scenario pipelines: model building, moment propagation, filtering and comparisons."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from kofx.core.config import Settings, get_settings
from kofx.core.exceptions import ContractViolation, KofxError
from kofx.crtbp.dynamics import libration_frame, polynomial_eom
from kofx.crtbp.normal_form import hamiltonian_normal_form, normal_frame
from kofx.crtbp.params import CRTBPParams
from kofx.filters.kof import FilterConfig, run_filter
from kofx.filters.measurement import AzimuthElevation, LinearMeasurement, MeasurementModel
from kofx.filters.state import FilterRecord, FilterState, Observation
from kofx.koopman.flow import physical_flow
from kofx.koopman.frame import AffineFrame
from kofx.koopman.model import KoopmanModel, VectorField, build_model
from kofx.models.scenario import Scenario
from kofx.moments.propagation import (
    CentralMomentSet,
    GaussianBelief,
    gaussian_moment_set,
    propagate_moments,
)
from kofx.poly.basis import Domain
from kofx.reference.dynamics import CRTBPDynamics, Dynamics, LinearDynamics
from kofx.reference.filters import METHODS, BenchmarkTuning, run_benchmark
from kofx.reference.integrator import IntegratorConfig
from kofx.reference.montecarlo import (
    FilterRunner,
    TruthSetup,
    monte_carlo,
    run_rng,
    sample_moments,
    simulate,
)
from kofx.reference.statistics import MCReport, SampleMoments

logger = logging.getLogger(__name__)

FILTER_METHODS = ("kof",) + METHODS
DOMAIN_SAMPLES = 101


def crtbp_params(scenario: Scenario) -> CRTBPParams:
    if scenario.system != "crtbp" or scenario.mu is None:
        raise ContractViolation(f"Scenario {scenario.name} is not a CRTBP scenario")
    return CRTBPParams(scenario.mu, scenario.point, scenario.expansion_order)


def truth_dynamics(scenario: Scenario, settings: Union[Settings, None] = None) -> Dynamics:
    settings = settings or get_settings()
    if scenario.system == "crtbp":
        return CRTBPDynamics(crtbp_params(scenario).mu, IntegratorConfig.from_settings(settings.integrator))
    return LinearDynamics(np.array(scenario.dynamics_matrix, dtype=float))


def measurement_model(
    scenario: Scenario, settings: Union[Settings, None] = None
) -> Union[MeasurementModel, None]:
    settings = settings or get_settings()
    spec = scenario.measurement
    if spec is None:
        return None
    order = spec.taylor_order or settings.filter.taylor_order
    if spec.kind == "azimuth-elevation":
        return AzimuthElevation(crtbp_params(scenario).mu, sigma_arcsec=spec.sigma_arcsec, taylor_order=order)
    noise = np.diag(np.asarray(spec.noise_sigma, dtype=float) ** 2)
    return LinearMeasurement(np.array(spec.matrix, dtype=float), noise, taylor_order=order)


def model_frame(scenario: Scenario, params: Union[CRTBPParams, None] = None) -> AffineFrame:
    """Coordinates the scenario's Koopman model is built in."""
    frame = scenario.model.frame
    if scenario.system == "linear" or frame == "identity":
        return AffineFrame.identity(scenario.dim)
    params = params or crtbp_params(scenario)
    return normal_frame(params) if frame == "normal" else libration_frame(params)


def auto_domain(scenario: Scenario, frame: AffineFrame, dynamics: Dynamics) -> Domain:
    """Origin-centred box covering the mean trajectory plus an initial-sigma margin.

    Complex model coordinates are covered in both real and imaginary parts.
    """
    spec = scenario.model
    if spec.domain_half_widths is not None:
        if len(spec.domain_half_widths) != scenario.dim:
            raise ContractViolation(f"domain_half_widths needs {scenario.dim} entries")
        return Domain.symmetric(spec.domain_half_widths)
    times = np.linspace(scenario.t0, scenario.t_final, DOMAIN_SAMPLES)
    mean = np.asarray(scenario.initial_mean, dtype=float)
    states = dynamics.trajectory(mean, scenario.t0, times)
    coords = frame.to_model(states)
    extent = np.max(np.maximum(np.abs(coords.real), np.abs(coords.imag)), axis=0)
    sigma = frame.model_sigma(scenario.initial_covariance())
    half = spec.domain_scale * extent + spec.domain_margin * sigma
    half = np.maximum(half, spec.domain_floor)
    logger.debug(f"Automatic domain half-widths: {np.array2string(half, precision=4)}")
    return Domain.symmetric(half)


def model_vector_field(
    scenario: Scenario, domain: Domain, params: Union[CRTBPParams, None] = None
) -> VectorField:
    if scenario.system == "linear":
        return VectorField.linear(np.array(scenario.dynamics_matrix, dtype=float), domain)
    params = params or crtbp_params(scenario)
    if scenario.model.frame == "normal":
        return hamiltonian_normal_form(params, domain).eom
    if scenario.model.frame == "libration":
        return polynomial_eom(params, domain)
    raise ContractViolation("CRTBP models are built in the normal or libration frame")


def build_scenario_model(scenario: Scenario, settings: Union[Settings, None] = None) -> KoopmanModel:
    """Koopman model of the scenario dynamics in its configured frame."""
    settings = settings or get_settings()
    degree = scenario.model.max_degree
    params = crtbp_params(scenario) if scenario.system == "crtbp" else None
    frame = model_frame(scenario, params)
    domain = auto_domain(scenario, frame, truth_dynamics(scenario, settings))
    metadata: Dict[str, Any] = {
        "scenario": scenario.name,
        "system": scenario.system,
        "frame": scenario.model.frame,
        "max_degree": degree,
    }
    if params is not None:
        metadata.update({"mu": params.mu, "point": params.point, "expansion_order": params.expansion_order})
    return build_model(
        model_vector_field(scenario, domain, params),
        degree,
        frame=frame,
        cond_limit=settings.numerics.eigvec_cond_limit,
        inverse_limit=settings.numerics.inverse_cond_limit,
        metadata=metadata,
    )


def check_model_dimension(model: KoopmanModel, scenario: Scenario) -> None:
    if model.dim != scenario.dim:
        raise ContractViolation(
            f"Model has {model.dim} state variables, scenario {scenario.name} has {scenario.dim}"
        )
    name = model.metadata.get("scenario")
    if name is not None and name != scenario.name:
        logger.warning(f"Model was built for scenario {name}, used with {scenario.name}")


def initial_belief(scenario: Scenario) -> GaussianBelief:
    return GaussianBelief(np.asarray(scenario.initial_mean, dtype=float), scenario.initial_covariance())


# Moment propagation


def propagate_scenario(
    model: KoopmanModel,
    scenario: Scenario,
    times: Union[Sequence[float], None] = None,
    psi: Union[int, None] = None,
    settings: Union[Settings, None] = None,
) -> List[Tuple[float, CentralMomentSet]]:
    """Central moments of the initial belief carried by the analytical flow to each epoch."""
    settings = settings or get_settings()
    check_model_dimension(model, scenario)
    psi = psi or settings.moments.default_psi
    belief = initial_belief(scenario)
    out = []
    for t in times if times is not None else scenario.output_epochs():
        dt = float(t) - scenario.t0
        try:
            if dt == 0.0:
                moments = gaussian_moment_set(belief, psi)
            else:
                flow = physical_flow(
                    model,
                    dt,
                    belief.mean,
                    overflow_limit=settings.numerics.exp_overflow_limit,
                    imag_tolerance=settings.numerics.imag_tolerance,
                )
                moments = propagate_moments(flow, belief, psi, settings.moments.order_cap)
        except KofxError as e:
            e.details["epoch"] = float(t)
            e.message = f"{e.message} (t={float(t):.6g})"
            e.args = (e.message,)
            raise
        out.append((float(t), moments))
    return out


def sample_scenario(
    scenario: Scenario,
    samples: int,
    times: Union[Sequence[float], None] = None,
    seed: int = 0,
    settings: Union[Settings, None] = None,
) -> SampleMoments:
    """Moments of truths drawn from the initial belief and integrated to each epoch."""
    settings = settings or get_settings()
    epochs = sorted(float(t) for t in (times if times is not None else scenario.output_epochs()))
    setup = TruthSetup(truth_dynamics(scenario, settings), initial_belief(scenario), scenario.t0, epochs)
    return sample_moments(setup, samples, seed, settings.montecarlo.workers)


# Filtering


def kof_runner(
    model: KoopmanModel,
    measurement: MeasurementModel,
    settings: Union[Settings, None] = None,
    cadence: Union[float, None] = None,
) -> FilterRunner:
    settings = settings or get_settings()
    config = FilterConfig(
        model,
        psi=2,
        cadence=cadence,
        recenter=settings.filter.recenter,
        order_cap=settings.moments.order_cap,
        eig_floor=settings.filter.eig_floor,
    )

    def runner(observations: List[Observation], initial: FilterState, epochs: Sequence[float]) -> List[FilterRecord]:
        return run_filter(config, measurement, observations, initial, epochs)

    return runner


def benchmark_runner(
    method: str,
    dynamics: Dynamics,
    measurement: MeasurementModel,
    settings: Union[Settings, None] = None,
) -> FilterRunner:
    settings = settings or get_settings()
    tuning = BenchmarkTuning.from_settings(settings.filter, settings.ukf)

    def runner(observations: List[Observation], initial: FilterState, epochs: Sequence[float]) -> List[FilterRecord]:
        return run_benchmark(method, dynamics, measurement, observations, initial, epochs, tuning)

    return runner


def method_runner(
    method: str,
    model: Union[KoopmanModel, None],
    scenario: Scenario,
    dynamics: Dynamics,
    measurement: MeasurementModel,
    settings: Union[Settings, None] = None,
) -> FilterRunner:
    if method not in FILTER_METHODS:
        raise ContractViolation(f"Unknown method '{method}'; expected one of {FILTER_METHODS}")
    if method == "kof":
        if model is None:
            raise ContractViolation("The KOF needs a Koopman model")
        check_model_dimension(model, scenario)
        return kof_runner(model, measurement, settings, scenario.cadence)
    return benchmark_runner(method, dynamics, measurement, settings)


def truth_setup(scenario: Scenario, dynamics: Dynamics, measurement: Union[MeasurementModel, None]) -> TruthSetup:
    return TruthSetup(
        dynamics=dynamics,
        belief=initial_belief(scenario),
        t0=scenario.t0,
        epochs=scenario.report_epochs(),
        measurement=measurement,
        measurement_epochs=scenario.measurement_epochs() if measurement is not None else (),
    )


@dataclass(frozen=True, eq=False)
class FilterRun:
    """One filter pass; ``truth`` is set when the measurements were simulated."""

    method: str
    records: List[FilterRecord]
    observations: List[Observation]
    truth: Union[Any, None] = None
    truth_epochs: Union[List[float], None] = None


def filter_scenario(
    scenario: Scenario,
    model: Union[KoopmanModel, None] = None,
    observations: Union[List[Observation], None] = None,
    seed: int = 0,
    method: str = "kof",
    settings: Union[Settings, None] = None,
) -> FilterRun:
    """Run one filter on given observations or, without them, on a simulated truth."""
    settings = settings or get_settings()
    measurement = measurement_model(scenario, settings)
    if measurement is None:
        raise ContractViolation(f"Scenario {scenario.name} has no measurement model")
    dynamics = truth_dynamics(scenario, settings)
    runner = method_runner(method, model, scenario, dynamics, measurement, settings)
    setup = truth_setup(scenario, dynamics, measurement)
    truth = None
    if observations is None:
        sim = simulate(setup, run_rng(seed, 0))
        observations, truth = sim.observations, sim.truth
    if any(o.values.size != measurement.dim for o in observations):
        raise ContractViolation(f"Observations must have {measurement.dim} channels")
    epochs = sorted(set(setup.epochs) | {o.t for o in observations})
    later = [t for t in epochs if t > scenario.t0]
    initial = setup.initial_state()
    records = [FilterRecord(initial)] + runner(observations, initial, later)
    logger.info(f"{method.upper()} processed {len(observations)} observations over {len(records)} epochs")
    return FilterRun(method, records, observations, truth, list(setup.epochs) if truth is not None else None)


# Comparison


def compare_scenario(
    scenario: Scenario,
    methods: Sequence[str],
    runs: int,
    seed: int = 0,
    model: Union[KoopmanModel, None] = None,
    settings: Union[Settings, None] = None,
) -> Tuple[Dict[str, MCReport], Dict[str, str]]:
    """Monte Carlo reports per method; a method that fails as a whole is recorded and skipped."""
    settings = settings or get_settings()
    unknown = [m for m in methods if m not in FILTER_METHODS]
    if unknown:
        raise ContractViolation(f"Unknown methods {unknown}; expected a subset of {FILTER_METHODS}")
    measurement = measurement_model(scenario, settings)
    if measurement is None:
        raise ContractViolation(f"Scenario {scenario.name} has no measurement model")
    dynamics = truth_dynamics(scenario, settings)
    setup = truth_setup(scenario, dynamics, measurement)
    if "kof" in methods and model is None:
        model = build_scenario_model(scenario, settings)

    reports: Dict[str, MCReport] = {}
    failed: Dict[str, str] = {}
    for method in methods:
        try:
            runner = method_runner(method, model, scenario, dynamics, measurement, settings)
            reports[method] = monte_carlo(
                setup, runner, runs, seed, method=method, workers=settings.montecarlo.workers
            )
        except KofxError as e:
            logger.warning(f"Method {method} failed: {e.message}")
            failed[method] = f"{e.code}: {e.message}"
    return reports, failed
