"""Experiment orchestration: configs, well-prepared initial data, coupled and
limit runs, the eps-sweep with its rate fit, and file emission.

Runs are deterministic: dt is fixed up front (an exact divisor of t_final
aligned with the sampling cadence), there is no randomness, and aggregation
follows eps_list order, so identical configs produce bit-identical CSVs.
"""
import json
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .core import (
    ConfigError,
    FluidState,
    KineticState,
    PhaseGrid,
    ScalingParams,
    SolverError,
    TwoPhaseState,
    l1_distance,
    phase_mass,
    quad_x,
)
from .entropy import (
    AuditRecord,
    EntropyReport,
    csiszar_kullback_margin,
    entropy_inequality_audit,
    evaluate_entropy_report,
    kinetic_entropy,
    macroscopic_entropy,
    maxwellian_offset,
    relative_pressure,
    relative_pressure_tilde,
)
from .fluid import momentum_exchange, ns_step, sound_speed
from .kinetic import Diffuse, Dirichlet, Specular, kinetic_step
from .limit import PicardSetup, _two_phase_substeps, picard_solve, to_symhyp
from .moments import compute_moments, maxwellian, maxwellian_profile

_CONFIG_FIELDS = {
    "nx", "nv", "x_lo", "x_hi", "v_max",
    "eps_list", "t_final", "cfl", "gamma", "vel_floor", "chi_lambda",
    "initial_profile", "custom_state", "boundary", "wall_temperature",
    "solver_mode", "output_dir", "n_samples", "picard_iters",
    "audit_tolerance",
}

_PROFILES = ("local_maxwellian_wave", "equilibrium", "custom")
_BOUNDARIES = ("specular", "diffuse", "dirichlet_zero")
_MODES = ("coupled", "limit_direct", "limit_picard")


@dataclass
class ExperimentConfig:
    nx: int = 64
    nv: int = 64
    x_lo: float = 0.0
    x_hi: float = 1.0
    v_max: float = 8.0
    eps_list: list[float] = field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    t_final: float = 0.5
    cfl: float = 0.4
    gamma: float = 2.0
    vel_floor: float = 1e-12
    chi_lambda: float = math.inf
    initial_profile: str = "local_maxwellian_wave"
    custom_state: str | None = None
    boundary: str = "specular"
    wall_temperature: float = 1.0
    solver_mode: str = "coupled"
    output_dir: str = "out"
    n_samples: int = 32
    picard_iters: int = 10
    audit_tolerance: float = 0.05

    def __post_init__(self):
        if not self.eps_list or any(e <= 0 for e in self.eps_list):
            raise ConfigError("eps_list must hold positive values")
        if any(a <= b for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ConfigError("eps_list must be sorted in descending order")
        if not self.t_final > 0:
            raise ConfigError("t_final must be positive")
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]")
        if self.initial_profile not in _PROFILES:
            raise ConfigError(f"initial_profile must be one of {_PROFILES}")
        if self.boundary not in _BOUNDARIES:
            raise ConfigError(f"boundary must be one of {_BOUNDARIES}")
        if self.solver_mode not in _MODES:
            raise ConfigError(f"solver_mode must be one of {_MODES}")
        if self.initial_profile == "custom" and not self.custom_state:
            raise ConfigError("custom profile needs custom_state")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be positive")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - _CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if isinstance(raw.get("chi_lambda"), str):
            raw["chi_lambda"] = float(raw["chi_lambda"])
        return cls(**raw)

    def grid(self) -> PhaseGrid:
        return PhaseGrid(nx=self.nx, nv=self.nv, x_lo=self.x_lo, x_hi=self.x_hi, v_max=self.v_max)

    def scaling(self, eps: float) -> ScalingParams:
        return ScalingParams(eps=eps, vel_floor=self.vel_floor, chi_lambda=self.chi_lambda)

    def boundary_kernel(self, grid: PhaseGrid):
        if self.boundary == "specular":
            return Specular()
        if self.boundary == "diffuse":
            return Diffuse(wall_temperature=self.wall_temperature)
        zeros = np.zeros(grid.nv)
        return Dirichlet(g_left=zeros, g_right=zeros.copy())

    def echo(self) -> dict:
        d = asdict(self)
        if math.isinf(d["chi_lambda"]):
            d["chi_lambda"] = "inf"
        return d


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

_COMPAT_TOL = 1e-6


def _wave_profile(grid: PhaseGrid):
    xhat = (grid.x - grid.x_lo) / grid.length
    rho0 = 1.0 + 0.1 * np.sin(2.0 * math.pi * xhat)
    u0 = 0.05 * np.sin(2.0 * math.pi * xhat) * np.sin(math.pi * xhat) ** 2
    n0 = np.ones(grid.nx)
    v0 = np.zeros(grid.nx)
    return rho0, u0, n0, v0


def _macroscopic_profile(config: ExperimentConfig, grid: PhaseGrid):
    if config.initial_profile == "equilibrium":
        z = np.zeros(grid.nx)
        return np.ones(grid.nx), z, np.ones(grid.nx), z.copy()
    if config.initial_profile == "local_maxwellian_wave":
        return _wave_profile(grid)
    arrays, _ = load_state(config.custom_state)
    try:
        prof = (arrays["rho0"], arrays["u0"], arrays["n0"], arrays["v0"])
    except KeyError as exc:
        raise ConfigError(f"custom state misses array {exc}") from exc
    if any(a.shape != (grid.nx,) for a in prof):
        raise ConfigError("custom state arrays must have shape (nx,)")
    return prof


def _wall_value(field: np.ndarray) -> tuple[float, float]:
    """Linear extrapolation of a cell-centered field to the two wall faces."""
    return 1.5 * field[0] - 0.5 * field[1], 1.5 * field[-1] - 0.5 * field[-2]


def make_well_prepared(config: ExperimentConfig) -> tuple[KineticState, FluidState, TwoPhaseState]:
    """Build eps-independent initial data: the kinetic density is the local
    Maxwellian of the particle profile and the fluid data coincide with the
    limit fluid data, so both well-preparedness residuals vanish up to
    quadrature error. Order-0 wall compatibility (u.r = 0, v = 0) is checked."""
    grid = config.grid()
    rho0, u0, n0, v0 = _macroscopic_profile(config, grid)
    scale = max(1.0, float(np.abs(u0).max()), float(np.abs(v0).max()))
    # smooth compatible data extrapolates to O(dx^2)-small wall values
    tol = max(_COMPAT_TOL, 4.0 * grid.dx**2) * scale
    for name, fld in (("u0", u0), ("v0", v0)):
        for val in _wall_value(fld):
            if abs(val) > tol:
                raise ConfigError(f"{name} violates wall compatibility: wall value {val:g}")
    if float(rho0.min()) <= 0 or float(n0.min()) <= 0:
        raise ConfigError("initial densities must be positive")

    kin = maxwellian(rho0, u0, grid)
    fl = FluidState(n=n0, v=v0, gamma=config.gamma)
    limit0 = TwoPhaseState(rho=rho0, u=u0, fluid=fl)
    return kin, fl, limit0


def well_prepared_residuals(
    kin: KineticState, fl: FluidState, limit0: TwoPhaseState, config: ExperimentConfig
) -> tuple[float, float]:
    """Discrete residuals of the two well-preparedness requirements.

    The entropy-gap residual compares the kinetic entropy of f0 with the
    macroscopic entropy of the limit data, compensated by the universal
    Maxwellian offset (d/2) log(2 pi) per unit mass; the state-gap residual
    sums the squared velocity gaps and both relative pressures. Both are 0
    up to quadrature error for local-Maxwellian data."""
    grid = config.grid()
    s = config.scaling(config.eps_list[0])
    mom = compute_moments(kin, grid, s)
    mass = phase_mass(kin.f, grid)

    f_kin = kinetic_entropy(kin, fl, grid)
    e_limit = macroscopic_entropy(limit0, grid)
    res_entropy = f_kin - e_limit + maxwellian_offset(grid) * mass

    res_state = (
        quad_x(mom.rho * (mom.u - limit0.u) ** 2, grid)
        + quad_x(fl.n * (fl.v - limit0.fluid.v) ** 2, grid)
        + quad_x(relative_pressure(np.maximum(mom.rho, 0.0), limit0.rho), grid)
        + quad_x(relative_pressure_tilde(fl.n, limit0.fluid.n, config.gamma), grid)
    )
    return float(res_entropy), float(res_state)


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------


@dataclass
class CoupledRun:
    eps: float
    times: np.ndarray
    reports: list[EntropyReport]
    rho: np.ndarray  # (K, nx) sampled moment fields
    u: np.ndarray
    n: np.ndarray
    v: np.ndarray
    f_final: KineticState
    fluid_final: FluidState
    mass_kinetic: np.ndarray
    mass_fluid: np.ndarray
    max_wall_flux: float
    max_exchange_asym: float
    truncation_leak: float
    ck_margin_min: float
    audit: AuditRecord
    dt: float
    wall_seconds: float


def _pick_dt(config: ExperimentConfig, grid: PhaseGrid, kin, fl) -> tuple[float, int, int]:
    """Fixed dt: CFL-limited from the initial data, rounded so that
    n_samples divides the step count and nt*dt = t_final exactly."""
    ximax = grid.v_max - 0.5 * grid.dv
    s_fluid = float((np.abs(fl.v) + sound_speed(fl.n, fl.gamma)).max())
    bound = min(
        2.0 * grid.dx / ximax,              # transport half-steps
        2.0 * grid.dv / (2.0 * grid.v_max), # drag half-steps, |v| <= v_max
        grid.dx / s_fluid,
    )
    dt_target = config.cfl * bound
    per = max(1, math.ceil(config.t_final / (config.n_samples * dt_target)))
    nt = per * config.n_samples
    return config.t_final / nt, nt, per


def run_coupled(config: ExperimentConfig, eps: float, reference=None) -> CoupledRun:
    """Time-march the coupled kinetic/gas system, sampling entropy reports at
    the configured cadence and auditing the run at the end.

    reference: optional callable t -> TwoPhaseState supplying the relative-
    entropy reference at sample times."""
    t0 = time.perf_counter()
    grid = config.grid()
    s = config.scaling(eps)
    bc = config.boundary_kernel(grid)
    kin, fl, _ = make_well_prepared(config)
    dt, nt, per = _pick_dt(config, grid, kin, fl)

    k_samples = config.n_samples + 1
    times = np.empty(k_samples)
    rho = np.empty((k_samples, grid.nx))
    u = np.empty((k_samples, grid.nx))
    n = np.empty((k_samples, grid.nx))
    v = np.empty((k_samples, grid.nx))
    mass_kin = np.empty(k_samples)
    mass_flu = np.empty(k_samples)
    reports: list[EntropyReport] = []
    max_wall = 0.0
    max_asym = 0.0
    leak = 0.0
    ck_min = math.inf

    def sample(idx, kin, fl):
        mom = compute_moments(kin, grid, s)
        times[idx] = kin.t
        rho[idx] = mom.rho
        u[idx] = mom.u
        n[idx] = fl.n
        v[idx] = fl.v
        mass_kin[idx] = phase_mass(kin.f, grid)
        mass_flu[idx] = quad_x(fl.n, grid)
        ref = reference(kin.t) if reference is not None else None
        reports.append(evaluate_entropy_report(kin, fl, grid, s, ref))
        return csiszar_kullback_margin(kin, np.maximum(mom.rho, 1e-14), mom.u, grid)

    ck_min = min(ck_min, sample(0, kin, fl))
    try:
        for step in range(nt):
            mom = compute_moments(kin, grid, s)
            kin, krep = kinetic_step(kin, fl, dt, grid, s, bc)
            fl_new = ns_step(fl, mom.rho, mom.u, dt, grid)
            dpk, dpf = momentum_exchange(mom.rho, mom.u, fl.v, dt, grid)
            fl = fl_new
            max_asym = max(max_asym, abs(dpk + dpf))
            max_wall = max(max_wall, krep.max_wall_flux)
            leak += krep.truncation_leak
            if (step + 1) % per == 0:
                ck_min = min(ck_min, sample((step + 1) // per, kin, fl))
    except SolverError as exc:
        dump = dump_failure_state(config, kin, fl, step)
        raise SolverError(f"step {step}: {exc} (state dumped to {dump})") from exc

    audit = entropy_inequality_audit(times, reports, eps)
    return CoupledRun(
        eps=eps, times=times, reports=reports,
        rho=rho, u=u, n=n, v=v,
        f_final=kin, fluid_final=fl,
        mass_kinetic=mass_kin, mass_fluid=mass_flu,
        max_wall_flux=max_wall, max_exchange_asym=max_asym,
        truncation_leak=leak, ck_margin_min=float(ck_min),
        audit=audit, dt=dt, wall_seconds=time.perf_counter() - t0,
    )


@dataclass
class LimitRun:
    times: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    n: np.ndarray
    v: np.ndarray
    mass_rho: np.ndarray
    max_exchange_asym: float
    dt: float
    min_one_plus_h: float
    picard_reports: list | None = None

    def state_at(self, idx: int, gamma: float) -> TwoPhaseState:
        return TwoPhaseState(
            rho=self.rho[idx], u=self.u[idx],
            fluid=FluidState(n=self.n[idx], v=self.v[idx], gamma=gamma, t=self.times[idx]),
            t=self.times[idx],
        )

    def interpolant(self, gamma: float):
        """Nearest-sample lookup (exact at shared sample times)."""
        def ref(t: float) -> TwoPhaseState:
            idx = int(np.argmin(np.abs(self.times - t)))
            return self.state_at(idx, gamma)
        return ref


def run_limit(config: ExperimentConfig) -> LimitRun:
    """March the relaxed two-phase system (direct or fixed-point mode) on the
    same sampling cadence as the coupled runs."""
    grid = config.grid()
    _, _, st0 = make_well_prepared(config)
    st = TwoPhaseState(rho=st0.rho, u=st0.u, fluid=st0.fluid, t=0.0)

    dt_target = config.cfl * min(
        grid.dx / (float(np.abs(st.u).max()) + 1.0),
        grid.dx / float((np.abs(st.fluid.v) + sound_speed(st.fluid.n, config.gamma)).max()),
    )
    per = max(1, math.ceil(config.t_final / (config.n_samples * dt_target)))
    nt = per * config.n_samples
    dt = config.t_final / nt

    k_samples = config.n_samples + 1
    times = np.empty(k_samples)
    rho = np.empty((k_samples, grid.nx))
    u = np.empty((k_samples, grid.nx))
    n = np.empty((k_samples, grid.nx))
    v = np.empty((k_samples, grid.nx))
    mass = np.empty(k_samples)
    picard_reports = None

    if config.solver_mode == "limit_picard":
        setup = PicardSetup(grid=grid, t_final=config.t_final, nt=nt, gamma=config.gamma)
        traj, picard_reports = picard_solve(to_symhyp(st, grid), setup, max_iter=config.picard_iters)
        m_norm = grid.length
        for idx in range(k_samples):
            k = idx * per
            times[idx] = k * dt
            rho[idx] = np.exp(traj.g[k]) / m_norm
            u[idx] = traj.u[k]
            n[idx] = 1.0 + traj.h[k]
            v[idx] = traj.v[k]
            mass[idx] = quad_x(rho[idx], grid)
        max_asym = 0.0
    else:
        max_asym = 0.0

        def sample(idx, st):
            times[idx] = st.t
            rho[idx] = st.rho
            u[idx] = st.u
            n[idx] = st.fluid.n
            v[idx] = st.fluid.v
            mass[idx] = quad_x(st.rho, grid)

        sample(0, st)
        for step in range(nt):
            st, dpp, dpf = _two_phase_substeps(st, dt, grid)
            max_asym = max(max_asym, abs(dpp + dpf))
            if (step + 1) % per == 0:
                sample((step + 1) // per, st)

    return LimitRun(
        times=times, rho=rho, u=u, n=n, v=v, mass_rho=mass,
        max_exchange_asym=max_asym, dt=dt,
        min_one_plus_h=float(n.min()),
        picard_reports=picard_reports,
    )


# ---------------------------------------------------------------------------
# epsilon sweep
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceRow:
    eps: float
    sup_H: float
    sup_L1_rho: float
    sup_L1_n: float
    f_to_M_l1: float


@dataclass
class ConvergenceResult:
    rows: list[ConvergenceRow]
    slope: float
    prefactor: float  # empirical: sup_H ~ prefactor * eps**slope (reported, never asserted)
    monotone: bool
    degenerate: bool
    runs: list[CoupledRun]
    limit: LimitRun
    wall_seconds: float


def run_convergence(config: ExperimentConfig) -> ConvergenceResult:
    """For each eps: coupled run vs the single limit trajectory; sup-in-time
    relative entropy and L1 gaps; log-log slope fit of sup_H against eps."""
    if len(config.eps_list) < 3:
        raise ConfigError("eps sweep needs at least 3 values")
    t0 = time.perf_counter()
    grid = config.grid()
    limit = run_limit(config)
    ref = limit.interpolant(config.gamma)

    rows = []
    runs = []
    for eps in config.eps_list:
        run = run_coupled(config, eps, reference=ref)
        sup_h = max(r.H for r in run.reports)
        sup_rho = max(
            l1_distance(run.rho[k], limit.rho[k], grid) for k in range(len(run.times))
        )
        sup_n = max(
            l1_distance(run.n[k], limit.n[k], grid) for k in range(len(run.times))
        )
        m_end = maxwellian_profile(limit.rho[-1], limit.u[-1], grid)
        f_gap = l1_distance(run.f_final.f, m_end, grid)
        rows.append(ConvergenceRow(eps=eps, sup_H=sup_h, sup_L1_rho=sup_rho, sup_L1_n=sup_n, f_to_M_l1=f_gap))
        runs.append(run)

    sup_hs = np.array([r.sup_H for r in rows])
    # gaps at the double-precision quadrature floor carry no rate information
    degenerate = bool(np.any(sup_hs <= 1e-20))
    if degenerate:
        slope = prefactor = math.nan
    else:
        coeffs = np.polyfit(np.log(config.eps_list), np.log(sup_hs), 1)
        slope = float(coeffs[0])
        prefactor = float(math.exp(coeffs[1]))
    monotone = bool(np.all(np.diff(sup_hs) < 0))  # eps_list descends, so sup_H must too
    return ConvergenceResult(
        rows=rows, slope=slope, prefactor=prefactor, monotone=monotone,
        degenerate=degenerate, runs=runs, limit=limit,
        wall_seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("eps", "sup_H", "sup_L1_rho", "sup_L1_n", "f_to_M_l1")


def emit_csv(rows: list[ConvergenceRow], path) -> Path:
    """Fixed-column CSV, 17 significant digits, C-locale decimal points."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        lines.append(",".join(f"{getattr(r, c):.17g}" for c in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def save_state(prefix, arrays: dict[str, np.ndarray], meta: dict | None = None) -> Path:
    """Flat little-endian float64 binaries plus a JSON shape descriptor."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    desc = {"arrays": {}, "meta": meta or {}}
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(np.asarray(arr), dtype="<f8")
        bin_path = prefix.with_name(prefix.name + f"__{name}.bin")
        bin_path.write_bytes(arr.tobytes())
        desc["arrays"][name] = {"file": bin_path.name, "shape": list(arr.shape), "dtype": "<f8"}
    json_path = prefix.with_suffix(".json")
    json_path.write_text(json.dumps(desc, indent=2, sort_keys=True))
    return json_path


def load_state(descriptor_path) -> tuple[dict[str, np.ndarray], dict]:
    descriptor_path = Path(descriptor_path)
    desc = json.loads(descriptor_path.read_text())
    arrays = {}
    for name, info in desc["arrays"].items():
        raw = (descriptor_path.parent / info["file"]).read_bytes()
        arrays[name] = np.frombuffer(raw, dtype=info["dtype"]).reshape(info["shape"]).copy()
    return arrays, desc.get("meta", {})


def dump_failure_state(config: ExperimentConfig, kin: KineticState, fl: FluidState, step: int) -> Path:
    out = Path(config.output_dir)
    return save_state(
        out / f"failure_step_{step}",
        {"f": kin.f, "n": fl.n, "v": fl.v},
        meta={"step": step, "t": kin.t},
    )


def save_run_series(run: CoupledRun, out_dir, config: ExperimentConfig) -> Path:
    """Emit a coupled run: sampled series + final state + metadata sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series = {
        "times": run.times,
        "F": np.array([r.F for r in run.reports]),
        "D1": np.array([r.D1 for r in run.reports]),
        "D2": np.array([r.D2 for r in run.reports]),
        "E": np.array([r.E for r in run.reports]),
        "H": np.array([r.H for r in run.reports]),
        "P_f_M": np.array([r.P_f_M for r in run.reports]),
        "rel_flux_l1": np.array([r.rel_flux_l1 for r in run.reports]),
        "grad_v_sq": np.array([r.grad_v_sq for r in run.reports]),
        "drag_mismatch": np.array([r.drag_mismatch for r in run.reports]),
        "mass": np.array([r.mass for r in run.reports]),
        "mass_kinetic": run.mass_kinetic,
        "mass_fluid": run.mass_fluid,
        "rho": run.rho, "u": run.u, "n": run.n, "v": run.v,
    }
    save_state(out / "series", series)
    save_state(out / "state_final", {"f": run.f_final.f, "n": run.fluid_final.n, "v": run.fluid_final.v})
    meta = {
        "config": config.echo(),
        "eps": run.eps,
        "dt": run.dt,
        "wall_seconds": run.wall_seconds,
        "audit": {
            "slack_entropy_budget": run.audit.slack_entropy_budget,
            "slack_at": run.audit.slack_at,
            "inferred_modified_constant": run.audit.inferred_modified_constant,
        },
        "max_wall_flux": run.max_wall_flux,
        "max_exchange_asym": run.max_exchange_asym,
        "truncation_leak": run.truncation_leak,
        "ck_margin_min": run.ck_margin_min,
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return out


def reaudit_run(run_dir) -> tuple[AuditRecord, dict]:
    """Recompute the entropy-budget audit of an emitted run directory."""
    run_dir = Path(run_dir)
    meta = json.loads((run_dir / "run_meta.json").read_text())
    arrays, _ = load_state(run_dir / "series.json")
    fields = ("F", "D1", "D2", "E", "H", "P_f_M", "rel_flux_l1", "grad_v_sq", "drag_mismatch", "mass")
    reports = [
        EntropyReport(**{name: float(arrays[name][k]) for name in fields})
        for k in range(arrays["times"].shape[0])
    ]
    audit = entropy_inequality_audit(arrays["times"], reports, meta["eps"])
    return audit, meta
