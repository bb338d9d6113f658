"""Statistical harness: experiment runner, SLLN rate study, bias study,
and the machine-verification suite over the exact oracle.

Every routine here is deterministic given (config, seed): replicates draw
from documented seed derivations, randomized batteries use their own salted
streams, and artifact files carry no timestamps, so reruns are
byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exact
from .config import ExperimentConfig
from .errors import ConfigurationError
from .measures import EmpiricalMeasure, tv_distance
from .sampler import ChainEnsemble, run, run_frozen_feeder
from .state_space import FiniteSpace

SLOPE_PASS_BAND = (-0.65, -0.35)
_VERIFY_SALT = 0x5EED
_BATTERY_SALT = 0xF1AC


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

def write_measure_dump(measure: EmpiricalMeasure, path) -> None:
    """Columnar text dump (step, state, ring) of an empirical measure."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "state", "ring"])
        for step, state, ring in measure.dump_rows():
            writer.writerow([step, state, ring])


def _write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def run_experiment(config: ExperimentConfig, out_dir) -> dict:
    """Run every replicate, write traces, summaries, and metadata.

    Produces trace_###.csv / masses_###.csv / events_###.csv per replicate
    plus summary.csv and meta.json; returns the path map.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    burn = sum(config.offsets)
    summary_rows = []
    metas = []
    paths = {"traces": [], "summary": str(out / "summary.csv"), "meta": str(out / "meta.json")}
    for rep in range(config.replicates):
        trace = run(config, replicate=rep)
        tpath = out / f"trace_{rep:03d}.csv"
        trace.write_csv(tpath)
        trace.write_mass_csv(out / f"masses_{rep:03d}.csv")
        trace.write_events_csv(out / f"events_{rep:03d}.csv")
        paths["traces"].append(str(tpath))
        metas.append(trace.meta)

        target_states = [
            row[2] for row in trace.rows if row[0] == config.r - 1 and row[1] >= burn
        ]
        for f in config.test_functions:
            est = float(np.mean([f(s) for s in target_states]))
            summary_rows.append((rep, f.name, repr(est)))
        if isinstance(config.space, FiniteSpace):
            occ = np.zeros(config.space.size)
            for s in target_states:
                occ[int(s)] += 1
            occ /= max(1, len(target_states))
            for s in range(config.space.size):
                summary_rows.append((rep, f"occupancy_{s}", repr(float(occ[s]))))

    with open(paths["summary"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replicate", "quantity", "value"])
        writer.writerows(summary_rows)
    _write_json(
        {
            "config": config.raw,
            "config_hash": config.config_hash(),
            "replicates": metas,
        },
        paths["meta"],
    )
    return paths


# ---------------------------------------------------------------------------
# SLLN rate study
# ---------------------------------------------------------------------------

@dataclass
class FunctionRate:
    name: str
    target: float
    moment1: np.ndarray  # E|S_n(f) - pi(f)| per grid point
    moment2: np.ndarray  # E[|.|^2]^(1/2) per grid point
    stderr: np.ndarray
    slope: float | None
    slope_stderr: float | None
    passed: bool
    monotone: bool  # terminal error below initial error


@dataclass
class RateReport:
    n_grid: np.ndarray
    burn_in: int
    replicates: int
    functions: list[FunctionRate]
    config_hash: str = ""

    @property
    def passed(self) -> bool:
        return all(f.passed and f.monotone for f in self.functions)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "n_grid": [int(n) for n in self.n_grid],
            "burn_in": self.burn_in,
            "replicates": self.replicates,
            "passed": self.passed,
            "functions": [
                {
                    "name": f.name,
                    "target": f.target,
                    "moment1": [float(v) for v in f.moment1],
                    "moment2": [float(v) for v in f.moment2],
                    "stderr": [float(v) for v in f.stderr],
                    "slope": f.slope,
                    "slope_stderr": f.slope_stderr,
                    "passed": f.passed,
                    "monotone": f.monotone,
                }
                for f in self.functions
            ],
        }


def slln_rate_study(
    config: ExperimentConfig,
    n_grid=None,
    min_replicates: int = 50,
) -> RateReport:
    """Estimate E|S_n^2(f) - pi_2(f)| over a round grid across replicates
    and fit the log-log decay slope against (n - N_1 + 1).

    The average S_n^2(f) runs over post-activation rounds N_1..n, matching
    the error normalization; the slope fit uses only n >= 2 N_1 and passes
    when it falls in the band around -1/2.
    """
    if not isinstance(config.space, FiniteSpace):
        raise ConfigurationError("the rate study needs a finite space (exact pi_2)")
    if config.r != 2:
        raise ConfigurationError("the rate study is defined for r = 2")
    if config.replicates < min_replicates:
        raise ConfigurationError(
            f"rate study needs at least {min_replicates} replicates, "
            f"got {config.replicates}"
        )
    if not config.test_functions:
        raise ConfigurationError("rate study needs at least one test function")
    if n_grid is None:
        # doubling grid from 128 up to the configured horizon
        top = int(np.log2(config.total_rounds))
        if 2**top > config.total_rounds:
            top -= 1
        if top < 8:
            raise ConfigurationError("total_rounds too short for the default grid")
        n_grid = 2 ** np.arange(7, top + 1)
    grid = np.array(sorted(int(n) for n in n_grid))
    burn = config.activation_threshold(1)
    if grid[0] <= burn:
        raise ConfigurationError(
            f"smallest grid round {grid[0]} must exceed the burn-in N_1={burn}"
        )
    pi_target = config.ladder.density_table()[-1]
    fvecs = [f.vector for f in config.test_functions]
    targets = [float(v @ pi_target) for v in fvecs]

    total = int(grid[-1])
    errs = np.zeros((config.replicates, len(grid), len(fvecs)))
    for rep in range(config.replicates):
        ens = ChainEnsemble(config, replicate=rep, record_trace=False)
        sums = np.zeros(len(fvecs))
        count = 0
        gi = 0
        for n in range(1, total + 1):
            ens.step_round()
            if n >= burn:
                x = int(ens.states[1])
                for j, v in enumerate(fvecs):
                    sums[j] += v[x]
                count += 1
            if gi < len(grid) and n == grid[gi]:
                for j in range(len(fvecs)):
                    errs[rep, gi, j] = sums[j] / count - targets[j]
                gi += 1

    functions = []
    fit_mask = grid >= 2 * burn
    for j, f in enumerate(config.test_functions):
        abs_err = np.abs(errs[:, :, j])
        m1 = abs_err.mean(axis=0)
        m2 = np.sqrt((abs_err**2).mean(axis=0))
        se = abs_err.std(axis=0, ddof=1) / np.sqrt(config.replicates)
        if np.all(m1 < 1e-14):  # constant functions: error identically zero
            functions.append(
                FunctionRate(f.name, targets[j], m1, m2, se, None, None, True, True)
            )
            continue
        xs = np.log(grid[fit_mask] - burn + 1.0)
        ys = np.log(m1[fit_mask])
        coef, cov = np.polyfit(xs, ys, 1, cov=True)
        slope = float(coef[0])
        slope_se = float(np.sqrt(cov[0, 0]))
        passed = SLOPE_PASS_BAND[0] <= slope <= SLOPE_PASS_BAND[1]
        functions.append(
            FunctionRate(
                f.name,
                targets[j],
                m1,
                m2,
                se,
                slope,
                slope_se,
                passed,
                bool(m1[-1] < m1[0]),
            )
        )
    return RateReport(
        n_grid=grid,
        burn_in=burn,
        replicates=config.replicates,
        functions=functions,
        config_hash=config.config_hash(),
    )


def write_rate_report(report: RateReport, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "rate_study.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["function", "n", "moment1", "moment2", "stderr"])
        for f in report.functions:
            for i, n in enumerate(report.n_grid):
                writer.writerow(
                    [f.name, int(n), repr(float(f.moment1[i])),
                     repr(float(f.moment2[i])), repr(float(f.stderr[i]))]
                )
    json_path = out / "rate_study.json"
    _write_json(report.to_dict(), json_path)
    return {"csv": str(csv_path), "json": str(json_path)}


# ---------------------------------------------------------------------------
# frozen-feeder bias study
# ---------------------------------------------------------------------------

@dataclass
class BiasReport:
    freeze_at: int
    feeder_atoms: list
    predicted: np.ndarray  # oracle stationary vector of the frozen kernel
    pi_target: np.ndarray
    predicted_tv: float
    occupancy: np.ndarray
    occupancy_se: np.ndarray
    max_z: float
    agrees: bool
    exact_feeder_tv: float
    config_hash: str = ""

    @property
    def passed(self) -> bool:
        return self.agrees and self.predicted_tv > 0.0

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "freeze_at": self.freeze_at,
            "feeder_atoms": [int(a) for a in self.feeder_atoms],
            "predicted": [float(v) for v in self.predicted],
            "pi_target": [float(v) for v in self.pi_target],
            "predicted_tv": self.predicted_tv,
            "occupancy": [float(v) for v in self.occupancy],
            "occupancy_se": [float(v) for v in self.occupancy_se],
            "max_z": self.max_z,
            "agrees": self.agrees,
            "exact_feeder_tv": self.exact_feeder_tv,
            "passed": self.passed,
        }


def frozen_feeder_atoms(config: ExperimentConfig, freeze_at: int, replicate: int = 0) -> list:
    """The feeder history a frozen run conditions on: the initial atom plus
    `freeze_at` MH moves, generated from the replicate's chain-0 stream."""
    seq = config.replicate_seed_seq(replicate)
    rng = np.random.default_rng(seq.spawn(config.r)[0])
    x = config.initial_states[0]
    atoms = [x]
    for _ in range(freeze_at):
        x = config.kernels.mh_step(0, x, rng)
        atoms.append(x)
    return atoms


def oracle_frozen_kernel(config: ExperimentConfig, mu: np.ndarray) -> np.ndarray:
    """Exact transition matrix of the interacting chain against feeder mu."""
    if config.variant == "ee-jump":
        return exact.ee_jump_matrix(config.kernels, 1, mu, empty_ring_fallback=True)
    return exact.nonlinear_matrix(config.kernels, 1, mu, empty_ring_fallback=True)


def bias_study(
    config: ExperimentConfig,
    freeze_at: int,
    burn_in: int | None = None,
) -> BiasReport:
    """Freeze the feeder, predict the interacting chain's limit with the
    oracle, and compare replicate occupancies against the prediction.

    The frozen feeder is one realization shared by all replicates; the
    prediction is the stationary vector of the exact frozen kernel. The
    study also reports the exact-feeder control: feeding pi_1 itself must
    reproduce pi_2 (zero predicted bias)."""
    if not isinstance(config.space, FiniteSpace):
        raise ConfigurationError("the bias study needs a finite space")
    if config.r != 2:
        raise ConfigurationError("the bias study is defined for r = 2")
    atoms = frozen_feeder_atoms(config, freeze_at)
    mu = np.zeros(config.space.size)
    for a in atoms:
        mu[int(a)] += 1.0
    mu /= mu.sum()

    P = oracle_frozen_kernel(config, mu)
    omega = exact.stationary(P)
    pi1, pi2 = config.ladder.density_table()[0], config.ladder.density_table()[-1]
    predicted_tv = tv_distance(omega, pi2)
    exact_feeder_tv = tv_distance(exact.stationary(oracle_frozen_kernel(config, pi1)), pi2)

    burn = burn_in if burn_in is not None else max(64, config.total_rounds // 8)
    if burn >= config.total_rounds:
        raise ConfigurationError("burn-in must be shorter than the run")
    sequences = []
    for rep in range(config.replicates):
        trace = run_frozen_feeder(config, freeze_at, replicate=rep, fixed_feeder_atoms=atoms)
        sequences.append(
            [int(row[2]) for row in trace.rows if row[0] == 1 and row[1] > burn]
        )
    if config.replicates == 1:
        # batch means over the single run stand in for replicate spread
        sequences = [list(chunk) for chunk in np.array_split(np.array(sequences[0]), 16)]
    occ = np.zeros((len(sequences), config.space.size))
    for i, states in enumerate(sequences):
        for s in states:
            occ[i, s] += 1.0
        occ[i] /= len(states)
    mean = occ.mean(axis=0)
    se = occ.std(axis=0, ddof=1) / np.sqrt(len(sequences))
    z = np.abs(mean - omega) / np.maximum(se, 1e-12)
    max_z = float(z.max())
    return BiasReport(
        freeze_at=freeze_at,
        feeder_atoms=[int(a) for a in atoms],
        predicted=omega,
        pi_target=pi2,
        predicted_tv=predicted_tv,
        occupancy=mean,
        occupancy_se=se,
        max_z=max_z,
        agrees=bool(max_z <= 3.0),
        exact_feeder_tv=exact_feeder_tv,
        config_hash=config.config_hash(),
    )


# ---------------------------------------------------------------------------
# fluctuation-bound battery
# ---------------------------------------------------------------------------

def fluctuation_bound_battery(
    config: ExperimentConfig,
    steps: int = 10_000,
    n_funcs: int = 4,
    seed_salt: int = _BATTERY_SALT,
) -> dict:
    """Stream random insertions and check the per-step restricted-mean drift
    |S_{m+1,x}(f) - S_{m,x}(f)| against (1/theta + 1/theta^2) ||f||_inf / (m+2)
    with theta the observed minimum ring mass over the whole run.

    Returns the worst observed ratio (must be <= 1), the theta used, and the
    number of steps checked."""
    if not isinstance(config.space, FiniteSpace):
        raise ConfigurationError("the fluctuation battery needs a finite space")
    size = config.space.size
    labels = config.partition.labels()
    d = config.partition.d
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, seed_salt]))
    fs = rng.uniform(-1.0, 1.0, size=(n_funcs, size))

    # seed one atom per ring so every restricted mean exists from the start
    first_of_ring = [int(np.nonzero(labels == j)[0][0]) for j in range(d)]
    measure = EmpiricalMeasure(config.partition)
    for s in first_of_ring:
        measure.insert(s)
    ring_sums = np.zeros((d, n_funcs))
    ring_counts = np.zeros(d, dtype=int)
    for s in first_of_ring:
        ring_sums[labels[s]] += fs[:, s]
        ring_counts[labels[s]] += 1

    theta_obs = measure.masses().min()
    worst = 0.0
    stream = rng.integers(size, size=steps)
    for x in stream:
        m_plus_2 = measure.total_count + 1  # S_m holds m+1 atoms; bound uses m+2
        before = ring_sums[labels[x]] / ring_counts[labels[x]]
        measure.insert(int(x))
        ring_sums[labels[x]] += fs[:, x]
        ring_counts[labels[x]] += 1
        after = ring_sums[labels[x]] / ring_counts[labels[x]]
        theta_obs = min(theta_obs, measure.masses().min())
        bound = (1.0 / theta_obs + 1.0 / theta_obs**2) / m_plus_2
        ratio = float(np.abs(after - before).max()) / bound
        worst = max(worst, ratio)
    return {"max_ratio": worst, "theta": float(theta_obs), "steps": steps}


# ---------------------------------------------------------------------------
# verification suite
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    statistic: float
    tolerance: float | None
    passed: bool
    details: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": float(self.statistic),
            "tolerance": None if self.tolerance is None else float(self.tolerance),
            "passed": bool(self.passed),
            "details": self.details,
        }


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    config_hash: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _random_positive_measure(rng, size) -> np.ndarray:
    w = rng.uniform(0.05, 1.0, size)
    return w / w.sum()


def _random_chain(rng, size) -> np.ndarray:
    P = rng.uniform(0.05, 1.0, size=(size, size))
    return P / P.sum(axis=1, keepdims=True)


def verify_suite(config: ExperimentConfig) -> VerificationReport:
    """Run every oracle check against the configured model and emit a
    consolidated pass/fail report. Deterministic given the config seed."""
    if not isinstance(config.space, FiniteSpace):
        raise ConfigurationError("the verification suite needs a finite space")
    model = config.kernels
    size = config.space.size
    d = config.partition.d
    if size > 8 or d > 3:
        raise ConfigurationError(
            f"verification enumeration is sized for S <= 8, d <= 3 "
            f"(got S={size}, d={d})"
        )
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, _VERIFY_SALT]))
    dens = config.ladder.density_table()
    report = VerificationReport(config_hash=config.config_hash())

    # local kernels: invariance and reversibility, exact
    worst = 0.0
    for level in range(config.r):
        K = exact.k_matrix(model, level)
        pi = dens[level]
        worst = max(worst, float(np.abs(pi @ K - pi).max()))
        worst = max(worst, float(np.abs(pi[:, None] * K - (pi[:, None] * K).T).max()))
    report.checks.append(CheckResult("k_invariance_reversibility", worst, 1e-12, worst <= 1e-12))

    # fixed point: feeding the exact lower target reproduces the upper one
    worst = 0.0
    for level in range(1, config.r):
        for eps in (0.0, 0.25, 0.5, 1.0):
            P = exact.nonlinear_matrix(model, level, dens[level - 1], eps)
            worst = max(worst, float(np.abs(exact.stationary(P) - dens[level]).max()))
    report.checks.append(CheckResult("fixed_point", worst, 1e-10, worst <= 1e-10))

    # Poisson equation: residual and series truncation on random chains
    worst_res, worst_gap = 0.0, -np.inf
    for _ in range(20):
        P = _random_chain(rng, 8)
        f = rng.uniform(-1.0, 1.0, 8)
        sol = exact.poisson_solve(P, f)
        worst_res = max(worst_res, sol.residual)
        partial = exact.poisson_series_partial(P, f, 50)
        rate = exact.geometric_rate_estimate(P, n_max=50)
        envelope = (
            2.0 * rate.m * rate.rho**50 * float(np.abs(f).max())
            / max(1e-300, 1.0 - rate.rho)
        )
        gap = float(np.abs(partial - sol.fhat).max())
        worst_gap = max(worst_gap, gap - envelope)
    report.checks.append(CheckResult("poisson_residual", worst_res, 1e-10, worst_res <= 1e-10))
    report.checks.append(
        CheckResult(
            "poisson_series_envelope", worst_gap, 1e-12, worst_gap <= 1e-12,
            details="max excess of |series_50 - solve| over the Doeblin envelope",
        )
    )

    # q-fold composition identity, brute-force enumeration
    worst = 0.0
    for q in (1, 2, 3):
        for _ in range(3):
            mu = _random_positive_measure(rng, size)
            f = rng.uniform(-1.0, 1.0, size)
            for level in range(1, config.r):
                worst = max(worst, exact.composition_identity_check(model, level, mu, f, q))
    report.checks.append(CheckResult("composition_identity", worst, 1e-10, worst <= 1e-10))

    # mixture expansion: word sum vs matrix power
    worst = 0.0
    level = config.r - 1
    K = exact.k_matrix(model, level)
    Q = exact.q_matrix(model, level, dens[level - 1])
    for n in range(1, 7):
        for eps in (0.3, 0.5, 1.0):
            worst = max(worst, exact.mixture_expansion_check(K, Q, eps, n))
    report.checks.append(CheckResult("mixture_expansion", worst, 1e-10, worst <= 1e-10))

    # Lipschitz continuity of the selection kernel in its feeder
    worst = 0.0
    for _ in range(25):
        mu = _random_positive_measure(rng, size)
        xi = _random_positive_measure(rng, size)
        for level in range(1, config.r):
            worst = max(worst, exact.lipschitz_check(model, level, mu, xi, 20, rng))
    report.checks.append(CheckResult("lipschitz", worst, 1.0 + 1e-9, worst <= 1.0 + 1e-9))

    # empirical-measure fluctuation bound
    battery = fluctuation_bound_battery(config)
    report.checks.append(
        CheckResult(
            "fluctuation_bound", battery["max_ratio"], 1.0 + 1e-9,
            battery["max_ratio"] <= 1.0 + 1e-9,
            details=f"theta={battery['theta']:.6f} over {battery['steps']} steps",
        )
    )

    # geometric convergence: fitted rate never beats the Doeblin bound
    worst = -np.inf
    monotone = True
    mats = [exact.k_matrix(model, lv) for lv in range(config.r)]
    for level in range(1, config.r):
        mats.append(exact.nonlinear_matrix(model, level, dens[level - 1]))
    for P in mats:
        rate = exact.geometric_rate_estimate(P)
        worst = max(worst, rate.rho_fitted - rate.rho)
        monotone = monotone and bool(np.all(np.diff(rate.tv_curve) <= 1e-12))
    report.checks.append(
        CheckResult("geometric_rate", worst, 1e-9, worst <= 1e-9 and monotone)
    )

    # continuity of invariant measures: exhibit a finite empirical constant
    worst = 0.0
    for _ in range(100):
        mu = _random_positive_measure(rng, size)
        xi = _random_positive_measure(rng, size)
        for level in range(1, config.r):
            worst = max(worst, exact.invariant_continuity_check(model, level, mu, xi))
    report.checks.append(
        CheckResult(
            "invariant_continuity", worst, None, bool(np.isfinite(worst)),
            details="max tv(omega(mu), omega(xi)) / ||K_mu - K_xi|| over the battery",
        )
    )
    return report
