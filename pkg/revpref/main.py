"""
Main Entry Script
=================

CLI entry point.  One subcommand per pipeline stage:

    check     GARP / GAPP verdicts, cycle witnesses and robustness margin for
              one or more wide deterministic files.
    patches   Patch layout of the budgets in a prices file.
    types     Rational types over that layout.
    test      J_N and its tightened-bootstrap p-value for long stochastic data.
    welfare   Bounds on the share revealed better off at ``p^t`` than ``p^{t'}``.
    ci        Confidence interval for that share by test inversion.
    eval      Augmented utility of a deterministic file: Afriat numbers,
              utility values, price-preference queries, rationalization audit.
    simulate  Synthetic mixture or quasilinear populations in the long format.

Every run prints one JSON report on stdout (see ``docs/report_schema.json``);
logs go to stderr.

Usage::

    python -m revpref check --data data/raw/example1.csv
    python -m revpref test --choices c.csv --prices p.csv --replications 1000 --seed 7
    python -m revpref ci --choices c.csv --prices p.csv --pair 1,2 --alpha 0.05

Exit codes:
    0  success
    1  input error (malformed data, bad configuration, missing file)
    2  model infeasibility where feasibility was required
    3  internal solver failure
"""

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from revpref.config import (
    DEFAULT_ALPHA,
    DEFAULT_GRID_STEP,
    DEFAULT_REPLICATIONS,
    DEFAULT_SEED,
    TYPE_CAP,
    resolve_threads,
    setup_logging,
)
from revpref.deterministic.afriat import (
    build_augmented_utility,
    price_preference_query,
    verify_rationalization,
)
from revpref.deterministic.relations import (
    check_gapp,
    check_garp,
    normalize_expenditure,
    panel_pass_rates,
    robustness_margin,
)
from revpref.errors import (
    DataValidationError,
    GenericityError,
    InfeasibleConstraintsError,
    ModelInfeasibleError,
    SolverError,
    TypeBudgetExceededError,
)
from revpref.ingestion.dataset import StochasticDataset
from revpref.ingestion.loader import (
    load_deterministic,
    load_prices,
    load_stochastic,
    write_stochastic,
)
from revpref.ingestion.registry import ArtifactRegistry
from revpref.reporting.run_log import RunReport
from revpref.stochastic.choice import (
    BOUNDARY_POLICIES,
    JN_ZERO_TOL,
    bootstrap_pvalue,
    compute_jn,
    default_tau,
    estimate_pi,
)
from revpref.stochastic.counterfactual import confidence_interval, welfare_bounds, welfare_table
from revpref.stochastic.patches import PatchLayout, enumerate_patches
from revpref.stochastic.simulate import (
    MixtureSpec,
    QuasilinearSpec,
    gen_mixture,
    gen_quasilinear,
)
from revpref.stochastic.types_matrix import TypeMatrix, enumerate_types, type_indicator

logger = logging.getLogger(__name__)

COMMANDS = ("check", "patches", "types", "test", "welfare", "ci", "eval", "simulate")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3

_NU_SUPPORT_TOL = 1e-9


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Validated settings of one CLI run."""

    command: str
    data: list[str] = field(default_factory=list)
    choices: Optional[str] = None
    prices: Optional[str] = None
    alpha: float = DEFAULT_ALPHA
    grid_step: float = DEFAULT_GRID_STEP
    replications: int = DEFAULT_REPLICATIONS
    tau: Optional[float] = None
    omega: str = "identity"
    seed: int = DEFAULT_SEED
    boundary: str = "drop"
    type_cap: int = TYPE_CAP
    pair: Optional[str] = None
    out: Optional[str] = None
    threads: Optional[int] = None
    cache_dir: Optional[str] = None
    # eval
    bundle: Optional[str] = None
    expenditure: Optional[float] = None
    at_prices: Optional[str] = None
    grid_points: int = 15
    grid_radius: Optional[float] = None
    audit: bool = False
    # simulate
    kind: str = "mixture"
    nu: Optional[str] = None
    households: int = 500
    goods: int = 2
    periods: int = 2
    out_choices: Optional[str] = None
    out_prices: Optional[str] = None

    def validate(self) -> None:
        """Enforce documented ranges before anything runs.

        Raises
        ------
        DataValidationError
            On the first out-of-range or missing setting.
        """
        if self.command not in COMMANDS:
            raise DataValidationError(f"unknown command {self.command!r}")
        if not 0.0 < self.alpha <= 0.5:
            raise DataValidationError(f"--alpha must lie in (0, 0.5], got {self.alpha}")
        if not 0.0 < self.grid_step <= 0.25:
            raise DataValidationError(f"--grid-step must lie in (0, 0.25], got {self.grid_step}")
        if self.replications < 1:
            raise DataValidationError("--replications must be >= 1")
        if self.tau is not None and not 0.0 < self.tau < 1.0:
            raise DataValidationError(f"--tau must lie in (0, 1), got {self.tau}")
        if self.boundary not in BOUNDARY_POLICIES:
            raise DataValidationError(f"--boundary must be one of {BOUNDARY_POLICIES}")
        if self.type_cap < 1:
            raise DataValidationError("--type-cap must be >= 1")
        if self.omega != "identity" and not self.omega.startswith("diag:"):
            raise DataValidationError("--omega must be 'identity' or 'diag:<file>'")
        if self.grid_points < 1:
            raise DataValidationError("--grid-points must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise DataValidationError("--threads must be >= 1")

        needs = {
            "check": ("data",),
            "eval": ("data",),
            "patches": ("prices",),
            "types": ("prices",),
            "test": ("choices", "prices"),
            "welfare": ("choices", "prices"),
            "ci": ("choices", "prices"),
        }
        for name in needs.get(self.command, ()):
            if not getattr(self, name):
                raise DataValidationError(f"{self.command} requires --{name}")
        if self.command == "eval" and len(self.data) != 1:
            raise DataValidationError("eval takes exactly one --data file")
        if self.command == "simulate":
            if self.kind not in ("mixture", "quasilinear"):
                raise DataValidationError("--kind must be 'mixture' or 'quasilinear'")
            if self.kind == "mixture" and not self.prices:
                raise DataValidationError("simulate --kind mixture requires --prices")
            if not (self.out_choices and self.out_prices):
                raise DataValidationError("simulate requires --out-choices and --out-prices")
            if self.households < 1 or self.goods < 1 or self.periods < 1:
                raise DataValidationError("--households, --goods and --periods must be >= 1")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", action="append", default=[], metavar="FILE",
                        help="Wide deterministic file (repeatable for check).")
    common.add_argument("--choices", metavar="FILE", help="Long choices file.")
    common.add_argument("--prices", metavar="FILE", help="Prices file (period, p1..pL).")
    common.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    common.add_argument("--grid-step", type=float, default=DEFAULT_GRID_STEP)
    common.add_argument("--replications", type=int, default=DEFAULT_REPLICATIONS)
    common.add_argument("--tau", type=float, default=None,
                        help="Tightening parameter; defaults to sqrt(log N / N).")
    common.add_argument("--omega", default="identity", help="identity | diag:<file>")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--boundary", choices=BOUNDARY_POLICIES, default="drop")
    common.add_argument("--type-cap", type=int, default=TYPE_CAP)
    common.add_argument("--pair", default=None, metavar="T,T'",
                        help="Period ids t,t' (or 'all' for welfare).")
    common.add_argument("--out", default=None, metavar="PATH", help="Also save the report here.")
    common.add_argument("--threads", type=int, default=None,
                        help="Worker threads (fallback: REVPREF_THREADS).")
    common.add_argument("--cache-dir", default=None,
                        help="Reuse patch layouts and type matrices cached here.")
    common.add_argument("--log-level", default=None)
    return common


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Parameters
    ----------
    argv : list[str], optional
        Argument list (defaults to ``sys.argv[1:]``).
    """
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="revpref",
        description="Revealed price preference tests, welfare bounds and simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("check", "patches", "types", "test", "welfare", "ci"):
        sub.add_parser(name, parents=[common])

    ev = sub.add_parser("eval", parents=[common])
    ev.add_argument("--bundle", help="Comma-separated bundle x.")
    ev.add_argument("--expenditure", type=float, help="Expenditure e for U(x, -e).")
    ev.add_argument("--at-prices", help="Comma-separated prices for the indirect utility.")
    ev.add_argument("--grid-points", type=int, default=15)
    ev.add_argument("--grid-radius", type=float, default=None)
    ev.add_argument("--audit", action="store_true", help="Run the rationalization audit.")

    sim = sub.add_parser("simulate", parents=[common])
    sim.add_argument("--kind", choices=("mixture", "quasilinear"), default="mixture")
    sim.add_argument("--nu", help="Comma-separated mixture weights (default: uniform).")
    sim.add_argument("--households", type=int, default=500)
    sim.add_argument("--goods", type=int, default=2)
    sim.add_argument("--periods", type=int, default=2)
    sim.add_argument("--out-choices", help="Where to write the long choices file.")
    sim.add_argument("--out-prices", help="Where to write the prices file.")
    return parser.parse_args(argv)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _vector(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise DataValidationError(f"{name} must be a comma-separated list of numbers") from exc


def _omega(cfg: RunConfig) -> Optional[np.ndarray]:
    if cfg.omega == "identity":
        return None
    path = Path(cfg.omega[len("diag:"):])
    if not path.exists():
        raise FileNotFoundError(f"Omega file not found: {path}")
    try:
        return np.loadtxt(path, delimiter=",", ndmin=1).ravel()
    except ValueError as exc:
        raise DataValidationError(f"cannot read Omega diagonal from {path}") from exc


def _pair_indices(pair: str, period_ids: tuple[str, ...]) -> tuple[int, int]:
    parts = [p.strip() for p in pair.split(",")]
    if len(parts) != 2:
        raise DataValidationError(f"--pair must be 't,t'' or 'all', got {pair!r}")
    try:
        t, t_prime = (period_ids.index(p) for p in parts)
    except ValueError as exc:
        raise DataValidationError(f"--pair {pair!r} names unknown period ids {list(period_ids)}") from exc
    if t == t_prime:
        raise DataValidationError("--pair needs two distinct periods")
    return t, t_prime


def _layout(cfg: RunConfig, prices: np.ndarray, threads: int, report: RunReport) -> PatchLayout:
    registry = ArtifactRegistry(Path(cfg.cache_dir)) if cfg.cache_dir else None
    layout = registry.get_layout(prices) if registry else None
    if layout is None:
        layout = enumerate_patches(prices, threads=threads)
        if registry:
            registry.put_layout(layout)
    report.append_step(
        "patches", "Patch layout", counts={"T": layout.T, "I": layout.total_rows,
                                            "per_budget": list(layout.counts)},
    )
    return layout


def _types(cfg: RunConfig, layout: PatchLayout, threads: int, report: RunReport) -> TypeMatrix:
    registry = ArtifactRegistry(Path(cfg.cache_dir)) if cfg.cache_dir else None
    types = registry.get_types(layout, cfg.type_cap) if registry else None
    if types is None:
        types = enumerate_types(layout, cap=cfg.type_cap, threads=threads)
        if registry:
            registry.put_types(types, cfg.type_cap)
    report.append_step("types", "Rational types", counts={"H": types.H, "I": types.I})
    return types


def _stochastic(cfg: RunConfig, report: RunReport) -> StochasticDataset:
    data = load_stochastic(cfg.choices, cfg.prices)
    report.append_step("load", "Load stochastic data",
                       counts={"T": data.T, "L": data.L, "N": int(data.counts.sum())})
    return data


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_check(cfg: RunConfig, report: RunReport, threads: int) -> dict:
    results = []
    panels = []
    for path in cfg.data:
        data = load_deterministic(path)
        panels.append(data)
        garp = check_garp(data)
        gapp = check_gapp(data)
        entry = {
            "file": str(path),
            "T": data.T,
            "L": data.L,
            "garp": garp.passes,
            "gapp": gapp.passes,
            "garp_witness": garp.witness.to_dict() if garp.witness else None,
            "gapp_witness": gapp.witness.to_dict() if gapp.witness else None,
            "normalized_garp": check_garp(normalize_expenditure(data)).passes,
        }
        try:
            margin = robustness_margin(data)
            entry["robustness_margin"] = {
                "min_gap": margin.min_gap,
                "bundle_norm": margin.bundle_norm,
                "argmin_pair": list(margin.argmin_pair) if margin.argmin_pair else None,
            }
        except GenericityError as exc:
            logger.warning("Robustness margin undefined for %s: %s", path, exc)
            entry["robustness_margin"] = None
            entry["genericity_error"] = str(exc)
        results.append(entry)
        report.append_step("check", f"GARP/GAPP for {Path(path).name}",
                           counts={"garp": garp.passes, "gapp": gapp.passes})
    if len(results) == 1:
        return results[0]
    return {"files": results, "pass_rates": panel_pass_rates(panels)}


def _cmd_patches(cfg: RunConfig, report: RunReport, threads: int) -> dict:
    period_ids, prices = load_prices(cfg.prices)
    layout = _layout(cfg, prices, threads, report)
    return {"period_ids": list(period_ids), "layout": layout.to_dict()}


def _cmd_types(cfg: RunConfig, report: RunReport, threads: int) -> dict:
    period_ids, prices = load_prices(cfg.prices)
    layout = _layout(cfg, prices, threads, report)
    types = _types(cfg, layout, threads, report)
    return {"period_ids": list(period_ids), "counts": list(layout.counts), **types.to_dict()}


def _cmd_test(cfg: RunConfig, report: RunReport, threads: int) -> dict:
    data = _stochastic(cfg, report)
    layout = _layout(cfg, data.prices, threads, report)
    types = _types(cfg, layout, threads, report)
    pi = estimate_pi(data, layout, boundary=cfg.boundary)
    report.append_step("estimate_pi", "Patch frequencies",
                       counts={"N": pi.total_n, "dropped": int(pi.dropped_on_boundary.sum())})
    result = bootstrap_pvalue(
        data, layout, types,
        replications=cfg.replications, tau=cfg.tau, omega=_omega(cfg), omega_label=cfg.omega,
        seed=cfg.seed, threads=threads, boundary=cfg.boundary, pi=pi,
    )
    report.tau = result.tau
    report.append_step("bootstrap", "Tightened bootstrap",
                       counts={"jn": result.jn, "p_value": result.p_value})
    support = np.flatnonzero(result.nu_hat > _NU_SUPPORT_TOL)
    return {
        **result.to_dict(),
        "nu_support": support.tolist(),
        "rationalizable": result.rationalizable,
        "choice_probabilities": pi.to_dict(),
    }


def _cmd_welfare(cfg: RunConfig, report: RunReport, threads: int) -> dict:
    data = _stochastic(cfg, report)
    layout = _layout(cfg, data.prices, threads, report)
    types = _types(cfg, layout, threads, report)
    pi = estimate_pi(data, layout, boundary=cfg.boundary)
    omega = _omega(cfg)
    fit = compute_jn(pi, types, omega, omega_label=cfg.omega)
    out: dict = {"jn": fit.jn, "p_value": None}
    projection = None
    if fit.jn > JN_ZERO_TOL:
        # the projection stands in for pi_hat only if the model survives the test
        tested = bootstrap_pvalue(
            data, layout, types,
            replications=cfg.replications, tau=cfg.tau, omega=omega, omega_label=cfg.omega,
            seed=cfg.seed, threads=threads, boundary=cfg.boundary, pi=pi,
        )
        report.tau = tested.tau
        out["p_value"] = tested.p_value
        report.append_step("bootstrap", "Rationality test before projecting",
                           counts={"jn": tested.jn, "p_value": tested.p_value})
        if tested.p_value < cfg.alpha:
            raise InfeasibleConstraintsError(
                f"model rejected (J_N = {fit.jn:.4g}, p = {tested.p_value:.4g} < alpha = {cfg.alpha}); "
                "welfare bounds are not defined"
            )
        logger.warning("J_N = %.4g > 0 but not rejected (p = %.4g); bounds use the projection eta_hat",
                       fit.jn, tested.p_value)
        projection = fit.eta_hat
    out["used_projection"] = projection is not None
    if cfg.pair is None or cfg.pair == "all":
        table = welfare_table(pi, types, projection=projection)
        table["t"] = [data.period_ids[i] for i in table["t"]]
        table["t_prime"] = [data.period_ids[i] for i in table["t_prime"]]
        out["bounds"] = table.to_dict(orient="records")
    else:
        t, t_prime = _pair_indices(cfg.pair, data.period_ids)
        bounds = welfare_bounds(pi, types, type_indicator(types, t, t_prime), projection=projection)
        out["bounds"] = [{**bounds.to_dict(), "t": data.period_ids[t],
                          "t_prime": data.period_ids[t_prime]}]
    report.append_step("welfare", "Welfare bounds", counts={"pairs": len(out["bounds"])})
    return out


def _cmd_ci(cfg: RunConfig, report: RunReport, threads: int) -> dict:
    data = _stochastic(cfg, report)
    layout = _layout(cfg, data.prices, threads, report)
    types = _types(cfg, layout, threads, report)
    pi = estimate_pi(data, layout, boundary=cfg.boundary)
    if data.T == 1:
        # no second budget, so every type has the same (empty) ranking
        rho = np.zeros(types.H)
    else:
        if cfg.pair is None or cfg.pair == "all":
            raise DataValidationError("ci requires --pair t,t'")
        rho = type_indicator(types, *_pair_indices(cfg.pair, data.period_ids))
    tau = cfg.tau
    if tau is None and pi.total_n >= 2:
        tau = default_tau(pi.total_n)
    ci = confidence_interval(
        data, layout, types, rho,
        alpha=cfg.alpha, grid_step=cfg.grid_step, replications=cfg.replications, tau=tau,
        omega=_omega(cfg), seed=cfg.seed, threads=threads, boundary=cfg.boundary, pi=pi,
    )
    report.tau = tau
    report.append_step("ci", "Test inversion over the theta grid",
                       counts={"grid": int(ci.grid.size), "accepted": int(ci.accepted.size)})
    return ci.to_dict()


def _cmd_eval(cfg: RunConfig, report: RunReport, threads: int) -> dict:
    data = load_deterministic(cfg.data[0])
    u = build_augmented_utility(data)
    report.append_step("afriat", "Augmented Afriat numbers", counts={"T": data.T})
    out: dict = {"utility": u.to_dict()}
    radius = cfg.grid_radius
    if radius is None:
        radius = 2.0 * float(np.abs(data.bundles).sum(axis=1).max())
    if cfg.bundle is not None:
        x = _vector(cfg.bundle, "--bundle")
        if x.size != data.L:
            raise DataValidationError(f"--bundle has {x.size} goods, data has {data.L}")
        e = cfg.expenditure
        if e is None:
            if cfg.at_prices is None:
                raise DataValidationError("--bundle needs --expenditure or --at-prices")
            e = float(_vector(cfg.at_prices, "--at-prices") @ x)
        out["value"] = {"bundle": x.tolist(), "expenditure": e, "utility": u.evaluate(x, e)}
    if cfg.at_prices is not None:
        p = _vector(cfg.at_prices, "--at-prices")
        if p.size != data.L or np.any(p <= 0):
            raise DataValidationError("--at-prices must be L positive numbers")
        v, x_star = u.indirect_utility(p, radius, cfg.grid_points)
        out["indirect_utility"] = {"prices": p.tolist(), "value": v, "argmax": x_star.tolist()}
    if cfg.pair is not None:
        labels = tuple(data.labels) if data.labels else tuple(str(i + 1) for i in range(data.T))
        t, t_prime = _pair_indices(cfg.pair, labels)
        out["price_preference"] = {
            "t": labels[t], "t_prime": labels[t_prime],
            "relation": price_preference_query(data, t, t_prime).value,
        }
    if cfg.audit:
        audit = verify_rationalization(u, data, radius, cfg.grid_points)
        out["audit"] = audit.to_dict()
        report.append_step("audit", "Rationalization audit",
                           counts={"on_grid": audit.on_grid})
    return out


def _cmd_simulate(cfg: RunConfig, report: RunReport, threads: int) -> dict:
    if cfg.kind == "quasilinear":
        sample = gen_quasilinear(QuasilinearSpec(
            L=cfg.goods, T=cfg.periods, households=cfg.households, seed=cfg.seed,
        ))
        data = sample.data
        extra = {"pass_rates": panel_pass_rates(sample.panel)}
    else:
        period_ids, prices = load_prices(cfg.prices)
        layout = _layout(cfg, prices, threads, report)
        types = _types(cfg, layout, threads, report)
        nu = np.full(types.H, 1.0 / types.H) if cfg.nu is None else _vector(cfg.nu, "--nu")
        spec = MixtureSpec(types, nu, [cfg.households] * layout.T, seed=cfg.seed)
        simulated = gen_mixture(spec)
        data = StochasticDataset(simulated.prices, simulated.choices, period_ids)
        extra = {"H": types.H, "nu_star": spec.nu_star.tolist(),
                 "expected_pi": (types.matrix.astype(float) @ spec.nu_star).tolist()}
    c, p = write_stochastic(data, cfg.out_choices, cfg.out_prices)
    report.append_step("simulate", f"Simulated {cfg.kind} population",
                       counts={"T": data.T, "N": int(data.counts.sum())})
    return {"kind": cfg.kind, "choices_file": str(c), "prices_file": str(p),
            "T": data.T, "L": data.L, "N": int(data.counts.sum()), **extra}


_HANDLERS = {
    "check": _cmd_check,
    "patches": _cmd_patches,
    "types": _cmd_types,
    "test": _cmd_test,
    "welfare": _cmd_welfare,
    "ci": _cmd_ci,
    "eval": _cmd_eval,
    "simulate": _cmd_simulate,
}


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the documented exit codes."""
    if isinstance(exc, (ModelInfeasibleError, TypeBudgetExceededError)):
        return EXIT_INFEASIBLE
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, (DataValidationError, FileNotFoundError, ValueError)):
        return EXIT_INPUT
    return EXIT_SOLVER


def run(cfg: RunConfig) -> tuple[int, RunReport]:
    """Execute one command; never raises.

    Returns
    -------
    exit_code : int
    report : RunReport
        Carries the command result, or the error that ended the run.
    """
    inputs = {"data": ", ".join(cfg.data)} if cfg.data else {}
    inputs.update({k: v for k, v in (("choices", cfg.choices), ("prices", cfg.prices)) if v})
    report = RunReport(
        cfg.command, seed=cfg.seed, tau=cfg.tau, replications=cfg.replications,
        alpha=cfg.alpha, inputs=inputs, config=asdict(cfg),
    )
    report.start_run()
    try:
        cfg.validate()
        threads = resolve_threads(cfg.threads)
        report.set_result(_HANDLERS[cfg.command](cfg, report, threads))
    except Exception as exc:
        code = exit_code_for(exc)
        if code == EXIT_SOLVER and not isinstance(exc, SolverError):
            logger.exception("Unexpected error during '%s': %s", cfg.command, exc)
        else:
            logger.error("'%s' failed: %s", cfg.command, exc)
        report.fail(exc, code)
        report.append_step(cfg.command, "Run aborted", status="error", error_message=str(exc))
        return code, report
    logger.info("'%s' finished", cfg.command)
    return EXIT_OK, report


def main(argv: list[str] | None = None) -> int:
    """CLI entry point; prints the JSON report and returns the exit code."""
    args = parse_args(argv)
    setup_logging(args.log_level)
    cfg = config_from_args(args)
    code, report = run(cfg)
    if cfg.out:
        try:
            report.save(Path(cfg.out))
        except OSError as exc:
            logger.error("Could not save report to %s: %s", cfg.out, exc)
            code = code or EXIT_INPUT
    print(report.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())
