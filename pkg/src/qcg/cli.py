"""Command-line driver: Poisson experiments, degree tables, polynomial and
phase-factor utilities, encoding verification, and scaling fits.

Exit codes: 0 success, 2 not converged, 3 invalid configuration, 4 numerical
failure.  QCG_SEED overrides --seed.  A TOML file can preload any option of
``poisson run``; explicit flags win.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import encodings, estimation, polytools, qsp_core, solvers
from .errors import (
    DomainError,
    MaxIterExceeded,
    NotConverged,
    QcgError,
)

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_BAD_CONFIG, EXIT_NUMERICAL = 0, 2, 3, 4


@dataclass
class ExperimentConfig:
    """Validated Poisson-run settings."""

    problem: str = "poisson"
    n_qubits: int = 4
    rhs_case: str = "case1"
    eps: float = 0.1
    alpha: float = 4.0
    shots: int = 0
    seed: int = 0
    output_dir: Path = Path(".")
    max_iter: int = None
    delta: float = None

    def __post_init__(self):
        if self.problem != "poisson":
            raise DomainError(f"unknown problem {self.problem!r}")
        if not (1 <= self.n_qubits <= 6):
            raise DomainError("n_qubits must lie in [1, 6]")
        if not (0.0 < self.eps < 1.0):
            raise DomainError("eps must lie in (0, 1)")
        if self.rhs_case not in ("case1", "case2"):
            raise DomainError(f"unknown rhs case {self.rhs_case!r}")

    def shot_model(self) -> estimation.ShotModel:
        if self.shots and self.shots > 0:
            return estimation.ShotModel.sampled(self.shots, self.seed)
        return estimation.ShotModel.exact()


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn, *args, **kwargs):
    """Run fn mapping package errors onto the CLI exit-code contract."""
    try:
        return fn(*args, **kwargs)
    except (NotConverged, MaxIterExceeded) as exc:
        _fail(EXIT_NOT_CONVERGED, str(exc))
    except (DomainError, ValueError) as exc:
        _fail(EXIT_BAD_CONFIG, str(exc))
    except QcgError as exc:
        _fail(EXIT_NUMERICAL, str(exc))


def _seed_override(seed: int) -> int:
    env = os.environ.get("QCG_SEED")
    return int(env) if env else seed


@click.group()
def main():
    """Hybrid conjugate-gradient solver on eigenvalue-transformation circuits."""


# ---------------------------------------------------------------------------
# poisson
# ---------------------------------------------------------------------------


@main.group()
def poisson():
    """One-dimensional Poisson experiments."""


TRACE_COLUMNS = ("k", "alpha_k", "beta_k", "rr_est", "ppA_est", "residual",
                 "R_max", "P_max", "Pp_max", "X_max")


def _write_trace(trace: solvers.QcgTrace, path: Path):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for it in trace.iterations:
            writer.writerow([
                it.k, repr(it.alpha_k),
                "" if it.beta_k is None else repr(it.beta_k),
                repr(it.rr_est),
                "" if it.pp_est is None else repr(it.pp_est),
                repr(it.residual_norm), repr(it.r_max),
                "" if it.p_max is None else repr(it.p_max),
                "" if it.pp_max is None else repr(it.pp_max),
                repr(it.x_max),
            ])


def read_trace(path) -> list:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append({key: (float(val) if val not in ("", None) else None)
                    for key, val in row.items()})
    return out


@poisson.command("run")
@click.option("--n-qubits", type=int, default=None)
@click.option("--case", "rhs_case", type=click.Choice(["case1", "case2"]), default=None)
@click.option("--eps", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--shots", type=int, default=None, help="0 selects exact expectations")
@click.option("--seed", type=int, default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--output-dir", type=click.Path(path_type=Path), default=None)
@click.option("--config", "config_file", type=click.Path(exists=True, path_type=Path),
              default=None, help="TOML file with a [poisson] table; flags override")
def poisson_run(config_file, **flags):
    """Solve the Poisson system and write trace, max-abs data, summary, state."""
    settings = {}
    if config_file is not None:
        with open(config_file, "rb") as fh:
            settings.update(tomllib.load(fh).get("poisson", {}))
    settings.update({k: v for k, v in flags.items() if v is not None})
    if "output_dir" in settings:
        settings["output_dir"] = Path(settings["output_dir"])
    cfg = _guard(ExperimentConfig, **settings)
    cfg.seed = _seed_override(cfg.seed)
    trace = _guard(_run_experiment, cfg)
    converged_ok = trace.converged and trace.error_vs_dense <= cfg.eps
    sys.exit(EXIT_OK if converged_ok else EXIT_NOT_CONVERGED)


def _run_experiment(cfg: ExperimentConfig) -> solvers.QcgTrace:
    system = encodings.poisson_system(cfg.n_qubits, cfg.rhs_case)
    a_prime = 2.0 * system.matrix / cfg.alpha - np.eye(system.dim)
    base = encodings.exact_dilation(a_prime)
    qcfg = solvers.QcgConfig(eps=cfg.eps, alpha=cfg.alpha, delta=cfg.delta,
                             shot_model=cfg.shot_model(), max_iter=cfg.max_iter)
    trace = solvers.qcg_solve(system, base, qcfg)

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_trace(trace, out / "trace.csv")
    with (out / "residuals.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("k", "residual"))
        for it in trace.iterations:
            writer.writerow((it.k + 1, repr(it.residual_norm)))
    with (out / "maxabs.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("k", "X_max", "R_max", "P_max", "Pp_max"))
        for it in trace.iterations:
            writer.writerow((it.k + 1, repr(it.x_max), repr(it.r_max),
                             "" if it.p_max is None else repr(it.p_max),
                             "" if it.pp_max is None else repr(it.pp_max)))
    cost = solvers.query_cost(trace, solvers.QcgConfig(eps=cfg.eps, alpha=cfg.alpha))
    summary = {
        "problem": cfg.problem,
        "n_qubits": cfg.n_qubits,
        "rhs_case": cfg.rhs_case,
        "eps": cfg.eps,
        "alpha": cfg.alpha,
        "shots": cfg.shots,
        "seed": cfg.seed,
        "kappa": trace.kappa,
        "norm_A": trace.norm_a,
        "criterion": trace.criterion,
        "delta": trace.delta,
        "converged": trace.converged,
        "m": trace.m,
        "max_polynomial_degree": trace.max_polynomial_degree,
        "max_circuit_depth": trace.max_circuit_depth,
        "final_residual": trace.iterations[-1].residual_norm,
        "error_vs_dense": trace.error_vs_dense,
        "success_probability": trace.success_probability,
        "X_max_final": trace.x_max,
        "total_queries": cost.total_queries,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    state = trace.solution_state / trace.solution_norm
    (out / "solution.json").write_text(json.dumps({
        "real": state.real.tolist(), "imag": state.imag.tolist(),
        "norm_unnormalized": trace.solution_norm,
    }))
    click.echo(f"converged={trace.converged} m={trace.m} "
               f"residual={trace.iterations[-1].residual_norm:.3e} "
               f"error={trace.error_vs_dense:.3e}")
    return trace


# ---------------------------------------------------------------------------
# table2
# ---------------------------------------------------------------------------


@main.command("table2")
@click.option("--eps", type=float, default=0.1)
@click.option("--alpha", type=float, default=4.0)
@click.option("--sizes", default="4,8,16,32", help="comma-separated system sizes")
@click.option("--case", "rhs_case", type=click.Choice(["case1", "case2"]),
              default="case1")
@click.option("--output", type=click.Path(path_type=Path), default=None)
def table2(eps, alpha, sizes, rhs_case, output):
    """Degree comparison: iterative degree vs direct-inversion degree per size."""
    rows = _guard(compute_table2, eps, alpha,
                  [int(s) for s in sizes.split(",")], rhs_case)
    lines = ["N,kappa,qcg_degree,direct_qsvt_degree,rect_degree"]
    for row in rows:
        lines.append("{N},{kappa:.6g},{qcg_degree},{direct_qsvt_degree},{rect_degree}"
                     .format(**row))
    text = "\n".join(lines) + "\n"
    if output is not None:
        Path(output).write_text(text)
    click.echo(text, nl=False)


def compute_table2(eps: float, alpha: float, sizes, rhs_case: str = "case1"):
    """Rows (N, kappa, iterative degree, direct degree, window degree).

    The iterative degree is m+1 where m is the stopping iteration of the
    coefficient recursion under the residual criterion; exact-mode runs
    reproduce it identically, so no circuits are needed here.
    """
    rows = []
    for n in sizes:
        n_qubits = int(np.log2(n))
        if 2 ** n_qubits != n:
            raise DomainError(f"size {n} is not a power of two")
        system = encodings.poisson_system(n_qubits, rhs_case)
        criterion = system.norm_A * eps / (system.kappa
                                           * float(np.linalg.norm(system.rhs)))
        entries = solvers.cg_tracked(system, alpha, max_iter=4 * n,
                                     stop_residual=criterion)
        m = entries[-1].k - 1  # stop happened entering state m+1
        degrees = solvers.direct_qsvt_degree(system.kappa, alpha, eps)
        rows.append({
            "N": n,
            "kappa": system.kappa,
            "qcg_degree": m + 1,
            "direct_qsvt_degree": degrees.d_total,
            "rect_degree": degrees.d_rect_part,
        })
    return rows


# ---------------------------------------------------------------------------
# poly
# ---------------------------------------------------------------------------


def _emit_poly(poly, report, output, report_only):
    payload = {"degree_report": {"name": report.name, "degree": report.degree,
                                 "parameters": report.parameters}}
    if poly is not None and not report_only:
        payload["polynomial"] = poly.to_dict()
    text = json.dumps(payload)
    if output is not None:
        Path(output).write_text(text)
        click.echo(f"wrote {output}")
    else:
        click.echo(text)


@main.group()
def poly():
    """Approximation-polynomial constructions."""


@poly.command("sign")
@click.option("--delta", type=float, default=0.0)
@click.option("--width", "Delta", type=float, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--max-degree", type=int, default=polytools.DEFAULT_DEGREE_CAP)
@click.option("--report-only", is_flag=True)
@click.option("--output", type=click.Path(path_type=Path), default=None)
def poly_sign(delta, Delta, eps, max_degree, report_only, output):
    """Step-function approximant."""
    if report_only:
        report = _guard(polytools.sign_degree, delta, Delta, eps)
        _emit_poly(None, report, output, True)
        return
    p, report = _guard(polytools.sign_poly, delta, Delta, eps, max_degree=max_degree)
    _emit_poly(p, report, output, False)


@poly.command("rect")
@click.option("--delta", type=float, required=True)
@click.option("--width", "Delta", type=float, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--kind", type=click.Choice(["open", "closed"]), default="open")
@click.option("--max-degree", type=int, default=polytools.DEFAULT_DEGREE_CAP)
@click.option("--report-only", is_flag=True)
@click.option("--output", type=click.Path(path_type=Path), default=None)
def poly_rect(delta, Delta, eps, kind, max_degree, report_only, output):
    """Rectangular-window approximant."""
    if report_only:
        report = _guard(polytools.rect_degree, delta, Delta, eps, kind)
        _emit_poly(None, report, output, True)
        return
    p, report = _guard(polytools.rect_poly, delta, Delta, eps, kind,
                       max_degree=max_degree)
    _emit_poly(p, report, output, False)


@poly.command("inverse")
@click.option("--kappa", type=float, required=True)
@click.option("--alpha", type=float, default=1.0)
@click.option("--eps", type=float, required=True)
@click.option("--max-degree", type=int, default=polytools.DEFAULT_DEGREE_CAP)
@click.option("--report-only", is_flag=True)
@click.option("--output", type=click.Path(path_type=Path), default=None)
def poly_inverse(kappa, alpha, eps, max_degree, report_only, output):
    """Reciprocal approximant away from the origin."""
    if report_only:
        report = _guard(polytools.inverse_degree, kappa, alpha, eps)
        _emit_poly(None, report, output, True)
        return
    p, report = _guard(polytools.inverse_poly, kappa, alpha, eps,
                       max_degree=max_degree)
    _emit_poly(p, report, output, False)


@poly.command("lamp")
@click.option("--gamma", type=float, default=3.0)
@click.option("--eps", type=float, required=True)
@click.option("--alpha", type=float, default=4.0)
@click.option("--gap", type=float, default=None,
              help="eigenvalue gap; omit for the gap-free construction")
@click.option("--max-degree", type=int, default=polytools.DEFAULT_DEGREE_CAP)
@click.option("--output", type=click.Path(path_type=Path), default=None)
def poly_lamp(gamma, eps, alpha, gap, max_degree, output):
    """Linear-amplification polynomial, with or without a spectral gap."""
    if gap is not None:
        cfg = _guard(encodings.AmplificationConfig, gamma=gamma, gap=gap, eps=eps)
        p, report = _guard(encodings.lamp_poly_with_gap, cfg, alpha,
                           max_degree=max_degree)
    else:
        p, report = _guard(encodings.lamp_poly_no_gap, gamma, eps,
                           max_degree=max_degree)
    _emit_poly(p, report, output, False)


# ---------------------------------------------------------------------------
# phases
# ---------------------------------------------------------------------------


@main.group()
def phases():
    """Phase-factor solving and verification."""


@phases.command("solve")
@click.option("--poly", "poly_file", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--tol", type=float, default=1e-10)
@click.option("--convention", type=click.Choice(["reflection", "wx"]),
              default="reflection")
@click.option("--max-degree", type=int, default=qsp_core.DEFAULT_SOLVE_DEGREE_CAP)
@click.option("--output", type=click.Path(path_type=Path), default=None)
def phases_solve(poly_file, tol, convention, max_degree, output):
    """Solve phase factors for a serialized polynomial."""
    p = _load_poly(poly_file)
    phi, residual = _guard(qsp_core.solve_phases, p, tol,
                           max_degree=max_degree, convention=convention)
    payload = json.dumps({"phases": phi.to_dict(),
                          "residual": residual.max_abs_error,
                          "grid_size": residual.grid_size})
    if output is not None:
        Path(output).write_text(payload)
        click.echo(f"wrote {output}")
    else:
        click.echo(payload)


@phases.command("verify")
@click.option("--poly", "poly_file", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--phases", "phases_file", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--grid", type=int, default=1000)
def phases_verify(poly_file, phases_file, grid):
    """Dense-grid residual of stored phases against a stored polynomial."""
    p = _load_poly(poly_file)
    data = json.loads(Path(phases_file).read_text())
    phi = qsp_core.PhaseFactors.from_dict(data.get("phases", data))
    residual = _guard(qsp_core.verify_phases, phi, p, grid)
    click.echo(json.dumps({"max_abs_error": residual.max_abs_error,
                           "grid_size": residual.grid_size}))


def _load_poly(path) -> polytools.Polynomial:
    data = json.loads(Path(path).read_text())
    if "polynomial" in data:
        data = data["polynomial"]
    return polytools.Polynomial.from_dict(data)


# ---------------------------------------------------------------------------
# encode
# ---------------------------------------------------------------------------


@main.group()
def encode():
    """Block-encoding construction and verification."""


@encode.command("verify")
@click.option("--n-qubits", type=int, default=2)
@click.option("--alpha", type=float, default=4.0)
@click.option("--method", type=click.Choice(["dilation", "lcu", "amplified"]),
              default="dilation")
@click.option("--gap", type=float, default=None,
              help="eigenvalue gap for amplified; omit to use the gap-free route")
@click.option("--eps", type=float, default=0.05)
@click.option("--max-degree", type=int, default=2048)
def encode_verify(n_qubits, alpha, method, gap, eps, max_degree):
    """Build the requested Poisson A' encoding and print its verified error."""

    def build():
        system = encodings.poisson_system(n_qubits, "case1")
        a_prime = 2.0 * system.matrix / alpha - np.eye(system.dim)
        if method == "dilation":
            be = encodings.exact_dilation(a_prime)
            return verify_val(be, a_prime), be
        scaled = encodings.exact_dilation(system.matrix / alpha)
        if method == "lcu":
            be = encodings.lcu_a_prime(scaled)
            return verify_val(be, a_prime), be
        cfg = encodings.AmplificationConfig(gamma=3.0, gap=gap, eps=eps)
        be = encodings.amplified_a_prime(scaled, cfg, max_degree=max_degree)
        return verify_val(be, a_prime), be

    def verify_val(be, target):
        return encodings.verify_block_encoding(be, target)

    err, be = _guard(build)
    click.echo(json.dumps({"method": method, "n_qubits": n_qubits,
                           "alpha": be.alpha, "n_a": be.n_a, "eps": be.eps,
                           "verified_error": err}))
    threshold = eps if method == "amplified" else 1e-12
    sys.exit(EXIT_OK if err <= threshold else EXIT_NUMERICAL)


# ---------------------------------------------------------------------------
# scalings
# ---------------------------------------------------------------------------


@main.group()
def scalings():
    """Growth-exponent fits of the polynomial normalizers."""


@scalings.command("fit")
@click.option("--trace", "trace_files", type=click.Path(exists=True, path_type=Path),
              multiple=True, required=True)
@click.option("--regressor", type=click.Choice(["iteration_k", "kappa"]),
              default="iteration_k")
@click.option("--k-min", type=int, default=None)
@click.option("--k-max", type=int, default=None)
def scalings_fit(trace_files, regressor, k_min, k_max):
    """Fit exponents from trace CSVs (kappa read from the sibling summary.json)."""
    traces = [_guard(_trace_from_csv, path) for path in trace_files]
    k_range = (k_min, k_max) if k_min is not None and k_max is not None else None
    fits = _guard(solvers.fit_scalings, traces, regressor, k_range)
    click.echo(json.dumps([{
        "quantity": f.quantity, "exponent": f.exponent,
        "r_squared": f.r_squared, "regressor": f.regressor,
        "n_points": f.n_points,
    } for f in fits]))


def _trace_from_csv(path: Path) -> solvers.QcgTrace:
    rows = read_trace(path)
    kappa = float("nan")
    summary = path.parent / "summary.json"
    if summary.exists():
        kappa = json.loads(summary.read_text()).get("kappa", float("nan"))
    trace = solvers.QcgTrace(system_dim=0, kappa=kappa, norm_a=float("nan"),
                             criterion=float("nan"), delta=float("nan"))
    for row in rows:
        trace.iterations.append(solvers.QcgIteration(
            k=int(row["k"]), alpha_k=row["alpha_k"], beta_k=row["beta_k"],
            rr_est=row["rr_est"], pp_est=row["ppA_est"],
            residual_norm=row["residual"], r_max=row["R_max"],
            p_max=row["P_max"], pp_max=row["Pp_max"], x_max=row["X_max"],
        ))
    return trace


if __name__ == "__main__":
    main()
