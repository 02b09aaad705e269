"""Command-line entry point: experiment orchestration and artifact emission.

Subcommands mirror the library surface:

  semigroup-check   decay/identity diagnostics for one generator
  hypo-check        structural hypotheses of a singular family
  evolve            evolution operator construction + singular-bound sweep
  counterexample    blow-up table for power families with beta <= 1
  solve-scp         singular Cauchy problem + maximal-regularity report
  wedge             the space-time wedge example end to end
  report            merge per-run JSON artifacts into one summary

Each command takes a JSON config (--config), writes JSON/CSV artifacts and
matplotlib figures into --out, and exits 0 on pass, 2 on config errors,
3 on numerical failure.  Flags can also come from SEVOP_CONFIG, SEVOP_OUT,
SEVOP_THREADS, SEVOP_SEED.  A fixed seed makes the data artifacts
byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from sevop import cauchy, evolution, family as family_mod, linops, semigroup, wedge as wedge_mod
from sevop.errors import SevopError
from sevop.reporting import new_figure, save_figure, write_csv, write_json, write_tensor_bin

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(SevopError):
    """Invalid or unparseable experiment configuration."""


_ALLOWED_KEYS = {
    "semigroup-check": {"matrix", "T", "n_samples", "decades", "identity_times", "seed", "tolerances"},
    "hypo-check": {"family", "rho", "pairs", "scan", "seed", "tolerances", "difference_bound"},
    "evolve": {"family", "mesh", "method", "rho", "store_blocks", "theta", "seed", "tolerances"},
    "counterexample": {"beta", "eigs", "n_eigs", "t", "tau_grid", "seed", "tolerances", "growth_min"},
    "solve-scp": {"family", "mesh", "f", "alpha", "rho", "f_class", "method", "theta", "refinements", "seed", "tolerances"},
    "wedge": {
        "L", "n_modes", "n_y", "T", "t_min", "n_t", "n_x", "alpha",
        "g_coeffs", "h_coeffs", "method", "theta", "binary_field", "seed", "tolerances",
    },
    "report": {"runs", "seed"},
}


def _check_keys(command: str, cfg: dict) -> None:
    allowed = _ALLOWED_KEYS[command]
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)} (allowed: {sorted(allowed)})")


def _load_config(args) -> dict:
    path = args.config or os.environ.get("SEVOP_CONFIG")
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _mesh_from_cfg(cfg: dict, T: float) -> np.ndarray:
    mcfg = cfg.get("mesh", {})
    if isinstance(mcfg, list):
        return np.asarray(mcfg, dtype=float)
    return evolution.default_mesh(T, n=int(mcfg.get("n", 48)), t_min_factor=float(mcfg.get("t_min_factor", 1e-3)))


def _family_from_cfg(cfg: dict) -> family_mod.SingularFamily:
    if "family" not in cfg:
        raise ConfigError("config requires a 'family' object")
    try:
        return family_mod.SingularFamily.from_json_dict(cfg["family"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad family spec: {exc}") from exc


def _matrix_from_cfg(cfg: dict, key: str = "matrix") -> linops.DenseOperator:
    if key not in cfg:
        raise ConfigError(f"config requires a '{key}' object")
    try:
        return linops.DenseOperator.from_json_dict(cfg[key])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad matrix spec: {exc}") from exc


def cmd_semigroup_check(cfg: dict, out: Path, seed: int) -> int:
    _check_keys("semigroup-check", cfg)
    A = _matrix_from_cfg(cfg)
    T = float(cfg.get("T", 4.0))
    rep = semigroup.decay_report(A, T, n_samples=int(cfg.get("n_samples", 48)), decades=float(cfg.get("decades", 4.0)))
    cert = linops.certify_sectorial(A, 0.75 * np.pi)
    rng = np.random.default_rng(seed)
    id_times = cfg.get("identity_times", [0.3, 1.0])
    residuals = []
    for t in id_times:
        x = rng.standard_normal(A.dim)
        residuals.append(semigroup.verify_integral_identity(A, float(t), x))
    write_csv(
        out / "semigroup_check.csv",
        ["t", "norm_e_tA", "norm_tAe_tA"],
        zip(rep.t_grid, rep.norms, rep.tAe_norms),
    )
    tol = float(cfg.get("tolerances", {}).get("identity_residual", 1e-8))
    payload = {
        "kind": "semigroup-check",
        "decay": rep.to_json_dict(),
        "certificate": cert.to_json_dict(),
        "integral_identity_residuals": residuals,
        "identity_pass": bool(max(residuals) <= tol),
        "pass": bool(cert.passed and max(residuals) <= tol),
    }
    write_json(out / "semigroup_check.json", payload, config=cfg)
    fig, ax = new_figure()
    ax.loglog(rep.t_grid, np.maximum(rep.norms, 1e-300), label="||e^{tA}||")
    ax.loglog(rep.t_grid, np.maximum(rep.tAe_norms, 1e-300), label="||t A e^{tA}||")
    ax.set_xlabel("t")
    ax.set_title(f"decay: omega_est={rep.omega_est:.3g}, M_est={cert.M_est:.3g}")
    ax.legend()
    save_figure(fig, out / "semigroup_check.png")
    return EXIT_OK if payload["pass"] else EXIT_NUMERICAL


def cmd_hypo_check(cfg: dict, out: Path, seed: int) -> int:
    _check_keys("hypo-check", cfg)
    fam = _family_from_cfg(cfg)
    rho = float(cfg.get("rho", 1.5))
    rep = family_mod.check_hypotheses(fam, rho, pairs=int(cfg.get("pairs", 200)), seed=seed)
    write_csv(
        out / "hypo_samples.csv",
        ["tau", "s", "t", "estimand_c1", "estimand_c2"],
        rep.samples,
    )
    payload = {"kind": "hypo-check", "report": rep.to_json_dict(), "pass": rep.passed}
    # Lemma-style semigroup difference bound: the fitted per-t constant
    # c(t) = t * sup_tau ||A(t)(e^{dA(tau)}-e^{dA(t)})|| must stay flat
    if cfg.get("difference_bound", True):
        rows = []
        c_per_t = []
        for t in np.geomspace(0.05 * fam.T, fam.T, 6):
            best = 0.0
            for frac in (0.1, 0.25, 0.5, 0.75, 0.9):
                tau = t * frac
                val = semigroup.semigroup_difference_bound(fam, float(tau), float(t))
                rows.append((tau, t, val, t * val))
                best = max(best, t * val)
            c_per_t.append(best)
        write_csv(out / "difference_bound.csv", ["tau", "t", "value", "t_times_value"], rows)
        payload["difference_bound"] = {
            "c_per_t": c_per_t,
            "c_max": float(max(c_per_t)),
            "stable": bool(max(c_per_t) <= 3.0 * float(np.median(c_per_t))),
        }
    if cfg.get("scan", False):
        payload["rho_scan"] = family_mod.scan_rho(fam, seed=seed)
    write_json(out / "hypo_check.json", payload, config=cfg)
    fig, ax = new_figure()
    ts = [t for t, _ in rep.inv_decay]
    vals = [v for _, v in rep.inv_decay]
    ax.loglog(ts, vals, "o-")
    ax.set_xlabel("t")
    ax.set_ylabel("||A^{-1}(t)||")
    ax.set_title(f"hypotheses: c1={rep.c1_est:.3g} c2={rep.c2_est:.3g} pass={rep.passed}")
    save_figure(fig, out / "hypo_check.png")
    return EXIT_OK if rep.passed else EXIT_NUMERICAL


def cmd_evolve(cfg: dict, out: Path, seed: int) -> int:
    _check_keys("evolve", cfg)
    fam = _family_from_cfg(cfg)
    mesh = _mesh_from_cfg(cfg, fam.T)
    method = cfg.get("method", "volterra")
    rho = float(cfg.get("rho", 1.5))
    if method == "ode":
        grid = evolution.construct_ode(fam, mesh)
    elif method == "volterra":
        grid = evolution.construct_volterra(fam, mesh, theta=float(cfg.get("theta", evolution.DEFAULT_THETA)))
    else:
        raise ConfigError(f"unknown method {method!r}")
    rep = evolution.verify_singular_bounds(grid, rho)
    write_csv(
        out / "evolve_bounds.csv",
        ["t", "tau", "weighted_AW", "weighted_AU", "norm_U"],
        rep["samples"],
    )
    cocycle = grid.cocycle_defect()
    tol = float(cfg.get("tolerances", {}).get("cocycle", 1e-6 if method == "volterra" else 1e-8))
    u_decay_ok = bool(rep["u_max_per_tau"][0] <= 1e-6 * max(rep["u_max_per_tau"].max(), 1e-300))
    payload = {
        "kind": "evolve",
        "method": method,
        "cocycle_defect": float(cocycle),
        "cocycle_pass": bool(cocycle <= tol),
        "bounds": {k: v for k, v in rep.items() if k not in ("samples", "tau", "u_max_per_tau", "inv_norm_per_tau")},
        "u_decay_to_zero": u_decay_ok,
        "pass": bool(cocycle <= tol and u_decay_ok),
    }
    if cfg.get("store_blocks", False):
        np.savez_compressed(out / "evolve_blocks.npz", mesh=mesh, **{f"{i}_{j}": U for (i, j), U in grid.blocks.items()})
    write_json(out / "evolve.json", payload, config=cfg)
    fig, ax = new_figure()
    ax.semilogx(rep["tau"], rep["u_max_per_tau"], "o-", label="max_t ||U(t,tau)||")
    ax.set_xlabel("tau")
    ax.set_yscale("log")
    ax.set_title(f"{method}: cocycle defect {cocycle:.2e}")
    ax.legend()
    save_figure(fig, out / "evolve.png")
    return EXIT_OK if payload["pass"] else EXIT_NUMERICAL


def cmd_counterexample(cfg: dict, out: Path, seed: int) -> int:
    _check_keys("counterexample", cfg)
    beta = float(cfg.get("beta", 1.0))
    t = float(cfg.get("t", 1.0))
    if "eigs" in cfg:
        eigs = np.asarray(cfg["eigs"], dtype=float)
    else:
        n = int(cfg.get("n_eigs", 1024))
        # spectrum filling (0, 1]: the maximizer 1/ln(t/tau) must be reachable
        eigs = -np.arange(1, n + 1) / n
    tg = cfg.get("tau_grid", {})
    if isinstance(tg, list):
        taus = np.asarray(tg, dtype=float)
    else:
        taus = np.geomspace(float(tg.get("lo", 1e-3)), float(tg.get("hi", 1e-1)), int(tg.get("n", 9)))
    res = evolution.counterexample_scan(eigs, beta, t, taus)
    write_csv(
        out / "counterexample.csv",
        ["tau", "sup", "argmax_eig", "lam_star", "envelope", "ratio_to_envelope"],
        [(r["tau"], r["sup"], r["argmax_eig"], r["lam_star"], r["envelope"], r["ratio_to_envelope"]) for r in res["rows"]],
    )
    growth_min = float(cfg.get("growth_min", 5.0))
    ok = bool(res["growth_first_to_last"] >= growth_min)
    payload = {"kind": "counterexample", "result": res, "growth_min": growth_min, "pass": ok}
    write_json(out / "counterexample.json", payload, config=cfg)
    fig, ax = new_figure()
    taus_sorted = [r["tau"] for r in res["rows"]]
    ax.loglog(taus_sorted, [r["sup"] for r in res["rows"]], "o-", label="(t-tau) ||A(tau)U(t,tau)||")
    ax.loglog(taus_sorted, [r["envelope"] for r in res["rows"]], "--", label="envelope (t-tau)/(e tau^b I)")
    ax.set_xlabel("tau")
    ax.legend()
    ax.set_title(f"beta={beta}: growth x{res['growth_first_to_last']:.1f}")
    save_figure(fig, out / "counterexample.png")
    return EXIT_OK if ok else EXIT_NUMERICAL


def _forcing_from_cfg(cfg: dict, mesh: np.ndarray, dim: int, alpha: float, seed: int) -> cauchy.GridFunction:
    fcfg = cfg.get("f", {"form": "constant"})
    if "csv" in fcfg:
        data = np.loadtxt(fcfg["csv"], delimiter=",", skiprows=1)
        return cauchy.GridFunction(mesh=data[:, 0], values=data[:, 1:])
    form = fcfg.get("form", "constant")
    rng = np.random.default_rng(seed)
    w = np.asarray(fcfg.get("vector", rng.standard_normal(dim)))
    if w.size != dim:
        raise ConfigError(f"forcing vector has dim {w.size}, family has {dim}")
    if form == "constant":
        fn = lambda t: w  # noqa: E731
    elif form == "t_alpha":
        fn = lambda t: t ** alpha * w  # noqa: E731
    elif form == "trig":
        om = float(fcfg.get("omega", 3.0))
        fn = lambda t: (1.0 + 0.5 * np.cos(om * t)) * w  # noqa: E731
    else:
        raise ConfigError(f"unknown forcing form {form!r}")
    return cauchy.GridFunction.from_callable(mesh, fn)


def cmd_solve_scp(cfg: dict, out: Path, seed: int) -> int:
    _check_keys("solve-scp", cfg)
    fam = _family_from_cfg(cfg)
    alpha = float(cfg.get("alpha", 0.5))
    rho = float(cfg.get("rho", 1.5))
    f_class = cfg.get("f_class", "alpha")
    mesh = _mesh_from_cfg(cfg, fam.T)
    method = cfg.get("method", "volterra")
    build = (
        (lambda m: evolution.construct_ode(fam, m))
        if method == "ode"
        else (lambda m: evolution.construct_volterra(fam, m, theta=float(cfg.get("theta", evolution.DEFAULT_THETA))))
    )
    grids = [build(mesh)]
    for _ in range(int(cfg.get("refinements", 1))):
        mesh = evolution.default_mesh(fam.T, n=2 * (mesh.size - 1), t_min_factor=mesh[0] / fam.T)
        grids.append(build(mesh))
    f = _forcing_from_cfg(cfg, grids[0].mesh, fam.dim, alpha, seed)
    rep = cauchy.verify_maxreg(fam, grids, f, alpha, rho, f_class=f_class)
    u = cauchy.solve_scp(fam, grids[0], f if np.allclose(f.mesh, grids[0].mesh) else cauchy._resample(f, grids[0].mesh))
    hol = cauchy.holder_norm(u, alpha, cauchy._class_beta(f_class, alpha))
    write_csv(
        out / "solution.csv",
        ["t"] + [f"u_{i}" for i in range(u.space_dim)],
        [(t, *u.values[i].real) for i, t in enumerate(u.mesh)],
    )
    ok = bool(rep["stable"] and not rep["vacuous"])
    write_json(out / "holder_report.json", {"kind": "holder", "report": hol.to_json_dict()}, config=cfg)
    write_json(out / "maxreg.json", {"kind": "solve-scp", "report": rep, "pass": ok, "class": f_class}, config=cfg)
    fig, ax = new_figure()
    for i in range(min(u.space_dim, 6)):
        ax.semilogx(u.mesh, u.values[:, i].real, label=f"u_{i}")
    ax.set_xlabel("t")
    ax.set_title(f"R ratios: {['%.3g' % r for r in rep['ratios']]}")
    ax.legend()
    save_figure(fig, out / "solution.png")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_wedge(cfg: dict, out: Path, seed: int) -> int:
    _check_keys("wedge", cfg)
    pcfg = {k: v for k, v in cfg.items() if k not in ("theta", "binary_field", "seed", "tolerances")}
    problem = wedge_mod.WedgeProblem.from_json_dict(pcfg)
    field = wedge_mod.solve_wedge(problem, theta=float(cfg.get("theta", 0.2)))
    resid = wedge_mod.residual_check(field)
    pb = wedge_mod.pull_back(field)
    rows = []
    for i, t in enumerate(field.t_mesh):
        for l, x in enumerate(field.x_grid):
            for j, y in enumerate(field.y_grid):
                rows.append((t, x, y, field.u[i, l, j]))
    write_csv(out / "wedge_field.csv", ["t", "x", "y", "u"], rows)
    if cfg.get("binary_field", False):
        write_tensor_bin(out / "wedge_field.bin", field.u)
    # plot-ready slices: final-time y-profiles and a y-slice time trace
    write_csv(
        out / "wedge_slice_final.csv",
        ["x", "y", "u"],
        [(x, y, field.u[-1, l, j]) for l, x in enumerate(field.x_grid) for j, y in enumerate(field.y_grid)],
    )
    mid = field.u.shape[2] // 2
    write_csv(
        out / "wedge_trace_midy.csv",
        ["t", "x", "u"],
        [(t, x, field.u[i, l, mid]) for i, t in enumerate(field.t_mesh) for l, x in enumerate(field.x_grid)],
    )
    tolcfg = cfg.get("tolerances", {})
    ok = bool(
        resid["dirichlet_err"] <= float(tolcfg.get("dirichlet", 1e-8))
        and resid["flux_err"] <= float(tolcfg.get("flux", 1e-2))
    )
    payload = {
        "kind": "wedge",
        "residuals": resid,
        "pull_back": pb,
        "regularity": field.regularity,
        "pass": ok,
    }
    write_json(out / "wedge.json", payload, config=cfg)
    fig, ax = new_figure()
    pcm = ax.pcolormesh(field.x_grid, field.y_grid, field.u[-1].T, shading="auto")
    fig.colorbar(pcm, ax=ax, label="u(T, x, y)")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"wedge solution at T={field.t_mesh[-1]:.3g}")
    save_figure(fig, out / "wedge_final.png")
    fig, ax = new_figure()
    for frac in (0, len(field.t_mesh) // 2, -1):
        ax.plot(field.y_grid, field.u[frac, 0, :], label=f"t={field.t_mesh[frac]:.3g}")
    ax.set_xlabel("y")
    ax.set_ylabel("u(t, x_0, y)")
    ax.legend()
    save_figure(fig, out / "wedge_profiles.png")
    return EXIT_OK if ok else EXIT_NUMERICAL


_THEOREM_SOURCES = {
    "evolution operator construction (fixed point)": ("evolve.json", "pass"),
    "vanishing at the origin U(t,0)=0": ("evolve.json", "u_decay_to_zero"),
    "variation of constants solver": ("maxreg.json", "pass"),
    "antiderivative identity": ("semigroup_check.json", "identity_pass"),
    "semigroup difference bound": ("hypo_check.json", ("difference_bound", "stable")),
    "maximal regularity (vanishing data)": ("maxreg_origin.json", "pass"),
    "maximal regularity (weighted data)": ("maxreg.json", "pass"),
    "power-family counterexample": ("counterexample.json", "pass"),
    "wedge problem": ("wedge.json", "pass"),
}


def cmd_report(cfg: dict, out: Path, seed: int) -> int:
    _check_keys("report", cfg)
    runs = [Path(p) for p in cfg.get("runs", [out])]
    found = {}
    for run in runs:
        if not run.is_dir():
            continue
        for p in run.rglob("*.json"):
            try:
                with p.open() as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError):
                continue
            if isinstance(doc, dict) and "kind" in doc:
                found.setdefault(p.name, doc)
    if not found:
        from sevop.errors import SevopError

        class MissingArtifacts(SevopError):
            pass

        raise MissingArtifacts(f"no run artifacts found under {', '.join(str(r) for r in runs)}")
    rows = []
    all_pass = True
    for name, (fname, key) in _THEOREM_SOURCES.items():
        doc = found.get(fname)
        if doc is None:
            rows.append((name, "not run", ""))
            continue
        val = doc
        for k in (key if isinstance(key, tuple) else (key,)):
            val = val.get(k, None) if isinstance(val, dict) else None
        status = "pass" if val else "FAIL"
        if val is None:
            status = "not run"
        elif not val:
            all_pass = False
        rows.append((name, status, fname))
    write_csv(out / "summary.csv", ["check", "status", "source"], rows)
    write_json(out / "summary.json", {"kind": "report", "rows": rows, "all_pass": all_pass}, config=cfg)
    fig, ax = new_figure(7, 0.5 + 0.4 * len(rows))
    ax.axis("off")
    colors = {"pass": "#2a2", "FAIL": "#c33", "not run": "#888"}
    for i, (name, status, _) in enumerate(rows):
        ax.text(0.02, 1 - (i + 1) / (len(rows) + 1), name, fontsize=9)
        ax.text(0.85, 1 - (i + 1) / (len(rows) + 1), status, fontsize=9, color=colors[status])
    save_figure(fig, out / "summary.png")
    return EXIT_OK if all_pass else EXIT_NUMERICAL


_COMMANDS = {
    "semigroup-check": cmd_semigroup_check,
    "hypo-check": cmd_hypo_check,
    "evolve": cmd_evolve,
    "counterexample": cmd_counterexample,
    "solve-scp": cmd_solve_scp,
    "wedge": cmd_wedge,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sevop", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", default=None, help="JSON config path (or SEVOP_CONFIG)")
    ap.add_argument("--out", default=None, help="output directory (or SEVOP_OUT; default ./sevop-out)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (or SEVOP_THREADS)")
    ap.add_argument("--seed", type=int, default=None, help="random seed (or SEVOP_SEED; default 0)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        out = Path(args.out or os.environ.get("SEVOP_OUT", "sevop-out"))
        out.mkdir(parents=True, exist_ok=True)
        seed = args.seed
        if seed is None:
            seed = int(os.environ.get("SEVOP_SEED", cfg.get("seed", 0)))
        threads = args.threads or int(os.environ.get("SEVOP_THREADS", "0"))
        if threads:
            os.environ.setdefault("OMP_NUM_THREADS", str(threads))
        code = _COMMANDS[args.command](cfg, out, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SevopError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if code != EXIT_OK:
        print("one or more asserted invariants failed; see JSON reports", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
