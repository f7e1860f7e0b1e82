"""Command-line interface.

Subcommands:
  bound     evaluate an analytic tail-bound curve over a threshold grid
  validate  check bound dominance or a coupling identity, exact or Monte Carlo
  test      compute a statistic from data files and its p-value bound
  simulate  dump raw statistic samples

Exit codes: 0 success/validated, 1 violation found, 2 usage or input error,
3 resource guard exceeded.  Every stochastic command requires --seed and
reruns with the same seed produce byte-identical CSV regardless of
--threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dips import (
    DenseDipsArray,
    graph_mean,
    graph_overlap_statistic,
    graph_tail_bound,
    mww_statistic,
    mww_tail_bound,
    parse_edge_list,
    random_dips_array,
    random_graph_edges,
)
from .errors import ResourceLimitError
from .families import (
    StatisticFamily,
    make_dips_family,
    make_generic_family,
    make_graph_family,
    make_mww_family,
    make_pattern_family,
    make_ustat_family,
)
from .harness import (
    MC_CHUNK,
    _chunk_sizes,
    child_seed,
    dominance_report,
    dips_linearity_residual,
    empirical_tail,
    pattern_size_bias_identity,
    ustat_linearity_residual,
)
from .linalg import SquareMatrix, nu1, sigma1_lower_bound, smallest_singular_value
from .patterns import Pattern, pattern_bound_params, pattern_bound_sharp_params
from .report import BoundCurve, fmt
from .ustat import ContinuousDistribution, FiniteDistribution, load_kernel

_IDENTITY_TOL = {"ustat": 1e-10, "dips": 1e-9, "pattern": 1e-9}


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"expected a comma-separated number list, got {text!r}") from None


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="output format (default csv)")
    p.add_argument("--plot", action="store_true", default=None,
                   help="also render a PNG figure next to --out")
    p.add_argument("--config", help="JSON file with default flag values")


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tmax", type=float, help="top of the threshold grid")
    p.add_argument("--grid", type=int, help="number of grid points (default 40)")
    p.add_argument("--thresholds", help="explicit comma-separated threshold list")


def _add_mc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, help="Monte Carlo sample count (default 100000)")
    p.add_argument("--seed", type=int, help="root seed (required for stochastic runs)")
    p.add_argument("--confidence", type=float, help="CI level (default 0.99)")
    p.add_argument("--threads", type=int,
                   help="worker threads (default: CONCENTRA_THREADS or 1)")


def _add_family_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, help="sample/permutation size")
    p.add_argument("--d", type=int, help="kernel arity (ustat)")
    p.add_argument("--b", type=float, help="sup bound of the kernel/array entries")
    p.add_argument("--n1", type=int, help="first group size (mww)")
    p.add_argument("--n2", type=int, help="second group size (mww)")
    p.add_argument("--m", type=int, help="pattern length (pattern)")
    p.add_argument("--kernel", help="kernel name or JSON table path (ustat)")
    p.add_argument("--atoms", help="comma-separated atom values (ustat)")
    p.add_argument("--probs", help="comma-separated atom probabilities (ustat)")
    p.add_argument("--dist", help="continuous distribution, e.g. uniform:-1,1 (ustat)")
    p.add_argument("--array", help="dense coefficient tensor JSON path (dips)")
    p.add_argument("--array-seed", type=int,
                   help="seed for a random dense array (dips; default 0)")
    p.add_argument("--edges1", help="edge list file for the first graph")
    p.add_argument("--edges2", help="edge list file for the second graph")
    p.add_argument("--m1", type=int, help="random edge count for graph 1")
    p.add_argument("--m2", type=int, help="random edge count for graph 2")
    p.add_argument("--graph-seed", type=int,
                   help="seed for random graphs (default 0)")
    p.add_argument("--tau1", help="first pattern, 1-based, e.g. '1 3 2'")
    p.add_argument("--tau2", help="second pattern, 1-based")
    p.add_argument("--direction", type=int, help="size-bias direction, 1 or 2")
    p.add_argument("--variant", choices=("printed", "sharp"),
                   help="pattern bound constants (default printed)")
    p.add_argument("--side", choices=("upper", "lower"),
                   help="which tail to validate (default upper)")


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError("config file must hold a JSON object")
    for key, value in config.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) is None:
            setattr(args, attr, value)


def _opt(args, name, default=None):
    value = getattr(args, name, None)
    return default if value is None else value


def _threads(args) -> int:
    value = _opt(args, "threads")
    if value is None:
        value = os.environ.get("CONCENTRA_THREADS", "1")
    threads = int(value)
    if threads < 1:
        raise ValueError(f"--threads must be >= 1, got {threads}")
    return threads


def _require_seed(args) -> int:
    seed = _opt(args, "seed")
    if seed is None:
        raise ValueError("--seed is required for stochastic runs")
    return int(seed)


def _resolve_grid(args, default_scale: float) -> np.ndarray:
    explicit = _opt(args, "thresholds")
    if explicit:
        grid = np.asarray(_float_list(explicit), dtype=float)
        if grid.size == 0 or (np.diff(grid) <= 0).any() or (grid < 0).any():
            raise ValueError("--thresholds must be strictly increasing and nonnegative")
        return grid
    tmax = _opt(args, "tmax", default_scale)
    count = _opt(args, "grid", 40)
    if tmax <= 0:
        raise ValueError("--tmax must be positive")
    if count < 2:
        raise ValueError("--grid must be at least 2")
    return np.linspace(0.0, float(tmax), int(count))


def _write_text(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _figure_path(out: str) -> str:
    return str(Path(out).with_suffix(".png"))


def _maybe_plot_report(args, report) -> None:
    if _opt(args, "plot", False):
        if not _opt(args, "out"):
            raise ValueError("--plot needs --out to anchor the figure path")
        from .figures import render_tail_report

        render_tail_report(report, _figure_path(args.out))


def _echo_constants(constants: dict) -> None:
    for key in sorted(constants):
        value = constants[key]
        if isinstance(value, float):
            value = fmt(value)
        print(f"{key} = {value}")


# ---------------------------------------------------------------------------
# family construction from flags
# ---------------------------------------------------------------------------

def _parse_distribution(args):
    spec = _opt(args, "dist")
    if spec:
        name, _, rest = spec.partition(":")
        params = tuple(_float_list(rest)) if rest else ()
        if name == "uniform":
            if len(params) != 2:
                raise ValueError("uniform distribution needs two bounds, e.g. uniform:-1,1")
            return ContinuousDistribution("uniform", params)
        if name == "normal":
            if len(params) != 2:
                raise ValueError("normal distribution needs mean,sd, e.g. normal:0,1")
            return ContinuousDistribution("normal", params)
        raise ValueError(f"unknown distribution {spec!r}")
    atoms = _opt(args, "atoms")
    if atoms:
        atom_vals = _float_list(atoms)
        probs = _opt(args, "probs")
        if probs:
            return FiniteDistribution(atom_vals, _float_list(probs))
        return FiniteDistribution.uniform(atom_vals)
    return FiniteDistribution.rademacher()


def _dips_array_from_args(args):
    path = _opt(args, "array")
    if path:
        with open(path) as fh:
            spec = json.load(fh)
        values = np.asarray(spec["values"], dtype=float)
        if "n" in spec:
            n = int(spec["n"])
            values = values.reshape((n, n, n, n))
        return DenseDipsArray(values, sup_bound=spec.get("b"))
    n = _opt(args, "n")
    if n is None:
        raise ValueError("--n is required for a random dense array")
    return random_dips_array(int(n), _opt(args, "b", 1.0), _opt(args, "array_seed", 0))


def _graph_edges_from_args(args):
    e1_path, e2_path = _opt(args, "edges1"), _opt(args, "edges2")
    n = _opt(args, "n")
    if e1_path or e2_path:
        if not (e1_path and e2_path):
            raise ValueError("provide both --edges1 and --edges2")
        edges1, n1 = parse_edge_list(Path(e1_path).read_text(), n)
        edges2, n2 = parse_edge_list(Path(e2_path).read_text(), n)
        size = n if n is not None else max(n1, n2)
        return edges1, edges2, int(size)
    if n is None or _opt(args, "m1") is None or _opt(args, "m2") is None:
        raise ValueError("graph family needs --edges1/--edges2 or --n with --m1/--m2")
    gseed = _opt(args, "graph_seed", 0)
    edges1 = random_graph_edges(int(n), int(args.m1), child_seed(gseed, 1))
    edges2 = random_graph_edges(int(n), int(args.m2), child_seed(gseed, 2))
    return edges1, edges2, int(n)


def _patterns_from_args(args) -> tuple[Pattern, Pattern]:
    tau1, tau2 = _opt(args, "tau1"), _opt(args, "tau2")
    if not (tau1 and tau2):
        raise ValueError("pattern family needs --tau1 and --tau2")
    p1, p2 = Pattern.from_text(tau1), Pattern.from_text(tau2)
    if p1.m != p2.m:
        raise ValueError("--tau1 and --tau2 must have the same length")
    return p1, p2


def _build_family(args) -> StatisticFamily:
    family = args.family
    side = _opt(args, "side", "upper")
    if family == "ustat":
        if _opt(args, "n") is None:
            raise ValueError("--n is required for the ustat family")
        kernel = load_kernel(_opt(args, "kernel", "mean-pair"))
        dist = _parse_distribution(args)
        return make_ustat_family(kernel, dist, int(args.n), side=side)
    if family == "dips":
        array = _dips_array_from_args(args)
        return make_dips_family(array, b=_opt(args, "b"), side=side)
    if family == "mww":
        if _opt(args, "n1") is None or _opt(args, "n2") is None:
            raise ValueError("--n1 and --n2 are required for the mww family")
        return make_mww_family(int(args.n1), int(args.n2), side=side)
    if family == "graph":
        edges1, edges2, n = _graph_edges_from_args(args)
        return make_graph_family(edges1, edges2, n, b=_opt(args, "b", 2.0), side=side)
    if family == "pattern":
        if _opt(args, "n") is None:
            raise ValueError("--n is required for the pattern family")
        if side != "upper":
            raise ValueError("the size-bias bound covers the upper tail only")
        pat1, pat2 = _patterns_from_args(args)
        return make_pattern_family(int(args.n), pat1, pat2,
                                   variant=_opt(args, "variant", "printed"))
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# bound command
# ---------------------------------------------------------------------------

def _bound_curve(args) -> BoundCurve:
    family = args.family
    if family == "ustat":
        if _opt(args, "d") is None:
            raise ValueError("--d is required for the ustat bound")
        from .ustat import gamma_d, kappa_d, ustat_tail_bound

        d = int(args.d)
        b = _opt(args, "b", 1.0)
        constants = {"family": "ustat", "d": d, "b": b,
                     "gamma_d": gamma_d(d), "kappa_d": kappa_d(d)}
        scale = 10.0 * b * gamma_d(d) / kappa_d(d) ** 0.25
        grid = _resolve_grid(args, scale)
        return BoundCurve(grid, {"bound": [ustat_tail_bound(t, b, d) for t in grid]},
                          constants)
    if family == "dips":
        from .dips import dips_tail_bound, eta_bn, lambda_dips, phi_bn

        n = int(_require_flag(args, "n"))
        b = _opt(args, "b", 1.0)
        lam = lambda_dips(n)
        constants = {"family": "dips", "n": n, "b": b,
                     "eta_bn": eta_bn(b, n), "phi_bn": phi_bn(b, n),
                     "nu1": nu1(lam), "sigma1_lower_bound": sigma1_lower_bound(lam)}
        grid = _resolve_grid(args, 5.0 * phi_bn(b, n) ** 0.5)
        return BoundCurve(grid, {"bound": [dips_tail_bound(t, b, n) for t in grid]},
                          constants)
    if family == "mww":
        from .dips import eta_bn, lambda_dips, phi_bn

        n1, n2 = int(_require_flag(args, "n1")), int(_require_flag(args, "n2"))
        n = n1 + n2
        lam = lambda_dips(n)
        constants = {"family": "mww", "n1": n1, "n2": n2, "n": n, "b": 0.5,
                     "eta_bn": eta_bn(0.5, n), "phi_bn": phi_bn(0.5, n),
                     "nu1": nu1(lam), "sigma1_lower_bound": sigma1_lower_bound(lam)}
        grid = _resolve_grid(args, 5.0 * phi_bn(0.5, n) ** 0.5)
        return BoundCurve(grid, {"bound": [mww_tail_bound(t, n) for t in grid]},
                          constants)
    if family == "graph":
        from .dips import eta_bn, lambda_dips, phi_bn

        n = int(_require_flag(args, "n"))
        b = _opt(args, "b", 2.0)
        lam = lambda_dips(n)
        constants = {"family": "graph", "n": n, "b": b,
                     "eta_bn": eta_bn(b, n), "phi_bn": phi_bn(b, n),
                     "nu1": nu1(lam), "sigma1_lower_bound": sigma1_lower_bound(lam)}
        grid = _resolve_grid(args, 5.0 * phi_bn(b, n) ** 0.5)
        return BoundCurve(grid, {"bound": [graph_tail_bound(t, n, b) for t in grid]},
                          constants)
    if family == "pattern":
        from .bounds import size_bias_tail_bound

        m = int(_require_flag(args, "m"))
        n = int(_require_flag(args, "n"))
        printed = pattern_bound_params(n, m)
        constants = {"family": "pattern", "m": m, "n": n,
                     "K1": printed.K1, "K2": printed.K2}
        columns = {}
        grid = _resolve_grid(args, 5.0 * (printed.K1 / 2.0) ** 0.5)
        columns["bound"] = [
            size_bias_tail_bound(np.array([t, t]), printed) for t in grid
        ]
        if _opt(args, "tau1") and _opt(args, "tau2"):
            pat1, pat2 = _patterns_from_args(args)
            sharp = pattern_bound_sharp_params(n, pat1, pat2)
            constants.update({"K1_sharp": sharp.K1, "K2_sharp": sharp.K2})
            columns["bound_sharp"] = [
                size_bias_tail_bound(np.array([t, t]), sharp) for t in grid
            ]
        return BoundCurve(grid, columns, constants)
    if family == "generic":
        K = _opt(args, "K")
        if K is None:
            raise ValueError("--K is required for the generic bound")
        lam_path = _opt(args, "lambda_file")
        nu1_value = _opt(args, "nu1")
        constants = {"family": "generic", "K": float(K)}
        if lam_path:
            with open(lam_path) as fh:
                mat = SquareMatrix(np.asarray(json.load(fh), dtype=float))
            nu1_value = nu1(mat)
            constants.update({
                "sigma1": smallest_singular_value(mat),
                "sigma1_lower_bound": sigma1_lower_bound(mat),
                "dim": mat.dim,
            })
        if nu1_value is None:
            raise ValueError("generic bound needs --nu1 or --lambda-file")
        constants["nu1"] = float(nu1_value)
        fam = make_generic_family(float(K), float(nu1_value))
        grid = _resolve_grid(args, fam.default_scale)
        return BoundCurve(grid, {"bound": [fam.bound_fn(t) for t in grid]}, constants)
    raise ValueError(f"unknown family {family!r}")


def _require_flag(args, name):
    value = _opt(args, name)
    if value is None:
        raise ValueError(f"--{name.replace('_', '-')} is required")
    return value


def cmd_bound(args) -> int:
    curve = _bound_curve(args)
    out = _opt(args, "out")
    _write_text(curve.serialize(_opt(args, "format", "csv")), out)
    if out:
        _echo_constants(curve.constants)
    if _opt(args, "plot", False):
        if not out:
            raise ValueError("--plot needs --out to anchor the figure path")
        from .figures import render_bound_curve

        render_bound_curve(curve, _figure_path(out))
    return 0


# ---------------------------------------------------------------------------
# validate command
# ---------------------------------------------------------------------------

def _identity_report(args):
    family = args.family
    if family == "ustat":
        if _opt(args, "n") is None:
            raise ValueError("--n is required")
        kernel = load_kernel(_opt(args, "kernel", "mean-pair"))
        dist = _parse_distribution(args)
        if not isinstance(dist, FiniteDistribution):
            raise ValueError("identity checks need a finite-support distribution")
        return ustat_linearity_residual(kernel, dist, int(args.n))
    if family == "dips":
        return dips_linearity_residual(_dips_array_from_args(args))
    if family == "pattern":
        if _opt(args, "n") is None:
            raise ValueError("--n is required")
        pat1, pat2 = _patterns_from_args(args)
        return pattern_size_bias_identity(
            int(args.n), pat1, pat2, _opt(args, "direction", 1)
        )
    raise ValueError("identity checks support the ustat, dips, and pattern families")


def cmd_validate(args) -> int:
    started = time.perf_counter()
    if _opt(args, "identity", False):
        report = _identity_report(args)
        tol = _opt(args, "identity_tol", _IDENTITY_TOL[args.family])
        payload = report.to_json_dict()
        payload["tolerance"] = tol
        residual = max(
            report.max_residual,
            float(report.metadata.get("mean_residual", 0.0)),
        )
        payload["passed"] = residual <= tol
        payload["metadata"]["wall_time_s"] = time.perf_counter() - started
        _write_text(json.dumps(payload, indent=2) + "\n", _opt(args, "out"))
        print(f"identity residual {report.max_residual:.3e} "
              f"({'<=' if payload['passed'] else '>'} tolerance {tol:g})")
        return 0 if payload["passed"] else 1

    family = _build_family(args)
    grid = _resolve_grid(args, family.default_scale)
    metadata = dict(family.constants)
    if _opt(args, "exact", False):
        if family.exact_fragment is None:
            raise ValueError(f"exact enumeration is not available for {family.name}")
        fragment = family.exact_fragment(grid)
    else:
        seed = _require_seed(args)
        samples = int(_opt(args, "samples", 100_000))
        confidence = float(_opt(args, "confidence", 0.99))
        fragment = empirical_tail(
            family.sample, grid, samples, confidence, seed, threads=_threads(args)
        )
        metadata.update({"seed": seed, "confidence": confidence})
    report = dominance_report(family.bound_fn, fragment, metadata=metadata)
    report.metadata["wall_time_s"] = time.perf_counter() - started
    _write_text(report.serialize(_opt(args, "format", "csv")), _opt(args, "out"))
    _maybe_plot_report(args, report)
    n_viol = len(report.violations)
    print(f"{family.name}: {report.method} tail over {grid.size} thresholds, "
          f"{n_viol} violation{'s' if n_viol != 1 else ''}")
    return 1 if n_viol else 0


# ---------------------------------------------------------------------------
# test command
# ---------------------------------------------------------------------------

def _read_mww_csv(path: str):
    x, y = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = [tok.strip() for tok in stripped.split(",")]
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'group,value'")
        if lineno == 1 and parts[0].lower() == "group":
            continue
        group = parts[0].lower()
        try:
            value = float(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: value {parts[1]!r} is not a number") from None
        if group == "x":
            x.append(value)
        elif group == "y":
            y.append(value)
        else:
            raise ValueError(f"line {lineno}: group must be 'x' or 'y', got {group!r}")
    if not x or not y:
        raise ValueError("need at least one observation in each group")
    return np.asarray(x), np.asarray(y)


def _p_value_block(args, family_builder, observed_w1: float) -> dict:
    """Reference p-value for the observed statistic, exact or Monte Carlo."""
    side = "upper" if observed_w1 >= 0 else "lower"
    family = family_builder(side)
    threshold = abs(observed_w1)
    block: dict = {}
    if _opt(args, "exact", False):
        grid = np.array([threshold]) if threshold > 0 else np.array([0.0])
        fragment = family.exact_fragment(grid)
        block["p_exact"] = float(fragment.tail[0])
        block["p_method"] = "exact"
    elif _opt(args, "samples") is not None:
        seed = _require_seed(args)
        samples = int(args.samples)
        confidence = float(_opt(args, "confidence", 0.99))
        grid = np.array([threshold]) if threshold > 0 else np.array([0.0])
        fragment = empirical_tail(family.sample, grid, samples, confidence, seed,
                                  threads=_threads(args))
        block.update({
            "p_estimate": float(fragment.tail[0]),
            "p_ci_low": float(fragment.ci_low[0]),
            "p_ci_high": float(fragment.ci_high[0]),
            "p_samples": samples,
            "p_seed": seed,
            "p_method": "monte-carlo",
        })
    return block


def _serialize_keyvalue(payload: dict, format: str) -> str:
    if format == "json":
        return json.dumps(payload, indent=2) + "\n"
    lines = ["key,value"]
    for key, value in payload.items():
        if isinstance(value, float):
            value = fmt(value)
        lines.append(f"{key},{value}")
    return "\n".join(lines) + "\n"


def cmd_test(args) -> int:
    if args.family == "mww":
        x, y = _read_mww_csv(_require_flag(args, "data"))
        n1, n2 = x.size, y.size
        n = n1 + n2
        v_mww = mww_statistic(x, y)
        v1 = v_mww - n1 * n2 / 2.0
        w1 = v1 / n**1.5
        payload = {
            "family": "mww", "n1": n1, "n2": n2,
            "v_mww": v_mww, "v1": v1, "w1": w1,
            "bound_one_sided": mww_tail_bound(abs(w1), n),
        }
        payload["bound_two_sided"] = min(1.0, 2.0 * payload["bound_one_sided"])
        payload.update(_p_value_block(
            args, lambda side: make_mww_family(n1, n2, side=side), w1
        ))
    elif args.family == "graph":
        edges1, edges2, n = _graph_edges_from_args(args)
        observed = graph_overlap_statistic(edges1, edges2, np.arange(n), n)
        mean = graph_mean(edges1, edges2, n)
        w1 = (observed - mean) / n**1.5
        b = _opt(args, "b", 2.0)
        payload = {
            "family": "graph", "n": n,
            "edges1": int(np.asarray(edges1).shape[0]),
            "edges2": int(np.asarray(edges2).shape[0]),
            "overlap": observed, "mean_overlap": mean, "w1": w1,
            "bound_one_sided": graph_tail_bound(abs(w1), n, b),
        }
        payload["bound_two_sided"] = min(1.0, 2.0 * payload["bound_one_sided"])
        payload.update(_p_value_block(
            args, lambda side: make_graph_family(edges1, edges2, n, b=b, side=side), w1
        ))
    else:
        raise ValueError(f"test supports mww and graph, got {args.family!r}")
    _write_text(_serialize_keyvalue(payload, _opt(args, "format", "csv")),
                _opt(args, "out"))
    return 0


# ---------------------------------------------------------------------------
# simulate command
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    family = _build_family(args)
    if family.sample is None:
        raise ValueError(f"{family.name} has no sampler")
    seed = _require_seed(args)
    n_samples = int(_opt(args, "samples", 10_000))
    if n_samples < 1:
        raise ValueError("--samples must be positive")
    sizes = _chunk_sizes(n_samples, MC_CHUNK)
    values = np.concatenate([
        np.asarray(family.sample(child_seed(seed, c), size), dtype=float)
        for c, size in enumerate(sizes)
    ])
    fmt_ = _opt(args, "format", "csv")
    if fmt_ == "json":
        payload = {
            "metadata": {"version": __version__, "seed": seed,
                         "samples": n_samples, **family.constants},
            "values": [float(v) for v in values],
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        lines = [f"# version={__version__}", f"# seed={seed}", f"# samples={n_samples}"]
        lines += [f"# {k}={fmt(v) if isinstance(v, float) else v}"
                  for k, v in sorted(family.constants.items())
                  if isinstance(v, (str, int, float, bool))]
        lines.append("draw,value")
        lines += [f"{i},{fmt(v)}" for i, v in enumerate(values)]
        text = "\n".join(lines) + "\n"
    _write_text(text, _opt(args, "out"))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="concentra",
        description="Concentration tail bounds for coupled statistics, "
                    "with exact and Monte Carlo validation.",
    )
    parser.add_argument("--version", action="version", version=f"concentra {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser("bound", help="evaluate an analytic bound curve")
    p_bound.add_argument("family",
                         choices=("ustat", "dips", "mww", "graph", "pattern", "generic"))
    _add_output_flags(p_bound)
    _add_grid_flags(p_bound)
    _add_family_flags(p_bound)
    p_bound.add_argument("--K", type=float, help="pathwise coupling bound (generic)")
    p_bound.add_argument("--nu1", type=float, help="1/sigma_1 (generic)")
    p_bound.add_argument("--lambda-file", help="JSON matrix to derive nu1 (generic)")
    p_bound.set_defaults(handler=cmd_bound)

    p_val = sub.add_parser("validate", help="dominance and identity checks")
    p_val.add_argument("family", choices=("ustat", "dips", "mww", "graph", "pattern"))
    _add_output_flags(p_val)
    _add_grid_flags(p_val)
    _add_mc_flags(p_val)
    _add_family_flags(p_val)
    p_val.add_argument("--exact", action="store_true", default=None,
                       help="use exact enumeration instead of Monte Carlo")
    p_val.add_argument("--identity", action="store_true", default=None,
                       help="check the coupling identity instead of dominance")
    p_val.add_argument("--identity-tol", type=float,
                       help="residual tolerance for --identity")
    p_val.set_defaults(handler=cmd_validate)

    p_test = sub.add_parser("test", help="statistic and p-value bound from data")
    p_test.add_argument("family", choices=("mww", "graph"))
    _add_output_flags(p_test)
    _add_mc_flags(p_test)
    _add_family_flags(p_test)
    p_test.add_argument("--data", help="two-column CSV 'group,value' (mww)")
    p_test.add_argument("--exact", action="store_true", default=None,
                        help="exact reference p-value instead of Monte Carlo")
    p_test.set_defaults(handler=cmd_test)

    p_sim = sub.add_parser("simulate", help="dump raw statistic samples")
    p_sim.add_argument("family", choices=("ustat", "dips", "mww", "graph", "pattern"))
    _add_output_flags(p_sim)
    _add_mc_flags(p_sim)
    _add_family_flags(p_sim)
    p_sim.set_defaults(handler=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config(args)
        return args.handler(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
