"""Sweep runner: JSON config in, deterministic CSV (and optional SVG) out.

Subcommands
    run       evaluate a sweep config and write a CSV
    compare   evaluate analytic values against both oracles and report
    selftest  run the built-in acceptance checks

A sweep config is a single JSON object:

    {
      "base": {"K": 2, "N": 2, "M_D": 2, "M_E": 2, "lambda_E_dB": 5.0,
               "zeta": 1.0, "R_th": 1.0, "scheme": "SS", "knowledge": "KA"},
      "sweep_axis": "lambda_D_dB",
      "axis_values": [0, 10, 20, 30],
      "variants": [{"scheme": "OS"}, {"K": 3, "knowledge": "KU"}],
      "outputs": ["sop_exact", "sop_asymptotic", "mc"],
      "trials": 1000000,
      "seed": 7
    }

dB values are converted to linear scale once at ingestion. Seed precedence:
--seed flag, then SECRECY_LAB_SEED, then the config value. Rows are computed
by a thread pool but buffered and written in config order, with every float
rendered at 17 significant digits, so output bytes depend only on (config,
seed).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
from dataclasses import dataclass, replace

from .channel import SystemConfig
from .esr import esr_asymptotic, esr_exact, esr_high_snr
from .oracles import _mc_moments, quad_cdf_ratio, quad_esr
from .sop import sop, sop_asymptotic, sop_asymptotic_perfect_backhaul

_AXES = ("lambda_D_dB",)
_OUTPUTS = ("sop_exact", "sop_asymptotic", "esr_exact", "esr_high_snr",
            "esr_asymptotic", "mc", "quad")
_VARIANT_KEYS = ("scheme", "knowledge", "K", "N", "M_D", "M_E", "zeta")
_BASE_KEYS = ("K", "N", "M_D", "M_E", "lambda_D_dB", "lambda_E_dB",
              "zeta", "R_th", "scheme", "knowledge")

# comparison gates, same numbers the acceptance checks pin
_SOP_QUAD_TOL = 1e-6
_ESR_QUAD_TOL = 1e-5
_ESR_MC_FLOOR = 0.02


class ConfigError(ValueError):
    """Schema violation; message starts with the offending field name."""


@dataclass(frozen=True)
class SweepSpec:
    base: SystemConfig
    axis_values: tuple[float, ...]
    variants: tuple[tuple[tuple[str, object], ...], ...]
    outputs: tuple[str, ...]
    trials: int
    seed: int

    def rows(self):
        """Yield (variant_id, config, axis_dB) in output order."""
        variant_maps = [dict(v) for v in self.variants] or [{}]
        for idx, overrides in enumerate(variant_maps):
            cfg = _apply_overrides(self.base, overrides)
            for db in self.axis_values:
                yield f"v{idx}", replace(cfg, lambda_D=_db_to_linear(db)), db


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _linear_to_db(lam: float) -> float:
    return 10.0 * math.log10(lam)


def _apply_overrides(base: SystemConfig, overrides: dict) -> SystemConfig:
    try:
        return replace(base, **overrides)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _require(mapping: dict, field: str, kinds, what: str):
    if field not in mapping:
        raise ConfigError(f"{field}: required field missing")
    value = mapping[field]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise ConfigError(f"{field}: expected {what} (got {value!r})")
    return value


def parse_sweep_spec(doc: dict) -> SweepSpec:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = set(doc) - {"base", "sweep_axis", "axis_values", "variants",
                          "outputs", "trials", "seed"}
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown field")

    base_doc = _require(doc, "base", dict, "an object")
    for key in base_doc:
        if key not in _BASE_KEYS:
            raise ConfigError(f"base.{key}: unknown field")
    for field in ("K", "N", "M_D", "M_E"):
        _require(base_doc, field, int, "an integer")
    _require(base_doc, "lambda_E_dB", (int, float), "a number")
    kwargs = {
        "K": base_doc["K"], "N": base_doc["N"],
        "M_D": base_doc["M_D"], "M_E": base_doc["M_E"],
        # the sweep axis supplies lambda_D per row; a base value, if given,
        # only seeds the placeholder
        "lambda_D": _db_to_linear(float(base_doc.get("lambda_D_dB", 0.0))),
        "lambda_E": _db_to_linear(float(base_doc["lambda_E_dB"])),
        "zeta": float(base_doc.get("zeta", 1.0)),
        "R_th": float(base_doc.get("R_th", 1.0)),
        "scheme": base_doc.get("scheme", "SS"),
        "knowledge": base_doc.get("knowledge", "KA"),
    }
    try:
        base = SystemConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    axis = doc.get("sweep_axis", "lambda_D_dB")
    if axis not in _AXES:
        raise ConfigError(f"sweep_axis: must be one of {_AXES} (got {axis!r})")
    values = _require(doc, "axis_values", list, "a list of numbers")
    if not values:
        raise ConfigError("axis_values: must be nonempty")
    axis_values = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"axis_values[{i}]: expected a number (got {v!r})")
        axis_values.append(float(v))
    if any(b <= a for a, b in zip(axis_values, axis_values[1:])):
        raise ConfigError("axis_values: must be strictly increasing")

    variants_doc = doc.get("variants", [])
    if not isinstance(variants_doc, list):
        raise ConfigError("variants: expected a list of objects")
    variants = []
    for i, entry in enumerate(variants_doc):
        if not isinstance(entry, dict):
            raise ConfigError(f"variants[{i}]: expected an object")
        for key, value in entry.items():
            if key not in _VARIANT_KEYS:
                raise ConfigError(f"variants[{i}].{key}: unknown override")
        overrides = dict(entry)
        if "zeta" in overrides:
            overrides["zeta"] = float(overrides["zeta"])
        _apply_overrides(base, overrides)  # validate now, not mid-sweep
        variants.append(tuple(sorted(overrides.items())))

    outputs_doc = _require(doc, "outputs", list, "a list of output names")
    if not outputs_doc:
        raise ConfigError("outputs: must be nonempty")
    for name in outputs_doc:
        if name not in _OUTPUTS:
            raise ConfigError(f"outputs: unknown output {name!r}")
    outputs = tuple(n for n in _OUTPUTS if n in outputs_doc)

    trials = doc.get("trials", 1_000_000)
    if isinstance(trials, bool) or not isinstance(trials, int) or trials <= 0:
        raise ConfigError(f"trials: expected a positive integer (got {trials!r})")
    if "mc" in outputs and trials < 10_000:
        raise ConfigError(f"trials: Monte Carlo output needs at least 10000 (got {trials})")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed: expected an unsigned 64-bit integer (got {seed!r})")

    return SweepSpec(base=base, axis_values=tuple(axis_values),
                     variants=tuple(variants), outputs=outputs,
                     trials=trials, seed=seed)


def load_sweep_spec(path: str) -> SweepSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from exc
    return parse_sweep_spec(doc)


def _columns(outputs) -> list[str]:
    cols = ["variant_id", "scheme", "knowledge", "K", "N", "M_D", "M_E",
            "zeta", "lambda_D_dB", "lambda_E_dB", "R_th"]
    for name in ("sop_exact", "sop_asymptotic", "esr_exact", "esr_high_snr",
                 "esr_asymptotic"):
        if name in outputs:
            cols.append(name)
    if "mc" in outputs:
        cols += ["mc_sop", "mc_sop_stderr", "mc_esr", "mc_esr_stderr"]
    if "quad" in outputs:
        cols += ["quad_sop", "quad_esr"]
    if "quad" in outputs and "sop_exact" in outputs:
        cols.append("sop_exact_quad_delta")
    if "quad" in outputs and "esr_exact" in outputs:
        cols.append("esr_exact_quad_delta")
    if "mc" in outputs and "sop_exact" in outputs:
        cols.append("sop_exact_mc_delta")
    if "mc" in outputs and "esr_exact" in outputs:
        cols.append("esr_exact_mc_delta")
    return cols


def _sop_asymptote(cfg: SystemConfig) -> float:
    # below the perfect-backhaul point the floor is the asymptote; at
    # zeta = 1 the outage keeps decaying and the decay form applies
    if cfg.zeta < 1.0:
        return sop_asymptotic(cfg).value
    return sop_asymptotic_perfect_backhaul(cfg).value


def _evaluate_row(variant_id: str, cfg: SystemConfig, axis_db: float,
                  spec: SweepSpec) -> dict:
    row = {
        "variant_id": variant_id, "scheme": cfg.scheme,
        "knowledge": cfg.knowledge, "K": cfg.K, "N": cfg.N,
        "M_D": cfg.M_D, "M_E": cfg.M_E, "zeta": cfg.zeta,
        "lambda_D_dB": axis_db, "lambda_E_dB": _linear_to_db(cfg.lambda_E),
        "R_th": cfg.R_th,
    }
    outputs = spec.outputs
    if "sop_exact" in outputs:
        row["sop_exact"] = sop(cfg).value
    if "sop_asymptotic" in outputs:
        row["sop_asymptotic"] = _sop_asymptote(cfg)
    if "esr_exact" in outputs:
        row["esr_exact"] = esr_exact(cfg).value
    if "esr_high_snr" in outputs:
        row["esr_high_snr"] = esr_high_snr(cfg).value
    if "esr_asymptotic" in outputs:
        row["esr_asymptotic"] = esr_asymptotic(cfg).value
    if "mc" in outputs:
        sop_est, esr_est = _mc_moments(cfg, spec.trials, spec.seed, threads=1)
        row["mc_sop"] = sop_est.mean
        row["mc_sop_stderr"] = sop_est.stderr
        row["mc_esr"] = esr_est.mean
        row["mc_esr_stderr"] = esr_est.stderr
    if "quad" in outputs:
        row["quad_sop"] = quad_cdf_ratio(cfg.rho(), cfg)
        row["quad_esr"] = quad_esr(cfg)
    if "quad" in outputs and "sop_exact" in outputs:
        row["sop_exact_quad_delta"] = row["sop_exact"] - row["quad_sop"]
    if "quad" in outputs and "esr_exact" in outputs:
        row["esr_exact_quad_delta"] = row["esr_exact"] - row["quad_esr"]
    if "mc" in outputs and "sop_exact" in outputs:
        row["sop_exact_mc_delta"] = row["sop_exact"] - row["mc_sop"]
    if "mc" in outputs and "esr_exact" in outputs:
        row["esr_exact_mc_delta"] = row["esr_exact"] - row["mc_esr"]
    return row


def _format_cell(value) -> str:
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ArithmeticError(f"non-finite value {value!r} in output row")
        return format(value, ".17g")
    return str(value)


def evaluate_sweep(spec: SweepSpec, threads: int) -> list[dict]:
    """All rows, config order, computed by a worker pool."""
    jobs = list(spec.rows())
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(_evaluate_row, vid, cfg, db, spec)
                   for vid, cfg, db in jobs]
        rows = []
        for (vid, cfg, _db), fut in zip(jobs, futures):
            try:
                rows.append(fut.result())
            except ArithmeticError as exc:
                raise ArithmeticError(
                    f"row {vid} ({cfg.scheme}/{cfg.knowledge} K={cfg.K} N={cfg.N} "
                    f"M_D={cfg.M_D} M_E={cfg.M_E} zeta={cfg.zeta:g} "
                    f"lambda_D={cfg.lambda_D:g}): {exc}") from exc
    return rows


def write_csv(rows: list[dict], outputs, out_path: str) -> None:
    cols = _columns(outputs)
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in cols))
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _tolerance_failures(rows: list[dict], spec: SweepSpec) -> list[str]:
    failures = []
    for row in rows:
        where = f"{row['variant_id']} lambda_D_dB={row['lambda_D_dB']:g}"
        if "sop_exact_quad_delta" in row:
            if abs(row["sop_exact_quad_delta"]) > _SOP_QUAD_TOL:
                failures.append(f"{where}: |sop_exact - quad_sop| = "
                                f"{abs(row['sop_exact_quad_delta']):.3e} > {_SOP_QUAD_TOL:g}")
        if "esr_exact_quad_delta" in row:
            if abs(row["esr_exact_quad_delta"]) > _ESR_QUAD_TOL:
                failures.append(f"{where}: |esr_exact - quad_esr| = "
                                f"{abs(row['esr_exact_quad_delta']):.3e} > {_ESR_QUAD_TOL:g}")
        if "sop_exact_mc_delta" in row:
            tol = max(3.0 * row["mc_sop_stderr"], 9.0 / spec.trials)
            if abs(row["sop_exact_mc_delta"]) > tol:
                failures.append(f"{where}: |sop_exact - mc_sop| = "
                                f"{abs(row['sop_exact_mc_delta']):.3e} > {tol:.3e}")
        if "esr_exact_mc_delta" in row:
            tol = max(3.0 * row["mc_esr_stderr"], _ESR_MC_FLOOR)
            if abs(row["esr_exact_mc_delta"]) > tol:
                failures.append(f"{where}: |esr_exact - mc_esr| = "
                                f"{abs(row['esr_exact_mc_delta']):.3e} > {tol:.3e}")
    return failures


def _svg_for_variant(variant_id: str, rows: list[dict], outputs) -> str:
    """Polyline chart of each requested value column against the sweep axis."""
    width, height, margin = 640, 420, 50
    series_cols = [c for c in _columns(outputs)
                   if c not in ("variant_id", "scheme", "knowledge", "K", "N",
                                "M_D", "M_E", "zeta", "lambda_D_dB",
                                "lambda_E_dB", "R_th")
                   and not c.endswith("_stderr") and not c.endswith("_delta")]
    xs = [row["lambda_D_dB"] for row in rows]
    x_lo, x_hi = min(xs), max(xs)
    x_span = (x_hi - x_lo) or 1.0
    values = [row[c] for row in rows for c in series_cols]
    y_lo, y_hi = min(values), max(values)
    y_span = (y_hi - y_lo) or 1.0

    def px(x):
        return margin + (x - x_lo) / x_span * (width - 2 * margin)

    def py(y):
        return height - margin - (y - y_lo) / y_span * (height - 2 * margin)

    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#17becf", "#7f7f7f", "#bcbd22")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12">lambda_D_dB</text>',
        f'<text x="{margin}" y="{margin - 16}" font-size="12">{variant_id}'
        f' (y range {y_lo:.3g} to {y_hi:.3g})</text>',
    ]
    for i, col in enumerate(series_cols):
        color = palette[i % len(palette)]
        points = " ".join(f"{px(row['lambda_D_dB']):.2f},{py(row[col]):.2f}"
                          for row in rows)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{points}"/>')
        parts.append(f'<text x="{width - margin + 4}" '
                     f'y="{margin + 14 * i}" font-size="11" '
                     f'fill="{color}">{col}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svgs(rows: list[dict], outputs, svg_dir: str) -> list[str]:
    os.makedirs(svg_dir, exist_ok=True)
    written = []
    by_variant: dict[str, list[dict]] = {}
    for row in rows:
        by_variant.setdefault(row["variant_id"], []).append(row)
    for variant_id, variant_rows in by_variant.items():
        path = os.path.join(svg_dir, f"{variant_id}.svg")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_svg_for_variant(variant_id, variant_rows, outputs))
        written.append(path)
    return written


def _resolve_seed(spec: SweepSpec, flag_seed) -> SweepSpec:
    if flag_seed is not None:
        return replace(spec, seed=flag_seed)
    env = os.environ.get("SECRECY_LAB_SEED")
    if env is not None:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"seed: SECRECY_LAB_SEED must be an integer "
                              f"(got {env!r})") from exc
        if not 0 <= value < 2 ** 64:
            raise ConfigError(f"seed: SECRECY_LAB_SEED out of unsigned 64-bit "
                              f"range (got {env!r})")
        return replace(spec, seed=value)
    return spec


def _cmd_run(args) -> int:
    if args.selftest:
        return _cmd_selftest(args)
    if not args.config or not args.out:
        print("run: --config and --out are required (or use --selftest)",
              file=sys.stderr)
        return 2
    spec = _resolve_seed(load_sweep_spec(args.config), args.seed)
    rows = evaluate_sweep(spec, args.threads)
    write_csv(rows, spec.outputs, args.out)
    if args.svg:
        for path in write_svgs(rows, spec.outputs, args.svg):
            print(f"wrote {path}")
    print(f"wrote {args.out} ({len(rows)} rows)")
    failures = _tolerance_failures(rows, spec)
    for line in failures:
        print(f"tolerance: {line}", file=sys.stderr)
    if failures and args.strict:
        return 1
    return 0


def _diversity_report(spec: SweepSpec, rows: list[dict]) -> list[str]:
    """Measured outage decay per decade next to the design order K*M_D."""
    lines = []
    if len(spec.axis_values) < 2:
        return lines
    db_lo, db_hi = spec.axis_values[-2], spec.axis_values[-1]
    by_variant: dict[str, dict[float, dict]] = {}
    for row in rows:
        by_variant.setdefault(row["variant_id"], {})[row["lambda_D_dB"]] = row
    for variant_id, at_db in by_variant.items():
        lo, hi = at_db[db_lo], at_db[db_hi]
        if lo["zeta"] != 1.0 or "sop_exact" not in lo:
            continue
        if lo["sop_exact"] <= 0.0 or hi["sop_exact"] <= 0.0:
            continue
        decades = (db_hi - db_lo) / 10.0
        slope = math.log10(lo["sop_exact"] / hi["sop_exact"]) / decades
        order = lo["K"] * lo["M_D"]
        lines.append(f"diversity {variant_id}: measured slope {slope:.4f} "
                     f"per decade, K*M_D = {order}")
    return lines


def _cmd_compare(args) -> int:
    spec = _resolve_seed(load_sweep_spec(args.config), args.seed)
    # comparison needs the analytic values and both oracles regardless of
    # what the config asked to tabulate
    needed = {"sop_exact", "esr_exact", "mc", "quad"}
    spec = replace(spec, outputs=tuple(n for n in _OUTPUTS
                                       if n in (set(spec.outputs) | needed)))
    rows = evaluate_sweep(spec, args.threads)
    failures = _tolerance_failures(rows, spec)
    max_sop_quad = max(abs(r["sop_exact_quad_delta"]) for r in rows)
    max_esr_quad = max(abs(r["esr_exact_quad_delta"]) for r in rows)
    max_sop_z = max(abs(r["sop_exact_mc_delta"])
                    / max(r["mc_sop_stderr"], 3.0 / spec.trials) for r in rows)
    max_esr_z = max(abs(r["esr_exact_mc_delta"])
                    / max(r["mc_esr_stderr"], _ESR_MC_FLOOR / 3.0) for r in rows)
    for row in rows:
        status = "ok"
        where = f"{row['variant_id']} lambda_D_dB={row['lambda_D_dB']:g}"
        if any(line.startswith(where) for line in failures):
            status = "FAIL"
        print(f"{where}: sop_exact={row['sop_exact']:.6e} "
              f"|d_quad|={abs(row['sop_exact_quad_delta']):.2e} "
              f"|d_mc|={abs(row['sop_exact_mc_delta']):.2e} "
              f"esr_exact={row['esr_exact']:.6f} "
              f"|d_quad|={abs(row['esr_exact_quad_delta']):.2e} "
              f"|d_mc|={abs(row['esr_exact_mc_delta']):.2e} {status}")
    for line in _diversity_report(spec, rows):
        print(line)
    for line in failures:
        print(f"tolerance: {line}", file=sys.stderr)
    summary = {
        "rows": len(rows),
        "failures": len(failures),
        "max_sop_quad_delta": max_sop_quad,
        "max_esr_quad_delta": max_esr_quad,
        "max_sop_mc_z": max_sop_z,
        "max_esr_mc_z": max_esr_z,
        "passed": not failures,
    }
    print("SUMMARY " + json.dumps(summary, sort_keys=True))
    return 0 if not failures else 1


def _cmd_selftest(args) -> int:
    from .acceptance import run_all

    results = run_all(quick=getattr(args, "quick", False))
    for result in results:
        print(result.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return 0 if passed == len(results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secrecy-lab",
        description="Secrecy outage and ergodic secrecy rate sweeps with "
                    "oracle cross-checks")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="evaluate a sweep config and write CSV")
    run_p.add_argument("--config", help="path to JSON sweep config")
    run_p.add_argument("--out", help="path of the CSV to write")
    run_p.add_argument("--strict", action="store_true",
                       help="exit nonzero if any oracle tolerance fails")
    run_p.add_argument("--threads", type=int,
                       default=min(8, os.cpu_count() or 1))
    run_p.add_argument("--seed", type=int, default=None,
                       help="override config and SECRECY_LAB_SEED")
    run_p.add_argument("--svg", metavar="DIR",
                       help="also write one SVG line chart per variant")
    run_p.add_argument("--selftest", action="store_true",
                       help="run the acceptance checks instead of a sweep")
    run_p.add_argument("--quick", action="store_true",
                       help="with --selftest: reduced grids and trials")
    run_p.set_defaults(func=_cmd_run)

    cmp_p = sub.add_parser("compare",
                           help="analytic vs quadrature and Monte Carlo report")
    cmp_p.add_argument("--config", required=True)
    cmp_p.add_argument("--threads", type=int,
                       default=min(8, os.cpu_count() or 1))
    cmp_p.add_argument("--seed", type=int, default=None)
    cmp_p.set_defaults(func=_cmd_compare)

    self_p = sub.add_parser("selftest", help="run the acceptance checks")
    self_p.add_argument("--quick", action="store_true",
                        help="reduced grids and trials")
    self_p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
