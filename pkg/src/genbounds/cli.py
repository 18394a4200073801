"""Command-line front end: bound evaluation, sweeps, certification runs, reports.

Configuration comes from a YAML file validated against the schemas below;
unknown keys are rejected.  Output rows carry the fixed columns
``bound,name,n,beta,delta,kl,value,vacuous,seed`` as CSV or JSON lines, and
every emitted file embeds its configuration and seed so reports are
reproducible.  Exit codes: 0 success, 1 certification failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys

import numpy as np
import yaml

from . import bounds as bound_ops
from . import posteriors
from .divergences import DiscreteDist, max_info_dp_bound
from .errors import ConfigurationError, GenBoundsError
from .harness import (
    BoundSpec,
    ErmAlgorithm,
    GibbsAlgorithm,
    TrialConfig,
    run_cmi_experiment,
    run_dp_prior_experiment,
    run_violation_experiment,
)
from .losses import LossModel
from .problems import FiniteProblem

CSV_HEADER = ("bound", "name", "n", "beta", "delta", "kl", "value", "vacuous", "seed")

#: Bounds whose value is an information quantity and therefore unit-converted.
_INFO_VALUED = {"max-info-dp"}

_LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# Config schema validation
# ---------------------------------------------------------------------------

_NUM = (int, float)

_MODEL_SCHEMA = {"family": str, "sigma": _NUM, "c": _NUM}

_BOUND_SCHEMA = {
    "name": str,
    "label": str,
    "n": int,
    "beta": _NUM,
    "delta": _NUM,
    "kl": _NUM,
    "empirical_risk": _NUM,
    "model": _MODEL_SCHEMA,
    "epsilon": _NUM,
    "alpha": _NUM,
    "v": _NUM,
    "mi": _NUM,
    "cmi": _NUM,
    "avg_kl": _NUM,
    "sigma": _NUM,
    "c": _NUM,
    "variant": str,
    "moment_bound": _NUM,
    "hessian_eigenvalues": list,
    "w_p": list,
    "w_q": list,
    "lam": _NUM,
    "b": int,
    "m": int,
    "delta_prime": _NUM,
    "mc_empirical_risk": _NUM,
}

_SWEEP_SCHEMA = {
    "parameter": str,
    "grid": list,
    "start": _NUM,
    "stop": _NUM,
    "points": int,
    "spacing": str,
}

_ALGORITHM_SCHEMA = {"kind": str, "beta_alg": _NUM, "tie_break": str}

_PROBLEM_SCHEMA = {"losses": list, "mu": list, "n": int}

_EXPERIMENT_SCHEMA = {
    "bound": str,
    "label": str,
    "beta": _NUM,
    "delta": _NUM,
    "trials": int,
    "seed": int,
    "epsilon": _NUM,
    "bound_offset": _NUM,
    "algorithm": _ALGORITHM_SCHEMA,
    "prior": list,
}

_OUTPUT_SCHEMA = {"unit": str, "path": str, "format": str}

_TOP_SCHEMAS = {
    "compute": {"bound": _BOUND_SCHEMA, "output": _OUTPUT_SCHEMA},
    "sweep": {"bound": _BOUND_SCHEMA, "sweep": _SWEEP_SCHEMA, "output": _OUTPUT_SCHEMA},
    "experiment": {
        "experiment": _EXPERIMENT_SCHEMA,
        "problem": _PROBLEM_SCHEMA,
        "output": _OUTPUT_SCHEMA,
    },
}


def _validate(data, schema, path: str) -> None:
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path or 'config'} must be a mapping")
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigurationError(f"unknown config field: {where}")
        expected = schema[key]
        if isinstance(expected, dict):
            _validate(value, expected, where)
        elif expected is _NUM or expected == _NUM:
            if isinstance(value, bool) or not isinstance(value, _NUM):
                raise ConfigurationError(f"{where} must be a number")
        elif not isinstance(value, expected) or isinstance(value, bool) and expected is int:
            raise ConfigurationError(f"{where} must be of type {getattr(expected, '__name__', expected)}")


def load_config(path: str, kind: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    _validate(data, _TOP_SCHEMAS[kind], "")
    return data


def _require(section: dict, key: str, context: str):
    if key not in section:
        raise ConfigurationError(f"missing required field {context}.{key}")
    return section[key]


# ---------------------------------------------------------------------------
# Bound dispatch
# ---------------------------------------------------------------------------


def _model_from(cfg: dict | None) -> LossModel:
    if cfg is None:
        return LossModel.bounded_unit()
    family = _require(cfg, "family", "bound.model")
    return LossModel(family=family, sigma=cfg.get("sigma", 0.5), c=cfg.get("c", 0.0))


def _request_from(cfg: dict) -> bound_ops.BoundRequest:
    return bound_ops.BoundRequest(
        n=_require(cfg, "n", "bound"),
        delta=_require(cfg, "delta", "bound"),
        empirical_risk=cfg.get("empirical_risk", 0.0),
        kl=cfg.get("kl", 0.0),
        beta=cfg.get("beta"),
        model=_model_from(cfg.get("model")),
    )


def _quadratic_model_from(cfg: dict) -> posteriors.QuadraticModel:
    return posteriors.QuadraticModel(
        hessian_eigenvalues=np.asarray(_require(cfg, "hessian_eigenvalues", "bound"), float),
        w_p=np.asarray(_require(cfg, "w_p", "bound"), float),
        w_q=np.asarray(_require(cfg, "w_q", "bound"), float),
        lam=_require(cfg, "lam", "bound"),
        n=_require(cfg, "n", "bound"),
        beta=_require(cfg, "beta", "bound"),
    )


def _scalar_record(value: float) -> bound_ops.BoundResult:
    return bound_ops.BoundResult(value=value, components={"value": value}, raw_value=value)


def compute_named_bound(cfg: dict) -> bound_ops.BoundResult:
    """Evaluate one named bound from a flat config mapping."""
    name = _require(cfg, "name", "bound")
    if name == "zhang":
        return bound_ops.zhang_high_prob(_request_from(cfg))
    if name == "zhang-gen":
        return bound_ops.zhang_gen_high_prob(_request_from(cfg))
    if name == "zhang-gen-expectation":
        return _scalar_record(
            bound_ops.zhang_gen_expectation(
                _require(cfg, "avg_kl", "bound"), _require(cfg, "n", "bound"), _model_from(cfg.get("model"))
            )
        )
    if name == "xu-raginsky":
        return _scalar_record(
            bound_ops.xu_raginsky(
                _require(cfg, "mi", "bound"), _require(cfg, "n", "bound"), _require(cfg, "sigma", "bound")
            )
        )
    if name == "subgamma-mi":
        return _scalar_record(
            bound_ops.subgamma_mi(
                _require(cfg, "mi", "bound"),
                _require(cfg, "n", "bound"),
                _require(cfg, "sigma", "bound"),
                cfg.get("c", 0.0),
            )
        )
    if name == "subgamma":
        return bound_ops.subgamma_pacbayes(_request_from(cfg))
    if name == "union-beta":
        return bound_ops.union_bound_beta(
            _request_from(cfg), _require(cfg, "alpha", "bound"), _require(cfg, "v", "bound")
        )
    if name == "catoni":
        return bound_ops.catoni_bound(_request_from(cfg))
    if name == "catoni-linear":
        return bound_ops.catoni_linear(_request_from(cfg))
    if name == "mcallester-linear":
        return bound_ops.mcallester_linear(_request_from(cfg))
    if name == "pac-bayes-kl":
        return bound_ops.pac_bayes_kl(_request_from(cfg))
    if name == "delta":
        return bound_ops.delta_bound(
            _request_from(cfg), _require(cfg, "variant", "bound"), _require(cfg, "moment_bound", "bound")
        )
    if name == "cmi":
        return bound_ops.cmi_pac_high_prob(_request_from(cfg))
    if name == "cmi-expectation":
        arg = cfg.get("cmi", cfg.get("avg_kl"))
        if arg is None:
            raise ConfigurationError("cmi-expectation needs a cmi or avg_kl field")
        return _scalar_record(bound_ops.cmi_expectation(arg, _require(cfg, "n", "bound")))
    if name == "fano":
        return _scalar_record(
            bound_ops.fano_identification_lb(_require(cfg, "cmi", "bound"), _require(cfg, "n", "bound"))
        )
    if name == "dp-prior":
        return bound_ops.dp_prior_high_prob(_request_from(cfg), _require(cfg, "epsilon", "bound"))
    if name == "dp-prior-gen":
        return bound_ops.dp_prior_gen_bound(_request_from(cfg), _require(cfg, "epsilon", "bound"))
    if name == "max-info-dp":
        return _scalar_record(
            max_info_dp_bound(
                _require(cfg, "epsilon", "bound"), _require(cfg, "n", "bound"), cfg.get("alpha", 0.0)
            )
        )
    if name == "occam":
        return posteriors.occam_bound(
            _quadratic_model_from(cfg),
            _require(cfg, "delta", "bound"),
            cfg.get("empirical_risk", 0.0),
        )
    if name == "pac-bayes-sgd":
        params = posteriors.PacBayesSgdParams(
            n=_require(cfg, "n", "bound"),
            beta=_require(cfg, "beta", "bound"),
            lam=_require(cfg, "lam", "bound"),
            alpha=_require(cfg, "alpha", "bound"),
            b=_require(cfg, "b", "bound"),
            c=_require(cfg, "c", "bound"),
            m=_require(cfg, "m", "bound"),
            delta=_require(cfg, "delta", "bound"),
            delta_prime=_require(cfg, "delta_prime", "bound"),
            mc_empirical_risk=_require(cfg, "mc_empirical_risk", "bound"),
            kl=cfg.get("kl", 0.0),
        )
        return posteriors.pacbayes_sgd_objective(params)
    raise ConfigurationError(f"unknown bound name: {name!r}")


# ---------------------------------------------------------------------------
# Records and emission
# ---------------------------------------------------------------------------


def _convert_units(record: dict, unit: str) -> dict:
    if unit == "nats":
        return record
    out = dict(record)
    if isinstance(out.get("kl"), float):
        out["kl"] = out["kl"] / _LN2
    if out.get("bound") in _INFO_VALUED and isinstance(out.get("value"), float):
        out["value"] = out["value"] / _LN2
    return out


def _make_record(cfg: dict, result: bound_ops.BoundResult, seed=None, **overrides) -> dict:
    record = {
        "bound": cfg.get("name", ""),
        "name": cfg.get("label", cfg.get("name", "")),
        "n": cfg.get("n", ""),
        "beta": result.beta_used if result.beta_used is not None else cfg.get("beta", ""),
        "delta": cfg.get("delta", ""),
        "kl": float(cfg["kl"]) if "kl" in cfg else "",
        "value": result.value,
        "vacuous": result.vacuous,
        "seed": seed if seed is not None else "",
        "components": dict(result.components),
    }
    record.update(overrides)
    return record


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records(
    records: list[dict], header: dict, path, fmt: str, unit: str, convert: bool = True
) -> None:
    """Emit rows with the embedded configuration header in CSV or JSON lines.

    Unit conversion happens here, exactly once; pass ``convert=False`` when
    re-emitting rows that already carry the target unit.
    """
    rows = [_convert_units(r, unit) for r in records] if convert else records
    header = dict(header, unit=unit)
    if fmt == "json-lines":
        lines = [json.dumps({"record_type": "header", **header}, sort_keys=True)]
        lines += [
            json.dumps({"record_type": "row", **row}, sort_keys=True, default=str) for row in rows
        ]
        text = "\n".join(lines) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        buf.write("# genbounds " + json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(buf)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_format_cell(row.get(col, "")) for col in CSV_HEADER])
        text = buf.getvalue()
    else:
        raise ConfigurationError(f"unknown format {fmt!r}")
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def read_records(path: str) -> tuple[dict, list[dict]]:
    """Read back an emitted file; returns (header, rows)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ConfigurationError(f"{path} is empty")
    if lines[0].startswith("{"):
        header = json.loads(lines[0])
        if header.get("record_type") != "header":
            raise ConfigurationError(f"{path} lacks a header record")
        rows = [json.loads(line) for line in lines[1:]]
        return header, rows
    if lines[0].startswith("# genbounds "):
        header = json.loads(lines[0][len("# genbounds "):])
        reader = csv.DictReader(io.StringIO("\n".join(lines[1:])))
        rows = []
        for raw in reader:
            row = dict(raw)
            for key in ("n", "beta", "delta", "kl", "value"):
                if row.get(key):
                    try:
                        number = float(row[key])
                    except ValueError:
                        continue
                    row[key] = int(number) if key == "n" and number.is_integer() else number
            rows.append(row)
        return header, rows
    raise ConfigurationError(f"{path} does not look like an emitted report")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _output_options(config: dict, args) -> tuple[str | None, str, str]:
    out_cfg = config.get("output", {})
    path = args.out or out_cfg.get("path")
    unit = args.unit or out_cfg.get("unit", "nats")
    fmt = args.format or out_cfg.get("format", "csv")
    if unit not in ("nats", "bits"):
        raise ConfigurationError("unit must be 'nats' or 'bits'")
    if fmt not in ("csv", "json-lines"):
        raise ConfigurationError("format must be 'csv' or 'json-lines'")
    return path, unit, fmt


def cmd_bound_compute(args) -> int:
    config = load_config(args.config, "compute")
    cfg = _require(config, "bound", "config")
    result = compute_named_bound(cfg)
    path, unit, fmt = _output_options(config, args)
    record = _make_record(cfg, result, seed=args.seed)
    write_records([record], {"command": "bound compute", "config": config, "seed": args.seed}, path, fmt, unit)
    return 0


_SWEEPABLE = ("beta", "n", "kl", "delta")


def _sweep_grid(sweep: dict) -> list[float]:
    if "grid" in sweep:
        return [float(g) for g in sweep["grid"]]
    for key in ("start", "stop", "points"):
        if key not in sweep:
            raise ConfigurationError("sweep needs either a grid or start/stop/points")
    spacing = sweep.get("spacing", "linear")
    if spacing == "linear":
        return list(np.linspace(sweep["start"], sweep["stop"], sweep["points"]))
    if spacing == "log":
        return list(np.geomspace(sweep["start"], sweep["stop"], sweep["points"]))
    raise ConfigurationError("spacing must be 'linear' or 'log'")


def cmd_bound_sweep(args) -> int:
    config = load_config(args.config, "sweep")
    cfg = dict(_require(config, "bound", "config"))
    sweep = _require(config, "sweep", "config")
    parameter = _require(sweep, "parameter", "sweep")
    if parameter not in _SWEEPABLE:
        raise ConfigurationError(f"sweep parameter must be one of {_SWEEPABLE}")
    grid = _sweep_grid(sweep)
    if not grid:
        raise ConfigurationError("sweep grid is empty")
    records = []
    for point in grid:
        cfg[parameter] = int(point) if parameter == "n" else float(point)
        result = compute_named_bound(cfg)
        records.append(_make_record(cfg, result, seed=args.seed, **{parameter: cfg[parameter]}))
    path, unit, fmt = _output_options(config, args)
    write_records(records, {"command": "bound sweep", "config": config, "seed": args.seed}, path, fmt, unit)
    return 0


def _problem_from(config: dict) -> FiniteProblem:
    section = _require(config, "problem", "config")
    return FiniteProblem(
        losses=np.asarray(_require(section, "losses", "problem"), float),
        mu=DiscreteDist(np.asarray(_require(section, "mu", "problem"), float)),
        n=_require(section, "n", "problem"),
    )


def _algorithm_from(cfg: dict | None):
    if cfg is None:
        return ErmAlgorithm()
    kind = _require(cfg, "kind", "experiment.algorithm")
    if kind == "erm":
        return ErmAlgorithm(tie_break=cfg.get("tie_break", "lowest"))
    if kind == "gibbs":
        return GibbsAlgorithm(beta_alg=_require(cfg, "beta_alg", "experiment.algorithm"))
    raise ConfigurationError("algorithm kind must be 'erm' or 'gibbs'")


def _trial_config(config: dict, args) -> tuple[TrialConfig, dict]:
    section = _require(config, "experiment", "config")
    problem = _problem_from(config)
    seed = args.seed if args.seed is not None else section.get("seed", 0)
    trials = args.trials if args.trials is not None else section.get("trials", 1000)
    prior = section.get("prior")
    trial_config = TrialConfig(
        seed=seed,
        trials=trials,
        problem=problem,
        algorithm=_algorithm_from(section.get("algorithm")),
        bound=BoundSpec(
            name=_require(section, "bound", "experiment"),
            params={"beta": section.get("beta")},
        ),
        delta=_require(section, "delta", "experiment"),
        prior=DiscreteDist(np.asarray(prior, float)) if prior is not None else None,
        bound_offset=section.get("bound_offset", 0.0),
    )
    return trial_config, section


def _experiment_exit(args, config, trial_config, section, report) -> int:
    path, unit, fmt = _output_options(config, args)
    record = {
        "bound": trial_config.bound.name,
        "name": section.get("label", trial_config.bound.name),
        "n": trial_config.problem.n,
        "beta": trial_config.bound.params.get("beta", ""),
        "delta": trial_config.delta,
        "kl": "",
        "value": report.clopper_pearson_upper_95,
        "vacuous": False,
        "seed": trial_config.seed,
        **{k: v for k, v in dataclasses.asdict(report).items()},
    }
    header = {"command": "experiment", "config": config, "seed": trial_config.seed}
    write_records([record], header, path, fmt, unit)
    certified = report.certified(trial_config.delta)
    status = "PASS" if certified else "FAIL"
    print(
        f"[{status}] {trial_config.bound.name}: rate={report.rate:.6f} "
        f"cp95={report.clopper_pearson_upper_95:.6f} delta={trial_config.delta}",
        file=sys.stderr,
    )
    return 0 if certified else 1


def cmd_experiment_run(args) -> int:
    config = load_config(args.config, "experiment")
    trial_config, section = _trial_config(config, args)
    report = run_violation_experiment(trial_config)
    return _experiment_exit(args, config, trial_config, section, report)


def cmd_experiment_cmi(args) -> int:
    config = load_config(args.config, "experiment")
    trial_config, section = _trial_config(config, args)
    report = run_cmi_experiment(trial_config)
    return _experiment_exit(args, config, trial_config, section, report)


def cmd_experiment_dp_prior(args) -> int:
    config = load_config(args.config, "experiment")
    trial_config, section = _trial_config(config, args)
    epsilon = section.get("epsilon")
    if epsilon is None:
        raise ConfigurationError("experiment.epsilon is required for dp-prior")
    report = run_dp_prior_experiment(trial_config, epsilon)
    return _experiment_exit(args, config, trial_config, section, report)


def _sort_key(row: dict):
    def numeric(value):
        try:
            return float(value)
        except (TypeError, ValueError):
            return math.inf
    return (str(row.get("bound", "")), numeric(row.get("n")), numeric(row.get("beta")))


def cmd_report(args) -> int:
    headers, rows = [], []
    for path in args.inputs:
        header, file_rows = read_records(path)
        headers.append(header)
        rows.extend(file_rows)
    units = {h.get("unit", "nats") for h in headers}
    if len(units) > 1:
        raise ConfigurationError(f"refusing to merge mixed units: {sorted(units)}")
    rows.sort(key=_sort_key)
    merged_header = {"command": "report", "config": {"inputs": list(args.inputs)}, "seed": ""}
    # Rows already carry their unit from first emission; only re-tag it.
    write_records(rows, merged_header, args.out, args.format or "csv", units.pop(), convert=False)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genbounds", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument("--seed", type=int, default=None, help="64-bit experiment seed")
        p.add_argument("--trials", type=int, default=None, help="number of trials")
        p.add_argument("--out", default=None, help="output path (stdout when omitted)")
        p.add_argument("--unit", choices=("nats", "bits"), default=None)
        p.add_argument("--format", choices=("csv", "json-lines"), default=None)

    bound = sub.add_parser("bound", help="evaluate closed-form bounds").add_subparsers(
        dest="subcommand", required=True
    )
    compute = bound.add_parser("compute", help="evaluate one named bound")
    add_common(compute)
    compute.set_defaults(func=cmd_bound_compute)
    sweep = bound.add_parser("sweep", help="evaluate a bound over a parameter grid")
    add_common(sweep)
    sweep.set_defaults(func=cmd_bound_sweep)

    experiment = sub.add_parser("experiment", help="run certification experiments").add_subparsers(
        dest="subcommand", required=True
    )
    for name, fn in (
        ("run", cmd_experiment_run),
        ("cmi", cmd_experiment_cmi),
        ("dp-prior", cmd_experiment_dp_prior),
    ):
        p = experiment.add_parser(name)
        add_common(p)
        p.set_defaults(func=fn)

    report = sub.add_parser("report", help="merge emitted report files")
    report.add_argument("inputs", nargs="+", help="previously emitted report files")
    report.add_argument("--out", default=None)
    report.add_argument("--format", choices=("csv", "json-lines"), default=None)
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GenBoundsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
