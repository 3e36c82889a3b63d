"""Command-line front end: simulate, categorize, measure, test and select.

Subcommands
-----------
simulate  draw one seeded dataset from a built-in generator, as CSV
bins      emit (or replay) 1+K+1 categorization schemes for columns
measure   entropy report for each requested covariate subset
null      null band and confirmability verdict per subset
grid      mutual-information grid over K-means cluster-count ladders
select    full subset ledger plus the major-factor report

Data goes to stdout or ``--out``; progress lines go to stderr.  Exit codes:
0 success, 2 data error (bad input file), 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from ceda.tabulate import CategoricalSeries, crosstab, entropy_report, mutual_information
from ceda.categorize import (
    BinningScheme,
    apply_bins,
    fuse_features,
    product_categories,
    quantile_bins,
)
from ceda.nullsim import c1_test, child_rng, null_band
from ceda.genlab import EXAMPLE_IDS, GeneratorSpec, sample
from ceda.protocol import (
    ProtocolConfig,
    build_ledger,
    ledger_to_tsv,
    mi_grid,
    select_major_factors,
)

__all__ = ["ConfigError", "DataError", "RunConfig", "ingest_csv", "main"]


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 3."""


class DataError(Exception):
    """Invalid or unreadable input data; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one run, hashable into a provenance digest."""

    input_path: str | None = None
    response: tuple = ()
    covariates: tuple = ()
    categorize: dict = field(default_factory=dict)
    max_order: int = 2
    replicates: int = 1000
    seed: int = 0
    threads: int = 1
    r_int: float = 3.0
    cell_floor: float = 1.0
    noise_features: tuple = ()
    out_format: str = "tsv"

    def __post_init__(self):
        if self.out_format not in ("tsv", "json"):
            raise ConfigError(f"unknown output format {self.out_format!r}")
        if self.max_order < 1:
            raise ConfigError("max-order must be >= 1")
        if self.replicates < 2:
            raise ConfigError("replicates must be >= 2")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        overlap = set(self.response) & set(self.covariates)
        if overlap:
            raise ConfigError(
                f"columns cannot be both response and covariate: {sorted(overlap)}"
            )

    def digest(self) -> str:
        blob = json.dumps(
            {
                "input": self.input_path,
                "response": list(self.response),
                "covariates": list(self.covariates),
                "categorize": {k: list(v) for k, v in sorted(self.categorize.items())},
                "max_order": self.max_order,
                "replicates": self.replicates,
                "seed": self.seed,
                "r_int": self.r_int,
                "cell_floor": self.cell_floor,
                "noise": list(self.noise_features),
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _parse_categorize(text: str | None) -> dict:
    """Parse "COL=quantile:10,COL2=kmeans:12,COL3=categorical" directives."""
    out: dict = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"bad categorization directive {item!r}")
        col, spec = item.split("=", 1)
        if spec == "categorical":
            out[col.strip()] = ("categorical", 0)
            continue
        if ":" not in spec:
            raise ConfigError(f"bad categorization directive {item!r}")
        method, k_text = spec.split(":", 1)
        if method not in ("quantile", "kmeans"):
            raise ConfigError(f"unknown categorization method {method!r}")
        try:
            k = int(k_text)
        except ValueError as exc:
            raise ConfigError(f"bad bin count in {item!r}") from exc
        if k < 1:
            raise ConfigError(f"bin count must be >= 1 in {item!r}")
        out[col.strip()] = (method, k)
    return out


def _load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config file must hold a JSON object")
    return obj


def build_run_config(args) -> RunConfig:
    file_cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(name, flag_value, default):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(name, default)

    categorize = dict(
        (k, tuple(v)) for k, v in file_cfg.get("categorize", {}).items()
    )
    categorize.update(_parse_categorize(getattr(args, "categorize", None)))
    response = pick("response", getattr(args, "response", None), "")
    covariates = pick("covariates", getattr(args, "covariates", None), "")
    if isinstance(response, str):
        response = tuple(c for c in response.split(",") if c)
    else:
        response = tuple(response)
    if isinstance(covariates, str):
        covariates = tuple(c for c in covariates.split(",") if c)
    else:
        covariates = tuple(covariates)
    noise = pick("noise_features", getattr(args, "noise", None), "")
    if isinstance(noise, str):
        noise = tuple(c for c in noise.split(",") if c)
    else:
        noise = tuple(noise)
    return RunConfig(
        input_path=pick("input", getattr(args, "input", None), None),
        response=response,
        covariates=covariates,
        categorize=categorize,
        max_order=int(pick("max_order", getattr(args, "max_order", None), 2)),
        replicates=int(pick("replicates", getattr(args, "replicates", None), 1000)),
        seed=int(pick("seed", getattr(args, "seed", None), 0)),
        threads=int(pick("threads", getattr(args, "threads", None), 1)),
        r_int=float(pick("r_int", getattr(args, "r_int", None), 3.0)),
        cell_floor=float(pick("cell_floor", getattr(args, "cell_floor", None), 1.0)),
        noise_features=noise,
        out_format=pick("format", getattr(args, "format", None), "tsv"),
    )


def ingest_csv(path: str, config: RunConfig) -> dict[str, np.ndarray]:
    """Read a UTF-8 header CSV into named columns with role-aware parsing.

    Columns categorized as "categorical" keep their string labels; all other
    requested columns must parse as decimals.  Errors name the offending
    data row (1-based, excluding the header) and column.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    wanted = list(config.response) + list(config.covariates)
    if not wanted:
        wanted = header
    missing = [c for c in wanted if c not in header]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    index = {c: header.index(c) for c in wanted}
    n_fields = len(header)
    columns: dict[str, list] = {c: [] for c in wanted}
    categorical = {
        c for c in wanted if config.categorize.get(c, ("", 0))[0] == "categorical"
    }
    for i, row in enumerate(rows, start=1):
        if len(row) != n_fields:
            raise DataError(
                f"{path}: row {i} has {len(row)} fields, expected {n_fields}"
            )
        for c in wanted:
            token = row[index[c]]
            if c in categorical:
                columns[c].append(token)
                continue
            try:
                columns[c].append(float(token))
            except ValueError:
                raise DataError(
                    f"{path}: row {i}, column {c!r}: cannot parse {token!r} as a number"
                ) from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return {
        c: (np.asarray(v) if c in categorical else np.asarray(v, dtype=float))
        for c, v in columns.items()
    }


def _categorize_column(name: str, values: np.ndarray, config: RunConfig) -> CategoricalSeries:
    method, k = config.categorize.get(name, ("quantile", 10))
    if method == "categorical":
        uniq, inverse = np.unique(values, return_inverse=True)
        return CategoricalSeries(
            labels=inverse.ravel(),
            cardinality=uniq.size,
            names=tuple(str(u) for u in uniq),
        )
    if method == "kmeans":
        return fuse_features(values, k, seed=config.seed, sort_centroids=True)
    try:
        scheme = quantile_bins(values, k)
    except ValueError as exc:
        raise DataError(f"column {name!r}: {exc}") from exc
    return apply_bins(values, scheme)


def _build_series(data, config: RunConfig):
    """Categorized response + covariate series from raw columns."""
    if not config.response:
        raise ConfigError("no response column named (use --response)")
    if not config.covariates:
        raise ConfigError("no covariate columns named (use --covariates)")
    if len(config.response) == 1:
        response = _categorize_column(config.response[0], data[config.response[0]], config)
    else:
        # multi-column response: K-means fusion on the stacked coordinates
        block = np.column_stack([data[c] for c in config.response])
        k = config.categorize.get(config.response[0], ("kmeans", 10))[1]
        response = fuse_features(block, k, seed=config.seed, sort_centroids=True)
    covs = {c: _categorize_column(c, data[c], config) for c in config.covariates}
    return covs, response


def _parse_subsets(text: str | None, config: RunConfig) -> list[tuple]:
    if not text:
        return [(c,) for c in config.covariates]
    subsets = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = tuple(p.strip() for p in item.split("+"))
        unknown = [p for p in parts if p not in config.covariates]
        if unknown:
            raise ConfigError(f"subset names unknown covariates {unknown}")
        subsets.append(parts)
    return subsets


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _provenance(config: RunConfig) -> dict:
    return {"config_digest": config.digest(), "seed": config.seed}


def _log(msg: str):
    print(msg, file=sys.stderr)


def cmd_simulate(args) -> int:
    config = build_run_config(args)
    spec = GeneratorSpec(example_id=args.example, n=args.n, seed=config.seed)
    data = sample(spec)
    names = list(data)
    n = len(next(iter(data.values())))
    lines = [",".join(names)]
    cols = [data[c] for c in names]
    for i in range(n):
        lines.append(
            ",".join(
                str(int(col[i])) if np.issubdtype(col.dtype, np.integer) else f"{col[i]:.17g}"
                for col in cols
            )
        )
    _emit("\n".join(lines) + "\n", args.out)
    _log(f"simulate {args.example}: {n} rows, seed {config.seed}")
    return 0


def cmd_bins(args) -> int:
    config = build_run_config(args)
    if not config.input_path:
        raise ConfigError("bins requires --input")
    data = ingest_csv(config.input_path, config)
    if args.replay:
        with open(args.replay, encoding="utf-8") as fh:
            schemes = json.load(fh)
        lines = []
        cols = list(schemes)
        lines.append(",".join(cols))
        labeled = {
            c: apply_bins(data[c], BinningScheme.from_json(json.dumps(s))).labels
            for c, s in schemes.items()
        }
        for i in range(len(next(iter(labeled.values())))):
            lines.append(",".join(str(int(labeled[c][i])) for c in cols))
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    out = dict(_provenance(config))
    targets = list(config.covariates) + list(config.response) or list(data)
    for c in targets:
        method, k = config.categorize.get(c, ("quantile", 10))
        if method != "quantile":
            continue
        out[c] = json.loads(quantile_bins(data[c], k).to_json())
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def cmd_measure(args) -> int:
    config = build_run_config(args)
    if not config.input_path:
        raise ConfigError("measure requires --input")
    data = ingest_csv(config.input_path, config)
    covs, response = _build_series(data, config)
    subsets = _parse_subsets(args.subsets, config)
    reports = []
    for subset in subsets:
        series = [covs[c] for c in subset]
        fused = series[0] if len(series) == 1 else product_categories(series)
        table = crosstab(fused, response)
        reports.append((subset, entropy_report(table)))
    if config.out_format == "json":
        payload = dict(_provenance(config))
        payload["reports"] = [
            {"subset": list(s), **json.loads(r.to_json(total=len(response)))}
            for s, r in reports
        ]
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = [f"# config {config.digest()} seed {config.seed}"]
        lines.append("subset\trows\tcols\th_y\th_y_given_a\tmi")
        for s, r in reports:
            lines.append(
                f"{'+'.join(s)}\t{r.rows}\t{r.cols}\t{r.h_y:.6f}\t"
                f"{r.h_y_given_a:.6f}\t{r.mutual_info:.6f}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_null(args) -> int:
    config = build_run_config(args)
    if not config.input_path:
        raise ConfigError("null requires --input")
    data = ingest_csv(config.input_path, config)
    covs, response = _build_series(data, config)
    subsets = _parse_subsets(args.subsets, config)
    rows = []
    for j, subset in enumerate(subsets):
        series = [covs[c] for c in subset]
        fused = series[0] if len(series) == 1 else product_categories(series)
        table = crosstab(fused, response)
        band = null_band(
            table, "mutual_information", config.replicates, child_rng(config.seed, 10, j)
        )
        verdict = c1_test(mutual_information(table), band)
        rows.append((subset, verdict))
        _log(f"null {'+'.join(subset)}: {verdict.status}")
    if config.out_format == "json":
        payload = dict(_provenance(config))
        payload["verdicts"] = [
            {
                "subset": list(s),
                "observed": v.observed,
                "status": v.status,
                "excess_sd": v.excess_sd,
                "band": v.band.to_json_dict(),
            }
            for s, v in rows
        ]
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = [f"# config {config.digest()} seed {config.seed}"]
        lines.append("subset\tobserved\tmean\tsd\tq025\tq975\tstatus\texcess_sd")
        for s, v in rows:
            b = v.band
            lines.append(
                f"{'+'.join(s)}\t{v.observed:.6f}\t{b.mean:.6f}\t{b.sd:.6f}\t"
                f"{b.q025:.6f}\t{b.q975:.6f}\t{v.status}\t{v.excess_sd:.3f}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_grid(args) -> int:
    config = build_run_config(args)
    if not config.input_path:
        raise ConfigError("grid requires --input")
    if len(config.response) != 1 or len(config.covariates) != 1:
        raise ConfigError("grid needs exactly one response and one covariate column")
    data = ingest_csv(config.input_path, config)
    try:
        y_ladder = [int(v) for v in args.y_ladder.split(",")]
        x_ladder = [int(v) for v in args.x_ladder.split(",")]
    except ValueError as exc:
        raise ConfigError("ladders must be comma-separated integers") from exc
    cells = mi_grid(
        data[config.response[0]],
        data[config.covariates[0]],
        y_ladder,
        x_ladder,
        n_replicates=config.replicates,
        seed=config.seed,
        threads=config.threads,
    )
    if config.out_format == "json":
        payload = dict(_provenance(config))
        payload["cells"] = [
            {
                "y_bins": c.y_bins,
                "x_bins": c.x_bins,
                "mi": c.report.mutual_info,
                "status": c.verdict.status,
                "band": c.band.to_json_dict(),
            }
            for c in cells
        ]
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = [f"# config {config.digest()} seed {config.seed}"]
        lines.append("y_bins\tx_bins\tmi\tq025\tq975\tstatus")
        for c in cells:
            lines.append(
                f"{c.y_bins}\t{c.x_bins}\t{c.report.mutual_info:.6f}\t"
                f"{c.band.q025:.6f}\t{c.band.q975:.6f}\t{c.verdict.status}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_select(args) -> int:
    config = build_run_config(args)
    if not config.input_path:
        raise ConfigError("select requires --input")
    data = ingest_csv(config.input_path, config)
    covs, response = _build_series(data, config)
    pcfg = ProtocolConfig(
        max_order=config.max_order,
        replicates=config.replicates,
        seed=config.seed,
        r_int=config.r_int,
        cell_floor=config.cell_floor,
        noise_features=config.noise_features,
        threads=config.threads,
    )
    _log(f"select: {len(covs)} covariates, max order {config.max_order}")
    ledger = build_ledger(covs, response, config.max_order, pcfg)
    report = select_major_factors(covs, response, pcfg)
    payload = dict(_provenance(config))
    payload["chief"] = list(report.chief_collection)
    payload["alternatives"] = [list(s) for s in report.alternative_collections]
    payload["interactions"] = [
        list(s) for s, order, _ in report.confirmed if order >= 2
    ]
    payload["confirmed"] = [
        {"subset": list(s), "order": order, "label": label}
        for s, order, label in report.confirmed
    ]
    payload["pairs"] = [
        {
            "pair": list(p.pair),
            "classification": p.classification,
            "ratio": None if not np.isfinite(p.ratio) else p.ratio,
            "excess": None if not np.isfinite(p.excess) else p.excess,
        }
        for p in report.pair_analyses
    ]
    if config.out_format == "json":
        payload["ledger_tsv"] = ledger_to_tsv(ledger)
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = [f"# config {config.digest()} seed {config.seed}"]
        lines.append(ledger_to_tsv(ledger).rstrip("\n"))
        lines.append("")
        lines.append(f"chief\t{' '.join(payload['chief']) or '-'}")
        for alt in payload["alternatives"]:
            lines.append(f"alternative\t{' '.join(alt)}")
        for item in payload["confirmed"]:
            lines.append(f"confirmed\t{'+'.join(item['subset'])}\t{item['label']}")
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--input", help="input CSV path")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--response", help="comma-separated response column(s)")
    p.add_argument("--covariates", help="comma-separated covariate columns")
    p.add_argument(
        "--categorize",
        help="per-column directives, e.g. Y=quantile:10,X1=kmeans:12,G=categorical",
    )
    p.add_argument("--noise", help="comma-separated designated noise columns")
    p.add_argument("--max-order", dest="max_order", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--r-int", dest="r_int", type=float)
    p.add_argument("--cell-floor", dest="cell_floor", type=float)
    p.add_argument("--format", choices=("tsv", "json"))
    p.add_argument("--out", help="write data here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ceda",
        description="Categorical exploratory analysis of response/covariate data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a seeded dataset from a built-in study")
    p.add_argument("--example", required=True, choices=EXAMPLE_IDS)
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bins", help="emit or replay categorization schemes")
    p.add_argument("--replay", help="JSON scheme file to apply instead of fitting")
    _add_common(p)
    p.set_defaults(func=cmd_bins)

    p = sub.add_parser("measure", help="entropy report per covariate subset")
    p.add_argument("--subsets", help="e.g. X1,X2+X3 (default: all singletons)")
    _add_common(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("null", help="null band and confirmability per subset")
    p.add_argument("--subsets", help="e.g. X1,X2+X3 (default: all singletons)")
    _add_common(p)
    p.set_defaults(func=cmd_null)

    p = sub.add_parser("grid", help="mutual-information grid over cluster ladders")
    p.add_argument("--y-ladder", dest="y_ladder", default="12,22,32,102")
    p.add_argument("--x-ladder", dest="x_ladder", default="12,22,32,102")
    _add_common(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("select", help="subset ledger and major-factor report")
    _add_common(p)
    p.set_defaults(func=cmd_select)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
