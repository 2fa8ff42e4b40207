"""Config files, spectrum files, result CSVs and matrix files."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

import numpy as np
import yaml

from .errors import ConfigError
from .simulation import (
    GAUSSIAN,
    PRIOR_SPECTRA,
    STUDENT_T,
    TARGET_IDENTITY,
    TARGET_TRUE_PRECISION,
    THREE_BLOCK,
    DistributionSpec,
    ExperimentConfig,
    TargetSpec,
)
from .spectral import SpectrumSpec

# Named spectra accepted wherever a spectrum file would be.
BUILTIN_SPECTRA = {
    "identity": SpectrumSpec.identity(),
    "threeblock": THREE_BLOCK,
    **PRIOR_SPECTRA,
}

RESULT_FIELDS = (
    "experiment",
    "p",
    "n",
    "ratio",
    "distribution",
    "estimator_id",
    "mean_loss",
    "prial_percent",
    "mean_alpha",
    "mean_beta",
    "replications",
    "seed",
    "status",
)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    p: int
    n: int
    ratio: float
    distribution: str
    estimator_id: str
    mean_loss: float
    prial_percent: float
    mean_alpha: float
    mean_beta: float
    replications: int
    seed: int
    status: str = "ok"


def parse_spectrum(obj) -> SpectrumSpec:
    """Parse a spectrum from a list of {weight, eigenvalue} mappings."""
    if not isinstance(obj, list) or not obj:
        raise ConfigError("spectrum must be a non-empty list of {weight, eigenvalue} pairs")
    atoms = []
    for index, entry in enumerate(obj):
        if not isinstance(entry, dict) or set(entry) != {"weight", "eigenvalue"}:
            raise ConfigError(
                f"spectrum entry {index}: expected keys 'weight' and 'eigenvalue', got {entry!r}"
            )
        try:
            atoms.append((float(entry["weight"]), float(entry["eigenvalue"])))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"spectrum entry {index}: non-numeric value ({exc})") from exc
    try:
        return SpectrumSpec(tuple(atoms))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_spectrum(source: str) -> SpectrumSpec:
    """Resolve a builtin spectrum name or read a spectrum file (YAML/JSON)."""
    if source in BUILTIN_SPECTRA:
        return BUILTIN_SPECTRA[source]
    try:
        with open(source, "r", encoding="utf-8") as handle:
            payload = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(
            f"unknown spectrum {source!r}: not a builtin name "
            f"({', '.join(sorted(BUILTIN_SPECTRA))}) and not a readable file ({exc})"
        ) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: invalid YAML/JSON ({exc})") from exc
    return parse_spectrum(payload)


def _parse_target(obj) -> TargetSpec:
    if obj == TARGET_IDENTITY:
        return TargetSpec.identity_over_p()
    if obj == TARGET_TRUE_PRECISION:
        return TargetSpec.true_precision()
    if isinstance(obj, str):
        if obj in BUILTIN_SPECTRA:
            return TargetSpec.from_cov_spectrum(obj, BUILTIN_SPECTRA[obj])
        raise ConfigError(
            f"unknown target {obj!r}: expected 'identity_over_p', 'true_precision', "
            "a builtin spectrum name, or a mapping with name/cov_spectrum"
        )
    if isinstance(obj, dict):
        missing = {"name", "cov_spectrum"} - set(obj)
        if missing:
            raise ConfigError(f"target mapping is missing keys: {sorted(missing)}")
        return TargetSpec.from_cov_spectrum(str(obj["name"]), parse_spectrum(obj["cov_spectrum"]))
    raise ConfigError(f"cannot parse target entry {obj!r}")


def _parse_distribution(obj) -> DistributionSpec:
    if obj is None:
        return DistributionSpec(GAUSSIAN)
    if isinstance(obj, str):
        obj = {"kind": obj}
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"distribution must be a mapping with a 'kind' key, got {obj!r}")
    kind = obj["kind"]
    try:
        if kind == GAUSSIAN:
            return DistributionSpec(GAUSSIAN)
        if kind == STUDENT_T:
            return DistributionSpec(
                STUDENT_T,
                degrees_of_freedom=float(obj["df"]) if "df" in obj else None,
                allow_low_df=bool(obj.get("allow_low_df", False)),
            )
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid distribution {obj!r}: {exc}") from exc
    raise ConfigError(f"unknown distribution kind {kind!r}")


def parse_experiment_config(
    payload: dict, default_name: str = "custom", seed_override: int | None = None
) -> ExperimentConfig:
    if not isinstance(payload, dict):
        raise ConfigError("experiment config must be a mapping of named fields")
    required = {"spectrum", "ratio", "p_grid", "replications", "estimators"}
    missing = required - set(payload)
    if missing:
        raise ConfigError(f"experiment config is missing fields: {sorted(missing)}")
    seed = seed_override if seed_override is not None else payload.get("seed")
    if seed is None:
        raise ConfigError("config provides no seed; pass --seed")
    try:
        return ExperimentConfig(
            name=str(payload.get("name", default_name)),
            spectrum=parse_spectrum(payload["spectrum"])
            if isinstance(payload["spectrum"], list)
            else load_spectrum(str(payload["spectrum"])),
            targets=tuple(_parse_target(t) for t in payload.get("targets", [TARGET_IDENTITY])),
            ratio=float(payload["ratio"]),
            p_grid=tuple(int(p) for p in payload["p_grid"]),
            distribution=_parse_distribution(payload.get("distribution")),
            replications=int(payload["replications"]),
            seed=int(seed),
            estimators=tuple(str(e) for e in payload["estimators"]),
            clamp=bool(payload.get("clamp", False)),
            center=bool(payload.get("center", False)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid experiment config: {exc}") from exc


def load_experiment_config(path: str, seed_override: int | None = None) -> ExperimentConfig:
    """Read an experiment config file (YAML with named fields)."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: invalid YAML{where}: {exc}") from exc
    return parse_experiment_config(payload, default_name=path, seed_override=seed_override)


def _format_value(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def rows_from_reports(config, reports) -> list[ResultRow]:
    """Flatten PrialReports into one ResultRow per (p, estimator)."""
    rows = []
    for report in reports:
        for entry in report.summaries:
            status = entry.status if entry.status == "ok" else f"skipped: {entry.reason}"
            rows.append(
                ResultRow(
                    experiment=config.name,
                    p=report.p,
                    n=report.n,
                    ratio=report.ratio,
                    distribution=config.distribution.label,
                    estimator_id=entry.estimator_id,
                    mean_loss=entry.mean_loss,
                    prial_percent=entry.prial_percent,
                    mean_alpha=entry.mean_alpha,
                    mean_beta=entry.mean_beta,
                    replications=entry.replications,
                    seed=config.seed,
                    status=status,
                )
            )
    return rows


def write_results(path: str, rows: list[ResultRow]) -> None:
    """Write result rows as CSV; floats carry 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RESULT_FIELDS)
        for row in rows:
            writer.writerow([_format_value(getattr(row, name)) for name in RESULT_FIELDS])


def read_results(path: str) -> list[ResultRow]:
    """Load a result CSV back into typed rows (lossless float round-trip)."""
    converters = {f.name: f.type for f in fields(ResultRow)}
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != RESULT_FIELDS:
            raise ConfigError(f"{path}: unexpected result header {reader.fieldnames!r}")
        for record in reader:
            kwargs = {}
            for name in RESULT_FIELDS:
                raw = record[name]
                kind = converters[name]
                if kind == "int":
                    kwargs[name] = int(raw)
                elif kind == "float":
                    kwargs[name] = float(raw)
                else:
                    kwargs[name] = raw
            rows.append(ResultRow(**kwargs))
    return rows


def load_matrix(path: str) -> np.ndarray:
    """Read a rectangular numeric CSV matrix with per-line diagnostics."""
    rows = []
    width = None
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                stripped = line.strip()
                if not stripped:
                    continue
                cells = stripped.split(",")
                if width is None:
                    width = len(cells)
                elif len(cells) != width:
                    raise ConfigError(
                        f"{path}: line {lineno} has {len(cells)} cells, expected {width}"
                    )
                try:
                    rows.append([float(cell) for cell in cells])
                except ValueError as exc:
                    raise ConfigError(f"{path}: line {lineno}: non-numeric cell ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read matrix {path!r}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path}: empty matrix file")
    return np.array(rows, dtype=float)
