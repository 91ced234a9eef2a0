"""End-to-end experiment pipeline.

Reads a signature file, selects APs, builds the error-regression datasets,
evaluates the configured model lineup fold-out-of-fit, optionally runs a
transfer evaluation against a second signature file, and writes the summary
and plot-data artifacts.  Two runs with the same configuration and seed
produce byte-identical files.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import re
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .dae import GROUPINGS, build_dae_dataset, build_holdout_dataset, make_fold_plan, write_dae_dataset
from .errors import ConfigError, DaeposError
from .evaluation import EvaluationReport, evaluate_model, write_ecdf_csv, write_pairs_csv, write_summary_csv
from .regressors import ModelSpec, fit
from .signatures import DEFAULT_FILL_DBM, build_registry, parse_signatures

# The default lineup: every family with and without the appended location
# estimate, using the parameter choices reported for each family.
DEFAULT_LINEUP: tuple[tuple[str, dict, str], ...] = (
    ("LR", {"family": "linear"}, "plain"),
    ("LR-xy", {"family": "linear"}, "xy"),
    ("RF", {"family": "forest", "trees": 100}, "plain"),
    ("RF-xy", {"family": "forest", "trees": 300}, "xy"),
    ("kNN", {"family": "knn", "k": 4}, "plain"),
    ("kNN-xy", {"family": "knn", "k": 4}, "xy"),
    ("NN", {"family": "network", "layers": [128, 128, 128]}, "plain"),
    ("NN-xy", {"family": "network", "layers": [256, 512, 256]}, "xy"),
)

VARIANT_CHOICES = ("plain", "xy", "both")


@dataclass(frozen=True)
class ModelEntry:
    label: str
    spec: ModelSpec
    variant: str  # which dataset variant this model consumes


@dataclass
class PipelineConfig:
    input: str
    out_dir: str
    fmt: str = "canonical"
    ap_count: int = 35
    fill: float = DEFAULT_FILL_DBM
    k: int = 4
    folds: int = 5
    grouping: str = "by_signature"
    variant: str = "both"
    seed: int = 0
    weighted: bool = False
    models: list[ModelEntry] = field(default_factory=list)  # empty = default lineup
    holdout_input: str | None = None
    holdout_models: tuple[str, ...] = ("RF-xy",)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.input:
            raise ConfigError("an input signature file is required")
        if not self.out_dir:
            raise ConfigError("an output directory is required")
        if self.ap_count < 1:
            raise ConfigError(f"ap_count must be >= 1, got {self.ap_count}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.folds < 2:
            raise ConfigError(f"at least 2 folds are required, got {self.folds}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.grouping not in GROUPINGS:
            raise ConfigError(f"unknown grouping {self.grouping!r}; expected one of {GROUPINGS}")
        if self.variant not in VARIANT_CHOICES:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANT_CHOICES}")

    def active_models(self) -> list[ModelEntry]:
        entries = self.models or default_lineup(self.seed)
        if self.variant == "both":
            return list(entries)
        return [e for e in entries if e.variant == self.variant]


def default_lineup(seed: int) -> list[ModelEntry]:
    return [
        ModelEntry(label=label, spec=ModelSpec(seed=seed, **params), variant=variant)
        for label, params, variant in DEFAULT_LINEUP
    ]


def _entry_to_dict(entry: ModelEntry) -> dict:
    spec = dataclasses.asdict(entry.spec)
    spec["layers"] = list(spec["layers"])
    return {"label": entry.label, "variant": entry.variant, "spec": spec}


def _entry_from_dict(d: dict, default_seed: int) -> ModelEntry:
    d = dict(d)
    params = dict(d.get("spec") or {k: v for k, v in d.items() if k not in ("label", "variant")})
    params.setdefault("seed", default_seed)
    if "layers" in params:
        params["layers"] = tuple(params["layers"])
    if "family" not in params:
        raise ConfigError(f"model entry {d!r} lacks a family")
    spec = ModelSpec(**params)
    variant = d.get("variant", "plain")
    if variant not in ("plain", "xy"):
        raise ConfigError(f"model entry variant must be plain or xy, got {variant!r}")
    label = d.get("label") or spec.default_label() + ("-xy" if variant == "xy" else "")
    return ModelEntry(label=label, spec=spec, variant=variant)


def config_to_dict(config: PipelineConfig) -> dict:
    d = dataclasses.asdict(config)
    d["models"] = [_entry_to_dict(e) for e in config.active_models()]
    d["holdout_models"] = list(config.holdout_models)
    return d


def config_hash(config: PipelineConfig) -> str:
    hashed = config_to_dict(config)
    hashed.pop("out_dir")  # where outputs land is not part of the experiment identity
    canonical = json.dumps(hashed, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def load_config(path: str | None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from an optional JSON file plus flag overrides.

    Flags win over file values; ``models`` entries come from the file (or
    the default lineup when absent).
    """
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must contain a JSON object")
    merged = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    seed = int(merged.get("seed", 0))
    if "models" in merged and merged["models"] is not None:
        merged["models"] = [_entry_from_dict(m, seed) for m in merged["models"]]
    if "holdout_models" in merged and merged["holdout_models"] is not None:
        merged["holdout_models"] = tuple(merged["holdout_models"])
    try:
        return PipelineConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


@contextmanager
def _stage(name: str):
    try:
        yield
    except DaeposError as exc:
        exc.args = (f"stage {name}: {exc}",)
        raise


def _slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_")


def run_pipeline(config: PipelineConfig, log=print) -> list[EvaluationReport]:
    """Execute every stage and write artifacts into ``config.out_dir``."""
    config.validate()
    provenance = f"config_hash={config_hash(config)} seed={config.seed}"
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = config.active_models()
    if not entries:
        raise ConfigError(f"no models selected for variant {config.variant!r}")

    with _stage("ingest"):
        signatures = parse_signatures(config.input, config.fmt)
        log(f"ingest: {len(signatures)} signatures from {config.input}")

    with _stage("registry"):
        registry = build_registry(signatures, config.ap_count)
        log(f"registry: retained {len(registry)} APs")

    with _stage("folds"):
        plan = make_fold_plan(
            len(signatures),
            config.folds,
            config.seed,
            config.grouping,
            point_ids=[s.point_id for s in signatures],
        )

    datasets = {}
    with _stage("dae-dataset"):
        for variant in sorted({e.variant for e in entries}):
            dataset = build_dae_dataset(
                signatures, registry, plan,
                k=config.k, variant=variant, fill=config.fill, weighted=config.weighted,
            )
            datasets[variant] = dataset
            path = out / f"dae_{variant}.csv"
            write_dae_dataset(dataset, path, comment=provenance)
            log(f"dae-dataset: {len(dataset)} records ({variant}) -> {path}")

    reports: list[EvaluationReport] = []
    with _stage("evaluate"):
        for entry in entries:
            report = evaluate_model(entry.spec, datasets[entry.variant], protocol="cross_fit", label=entry.label)
            reports.append(report)
            slug = _slug(entry.label)
            write_pairs_csv(report, out / f"{slug}_pairs.csv", comment=provenance)
            write_ecdf_csv(report, out / f"{slug}_ecdf.csv", comment=provenance)
            pearson = "undefined" if report.pearson is None else f"{report.pearson:.3f}"
            log(f"evaluate: {entry.label}: MAE={report.mae:.3f} MSE={report.mse:.3f} pearson={pearson}")

    if config.holdout_input:
        with _stage("holdout"):
            external = parse_signatures(config.holdout_input, config.fmt)
            log(f"holdout: {len(external)} external signatures from {config.holdout_input}")
            by_label = {e.label: e for e in entries}
            for label in config.holdout_models:
                entry = by_label.get(label)
                if entry is None:
                    raise ConfigError(f"holdout model {label!r} is not in the active lineup")
                external_ds = build_holdout_dataset(
                    external, signatures, registry,
                    k=config.k, variant=entry.variant, fill=config.fill, weighted=config.weighted,
                )
                fitted = fit(entry.spec, datasets[entry.variant])
                report = evaluate_model(
                    fitted, datasets[entry.variant], protocol="holdout", holdout=external_ds, label="user"
                )
                report = dataclasses.replace(
                    report, parameters=f"{entry.label} ({entry.spec.short_params()})"
                )
                reports.append(report)
                slug = _slug(f"user_{entry.label}")
                write_pairs_csv(report, out / f"{slug}_pairs.csv", comment=provenance)
                write_ecdf_csv(report, out / f"{slug}_ecdf.csv", comment=provenance)
                log(f"holdout: {entry.label}: MAE={report.mae:.3f} MSE={report.mse:.3f}")

    with _stage("report"):
        write_summary_csv(reports, out / "report.csv", comment=provenance)
        _write_metrics_csv(reports, out / "metrics.csv", comment=provenance)
        log(f"report: {len(reports)} rows -> {out / 'report.csv'}")

    return reports


def _write_metrics_csv(reports, path, comment):
    import csv

    with open(path, "w", encoding="utf-8", newline="") as f:
        if comment:
            f.write(f"# {comment}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["algorithm", "parameters", "protocol", "MAE", "MSE", "pearson", "n_pairs"])
        for rep in reports:
            pearson = "" if rep.pearson is None else repr(rep.pearson)
            writer.writerow(
                [rep.label, rep.parameters, rep.protocol, repr(rep.mae), repr(rep.mse), pearson, len(rep.pairs)]
            )
