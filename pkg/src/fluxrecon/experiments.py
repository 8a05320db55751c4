"""Scenario configs, deterministic file IO and the experiment runners.

All outputs are written atomically (temp file + rename) with floats at
17 significant digits and sorted JSON keys, so identical inputs yield
byte-identical files. Wall-clock timings are confined to the "timings"
key of metrics.json; everything else is reproducible byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError
from .families import make_boundary_data, make_reaction
from .fields import BoundaryTrace
from .forward import ObservedData, synthesize_observation
from .geometry import DomainKind, DomainSpec, boundary_nodes
from .heatkernel import KernelConfig
from .recon import (ReconstructionConfig, ReconstructionResult, evaluate_curve,
                    reconstruct)
from .suites import (difference_residual_study, mms_spatial_errors,
                     mms_temporal_errors, run_suite)

SCHEMA_VERSION = 1
OUTPUT_ENV_VAR = "FLUXRECON_OUT"

_RECON_KEYS = {"k_modes", "extension", "diff_halfwidth", "bins", "monotone",
               "q_lo", "q_hi", "compare_extensions", "kernel"}
_KERNEL_KEYS = {"k_max", "tail_tol", "image_count", "crossover_time"}


@dataclass(frozen=True)
class ScenarioConfig:
    """One synthesize-then-reconstruct experiment, JSON round-trippable."""

    domain_kind: str = "interval"
    lengths: tuple[float, ...] = (1.0,)
    final_time: float = 1.0
    fine_n: int = 512
    fine_nt: int = 2048
    recon_n: int = 128
    recon_nt: int = 256
    phi: dict = field(default_factory=lambda: {"family": "ramp", "profile": "const"})
    reaction: dict = field(default_factory=lambda: {"family": "linear", "coeff": 1.0})
    noise_level: float = 0.0
    seed: int = 0
    reconstruction: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        if self.final_time <= 0:
            raise ConfigurationError(f"final_time must be positive, got {self.final_time}")
        if self.fine_nt % self.recon_nt != 0 or self.fine_nt < 2 * self.recon_nt:
            raise ConfigurationError(
                "synthesis time grid must refine the reconstruction grid by an "
                f"integer factor >= 2, got {self.fine_nt} vs {self.recon_nt}")
        if self.fine_n % self.recon_n != 0 or self.fine_n < 2 * self.recon_n:
            raise ConfigurationError(
                "synthesis space grid must refine the reconstruction grid by an "
                f"integer factor >= 2, got {self.fine_n} vs {self.recon_n}")
        unknown = set(self.reconstruction) - _RECON_KEYS
        if unknown:
            raise ConfigurationError(f"unknown reconstruction keys {sorted(unknown)}")
        kern = self.reconstruction.get("kernel", {})
        unknown = set(kern) - _KERNEL_KEYS
        if unknown:
            raise ConfigurationError(f"unknown kernel keys {sorted(unknown)}")

    def domain(self) -> DomainSpec:
        try:
            kind = DomainKind(self.domain_kind)
        except ValueError:
            raise ConfigurationError(f"unknown domain kind {self.domain_kind!r}") from None
        return DomainSpec(kind, tuple(float(v) for v in self.lengths))

    def build_phi(self):
        return make_boundary_data(self.phi, self.domain(), self.final_time)

    def build_reaction(self):
        return make_reaction(self.reaction)

    def recon_config(self) -> ReconstructionConfig:
        opts = dict(self.reconstruction)
        kernel = KernelConfig(**opts.pop("kernel")) if "kernel" in opts else KernelConfig()
        return ReconstructionConfig(grid_n=self.recon_n, kernel=kernel, **opts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lengths"] = list(self.lengths)
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("scenario config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown scenario keys {sorted(unknown)}")
        vals = dict(raw)
        if "lengths" in vals:
            vals["lengths"] = tuple(float(v) for v in vals["lengths"])
        try:
            return cls(**vals)
        except TypeError as exc:
            raise ConfigurationError(f"bad scenario config: {exc}") from None


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"scenario file {path} is not valid JSON: {exc}") from None
    return ScenarioConfig.from_dict(raw)


# -- deterministic writers ----------------------------------------------


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def output_dir(explicit: str | None) -> Path:
    base = explicit or os.environ.get(OUTPUT_ENV_VAR) or "fluxrecon_out"
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_observation(obs: ObservedData, scenario: ScenarioConfig, outdir: Path
                      ) -> tuple[Path, Path]:
    dim = obs.domain.dim
    coord_cols = ["x", "y"][:dim]
    buf = io.StringIO()
    buf.write(f"# fluxrecon-observation schema={SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node_id", *coord_cols, "t", "value"])
    trace = obs.flux
    for b in range(trace.nodes.count):
        coords = [_fmt(c) for c in trace.nodes.nodes[b]]
        for j, t in enumerate(trace.times):
            writer.writerow([b, *coords, _fmt(t), _fmt(trace.values[j, b])])
    csv_path = outdir / "observation.csv"
    _atomic_write(csv_path, buf.getvalue())

    meta = {
        "schema": SCHEMA_VERSION,
        "kind": "observation",
        "config": scenario.to_dict(),
        "f_label": obs.f_label,
        "noise_level": obs.noise_level,
        "seed": obs.seed,
        "node_count": trace.nodes.count,
        "time_count": len(trace.times),
        "flux_scale": float(np.max(np.abs(trace.values))),
    }
    meta_path = outdir / "observation_meta.json"
    _atomic_write(meta_path, _json_text(meta))
    return csv_path, meta_path


def _expected_nodes(scenario: ScenarioConfig):
    dom = scenario.domain()
    if dom.kind is DomainKind.INTERVAL:
        return boundary_nodes(dom)
    return boundary_nodes(dom, m=scenario.recon_n // 2)


def load_observation(csv_path: str | Path) -> tuple[ObservedData, ScenarioConfig]:
    """Rebuild an observation from observation.csv + its sibling meta file."""
    csv_path = Path(csv_path)
    meta_path = csv_path.with_name(csv_path.stem + "_meta.json")
    if not csv_path.exists():
        raise InputError(f"observation file not found: {csv_path}")
    if not meta_path.exists():
        raise InputError(f"observation metadata not found: {meta_path}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"metadata {meta_path} is not valid JSON: {exc}") from None
    if meta.get("schema") != SCHEMA_VERSION:
        raise InputError(f"unsupported schema {meta.get('schema')!r} in {meta_path}")
    scenario = ScenarioConfig.from_dict(meta.get("config", {}))
    dom = scenario.domain()
    coord_cols = ["x", "y"][:dom.dim]

    lines = [ln for ln in csv_path.read_text().splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    expected_header = ["node_id", *coord_cols, "t", "value"]
    if header != expected_header:
        raise InputError(f"bad observation header {header}, expected {expected_header}")
    rows = []
    for ln, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(expected_header):
            raise InputError(f"malformed observation row {ln}: {row}")
        try:
            rows.append((int(row[0]), *(float(v) for v in row[1:])))
        except ValueError as exc:
            raise InputError(f"malformed observation row {ln}: {exc}") from None
    if not rows:
        raise InputError("observation file holds no samples")

    nodes = _expected_nodes(scenario)
    times = np.array(sorted({r[-2] for r in rows}))
    index = {t: j for j, t in enumerate(times)}
    values = np.full((len(times), nodes.count), np.nan)
    for r in rows:
        b = r[0]
        if not (0 <= b < nodes.count):
            raise InputError(f"node_id {b} out of range (0..{nodes.count - 1})")
        coords = np.array(r[1:1 + dom.dim])
        if np.max(np.abs(coords - nodes.nodes[b])) > 1e-9:
            raise InputError(f"node {b} coordinates {coords} do not match the "
                             f"expected boundary node {nodes.nodes[b]}")
        values[index[r[-2]], b] = r[-1]
    if np.any(~np.isfinite(values)):
        raise InputError("observation table does not cover all (node, time) pairs")
    if len(times) != scenario.recon_nt + 1:
        raise InputError(f"observation has {len(times)} time samples, "
                         f"scenario expects {scenario.recon_nt + 1}")
    flux = BoundaryTrace(nodes=nodes, times=times, values=values)
    obs = ObservedData(domain=dom, phi=scenario.build_phi(), flux=flux,
                       noise_level=float(meta.get("noise_level", 0.0)),
                       seed=int(meta.get("seed", 0)),
                       f_label=meta.get("f_label"),
                       meta={"fine_n": scenario.fine_n, "fine_nt": scenario.fine_nt,
                             "sub_nt": scenario.recon_nt})
    return obs, scenario


def write_curve(result: ReconstructionResult, scenario: ScenarioConfig,
                outdir: Path) -> tuple[Path, Path]:
    curve = result.curve
    buf = io.StringIO()
    buf.write(f"# fluxrecon-curve schema={SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["knot", "value", "count", "spread"])
    for i in range(len(curve.knots)):
        writer.writerow([_fmt(curve.knots[i]), _fmt(curve.values[i]),
                         int(curve.counts[i]), _fmt(curve.spreads[i])])
    curve_path = outdir / "curve.csv"
    _atomic_write(curve_path, buf.getvalue())

    payload = {
        "schema": SCHEMA_VERSION,
        "kind": "diagnostics",
        "config": scenario.to_dict(),
        "trusted_lo": curve.trusted_lo,
        "trusted_hi": curve.trusted_hi,
        "diagnostics": result.diagnostics,
    }
    diag_path = outdir / "diagnostics.json"
    _atomic_write(diag_path, _json_text(payload))
    return curve_path, diag_path


@dataclass(frozen=True)
class MetricsReport:
    """Scores of a reconstruction against the generating reaction law."""

    sup_error: float
    l2_error: float
    rel_sup_error: float | None
    normalization: float
    flux_scale: float
    curve_sup: float
    trusted_lo: float
    trusted_hi: float
    noise_level: float
    f_label: str
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def score_reconstruction(result: ReconstructionResult, obs: ObservedData,
                         scenario: ScenarioConfig,
                         timings: dict | None = None) -> MetricsReport:
    """Compare the curve against the named true law on the trusted band."""
    curve = result.curve
    reaction = scenario.build_reaction()
    us = np.linspace(curve.trusted_lo, curve.trusted_hi, 401)
    fhat, _ = evaluate_curve(curve, us)
    ftrue = np.asarray(reaction.fn(us), dtype=float)
    diff = fhat - ftrue
    sup = float(np.max(np.abs(diff)))
    l2 = float(np.sqrt(np.trapezoid(diff ** 2, us) / max(us[-1] - us[0], 1e-300)))
    norm = float(np.max(np.abs(ftrue)))
    return MetricsReport(
        sup_error=sup, l2_error=l2,
        rel_sup_error=(sup / norm) if norm > 0 else None,
        normalization=norm,
        flux_scale=float(np.max(np.abs(obs.flux.values))),
        curve_sup=float(np.max(np.abs(fhat))),
        trusted_lo=curve.trusted_lo, trusted_hi=curve.trusted_hi,
        noise_level=obs.noise_level, f_label=obs.f_label or "unknown",
        timings=dict(timings or {}))


def write_metrics(metrics: MetricsReport, scenario: ScenarioConfig, outdir: Path) -> Path:
    payload = {"schema": SCHEMA_VERSION, "kind": "metrics",
               "config": scenario.to_dict(), **metrics.to_dict()}
    path = outdir / "metrics.json"
    _atomic_write(path, _json_text(payload))
    return path


# -- runners -------------------------------------------------------------


def run_synthesize(scenario: ScenarioConfig, outdir: Path) -> dict:
    dom = scenario.domain()
    m_nodes = None if dom.kind is DomainKind.INTERVAL else scenario.recon_n // 2
    obs = synthesize_observation(
        dom, scenario.build_reaction(), scenario.build_phi(),
        fine_n=scenario.fine_n, fine_nt=scenario.fine_nt, sub_nt=scenario.recon_nt,
        noise_level=scenario.noise_level, seed=scenario.seed, m_nodes=m_nodes)
    csv_path, meta_path = write_observation(obs, scenario, outdir)
    return {"observation": str(csv_path), "metadata": str(meta_path)}


def run_reconstruct(obs_path: str | Path, outdir: Path,
                    override: ScenarioConfig | None = None) -> dict:
    t0 = time.perf_counter()
    obs, scenario = load_observation(obs_path)
    if override is not None:
        scenario = replace(scenario, recon_n=override.recon_n,
                           reconstruction=override.reconstruction)
    t1 = time.perf_counter()
    result = reconstruct(obs, scenario.recon_config())
    t2 = time.perf_counter()
    curve_path, diag_path = write_curve(result, scenario, outdir)
    paths = {"curve": str(curve_path), "diagnostics": str(diag_path)}
    if obs.f_label is not None:
        timings = {"load_s": t1 - t0, "reconstruct_s": t2 - t1,
                   "total_s": time.perf_counter() - t0}
        metrics = score_reconstruction(result, obs, scenario, timings)
        paths["metrics"] = str(write_metrics(metrics, scenario, outdir))
    return paths


def run_verify(suite: str, outdir: Path | None = None) -> dict:
    report = run_suite(suite)
    if outdir is not None:
        _atomic_write(outdir / f"verify_{suite}.json", _json_text(report))
    return report


def run_convergence(outdir: Path | None = None) -> dict:
    """Grid refinement studies: manufactured solution rates in space and
    time plus the difference-problem residual under parabolic refinement."""
    spatial_cells = (16, 32, 64)
    temporal_steps = (16, 32, 64)
    es = mms_spatial_errors(spatial_cells)
    et = mms_temporal_errors(temporal_steps)
    rows = difference_residual_study()

    def rates(errs):
        return [float(np.log2(errs[i] / errs[i + 1])) for i in range(len(errs) - 1)]

    table = []
    for i, n in enumerate(spatial_cells):
        table.append({"study": "mms_spatial", "n": n, "nt": 4096, "error": es[i],
                      "rate": rates(es)[i - 1] if i else float("nan")})
    for i, nt in enumerate(temporal_steps):
        table.append({"study": "mms_temporal", "n": 128, "nt": nt, "error": et[i],
                      "rate": rates(et)[i - 1] if i else float("nan")})
    werrs = [r["interior_max"] for r in rows]
    for i, r in enumerate(rows):
        table.append({"study": "difference_residual", "n": r["n"], "nt": r["nt"],
                      "error": werrs[i],
                      "rate": rates(werrs)[i - 1] if i else float("nan")})
    summary = {
        "schema": SCHEMA_VERSION,
        "kind": "convergence",
        "mms_spatial_rate": min(rates(es)),
        "mms_temporal_rate": min(rates(et)),
        "difference_residual_rate": min(rates(werrs)),
        "difference_residual_base": werrs[0],
        "passed": bool(min(rates(es)) >= 1.9 and min(rates(et)) >= 1.9
                       and min(rates(werrs)) >= 1.9 and werrs[0] < 1e-2),
    }
    if outdir is not None:
        buf = io.StringIO()
        buf.write(f"# fluxrecon-convergence schema={SCHEMA_VERSION}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["study", "n", "nt", "error", "rate"])
        for row in table:
            writer.writerow([row["study"], row["n"], row["nt"],
                             _fmt(row["error"]), _fmt(row["rate"])])
        _atomic_write(outdir / "convergence.csv", buf.getvalue())
        _atomic_write(outdir / "convergence.json", _json_text(summary))
    summary["table"] = table
    return summary
