"""Experiment orchestration: comparison runs, the deferred-CZNR emulation,
native gate counting and CSV/SVG reporting.

All outputs are derived deterministically from the master seed: the target
circuit is fixed per seed, repetitions get derived sub-seeds, and CSV rows
are written in a fixed order with repr() float formatting so repeated runs
are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .builder import (
    ClinrProgram,
    VerificationSequence,
    build_clinr,
    build_cprep,
    build_deferred_cznr_experiment,
    build_resource_prep,
    build_stabilizer_measurement,
    fully_connected_cz,
    graph_state_prep,
)
from .circuits import (
    CX,
    CZ,
    H,
    MX,
    S,
    SDG,
    X,
    Z,
    Circuit,
    Op,
    circuit_stabilizers,
    random_clifford_circuit,
    truncate,
)
from .estimator import estimate_plog, sample_outcomes
from .noise import NoiseParams
from .pauli import GeneratorSet, PauliOp
from .proxy import precompute_omega
from .search import (
    SearchParams,
    derive_seed,
    global_optimize,
    random_rank_r_sequence,
    two_step_optimize,
)

MODES = (
    "direct",
    "clinr_random",
    "clinr_global",
    "clinr_two_step",
    "cznr_emulate",
    "counts",
)

COMPARISON_HEADER = ("mode", "repetition", "eval_index", "p_log", "stderr",
                     "best_so_far")
CZNR_HEADER = ("r", "weight_class", "dropped_checks", "p_log", "p_restart",
               "effective_restart", "shots")
COUNTS_HEADER = ("context", "zz", "g_pi", "g_pi2")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    n: int = 20
    s: int | None = None
    r: int = 4
    p: float = 1e-4
    tau_m: float = 30.0
    shots: int = 50_000
    tabu_capacity: int = 10
    candidates: int = 5
    max_evals: int = 500
    repetitions: int = 250
    seed: int = 0
    r_max: int = 100
    idle_input_during_prep: bool = False
    weight_class: str = "low"
    output_path: str = "out.csv"

    @property
    def size(self) -> int:
        return self.s if self.s is not None else self.n * self.n

    @property
    def noise(self) -> NoiseParams:
        return NoiseParams(self.p, self.tau_m)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.n < 1 or self.r < 0 or self.shots < 1 or self.repetitions < 1:
            raise ConfigError("n, shots and repetitions must be positive; r >= 0")
        if self.weight_class not in ("low", "high"):
            raise ConfigError("weight_class must be 'low' or 'high'")
        if not 0 <= self.p <= 1:
            raise ConfigError("p must be a probability")

    @classmethod
    def from_sources(cls, config_file: str | None, overrides: dict) -> ExperimentConfig:
        """Flat JSON file values, then command-line overrides on top."""
        values: dict = {}
        if config_file:
            with open(config_file) as fh:
                loaded = json.load(fh)
            if not isinstance(loaded, dict):
                raise ConfigError("config file must hold a JSON object")
            values.update(loaded)
        values.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg


def generate_target_circuit(n: int, s: int, seed: int) -> Circuit:
    """Haar-random Clifford compiled to the gateset, truncated to size s.

    Independent uniform blocks are concatenated until at least s ops are
    available (composing uniform Cliffords stays uniform), then truncated.
    """
    ops: list[Op] = []
    block = 0
    while len(ops) < s:
        circuit = random_clifford_circuit(n, derive_seed(seed, 7000 + block))
        ops.extend(circuit.ops)
        block += 1
    return truncate(Circuit(n, tuple(ops)), s)


def _write_csv(path: str | Path, header: Sequence[str],
               rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def run_comparison(cfg: ExperimentConfig) -> list[tuple]:
    """One Fig.-2-style curve: the chosen mode, all repetitions.

    The target circuit is a function of the master seed alone, so every
    mode run with the same seed works on the identical circuit.
    """
    cfg.validate()
    if cfg.mode not in ("direct", "clinr_random", "clinr_global", "clinr_two_step"):
        raise ConfigError(f"mode {cfg.mode!r} is not a comparison mode")
    params = cfg.noise
    circuit = generate_target_circuit(cfg.n, cfg.size, derive_seed(cfg.seed, 1))
    rows: list[tuple] = []

    needs_clinr = cfg.mode != "direct"
    if needs_clinr:
        prep = build_resource_prep(circuit)
        s_gens = circuit_stabilizers(prep)
        omega = (
            precompute_omega(prep, params) if cfg.mode == "clinr_two_step" else None
        )

        def builder(v: VerificationSequence) -> ClinrProgram:
            return build_clinr(circuit, v)

        def cost(prog: ClinrProgram, eval_seed: int) -> tuple[float, float]:
            res = estimate_plog(
                prog, params, cfg.shots, eval_seed,
                r_max=cfg.r_max,
                idle_input_during_prep=cfg.idle_input_during_prep,
            )
            return res.p_log, res.stderr

    for rep in range(cfg.repetitions):
        rep_seed = derive_seed(cfg.seed, 100 + rep)
        if cfg.mode == "direct":
            res = estimate_plog(circuit, params, cfg.shots, rep_seed)
            rows.append((cfg.mode, rep, 1, res.p_log, res.stderr, res.p_log))
        elif cfg.mode == "clinr_random":
            rng = np.random.default_rng(rep_seed)
            v = random_rank_r_sequence(s_gens, cfg.r, rng)
            res = estimate_plog(
                builder(v), params, cfg.shots, derive_seed(rep_seed, 1),
                r_max=cfg.r_max,
                idle_input_during_prep=cfg.idle_input_during_prep,
            )
            rows.append((cfg.mode, rep, 1, res.p_log, res.stderr, res.p_log))
        else:
            search = SearchParams(
                r=cfg.r,
                tabu_capacity=cfg.tabu_capacity,
                candidates=cfg.candidates,
                iterations=2 * cfg.max_evals,
                shots=cfg.shots,
                seed=rep_seed,
                max_evaluations=cfg.max_evals,
            )
            if cfg.mode == "clinr_global":
                _, trace = global_optimize(builder, s_gens, search, cost)
            else:
                _, trace = two_step_optimize(builder, s_gens, omega, search, cost)
            for rec in trace.records:
                rows.append((cfg.mode, rep, rec.eval_index, rec.cost, rec.stderr,
                             rec.best_so_far))
    _write_csv(cfg.output_path, COMPARISON_HEADER, rows)
    return rows


def run_cznr_emulation(cfg: ExperimentConfig) -> list[tuple]:
    """Deferred CZNR emulation with Appendix-style post-processing.

    One sampling pass is shared by the progressive check-dropping analysis:
    dropping k checks means ignoring the last k verification records of
    each resource register when marking failed shots.
    """
    cfg.validate()
    if cfg.mode != "cznr_emulate":
        raise ConfigError("run_cznr_emulation requires mode=cznr_emulate")
    prog = build_deferred_cznr_experiment(
        cfg.n, cfg.r, cfg.weight_class, derive_seed(cfg.seed, 2)
    )
    outcomes = sample_outcomes(prog, cfg.noise, cfg.shots, derive_seed(cfg.seed, 3))
    ver = prog.verification_records
    r = cfg.r
    rows = []
    for dropped in range(r + 1):
        keep = ver[: r - dropped] + ver[r : 2 * r - dropped]
        vmask = np.uint64(sum(1 << s for s in keep))
        failed = (outcomes.rec & vmask) != 0
        n_fail = int(failed.sum())
        n_ok = cfg.shots - n_fail
        errors = int(((outcomes.out_x != 0) & ~failed).sum())
        p_log = errors / n_ok if n_ok else float("nan")
        p_restart = n_fail / cfg.shots
        effective = 1.0 - math.sqrt(1.0 - p_restart)
        rows.append((cfg.r, cfg.weight_class, dropped, p_log, p_restart,
                     effective, cfg.shots))
    _write_csv(cfg.output_path, CZNR_HEADER, rows)
    return rows


# ---------------------------------------------------------------------------
# Native gate counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateCountReport:
    """Counts in the trapped-ion native classes; virtual-Z is free."""

    zz: int = 0
    g_pi: int = 0
    g_pi2: int = 0
    virtual_z: int = 0

    def __add__(self, other: GateCountReport) -> GateCountReport:
        return GateCountReport(
            self.zz + other.zz,
            self.g_pi + other.g_pi,
            self.g_pi2 + other.g_pi2,
            self.virtual_z + other.virtual_z,
        )


_OP_COUNTS = {
    H: GateCountReport(g_pi2=1),
    S: GateCountReport(virtual_z=1),
    SDG: GateCountReport(virtual_z=1),
    Z: GateCountReport(virtual_z=1),
    X: GateCountReport(g_pi=1),
    CZ: GateCountReport(zz=1, virtual_z=2),
    CX: GateCountReport(zz=1, g_pi2=2),
    MX: GateCountReport(g_pi2=1),
}


def native_gate_counts(obj: Circuit | ClinrProgram | Iterable[Op]) -> GateCountReport:
    """Translate a circuit into native gate classes, counting only.

    CZ maps to one ZZ plus virtual phases; CX needs two extra half
    rotations on its target; an X-basis measurement costs one half rotation
    before the Z readout. No optimization passes are applied.
    """
    if isinstance(obj, ClinrProgram):
        ops: Iterable[Op] = obj.circuit.ops
    elif isinstance(obj, Circuit):
        ops = obj.ops
    else:
        ops = obj
    total = GateCountReport()
    for op in ops:
        total = total + _OP_COUNTS.get(op.name, GateCountReport())
    return total


def gate_count_rows(cfg: ExperimentConfig) -> list[tuple]:
    """Count rows for the standard experiment contexts at (n, r)."""
    cfg.validate()
    n, r = cfg.n, cfg.r
    c_cz = fully_connected_cz(n)
    prog = build_deferred_cznr_experiment(n, r, cfg.weight_class,
                                          derive_seed(cfg.seed, 2))
    inject = prog.circuit.ops[slice(*prog.phase_bounds("INJECT"))]
    teleport_block = [op for op in inject if op.name == CX][:n]
    cprep = build_cprep(n, derive_seed(cfg.seed, 4))
    direct_ops = (
        list(cprep.circuit.ops)
        + list(c_cz.ops) * 2
        + cprep.inverse_ops()
    )
    stab = build_stabilizer_measurement(
        PauliOp(n, 0, (1 << n) - 1), n, 0
    )
    contexts = [
        ("cz_circuit", native_gate_counts(c_cz)),
        ("teleport_block", native_gate_counts(teleport_block)),
        (f"stabilizer_measurement_w{n}", native_gate_counts(stab)),
        ("cznr_program", native_gate_counts(prog)),
        ("direct_program", native_gate_counts(direct_ops)),
    ]
    rows = [(name, rep.zz, rep.g_pi, rep.g_pi2) for name, rep in contexts]
    _write_csv(cfg.output_path, COUNTS_HEADER, rows)
    return rows


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def aggregate_comparison(rows: list[tuple]) -> list[tuple]:
    """Mean and standard error of best-so-far per (mode, eval_index).

    Short repetitions are extended with their final best value so every
    repetition contributes to every evaluation index.
    """
    by_rep: dict[tuple[str, int], dict[int, float]] = {}
    for mode, rep, eval_index, _p, _e, best in rows:
        by_rep.setdefault((str(mode), int(rep)), {})[int(eval_index)] = float(best)
    modes = sorted({mode for mode, _ in by_rep})
    out = []
    for mode in modes:
        reps = [curve for (m, _), curve in sorted(by_rep.items()) if m == mode]
        horizon = max(max(curve) for curve in reps)
        for idx in range(1, horizon + 1):
            vals = []
            for curve in reps:
                known = [v for k, v in sorted(curve.items()) if k <= idx]
                vals.append(known[-1] if known else curve[min(curve)])
            mean = float(np.mean(vals))
            err = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            out.append((mode, idx, mean, err, len(vals)))
    return out


def _svg_line_chart(series: dict[str, list[tuple[float, float, float]]],
                    title: str) -> str:
    """A small deterministic SVG chart: mean lines with +-stderr bands."""
    width, height, pad = 720, 420, 50
    points = [p for pts in series.values() for p in pts]
    xs = [p[0] for p in points]
    ys = [p[1] - p[2] for p in points] + [p[1] + p[2] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + (abs(y_lo) or 1.0) * 1e-3

    def sx(x: float) -> float:
        return pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def sy(y: float) -> float:
        return height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
    ]
    for k, (name, pts) in enumerate(sorted(series.items())):
        color = palette[k % len(palette)]
        band = [(sx(x), sy(y + e)) for x, y, e in pts]
        band += [(sx(x), sy(y - e)) for x, y, e in reversed(pts)]
        band_str = " ".join(f"{a:.2f},{b:.2f}" for a, b in band)
        line_str = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y, _ in pts)
        parts.append(
            f'<polygon points="{band_str}" fill="{color}" opacity="0.15"/>'
        )
        parts.append(
            f'<polyline points="{line_str}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{width - pad:.1f}" y="{20 + 16 * (k + 1)}" '
            f'text-anchor="end" font-family="monospace" font-size="12" '
            f'fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def emit_plot_data(trace_paths: Sequence[str], out_prefix: str) -> None:
    """Aggregate comparison CSVs into mean +- stderr bands: CSV plus SVG."""
    rows: list[tuple] = []
    for path in trace_paths:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != COMPARISON_HEADER:
                raise ValueError(f"{path}: not a comparison CSV")
            for rec in reader:
                if len(rec) != len(COMPARISON_HEADER):
                    raise ValueError(f"{path}: malformed row {rec!r}")
                rows.append((rec[0], int(rec[1]), int(rec[2]), float(rec[3]),
                             float(rec[4]), float(rec[5])))
    if not rows:
        raise ValueError("no trace rows to aggregate")
    agg = aggregate_comparison(rows)
    _write_csv(f"{out_prefix}.csv",
               ("mode", "eval_index", "mean_best", "stderr", "repetitions"), agg)
    series: dict[str, list[tuple[float, float, float]]] = {}
    for mode, idx, mean, err, _count in agg:
        series.setdefault(str(mode), []).append((float(idx), mean, err))
    svg = _svg_line_chart(series, "logical error rate vs evaluations")
    Path(f"{out_prefix}.svg").write_text(svg)
