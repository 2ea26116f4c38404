"""Command-line front end: every protocol as a subcommand driven by a
single JSON config document, with JSON or CSV result emission.

Runs are repeated ``runs`` times with seeds derived from the root seed;
documents embed the resolved config and the tool version so a run can be
reproduced bit-for-bit from its own output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, dv, estimators as est, fock, protocols as proto
from .sampling import derive_seed

__all__ = ["main", "RunConfig", "ConfigError"]


class ConfigError(ValueError):
    """Malformed run configuration (exit code 2)."""


@dataclass
class RunConfig:
    """Resolved run description as consumed by a subcommand."""

    protocol: str
    payload: dict
    seed: int = 0
    shots: int = 1
    runs: int = 1
    out: Path | None = None
    fmt: str = "json"
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# config parsing


def _complex_param(value, name: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{name} must be a number or an [re, im] pair")


def _cutoff_param(value) -> fock.CutoffSpec:
    if isinstance(value, int):
        return fock.CutoffSpec((value,))
    if isinstance(value, (list, tuple)):
        return fock.CutoffSpec(tuple(int(v) for v in value))
    raise ConfigError("cutoff must be an int or a list of ints")


def build_state(spec) -> fock.FockState | fock.MixedEnsemble:
    """State preparation by name and parameters."""
    if not isinstance(spec, dict):
        raise ConfigError("state spec must be an object")
    if "mixture" in spec:
        comps = []
        for item in spec["mixture"]:
            comp = build_state(item["state"])
            if not isinstance(comp, fock.FockState):
                raise ConfigError("mixture components must be pure states")
            comps.append((float(item["weight"]), comp))
        return fock.MixedEnsemble(tuple(comps))
    try:
        kind = spec["kind"]
        cutoff = _cutoff_param(spec["cutoff"])
    except KeyError as exc:
        raise ConfigError(f"state spec missing {exc}") from exc
    if kind == "vacuum":
        return fock.prepare("vacuum", cutoff)
    if kind == "coherent":
        return fock.prepare("coherent", cutoff, alpha=_complex_param(spec.get("alpha", 0), "alpha"))
    if kind == "squeezed":
        return fock.prepare("squeezed", cutoff, z=_complex_param(spec.get("z", 0), "z"))
    if kind == "tmss":
        return fock.prepare("tmss", cutoff, r=float(spec.get("r", 0.0)))
    if kind == "basis":
        return fock.basis_state(tuple(spec["pattern"]), cutoff)
    raise ConfigError(f"unknown state kind {kind!r}")


_GATE_BUILDERS = {
    "displacement": lambda g: fock.Displacement(_complex_param(g["alpha"], "alpha"), int(g["mode"])),
    "squeeze": lambda g: fock.Squeeze(_complex_param(g["z"], "z"), int(g["mode"])),
    "phase": lambda g: fock.PhaseRotation(float(g["phi"]), int(g["mode"])),
    "beamsplitter": lambda g: fock.Beamsplitter(
        float(g["theta"]), float(g["phi"]), int(g["modes"][0]), int(g["modes"][1])
    ),
    "two_mode_squeeze": lambda g: fock.TwoModeSqueeze(
        float(g["r"]), int(g["modes"][0]), int(g["modes"][1])
    ),
    "mode_swap": lambda g: fock.ModeSwap(int(g["modes"][0]), int(g["modes"][1])),
}


def build_circuit(specs) -> list[fock.GateSpec]:
    gates = []
    for g in specs:
        try:
            gates.append(_GATE_BUILDERS[g["gate"]](g))
        except KeyError as exc:
            raise ConfigError(f"bad gate spec {g!r}: missing {exc}") from exc
    return gates


def _load_config(args) -> RunConfig:
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {args.config}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    declared = raw.get("protocol")
    if declared is not None and declared != args.command:
        raise ConfigError(f"config is for protocol {declared!r}, not {args.command!r}")
    seed = int(args.seed) if args.seed is not None else int(raw.get("seed", 0))
    shots = int(raw.get("shots", 1))
    runs = int(raw.get("runs", 1))
    if shots < 1 or runs < 1:
        raise ConfigError("shots and runs must be >= 1")
    # output location and format may live in the config; flags win
    out = args.out if args.out is not None else raw.get("out")
    fmt = args.format if args.format is not None else raw.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown output format {fmt!r}")
    resolved = dict(raw)
    resolved["protocol"] = args.command
    resolved["seed"] = seed
    return RunConfig(
        protocol=args.command,
        payload=resolved,
        seed=seed,
        shots=shots,
        runs=runs,
        out=Path(out) if out else None,
        fmt=fmt,
    )


# ---------------------------------------------------------------------------
# result assembly


def _estimator_document(cfg: RunConfig, run_fn) -> tuple[dict, list[dict]]:
    """Repeat an estimator with derived seeds; per-run rows plus grand stats."""
    run_rows = []
    means = []
    for k in range(cfg.runs):
        seed_k = derive_seed(cfg.seed, k)
        result = run_fn(cfg.shots, seed_k)
        row = {"run": k, **result.to_dict()}
        run_rows.append(row)
        means.append(result.mean)
    means = np.asarray(means)
    grand = complex(means.mean())
    if cfg.runs > 1:
        spread = float(math.hypot(np.std(means.real, ddof=1), np.std(means.imag, ddof=1)))
    else:
        spread = None  # a single run has no between-run dispersion estimate
    results = {
        "runs": run_rows,
        "grand_mean_re": grand.real,
        "grand_mean_im": grand.imag,
        "std_of_means": spread,
    }
    return results, run_rows


def _emit(cfg: RunConfig, results: dict, csv_rows: list[dict] | None) -> None:
    document = {
        "tool": {"name": "cvswap", "version": __version__},
        "config": cfg.payload,
        "results": results,
    }
    if cfg.fmt == "json":
        text = json.dumps(document, indent=2)
    else:
        if not csv_rows:
            raise ConfigError("this command has no CSV representation")
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(csv_rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(csv_rows)
        text = buf.getvalue()
    if cfg.out is not None:
        cfg.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _full_threshold(states) -> int:
    caps = 0
    for s in states:
        caps += sum(s.cutoff.per_mode_max)
    return math.ceil(caps / 2)


def cmd_overlap(cfg: RunConfig) -> None:
    payload = cfg.payload
    if "pairs" in payload:
        states = [build_state(s) for s in payload["states"]]
        pairs = [tuple(int(v) for v in p) for p in payload["pairs"]]
        m = payload.get("M")
        run_fn = lambda shots, seed: est.parity_overlap_estimate(states, pairs, m, shots, seed)
    else:
        try:
            state_a = build_state(payload["state_a"])
            state_b = build_state(payload["state_b"])
        except KeyError as exc:
            raise ConfigError(f"overlap config missing {exc}") from exc
        m = payload.get("M")
        if m is None:
            m = _full_threshold([state_a, state_b])
        run_fn = lambda shots, seed: est.cv_swap_estimate(state_a, state_b, int(m), shots, seed)
    results, rows = _estimator_document(cfg, run_fn)
    _emit(cfg, results, rows)


def cmd_cutoff_plan(cfg: RunConfig) -> None:
    payload = cfg.payload
    family = payload.get("family")
    eps = float(payload.get("eps", 1e-2))
    method = payload.get("method")
    if family == "squeezed":
        plan = est.cutoff_for_squeezed(float(payload["r"]), eps)
    elif family == "coherent":
        energy = float(payload["energy"])
        method = method or "chernoff"
        if method == "chernoff":
            plan = est.cutoff_for_coherent_chernoff(energy, eps)
        elif method == "normal_quantile":
            plan = est.cutoff_for_coherent_normal(energy, eps)
        elif method == "exact_tail":
            plan = est.cutoff_for_coherent_exact(energy, eps)
        else:
            raise ConfigError(f"unknown planning method {method!r}")
    else:
        raise ConfigError("family must be 'squeezed' or 'coherent'")
    _emit(cfg, plan.to_dict(), [plan.to_dict()])


def cmd_fig2(cfg: RunConfig) -> None:
    """Convergence table: closed-form finite-threshold values next to the
    simulated expectation of the circuit-prepared two-mode squeezed state."""
    payload = cfg.payload
    r_list = [float(r) for r in payload.get("r_list", [0.8, 1.0, 1.2])]
    m_lo = int(payload.get("m_min", 4))
    m_hi = int(payload.get("m_max", 20))
    cap = int(payload.get("prep_cutoff", 40))
    if m_lo < 0 or m_hi < m_lo:
        raise ConfigError("need 0 <= m_min <= m_max")
    rows = []
    m_values = list(range(m_lo, m_hi + 1))
    for r in r_list:
        tm = fock.prepare("tmss", fock.CutoffSpec.uniform(cap, 2), r=r)
        pre = fock.apply_gate(fock.pad(tm, (2 * cap, 2 * cap)),
                              fock.Beamsplitter(math.pi / 4.0, 0.0, 0, 1))
        sims = est.swap2m_profile(pre, m_values)
        for m, sim in zip(m_values, sims):
            closed = est.analytic_swap2m_squeezed(r, m)
            rows.append({
                "r": r,
                "M": m,
                "closed_form": closed,
                "simulated": sim,
                "abs_diff": abs(sim - closed),
                "bound": math.tanh(r) ** (2 * (m + 1)),
            })
    _emit(cfg, {"rows": rows, "limit": {f"{r}": est.analytic_squeezed_overlap(r) for r in r_list}}, rows)


def cmd_perm(cfg: RunConfig) -> None:
    states = [build_state(s) for s in cfg.payload["states"]]
    results, rows = _estimator_document(
        cfg, lambda shots, seed: proto.perm_test(states, shots, seed)
    )
    exact = proto.perm_expectation(states)
    results["exact_expectation_re"] = exact.real
    results["exact_expectation_im"] = exact.imag
    _emit(cfg, results, rows)


def cmd_two_copy(cfg: RunConfig) -> None:
    payload = cfg.payload
    base = build_state(payload["purification"])
    if not isinstance(base, fock.FockState):
        raise ConfigError("purification must be a pure state")
    if base.modes != 2:
        raise ConfigError("purification spec must cover one (A, B) pair")
    copies = int(payload.get("copies", 2))
    if copies < 2:
        raise ConfigError("two-copy test needs copies >= 2")
    stack = base
    for _ in range(copies - 1):
        stack = fock.tensor(stack, base)
    m = payload.get("M")
    results, rows = _estimator_document(
        cfg, lambda shots, seed: proto.two_copy_test(stack, shots, seed, m)
    )
    results["exact_expectation"] = proto.two_copy_expectation(stack, m)
    _emit(cfg, results, rows)


def cmd_compile_cost(cfg: RunConfig) -> None:
    payload = cfg.payload
    training = [build_state(s) for s in payload["training"]]
    u_gates = build_circuit(payload.get("u_gates", []))
    v_gates = build_circuit(payload.get("v_gates", []))
    m_totals = payload.get("m_totals")
    shots = int(payload.get("shots_per_term", cfg.shots))
    cost = proto.compile_cost(training, u_gates, v_gates, shots, cfg.seed, m_totals)
    results = {
        "cost": cost,
        "exact_cost": proto.compile_cost_expectation(training, u_gates, v_gates, m_totals),
        "shots_per_term": shots,
    }
    _emit(cfg, results, [results])


def _build_hybrid(spec) -> fock.FockState | fock.MixedEnsemble:
    if "qubit" not in spec or "cv" not in spec:
        raise ConfigError("hybrid state needs 'qubit' amplitudes and a 'cv' state spec")
    q = np.array([_complex_param(a, "qubit amplitude") for a in spec["qubit"]])
    if q.shape != (2,):
        raise ConfigError("qubit amplitudes must be a 2-vector")
    q = q / np.linalg.norm(q)
    qubit = fock.FockState(fock.CutoffSpec((1,)), q)
    cv = build_state(spec["cv"])
    if isinstance(cv, fock.MixedEnsemble):
        comps = tuple((w, fock.tensor(qubit, s)) for w, s in cv.components)
        return fock.MixedEnsemble(comps)
    return fock.tensor(qubit, cv)


def cmd_hybrid(cfg: RunConfig) -> None:
    payload = cfg.payload
    state_a = _build_hybrid(payload["state_a"])
    state_b = _build_hybrid(payload["state_b"])
    m = payload.get("M")
    if m is None:
        m = state_a.cutoff.per_mode_max[1]
    results, rows = _estimator_document(
        cfg, lambda shots, seed: proto.hybrid_swap_estimate(state_a, state_b, int(m), shots, seed)
    )
    results["exact_expectation"] = proto.hybrid_swap_expectation(state_a, state_b, int(m))
    _emit(cfg, results, rows)


def cmd_qudit_basis(cfg: RunConfig) -> None:
    payload = cfg.payload
    d = int(payload.get("d", 2))
    basis = payload.get("basis", "w")
    mat, eig = dv.swap_eigenbasis(d, basis)
    unit_err = float(np.max(np.abs(mat.conj().T @ mat - np.eye(d * d))))
    perm = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            perm[j * d + i, i * d + j] = 1.0
    eig_err = float(np.max(np.abs(perm @ mat - mat * eig[None, :])))
    plus = int(np.sum(eig > 0))
    minus = int(np.sum(eig < 0))
    verified = unit_err <= 1e-12 and eig_err <= 1e-12 and (plus, minus) == (
        d * (d + 1) // 2, d * (d - 1) // 2,
    )
    results = {
        "d": d,
        "basis": basis,
        "multiplicity_plus": plus,
        "multiplicity_minus": minus,
        "unitarity_error": unit_err,
        "eigen_relation_error": eig_err,
        "verified": verified,
        "matrix_re": mat.real.tolist(),
        "matrix_im": mat.imag.tolist(),
        "eigenvalues": eig.tolist(),
    }
    rows = [{"column": k, "eigenvalue": float(eig[k])} for k in range(d * d)]
    _emit(cfg, results, rows)


_COMMANDS = {
    "overlap": cmd_overlap,
    "cutoff-plan": cmd_cutoff_plan,
    "fig2": cmd_fig2,
    "perm": cmd_perm,
    "two-copy": cmd_two_copy,
    "compile-cost": cmd_compile_cost,
    "hybrid": cmd_hybrid,
    "qudit-basis": cmd_qudit_basis,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvswap",
        description="Ancilla-free overlap estimation on a truncated Fock simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run description")
        p.add_argument("--out", default=None, help="output path (config 'out' or stdout if omitted)")
        p.add_argument("--format", choices=("json", "csv"), default=None,
                       help="output format (config 'format' or json if omitted)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        _COMMANDS[cfg.protocol](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (fock.PreparationLeakError, ValueError, RuntimeError) as exc:
        print(f"numerical contract failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
