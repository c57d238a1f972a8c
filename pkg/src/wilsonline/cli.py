"""Command-line front end: parse inputs, run one pipeline, write a JSON report.

Exit status 0 on success, 2 on invalid input, 3 when a numerical
self-check fails.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import expansion, gaussian, geometry, lie_rep, signature, spectral, topology
from .errors import InvariantViolation, ValidationError

SCHEMA_VERSION = 1
COMMANDS = ("link", "holonomy", "expand", "mc", "fresnel-check", "spectrum-info")


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)  # role -> path
    seed: int = 0
    grid: int = 512
    order: int = 4
    samples: int = 10000
    output: str | None = None
    params: dict = field(default_factory=dict)


def _cx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def _matrix_stream(raw, name: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 4 or arr.shape[-1] != 2:
        raise ValidationError(f"{name} must be a list of n x n matrices of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _parse_driving_path(doc: dict) -> signature.DrivingPath:
    try:
        times = np.asarray(doc["times"], dtype=float)
    except KeyError as exc:
        raise ValidationError("driving path needs a 'times' field") from exc
    det = _matrix_stream(doc["deterministic"], "deterministic") if "deterministic" in doc else None
    sto = _matrix_stream(doc["stochastic"], "stochastic") if "stochastic" in doc else None
    return signature.DrivingPath.from_streams(times, det, sto)


def _parse_mc_loops(doc: dict) -> list[gaussian.LoopData]:
    try:
        raw_loops = doc["loops"]
    except (KeyError, TypeError) as exc:
        raise ValidationError("currents file needs a 'loops' list") from exc
    loops = []
    for entry in raw_loops:
        currents = {int(a): spectral.current_from_dict(c) for a, c in entry.get("currents", {}).items()}
        det = _matrix_stream(entry["deterministic"], "deterministic") if "deterministic" in entry else None
        loops.append(gaussian.LoopData(currents, det))
    return loops


def _load_inputs(config: RunConfig) -> dict:
    """Read and validate every referenced file before any computation."""
    loaded = {}
    for role, raw in config.inputs.items():
        if raw is None:
            continue
        path = Path(raw)
        if not path.is_file():
            raise ValidationError(f"{path}: file not found")
        doc = _read_json(path)
        if role in ("loop1", "loop2"):
            loaded[role] = geometry.loop_from_dict(doc)
        elif role == "path":
            loaded[role] = _parse_driving_path(doc)
        elif role == "spectrum":
            loaded[role] = spectral.model_from_dict(doc)
        elif role == "currents":
            loaded[role] = _parse_mc_loops(doc)
        elif role == "basis":
            loaded[role] = lie_rep.basis_from_dict(doc, name=path.stem)
        else:
            raise ValidationError(f"unknown input role {role!r}")
    return loaded


def _run_link(config, data) -> dict:
    if "loop1" not in data or "loop2" not in data:
        raise ValidationError("link needs --loop1 and --loop2")
    res = topology.link(data["loop1"], data["loop2"], grid=config.grid)
    return {"value": res.value_gauss, **res.as_dict()}


def _run_holonomy(config, data) -> dict:
    if "path" not in data:
        raise ValidationError("holonomy needs --path")
    path = data["path"]
    full = signature.holonomy_full(path)
    graded = signature.holonomy_graded(path, config.order)
    gap = float(np.sum(np.abs(graded.total() - full)))
    defect = float(np.max(np.abs(full.conj().T @ full - np.eye(path.dim))))
    return {
        "holonomy": [[_cx(z) for z in row] for row in full],
        "trace": _cx(np.trace(full)),
        "slice_traces": [_cx(z) for z in graded.traces()],
        "truncation_gap": gap,
        "tail_bound": graded.truncation_tail_bound,
        "unitarity_defect": defect,
    }


def _run_expand(config, data) -> dict:
    p = config.params
    report = expansion.series_su2(p["L"], p["k"], p["N"])
    out = report.as_dict()
    out["decay"] = [
        {"k": r.k, "scaled_remainder": r.scaled}
        for r in expansion.decay_check(p["L"], [10.0, 100.0, 1000.0], p["N"])
    ]
    return out


def _linked_pair_loops(L: float, k: float, p: int, grid: int):
    model, u1, u2 = spectral.linked_pair_model(L, k, p=p, grid=grid)
    d = lie_rep.su2_basis().dim_algebra
    loops = [gaussian.LoopData({a: u1 for a in range(d)}), gaussian.LoopData({a: u2 for a in range(d)})]
    return model, loops


def _run_mc(config, data) -> dict:
    basis = data.get("basis", lie_rep.su2_basis())
    p = config.params
    if p.get("preset") == "linked-pair":
        model, loops = _linked_pair_loops(p["L"], p["k"], p.get("p", 1), p.get("steps", 16))
    else:
        if "spectrum" not in data or "currents" not in data:
            raise ValidationError("mc needs --spectrum and --currents (or --preset linked-pair)")
        model, loops = data["spectrum"], data["currents"]
    res = gaussian.mc_wilson(loops, model, basis, config.order, config.samples, config.seed,
                             rk=not p.get("no_rk", False))
    out = res.as_dict()
    if p.get("preset") == "linked-pair":
        out["analytic_partial_sum"] = _cx(
            expansion.series_su2(p["L"], p["k"], config.order // 2 + 1).partial_sums[-1])
    return out


def _fresnel_rows(model: spectral.SpectralModel) -> list[dict]:
    rows = []
    for lam in model.eigenvalues:
        single = model.with_(eigenvalues=np.array([lam]))
        product = spectral.z_normalizer(single)
        quad = spectral.fresnel_quadrature(single.k * single.n * single.damped[0])
        rows.append({"eigenvalue": float(lam), "product": _cx(product),
                     "quadrature": _cx(quad), "difference": abs(product - quad)})
    return rows


def _run_fresnel(config, data) -> dict:
    p = config.params
    if "spectrum" in data:
        model = data["spectrum"]
    else:
        model = spectral.SpectralModel(np.array([p["lam"]]), p=p["p"], k=p["k"], n=p["n"])
    rows = _fresnel_rows(model)
    worst = max(r["difference"] for r in rows)
    if worst > 1e-6:
        raise InvariantViolation(f"Fresnel normalizer differs from quadrature by {worst:.3e}")
    return {"z_normalizer": _cx(spectral.z_normalizer(model)), "modes": rows, "max_difference": worst}


def _run_spectrum_info(config, data) -> dict:
    if "spectrum" not in data:
        raise ValidationError("spectrum-info needs --spectrum")
    model = data["spectrum"]
    info = {"size": model.size, "rho": model.rho, "p": model.p, "k": model.k,
            "n": "inf" if math.isinf(model.n) else model.n,
            "summability": model.summability(),
            "rk_coefficients": [_cx(z) for z in spectral.rk_coefficients(model)]}
    if not math.isinf(model.n):
        info["z_normalizer"] = _cx(spectral.z_normalizer(model))
    return info


_DISPATCH = {
    "link": _run_link, "holonomy": _run_holonomy, "expand": _run_expand, "mc": _run_mc,
    "fresnel-check": _run_fresnel, "spectrum-info": _run_spectrum_info,
}


def _versions() -> dict:
    try:
        own = metadata.version("wilsonline")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"wilsonline": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return _cx(obj)
    return obj


def canonical(report: dict) -> str:
    """Serialized report without the timestamp; equal configs give equal strings."""
    body = {k: v for k, v in report.items() if k != "timestamp"}
    return json.dumps(body, sort_keys=True, indent=2)


def build_report(config: RunConfig, results: dict) -> dict:
    inputs = {role: {"path": str(path), "sha256": _sha256(Path(path))}
              for role, path in sorted(config.inputs.items()) if path is not None}
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": config.command,
        "inputs": inputs,
        "parameters": {"seed": config.seed, "grid": config.grid, "order": config.order,
                       "samples": config.samples, **config.params},
        "seed": config.seed,
        "versions": _versions(),
        "results": results,
    }
    report = _jsonable(report)
    report["content_sha256"] = hashlib.sha256(canonical(report).encode()).hexdigest()
    report["timestamp"] = datetime.now(timezone.utc).isoformat()
    return report


def run(config: RunConfig) -> int:
    try:
        if config.command not in _DISPATCH:
            raise ValidationError(f"unknown command {config.command!r}")
        data = _load_inputs(config)
        results = _DISPATCH[config.command](config, data)
        report = build_report(config, results)
    except InvariantViolation as exc:
        print(f"wilsonline: invariant violation: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"wilsonline: invalid input: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if config.output:
        Path(config.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wilsonline", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False):
        p.add_argument("--out", "-o", help="report path (default: stdout)")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("link", help="linking number of two loops")
    p.add_argument("--loop1", required=True)
    p.add_argument("--loop2", required=True)
    p.add_argument("--grid", type=int, default=512)
    common(p)

    p = sub.add_parser("holonomy", help="graded holonomy of a driving path")
    p.add_argument("--path", required=True, help="driving path JSON")
    p.add_argument("--R", type=int, default=4, help="stochastic truncation order")
    common(p)

    p = sub.add_parser("expand", help="two-loop SU(2) expansion report")
    p.add_argument("--L", type=float, required=True, help="linking number")
    p.add_argument("--k", type=float, required=True, help="level")
    p.add_argument("--N", type=int, required=True, help="number of grouped terms")
    common(p)

    p = sub.add_parser("mc", help="Monte Carlo Wilson-line expectation")
    p.add_argument("--spectrum")
    p.add_argument("--currents")
    p.add_argument("--basis", help="representation basis JSON (default: SU(2) fundamental)")
    p.add_argument("--preset", choices=["linked-pair"])
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--k", type=float, default=5.0)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--steps", type=int, default=16, help="time steps of the preset currents")
    p.add_argument("--R", type=int, default=4)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--no-rk", action="store_true", help="sample x instead of R_k x")
    common(p, seed=True)

    p = sub.add_parser("fresnel-check", help="Fresnel normalizer vs quadrature")
    p.add_argument("--spectrum")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--n", type=float, default=10.0)
    common(p)

    p = sub.add_parser("spectrum-info", help="summary of a spectral model")
    p.add_argument("--spectrum", required=True)
    common(p)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    cfg = RunConfig(command=cmd, output=args.out, seed=getattr(args, "seed", 0))
    if cmd == "link":
        cfg.inputs = {"loop1": args.loop1, "loop2": args.loop2}
        cfg.grid = args.grid
    elif cmd == "holonomy":
        cfg.inputs = {"path": args.path}
        cfg.order = args.R
    elif cmd == "expand":
        cfg.params = {"L": args.L, "k": args.k, "N": args.N}
    elif cmd == "mc":
        cfg.inputs = {"spectrum": args.spectrum, "currents": args.currents, "basis": args.basis}
        cfg.order, cfg.samples = args.R, args.samples
        cfg.params = {"no_rk": args.no_rk}
        if args.preset:
            cfg.params.update(preset=args.preset, L=args.L, k=args.k, p=args.p, steps=args.steps)
    elif cmd == "fresnel-check":
        cfg.inputs = {"spectrum": args.spectrum}
        cfg.params = {"lam": args.lam, "p": args.p, "k": args.k, "n": args.n}
    elif cmd == "spectrum-info":
        cfg.inputs = {"spectrum": args.spectrum}
    cfg.inputs = {k: v for k, v in cfg.inputs.items() if v is not None}
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
