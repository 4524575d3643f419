"""Command-line entry point: ``eisndt {validate,forward,sweep,locate,spectro-dump}``.

Exit codes: 0 success, 1 unreadable or malformed input, 2 scene validation
failure, 3 solver or meshing error (including a failed reciprocity check),
4 rank-deficient pole recovery.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asymptotics import dg_from_boundary, recover_poles, uniform_resample
from .errors import EISError, RankDeficient, ValidationError
from .forward import boundary_perturbation, build_system, frame_from_system, solve_continuous
from .mesh import DEFAULT_CAP, Mesh, build_mesh, estimate_strip_elements
from .reconstruct import (DEFAULT_ALPHA_REL, rasterize, reconstruct_frame, sensitivity_matrix,
                          visibility, write_pgm)
from .samples import BoundarySamples
from .scene import Scene, builtin_model, separation_report, validate_scene
from .spectro import spectro_table

DEFAULT_FREQUENCIES_HZ = (10.0, 100.0, 1e4, 2.5e5, 5e5, 8e5)
MAX_FREQUENCY_HZ = 1e6
RECIPROCITY_TOL = 1e-8

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_SOLVER, EXIT_RANK = 0, 1, 2, 3, 4


class ConfigError(Exception):
    """Malformed configuration or command-line input."""


@dataclass
class RunConfig:
    scene: Scene
    target_h: float = 0.005
    electrode_coverage: float = 0.5
    cap: int = DEFAULT_CAP
    crack_mode: str = "auto"
    frequencies_hz: list = field(default_factory=lambda: list(DEFAULT_FREQUENCIES_HZ))
    alpha_rel: float = DEFAULT_ALPHA_REL
    output_dir: Path = Path("out")
    coarse_inverse: bool = False
    inverse_h: float | None = None
    locate: dict = field(default_factory=dict)

    def resolved_crack_mode(self) -> str:
        if self.crack_mode != "auto":
            return self.crack_mode
        if self.scene.cracks and estimate_strip_elements(self.scene, self.target_h) > self.cap:
            return "interface"
        return "strip"

    def build_mesh(self) -> Mesh:
        return build_mesh(self.scene, self.target_h, self.electrode_coverage, cap=self.cap,
                          crack_mode=self.resolved_crack_mode())

    def build_inverse_mesh(self, simulation: Mesh) -> Mesh:
        if not self.coarse_inverse:
            return simulation
        h = self.inverse_h or 2 * self.target_h
        return build_mesh(Scene(self.scene.domain_radius), h, self.electrode_coverage, cap=self.cap)


def _number(value, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{name} must be finite")
    return out


def parse_frequencies(values) -> list:
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    freqs = [_number(v, "frequency") for v in values]
    if not freqs:
        raise ConfigError("the frequency list is empty")
    bad = [f for f in freqs if not 0 <= f <= MAX_FREQUENCY_HZ]
    if bad:
        raise ConfigError(f"frequencies must lie in [0, {MAX_FREQUENCY_HZ:g}] Hz, got {bad}")
    return freqs


def _load_scene(raw, base: Path) -> Scene:
    if isinstance(raw, str):
        path = Path(raw) if Path(raw).is_absolute() else base / raw
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read scene file {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("scene must be an object or a path to a JSON file")
    try:
        return Scene.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scene: {exc!r}") from None


def load_config(args) -> RunConfig:
    """Merge the JSON config (if any) with command-line overrides."""
    data, base = {}, Path.cwd()
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError("the config must be a JSON object")
        base = path.parent

    model = getattr(args, "model", None) or data.get("model")
    if "scene" in data and model is None:
        scene = _load_scene(data["scene"], base)
    elif model is not None:
        try:
            scene = builtin_model(int(model))
        except (TypeError, ValueError):
            raise ConfigError(f"model must be 1, 2 or 3, got {model!r}") from None
    else:
        raise ConfigError("give a scene in --config or choose --model")

    mesh = data.get("mesh", {})
    if not isinstance(mesh, dict):
        raise ConfigError("mesh must be an object")
    cfg = RunConfig(scene=scene)
    cfg.target_h = _number(mesh.get("target_h", cfg.target_h), "mesh.target_h")
    cfg.electrode_coverage = _number(mesh.get("electrode_coverage", cfg.electrode_coverage),
                                     "mesh.electrode_coverage")
    cfg.cap = int(_number(mesh.get("cap", cfg.cap), "mesh.cap"))
    cfg.crack_mode = str(mesh.get("crack_mode", cfg.crack_mode))
    if cfg.crack_mode not in ("auto", "strip", "interface"):
        raise ConfigError(f"mesh.crack_mode must be auto, strip or interface, got {cfg.crack_mode!r}")
    if "inverse_h" in mesh:
        cfg.inverse_h = _number(mesh["inverse_h"], "mesh.inverse_h")

    freqs = getattr(args, "freqs", None)
    if freqs is not None:
        cfg.frequencies_hz = parse_frequencies(freqs)
    elif "frequencies_hz" in data:
        cfg.frequencies_hz = parse_frequencies(data["frequencies_hz"])
    alpha = getattr(args, "alpha_rel", None)
    cfg.alpha_rel = _number(alpha if alpha is not None else data.get("alpha_rel", cfg.alpha_rel),
                            "alpha_rel")
    out = getattr(args, "out", None) or data.get("output_dir")
    if out is not None:
        cfg.output_dir = Path(out)
    cfg.coarse_inverse = bool(getattr(args, "coarse_inverse", False) or data.get("coarse_inverse", False))
    cfg.locate = dict(data.get("locate", {}))
    return cfg


def freq_label(f: float) -> str:
    return str(int(f)) if float(f).is_integer() else repr(float(f))


def _print_separations(scene: Scene, stream):
    for first, second, distance, required in separation_report(scene):
        flag = "ok" if distance >= required else "VIOLATION"
        print(f"{first:>8} - {second:<8} distance={distance:.6g} m required={required:.6g} m {flag}",
              file=stream)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(cfg: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    _print_separations(cfg.scene, stream)
    validate_scene(cfg.scene)
    print("scene is valid", file=stream)
    return EXIT_OK


def cmd_forward(cfg: RunConfig, check_reciprocity: bool = False, stream=None) -> int:
    stream = stream or sys.stdout
    validate_scene(cfg.scene)
    mesh = cfg.build_mesh()
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    worst = 0.0
    for f in cfg.frequencies_hz:
        frame = frame_from_system(build_system(cfg.scene, mesh, 2 * math.pi * f))
        path = frame.to_csv(cfg.output_dir / f"frame_{freq_label(f)}.csv")
        print(f"wrote {path}", file=stream)
        worst = max(worst, frame.reciprocity_error())
    if check_reciprocity:
        print(f"max relative asymmetry {worst:.3e}", file=stream)
        if worst > RECIPROCITY_TOL:
            return EXIT_SOLVER
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    validate_scene(cfg.scene)
    mesh = cfg.build_mesh()
    inverse = cfg.build_inverse_mesh(mesh)
    S = sensitivity_matrix(inverse)
    reference = cfg.scene.homogeneous()
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for f in cfg.frequencies_hz:
        omega = 2 * math.pi * f
        F = frame_from_system(build_system(cfg.scene, mesh, omega))
        F0 = frame_from_system(build_system(reference, mesh, omega))
        image = reconstruct_frame(S, F, F0, alpha_rel=cfg.alpha_rel)
        tag = freq_label(f)
        files = {"csv": f"image_{tag}.csv", "sigma_pgm": f"sigma_{tag}.pgm",
                 "epsilon_pgm": f"epsilon_{tag}.pgm"}
        image.to_csv(out / files["csv"])
        write_pgm(out / files["sigma_pgm"], rasterize(inverse, image.delta_sigma),
                  f"delta_sigma S/m f={tag}Hz")
        write_pgm(out / files["epsilon_pgm"], rasterize(inverse, image.delta_epsilon),
                  f"delta_epsilon F/m f={tag}Hz")
        entries.append({"freq_hz": f, **files, "visibility": visibility(image, cfg.scene, inverse)})
        print(f"{tag} Hz: " + " ".join(f"{k}={v:.3g}" for k, v in entries[-1]["visibility"].items()),
              file=stream)
    index = {
        "alpha_rel": cfg.alpha_rel,
        "simulation_mesh": {"nodes": mesh.n_nodes, "triangles": mesh.n_triangles,
                            "crack_mode": mesh.crack_mode},
        "inverse_mesh": {"nodes": inverse.n_nodes, "triangles": inverse.n_triangles},
        "images": entries,
    }
    (out / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def read_samples_csv(path) -> BoundarySamples:
    """Boundary samples from a CSV with columns x, y, re, im."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        pts = [(float(r["x"]), float(r["y"])) for r in rows]
        vals = [complex(float(r["re"]), float(r["im"])) for r in rows]
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read samples from {path}: {exc!r}") from None
    return BoundarySamples(np.asarray(pts), np.asarray(vals))


def locate_samples(cfg: RunConfig) -> BoundarySamples:
    """dG samples on the boundary from continuous-drive solves with and without defects."""
    opts = cfg.locate
    f = _number(opts.get("frequency_hz", 8e5), "locate.frequency_hz")
    a = np.asarray(opts.get("drive", [1.0, 0.0]), dtype=float)
    n = int(opts.get("samples", 512))
    mesh = cfg.build_mesh()
    omega = 2 * math.pi * f
    field_ = solve_continuous(cfg.scene, mesh, omega, a)
    reference = solve_continuous(cfg.scene.homogeneous(), mesh, omega, a)
    pert = boundary_perturbation(field_, reference)
    # on the disk, (-1/2 I + K)[u - u0] = -1/2 (u - u0) for mean-zero traces
    scaled = uniform_resample(pert.with_values(-0.5 * pert.values), n)
    return dg_from_boundary(scaled, str(opts.get("part", "re")))


def cmd_locate(cfg: RunConfig, samples_path=None, stream=None) -> int:
    stream = stream or sys.stdout
    opts = cfg.locate
    # crack residues carry a factor delta/pi, so by default only the bars are sought
    n_cracks = int(opts.get("n_cracks", 0))
    n_bars = int(opts.get("n_bars", len(cfg.scene.bars)))
    if samples_path is not None:
        samples = read_samples_csv(samples_path)
    else:
        validate_scene(cfg.scene)
        samples = locate_samples(cfg)
    report = recover_poles(samples, n_cracks, n_bars)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.output_dir / "poles.json"
    report.to_json(path)
    print(report.to_json(), file=stream)
    return EXIT_OK


def cmd_spectro_dump(cfg: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    rows = spectro_table(cfg.scene, cfg.frequencies_hz)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.output_dir / "spectro.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(rows[0]))
        for row in rows:
            w.writerow([repr(v) for v in row.values()])
    print(f"wrote {path}", file=stream)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eisndt", description="Multi-frequency EIT of cracked, "
                                     "reinforced concrete: forward frames, images and pole recovery.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, freqs=True):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--model", type=int, choices=(1, 2, 3), help="built-in scene")
        p.add_argument("--out", help="output directory")
        if freqs:
            p.add_argument("--freqs", help="comma-separated frequencies in Hz")
        return p

    common(sub.add_parser("validate", help="check scene geometry and separations"), freqs=False)
    fwd = common(sub.add_parser("forward", help="write one 16x16 frame CSV per frequency"))
    fwd.add_argument("--check-reciprocity", action="store_true",
                     help=f"fail (exit 3) if max |V-V^T|/max|V| > {RECIPROCITY_TOL:g}")
    sw = common(sub.add_parser("sweep", help="reconstruct images over a frequency sweep"))
    sw.add_argument("--alpha-rel", type=float, help="Tikhonov weight relative to sigma_max(S)^2")
    sw.add_argument("--coarse-inverse", action="store_true",
                    help="reconstruct on a coarser defect-free mesh than the data mesh")
    loc = common(sub.add_parser("locate", help="recover crack endpoints and bar centres"), freqs=False)
    loc.add_argument("--samples", help="CSV of dG samples (x,y,re,im) instead of a forward solve")
    common(sub.add_parser("spectro-dump", help="tabulate lambda_c and lambda_d over frequency"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        if args.command == "validate":
            if not (args.config or args.model):
                raise ConfigError("give --config or --model")
        cfg = load_config(args)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "forward":
            return cmd_forward(cfg, args.check_reciprocity)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "locate":
            return cmd_locate(cfg, args.samples)
        return cmd_spectro_dump(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"invalid scene: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RankDeficient as exc:
        print(f"pole recovery failed: RankDeficient: {exc}", file=sys.stderr)
        return EXIT_RANK
    except EISError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
