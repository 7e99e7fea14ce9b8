"""Run configuration: strict key=value parsing, presets, validation.

The file format is one `key = value` pair per line; values are numbers,
true/false, double-quoted strings, or two-element numeric lists like
[0.0, -1.0].  Unknown keys are hard errors.  A configuration echo with all
defaults expanded accompanies every run for provenance.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .errors import ParseError, ValidationError
from .kinetics import Params, StimulusConfig


@dataclass(frozen=True)
class CircleShape:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class PolarShape:
    base: float
    amplitude: float


@dataclass(frozen=True)
class UniformInit:
    u0: float


@dataclass(frozen=True)
class RandomInit:
    lo: float
    hi: float


@dataclass(frozen=True)
class FrontInit:
    u_hi: float
    y_threshold: float


@dataclass(frozen=True)
class SimulationConfig:
    params: Params
    model: str
    L: float
    h: float
    dt: float
    t_final: float
    shape: CircleShape | PolarShape
    init: UniformInit | RandomInit | FrontInit
    stimulus: StimulusConfig | None
    stationary: bool
    output_every: float
    shift_margin_cells: int
    seed: int
    rd_tol: float
    ls_tol: float
    snapshot_every: float
    redistance_every: float = 0.005
    preset: str | None = None


# every key the parser accepts, with its expected python type
_KEY_TYPES = {
    "preset": str,
    "model": str,
    "L": float,
    "h": float,
    "dt": float,
    "t_final": float,
    "D_u": float,
    "D_v": float,
    "K": float,
    "C": float,
    "chi": float,
    "u_star": float,
    "M": float,
    "shape": str,
    "circle_center": list,
    "circle_radius": float,
    "polar_base": float,
    "polar_amplitude": float,
    "init": str,
    "u0": float,
    "random_lo": float,
    "random_hi": float,
    "front_u_hi": float,
    "front_y_threshold": float,
    "stimulus": bool,
    "stimulus_amplitude": float,
    "stationary": bool,
    "output_every": float,
    "shift_margin_cells": int,
    "seed": int,
    "rd_tol": float,
    "ls_tol": float,
    "snapshot_every": float,
    "redistance_every": float,
}

DEFAULTS = {
    "preset": None,
    "model": "two_species",
    "L": 3.0,
    "h": 0.06,
    "dt": 0.005,
    "t_final": 40.0,
    "D_u": 0.1,
    "D_v": 10.0,
    "K": 100.0,
    "C": 0.8,
    "chi": 0.2,
    "u_star": 0.2,
    "M": 6.0,
    "shape": "circle",
    "circle_center": [0.0, -1.0],
    "circle_radius": 1.3,
    "polar_base": 1.0,
    "polar_amplitude": 0.3,
    "init": "front",
    "u0": 0.0,
    "random_lo": 0.0,
    "random_hi": 0.8,
    "front_u_hi": 0.8,
    "front_y_threshold": -0.8,
    "stimulus": False,
    "stimulus_amplitude": 0.07,
    "stationary": False,
    "output_every": 0.1,
    "shift_margin_cells": 5,
    "seed": 7,
    "rd_tol": 1e-12,
    "ls_tol": 1e-12,
    "snapshot_every": 0.0,
    # reinitialization happens once per this much simulated time (equal to
    # every step at the production time steps); tying the cadence to time
    # rather than steps keeps the redistancing count fixed under time
    # refinement
    "redistance_every": 0.005,
}

_POLARIZATION_BASE = {
    "stationary": True,
    "shape": "polar",
    "L": 2.5,
    "h": 0.05,
    "dt": 0.001,
    "D_u": 0.3,
    "D_v": 30.0,
    "K": 500.0,
    "C": 0.8,
    "chi": 0.1,
    "u_star": 0.3,
    "M": 6.0,
}

PRESETS = {
    "trajectory_straight": {
        "D_u": 0.1, "D_v": 10.0, "chi": 0.2, "u_star": 0.2, "t_final": 40.0,
    },
    "trajectory_circular": {
        "D_u": 0.5, "D_v": 50.0, "chi": 0.1, "u_star": 0.25, "t_final": 90.0,
    },
    "mass_check": {
        "D_u": 0.5, "D_v": 50.0, "chi": 0.1, "u_star": 0.25, "t_final": 20.0,
    },
    "polarization_random": {
        # per-cell iid noise only nucleates a pinned front for some draws;
        # this seed polarizes (single cap by t = 0.5).  The front stalls
        # once the well-mixed inactive pool reaches its pinning level,
        # around t = 7 for the mean-0.4 initial mass.
        **_POLARIZATION_BASE, "init": "random", "t_final": 8.0, "seed": 3,
    },
    "polarization_stimulus": {
        # uniform resting state matching the reported inactive level
        # (v0 = 1.342 corresponds to u0 = M/Area - 1.342 = 0.4854)
        **_POLARIZATION_BASE,
        "init": "uniform", "u0": 0.4854, "stimulus": True, "t_final": 20.0,
    },
    "diffusion_sweep": {
        "D_u": 0.1, "D_v": 10.0, "chi": 0.1, "u_star": 0.4, "t_final": 40.0,
    },
    "contractility_sweep": {
        "D_u": 0.4, "D_v": 40.0, "chi": 0.1, "u_star": 0.25, "t_final": 60.0,
    },
    "one_vs_two_species": {
        "D_u": 0.1, "D_v": 10.0, "chi": 0.1, "u_star": 0.4, "t_final": 40.0,
    },
    "convergence_study": {
        "D_u": 0.1, "D_v": 10.0, "chi": 0.2, "u_star": 0.2,
        "h": 0.05, "dt": 0.005, "t_final": 10.0,
    },
}

# multi-run presets expand into (case name, overrides) lists; final times
# are sized to each case's mode-locking onset
SWEEP_CASES = {
    "diffusion_sweep": [
        ("case1_Du0.1", {"D_u": 0.1, "D_v": 10.0, "t_final": 40.0}),
        ("case2_Du0.3", {"D_u": 0.3, "D_v": 30.0, "t_final": 40.0}),
        ("case3_Du0.5", {"D_u": 0.5, "D_v": 50.0, "t_final": 40.0}),
    ],
    "contractility_sweep": [
        ("ustar0.25", {"u_star": 0.25, "t_final": 90.0}),
        ("ustar0.30", {"u_star": 0.3, "t_final": 60.0}),
        ("ustar0.40", {"u_star": 0.4, "t_final": 40.0}),
    ],
    "one_vs_two_species": [
        ("two_species", {"model": "two_species", "t_final": 40.0}),
        ("one_species", {"model": "one_species", "t_final": 70.0}),
    ],
}


def _parse_value(raw: str, line_no: int, key: str):
    raw = raw.strip()
    if raw == "":
        raise ParseError(f"line {line_no}: empty value for '{key}'", line=line_no, key=key)
    if raw in ("true", "false"):
        return raw == "true"
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ParseError(f"line {line_no}: unterminated list for '{key}'", line=line_no, key=key)
        parts = [p.strip() for p in raw[1:-1].split(",") if p.strip()]
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise ParseError(
                f"line {line_no}: list entries for '{key}' must be numbers", line=line_no, key=key
            ) from None
    try:
        if any(c in raw for c in ".eE") and not raw.lstrip("+-").isdigit():
            return float(raw)
        return int(raw)
    except ValueError:
        raise ParseError(
            f"line {line_no}: cannot parse value {raw!r} for '{key}'", line=line_no, key=key
        ) from None


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def parse_config_text(text: str) -> SimulationConfig:
    raw: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = _strip_comment(line).strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"line {line_no}: expected 'key = value'", line=line_no)
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _KEY_TYPES:
            raise ParseError(f"line {line_no}: unknown key '{key}'", line=line_no, key=key)
        if key in raw:
            raise ParseError(f"line {line_no}: duplicate key '{key}'", line=line_no, key=key)
        raw[key] = _parse_value(value, line_no, key)
    return resolve(raw)


def parse_config(source) -> SimulationConfig:
    """Parse a path or inline text into a fully validated configuration."""
    text = None
    if hasattr(source, "read_text"):
        text = source.read_text()
    elif isinstance(source, str):
        if "=" in source or "\n" in source:
            text = source
        else:
            if not os.path.exists(source):
                raise ParseError(f"config file not found: {source}")
            with open(source) as fh:
                text = fh.read()
    else:
        raise TypeError("source must be a path or config text")
    return parse_config_text(text)


def resolve(overrides: dict, preset: str | None = None) -> SimulationConfig:
    """Merge defaults, an optional preset, and explicit keys; validate."""
    merged = dict(DEFAULTS)
    preset = overrides.get("preset", preset)
    violations = []
    if preset is not None:
        if preset not in PRESETS:
            raise ValidationError([f"unknown preset '{preset}'"])
        merged.update(PRESETS[preset])
    for key, value in overrides.items():
        if key == "preset":
            continue
        expected = _KEY_TYPES[key]
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, expected) or (expected is int and isinstance(value, bool)):
            violations.append(f"{key}: expected {expected.__name__}, got {value!r}")
            continue
        merged[key] = value
    if violations:
        raise ValidationError(violations)
    merged["preset"] = preset
    return _build(merged)


def _build(m: dict) -> SimulationConfig:
    violations = []

    def positive(key):
        if m[key] <= 0:
            violations.append(f"{key} must be positive (got {m[key]})")

    for key in ("L", "h", "dt", "t_final", "D_u", "D_v", "K", "C", "chi",
                "u_star", "M", "output_every", "rd_tol", "ls_tol",
                "redistance_every"):
        positive(key)
    if not (0.0 < m["C"] <= 1.0):
        violations.append(f"C must lie in (0, 1] (got {m['C']})")
    if m["model"] not in ("two_species", "one_species"):
        violations.append(f"model must be two_species or one_species (got {m['model']!r})")
    if m["shape"] not in ("circle", "polar"):
        violations.append(f"shape must be circle or polar (got {m['shape']!r})")
    if m["init"] not in ("uniform", "random", "front"):
        violations.append(f"init must be uniform, random or front (got {m['init']!r})")
    if m["shape"] == "circle":
        if m["circle_radius"] <= 0:
            violations.append("circle_radius must be positive")
        if len(m["circle_center"]) != 2:
            violations.append("circle_center must be a two-element list")
    else:
        if not (m["polar_base"] > abs(m["polar_amplitude"])):
            violations.append("polar_base must exceed |polar_amplitude|")
    if m["init"] == "random" and not (m["random_lo"] < m["random_hi"]):
        violations.append("random_lo must be below random_hi")
    if m["shift_margin_cells"] < 3:
        violations.append("shift_margin_cells must be at least 3")
    if m["seed"] < 0:
        violations.append("seed must be nonnegative")
    if m["stimulus_amplitude"] < 0:
        violations.append("stimulus_amplitude must be nonnegative")

    if m["h"] > 0 and m["L"] > 0:
        ncells = 2.0 * m["L"] / m["h"]
        if abs(ncells - round(ncells)) > 1e-9 * max(1.0, ncells):
            violations.append(f"2L={2*m['L']} must be an integer multiple of h={m['h']}")
    if m["dt"] > 0 and m["t_final"] > 0:
        steps = m["t_final"] / m["dt"]
        if abs(steps - round(steps)) > 1e-6:
            violations.append("t_final must be an integer multiple of dt")
    if m["dt"] > 0 and m["output_every"] > 0:
        if m["output_every"] < m["dt"] - 1e-12:
            violations.append("output_every must be at least dt")
        stride = m["output_every"] / m["dt"]
        if abs(stride - round(stride)) > 1e-6:
            violations.append("output_every must be an integer multiple of dt")
    if m["snapshot_every"] < 0:
        violations.append("snapshot_every must be zero (off) or positive")
    elif m["snapshot_every"] > 0 and m["dt"] > 0:
        stride = m["snapshot_every"] / m["dt"]
        if abs(stride - round(stride)) > 1e-6:
            violations.append("snapshot_every must be an integer multiple of dt")

    if violations:
        raise ValidationError(violations)

    params = Params(
        D_u=m["D_u"], D_v=m["D_v"], K=m["K"], C=m["C"],
        chi=m["chi"], u_star=m["u_star"], M=m["M"],
    )
    shape = (
        CircleShape(tuple(m["circle_center"]), m["circle_radius"])
        if m["shape"] == "circle"
        else PolarShape(m["polar_base"], m["polar_amplitude"])
    )
    if m["init"] == "uniform":
        init = UniformInit(m["u0"])
    elif m["init"] == "random":
        init = RandomInit(m["random_lo"], m["random_hi"])
    else:
        init = FrontInit(m["front_u_hi"], m["front_y_threshold"])
    stim = StimulusConfig(amplitude=m["stimulus_amplitude"]) if m["stimulus"] else None

    return SimulationConfig(
        params=params,
        model=m["model"],
        L=m["L"],
        h=m["h"],
        dt=m["dt"],
        t_final=m["t_final"],
        shape=shape,
        init=init,
        stimulus=stim,
        stationary=m["stationary"],
        output_every=m["output_every"],
        shift_margin_cells=m["shift_margin_cells"],
        seed=m["seed"],
        rd_tol=m["rd_tol"],
        ls_tol=m["ls_tol"],
        snapshot_every=m["snapshot_every"],
        redistance_every=m["redistance_every"],
        preset=m["preset"],
    )


def preset_runs(config: SimulationConfig) -> list[tuple[str, SimulationConfig]]:
    """Expand a sweep preset into its member runs; single presets map to a
    one-element list."""
    if config.preset not in SWEEP_CASES:
        return [(config.preset or "run", config)]
    runs = []
    for name, over in SWEEP_CASES[config.preset]:
        cfg = config
        params = cfg.params
        pkw = {k: over[k] for k in ("D_u", "D_v", "K", "C", "chi", "u_star", "M") if k in over}
        if pkw:
            params = replace(params, **pkw)
        kw = {k: over[k] for k in ("model", "t_final") if k in over}
        cfg = replace(cfg, params=params, **kw)
        runs.append((name, cfg))
    return runs


def render_config(config: SimulationConfig) -> str:
    """Canonical echo of a resolved configuration (round-trips through the
    parser)."""
    p = config.params
    lines = []
    if config.preset:
        lines.append(f'preset = "{config.preset}"')
    lines += [
        f'model = "{config.model}"',
        f"L = {config.L!r}",
        f"h = {config.h!r}",
        f"dt = {config.dt!r}",
        f"t_final = {config.t_final!r}",
        f"D_u = {p.D_u!r}",
        f"D_v = {p.D_v!r}",
        f"K = {p.K!r}",
        f"C = {p.C!r}",
        f"chi = {p.chi!r}",
        f"u_star = {p.u_star!r}",
        f"M = {p.M!r}",
    ]
    if isinstance(config.shape, CircleShape):
        lines += [
            'shape = "circle"',
            f"circle_center = [{config.shape.center[0]!r}, {config.shape.center[1]!r}]",
            f"circle_radius = {config.shape.radius!r}",
        ]
    else:
        lines += [
            'shape = "polar"',
            f"polar_base = {config.shape.base!r}",
            f"polar_amplitude = {config.shape.amplitude!r}",
        ]
    if isinstance(config.init, UniformInit):
        lines += ['init = "uniform"', f"u0 = {config.init.u0!r}"]
    elif isinstance(config.init, RandomInit):
        lines += [
            'init = "random"',
            f"random_lo = {config.init.lo!r}",
            f"random_hi = {config.init.hi!r}",
        ]
    else:
        lines += [
            'init = "front"',
            f"front_u_hi = {config.init.u_hi!r}",
            f"front_y_threshold = {config.init.y_threshold!r}",
        ]
    lines += [
        f"stimulus = {'true' if config.stimulus else 'false'}",
        f"stimulus_amplitude = {(config.stimulus.amplitude if config.stimulus else DEFAULTS['stimulus_amplitude'])!r}",
        f"stationary = {'true' if config.stationary else 'false'}",
        f"output_every = {config.output_every!r}",
        f"shift_margin_cells = {config.shift_margin_cells}",
        f"seed = {config.seed}",
        f"rd_tol = {config.rd_tol!r}",
        f"ls_tol = {config.ls_tol!r}",
        f"snapshot_every = {config.snapshot_every!r}",
        f"redistance_every = {config.redistance_every!r}",
    ]
    return "\n".join(lines) + "\n"
