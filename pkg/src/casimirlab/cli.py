"""Command-line front door: preset experiments with reproducible artifacts.

Each preset is fully determined by its config plus seed.  A run writes
``diagnostics.csv`` (floats printed with 17 significant digits, so re-running
an identical config yields a byte-identical file), ``summary.json`` (config
echo, per-functional initial/final/drift, pass/fail per threshold, wall
time), and optional state snapshots.  Exit status 0 iff all preset
thresholds pass.

Config is a single JSON document; ``--set key=value`` flags override file
entries (dotted paths, values parsed as JSON when possible).  Validation is
strict: unknown keys are rejected with a field diagnostic.  The output
directory resolves as flag > config > $CASIMIRLAB_OUT_DIR > ./runs/<preset>.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from . import finitedim as fd
from . import ion_kdv as ik
from . import vortex as vx
from .field_core import Field1D, Field2D, Grid1D, Grid2D, l2norm
from .poisson import State, casimir_residual, jacobi_residual

ENV_OUT_DIR = "CASIMIRLAB_OUT_DIR"


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending field."""


# ---------------------------------------------------------------------------
# snapshots: text header + little-endian float64 payload
# ---------------------------------------------------------------------------

_FIELD_NAMES = {
    "vortex1": ("omega",),
    "vortex2": ("omega", "psi"),
    "vortex3": ("omega", "psi", "psi2"),
    "ion": ("rho", "v"),
    "kdv": ("w",),
    "finite": ("z",),
}


def save_snapshot(path, state: State):
    """Write a state: ASCII header lines, 'end', then raw '<f8' payloads.

    2D payloads are row-major by y then x, matching the in-memory layout.
    """
    lines = ["casimirlab-snapshot 1", f"kind {state.kind}"]
    if state.kind == "finite":
        lines.append(f"point {state.parts[0].size}")
    elif state.kind in ("ion", "kdv"):
        g = state.parts[0].grid
        lines.append(f"grid1d {g.n} {g.l!r}")
    else:
        g = state.parts[0].grid
        lines.append(f"grid2d {g.nx} {g.ny} {g.lx!r} {g.ly!r}")
    lines.append("fields " + " ".join(_FIELD_NAMES[state.kind]))
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for p in state.parts:
            arr = p if isinstance(p, np.ndarray) else p.values
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_snapshot(path) -> State:
    with open(path, "rb") as fh:
        header = []
        while True:
            line = fh.readline().decode("ascii").rstrip("\n")
            header.append(line)
            if line == "end":
                break
            if len(header) > 16:
                raise ConfigError(f"{path}: malformed snapshot header")
        if not header[0].startswith("casimirlab-snapshot"):
            raise ConfigError(f"{path}: not a casimirlab snapshot")
        meta = {ln.split()[0]: ln.split()[1:] for ln in header[1:-1]}
        kind = meta["kind"][0]
        payload = fh.read()
    vals = np.frombuffer(payload, dtype="<f8")
    if kind == "finite":
        n = int(meta["point"][0])
        return State("finite", (vals[:n].astype(float),))
    if kind in ("ion", "kdv"):
        n, l = int(meta["grid1d"][0]), float(meta["grid1d"][1])
        grid = Grid1D(n, l)
        parts = tuple(
            Field1D(grid, vals[i * n : (i + 1) * n].astype(float))
            for i in range(len(meta["fields"]))
        )
    else:
        nx, ny = int(meta["grid2d"][0]), int(meta["grid2d"][1])
        lx, ly = float(meta["grid2d"][2]), float(meta["grid2d"][3])
        grid = Grid2D(nx, ny, lx, ly)
        sz = nx * ny
        parts = tuple(
            Field2D(grid, vals[i * sz : (i + 1) * sz].reshape(ny, nx).astype(float))
            for i in range(len(meta["fields"]))
        )
    return State(kind, parts)


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

_TOP_KEYS = {
    "preset",
    "grid",
    "dt",
    "t_end",
    "output_every",
    "seed",
    "initial",
    "watch",
    "out_dir",
    "snapshot",
}


def _type_name(v) -> str:
    return type(v).__name__


def _require_number(cfg: dict, key: str, positive=True):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config field '{key}': expected a number, got {_type_name(v)}")
    if positive and not v > 0:
        raise ConfigError(f"config field '{key}': must be positive, got {v}")


def _require_int(cfg: dict, key: str, positive=True, even=False, minimum=None, prefix=""):
    v = cfg[key]
    name = prefix + key
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"config field '{name}': expected an integer, got {_type_name(v)}")
    if positive and v <= 0:
        raise ConfigError(f"config field '{name}': must be positive, got {v}")
    if even and v % 2 != 0:
        raise ConfigError(f"config field '{name}': must be even, got {v}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"config field '{name}': must be >= {minimum}, got {v}")


def _check_keys(section: dict, allowed: set, where: str):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown config key '{where}{unknown[0]}' (allowed: {', '.join(sorted(allowed))})"
        )


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _set_dotted(cfg: dict, dotted: str, raw_value: str):
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    node = cfg
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set path '{dotted}' descends into a non-object")
    node[keys[-1]] = value


_INITIAL_POSITIVE_KEYS = {"c", "amplitude", "omega_amplitude", "psi_amplitude", "eps", "step"}
_INITIAL_NUMBER_KEYS = {"x0"}
_INITIAL_INT_KEYS = {"kmax", "omega_kmax", "psi_kmax"}
_INITIAL_MODE_LIST_KEYS = {"zeta_modes", "omega_modes", "psi_modes"}


def _validate_initial(initial: dict):
    for key, v in initial.items():
        where = f"initial.{key}"
        if key in _INITIAL_POSITIVE_KEYS or key in _INITIAL_NUMBER_KEYS:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"config field '{where}': expected a number, got {_type_name(v)}")
            if key in _INITIAL_POSITIVE_KEYS and not v > 0:
                raise ConfigError(f"config field '{where}': must be positive, got {v}")
        elif key in _INITIAL_INT_KEYS:
            _require_int(initial, key, prefix="initial.")
        elif key == "n_orbits":
            _require_int(initial, key, even=True, minimum=2, prefix="initial.")
        elif key == "modes":
            if not isinstance(v, list) or not all(isinstance(k, int) and k > 0 for k in v):
                raise ConfigError(f"config field '{where}': expected a list of positive mode numbers")
        elif key == "psi_seeds":
            if not isinstance(v, list) or len(v) != 2 or not all(isinstance(s, int) for s in v):
                raise ConfigError(f"config field '{where}': expected a list of two integer seeds")
        elif key in ("xi", "eta"):
            if v not in vx.PROFILES:
                raise ConfigError(
                    f"config field '{where}': unknown profile '{v}' "
                    f"(available: {', '.join(sorted(vx.PROFILES))})"
                )
        elif key == "kind":
            if v not in ("random", "taylor_green"):
                raise ConfigError(f"config field '{where}': expected 'random' or 'taylor_green'")
        elif key in _INITIAL_MODE_LIST_KEYS:
            ok = isinstance(v, list) and all(
                isinstance(m, list) and len(m) == 4
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in m)
                for m in v
            )
            if not ok:
                raise ConfigError(
                    f"config field '{where}': expected a list of [kx, ky, amplitude, phase] entries"
                )


@dataclass
class RunConfig:
    preset: str
    grid: dict
    dt: float
    t_end: float
    output_every: float
    seed: int
    initial: dict
    watch: list | None
    out_dir: str
    snapshot: bool

    def echo(self) -> dict:
        return {
            "preset": self.preset,
            "grid": self.grid,
            "dt": self.dt,
            "t_end": self.t_end,
            "output_every": self.output_every,
            "seed": self.seed,
            "initial": self.initial,
            "watch": self.watch,
            "out_dir": self.out_dir,
            "snapshot": self.snapshot,
        }


def parse_config(
    preset: str | None = None,
    path: str | None = None,
    sets: tuple[str, ...] = (),
    out_dir_flag: str | None = None,
) -> RunConfig:
    """Merge preset defaults, config file and --set overrides; validate strictly."""
    file_cfg: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            file_cfg = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: invalid JSON ({exc})") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"config file {path}: top level must be a JSON object")

    name = preset or file_cfg.get("preset")
    if name is None:
        raise ConfigError("no preset given (positional argument or 'preset' config key)")
    if preset and "preset" in file_cfg and file_cfg["preset"] != preset:
        raise ConfigError(
            f"preset mismatch: command line says '{preset}', config says '{file_cfg['preset']}'"
        )
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset '{name}' (valid presets: {', '.join(sorted(PRESETS))})"
        )
    spec = PRESETS[name]

    cfg = _deep_merge(copy.deepcopy(spec.defaults), file_cfg)
    cfg["preset"] = name
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got '{item}'")
        key, _, value = item.partition("=")
        _set_dotted(cfg, key.strip(), value.strip())

    _check_keys(cfg, _TOP_KEYS, "")
    _check_keys(cfg.get("grid", {}), spec.grid_keys, "grid.")
    _check_keys(cfg.get("initial", {}), spec.initial_keys, "initial.")

    for key in ("dt", "t_end", "output_every"):
        if key in cfg:
            _require_number(cfg, key)
    if "seed" in cfg:
        _require_int(cfg, "seed", positive=False)
    grid = cfg.get("grid", {})
    for key in ("n", "nx", "ny"):
        if key in grid:
            _require_int(grid, key, even=True, minimum=8, prefix="grid.")
    for key in ("l", "lx", "ly"):
        if key in grid:
            _require_number(grid, key)
    _validate_initial(cfg.get("initial", {}))
    watch = cfg.get("watch")
    if watch is not None:
        if not isinstance(watch, list) or not all(isinstance(w, str) for w in watch):
            raise ConfigError("config field 'watch': expected a list of functional names")
        unknown = sorted(set(watch) - set(spec.watch_names))
        if unknown:
            raise ConfigError(
                f"unknown watch functional '{unknown[0]}' for preset {name} "
                f"(available: {', '.join(spec.watch_names)})"
            )
    snapshot = cfg.get("snapshot", False)
    if not isinstance(snapshot, bool):
        raise ConfigError("config field 'snapshot': expected true/false")

    out_dir = (
        out_dir_flag
        or cfg.get("out_dir")
        or os.environ.get(ENV_OUT_DIR)
        or str(Path("runs") / name)
    )

    return RunConfig(
        preset=name,
        grid=grid,
        dt=float(cfg["dt"]),
        t_end=float(cfg["t_end"]),
        output_every=float(cfg.get("output_every", cfg["dt"])),
        seed=int(cfg.get("seed", 0)),
        initial=cfg.get("initial", {}),
        watch=watch,
        out_dir=str(out_dir),
        snapshot=snapshot,
    )


def _grid2d(cfg: RunConfig) -> Grid2D:
    g = cfg.grid
    nx = g.get("nx", g.get("n", 64))
    ny = g.get("ny", g.get("n", 64))
    lx = g.get("lx", g.get("l", 2 * math.pi))
    ly = g.get("ly", g.get("l", 2 * math.pi))
    return Grid2D(nx, ny, lx, ly)


def _grid1d(cfg: RunConfig) -> Grid1D:
    g = cfg.grid
    return Grid1D(g.get("n", 256), g.get("l", 2 * math.pi))


# ---------------------------------------------------------------------------
# checks and results
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    op: str  # '<=', '>=', '=='
    note: str = ""

    @property
    def passed(self) -> bool:
        if self.op == "<=":
            return self.value <= self.threshold
        if self.op == ">=":
            return self.value >= self.threshold
        return self.value == self.threshold

    def as_dict(self) -> dict:
        d = {
            "name": self.name,
            "value": self.value,
            "op": self.op,
            "threshold": self.threshold,
            "passed": self.passed,
        }
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class RunResult:
    checks: list[Check] = field(default_factory=list)
    series: dyn.DiagnosticSeries | None = None
    rows: list[dict] | None = None  # tabular CSV for presets without a time series
    extras: dict = field(default_factory=dict)
    snapshots: dict = field(default_factory=dict)
    failure: dict | None = None


def _watch_list(cfg: RunConfig, catalog: dict) -> list:
    names = cfg.watch if cfg.watch is not None else list(catalog)
    return [catalog[n] for n in names]


# ---------------------------------------------------------------------------
# preset runners
# ---------------------------------------------------------------------------


def _run_euler2d(cfg: RunConfig) -> RunResult:
    grid = _grid2d(cfg)
    rng = np.random.default_rng(cfg.seed)
    init = cfg.initial
    if init.get("kind", "random") == "taylor_green":
        amp = init.get("amplitude", 1.0)
        omega = Field2D.from_function(
            grid, lambda X, Y: amp * (np.sin(X) * np.sin(Y) + 0.5 * np.cos(2 * X))
        )
    else:
        omega = vx.random_vortex_state(
            1, grid, init.get("kmax", 4), rng, init.get("amplitude", 0.8)
        ).parts[0]
    H = vx.euler_energy(1)
    catalog = {
        "energy": H,
        "enstrophy": vx.make_casimir(vx.CasimirSpec("enstrophy", vx.PROFILES["square"])),
    }
    series, zf = dyn.run_and_record(
        dyn.Integrator("rk4", cfg.dt),
        vx.vortex_rhs(1, H),
        vx.state_i(omega),
        cfg.t_end,
        watch=_watch_list(cfg, catalog),
        output_every=cfg.output_every,
    )
    checks = [
        Check("energy_rel_drift", series.drift("euler_energy")[1], 1e-8, "<=")
        if "euler_energy" in series.labels
        else None,
        Check("enstrophy_rel_drift", series.drift("enstrophy[square]")[1], 1e-8, "<=")
        if "enstrophy[square]" in series.labels
        else None,
    ]
    return RunResult(
        checks=[c for c in checks if c], series=series, snapshots={"state_final": zf}
    )


def _run_rmhd2d(cfg: RunConfig) -> RunResult:
    grid = _grid2d(cfg)
    init = cfg.initial
    omega = vx.field_from_modes(grid, init.get("omega_modes", []))
    psi = vx.field_from_modes(
        grid, init.get("psi_modes", [[1, 0, 1.0, 0.0], [0, 2, 1.0, 0.0]])
    )
    H = vx.rmhd_energy(2)
    catalog = {
        "energy": H,
        "cross_helicity": vx.make_casimir(
            vx.CasimirSpec("cross_helicity", vx.PROFILES["identity"])
        ),
        "flux_sq": vx.make_casimir(vx.CasimirSpec("flux", vx.PROFILES["square"])),
        "enstrophy": vx.make_casimir(
            vx.CasimirSpec("enstrophy", vx.PROFILES["square"], level=2)
        ),
    }
    series, zf = dyn.run_and_record(
        dyn.Integrator("rk4", cfg.dt),
        vx.vortex_rhs(2, H),
        vx.state_ii(omega, psi),
        cfg.t_end,
        watch=_watch_list(cfg, catalog),
        output_every=cfg.output_every,
    )
    checks = []
    if "rmhd_energy" in series.labels:
        checks.append(Check("energy_rel_drift", series.drift("rmhd_energy")[1], 1e-6, "<="))
    if "cross_helicity[identity]" in series.labels:
        checks.append(
            Check("cross_helicity_drift", series.drift("cross_helicity[identity]")[0], 1e-6, "<=")
        )
    if "flux[square]" in series.labels:
        checks.append(Check("flux_sq_rel_drift", series.drift("flux[square]")[1], 1e-6, "<="))
    if "enstrophy[square]" in series.labels:
        growth = abs(series.final("enstrophy[square]") - series.initial("enstrophy[square]"))
        checks.append(
            Check(
                "enstrophy_growth",
                growth,
                1e-4,
                ">=",
                note="non-conserved (expected): generalized enstrophy is not a Casimir "
                "once the flux function enters the Hamiltonian",
            )
        )
    return RunResult(checks=checks, series=series, snapshots={"state_final": zf})


def _run_phantom2(cfg: RunConfig) -> RunResult:
    grid = _grid2d(cfg)
    init = cfg.initial
    rng = np.random.default_rng(cfg.seed)
    omega = vx.random_vortex_state(
        1, grid, init.get("omega_kmax", 4), rng, init.get("omega_amplitude", 0.8)
    ).parts[0]
    seeds = init.get("psi_seeds", [101, 202])
    if not (isinstance(seeds, list) and len(seeds) == 2):
        raise ConfigError("config field 'initial.psi_seeds': expected a list of two seeds")
    kmax = init.get("psi_kmax", 4)
    amp = init.get("psi_amplitude", 1.0)
    psis = [
        vx.random_vortex_state(1, grid, kmax, np.random.default_rng(int(s)), amp).parts[0]
        for s in seeds
    ]
    H = vx.euler_energy(2)
    rhs = vx.vortex_rhs(2, H)
    integ = dyn.Integrator("rk4", cfg.dt)
    za, zb = vx.state_ii(omega, psis[0]), vx.state_ii(omega, psis[1])
    n_steps = int(round(cfg.t_end / cfg.dt))
    stride = max(1, int(round(cfg.output_every / cfg.dt)))
    series = dyn.DiagnosticSeries(("omega_max_divergence", "euler_energy"))
    series.record(0.0, [0.0, H.value(za)])
    max_div = 0.0
    for n in range(1, n_steps + 1):
        za = dyn.step(integ, rhs, za)
        zb = dyn.step(integ, rhs, zb)
        d = float(np.max(np.abs(za.parts[0].values - zb.parts[0].values)))
        max_div = max(max_div, d)
        if n % stride == 0 or n == n_steps:
            series.record(n * cfg.dt, [d, H.value(za)])
    identical = all(
        np.array_equal(a.values, b.values) for a, b in zip(za.parts[:1], zb.parts[:1])
    )
    checks = [
        Check("omega_max_divergence", max_div, 0.0, "==",
              note="phantom field cannot influence the actual field"),
        Check("omega_bitwise_identical", 1.0 if identical else 0.0, 1.0, "=="),
    ]
    return RunResult(
        checks=checks,
        series=series,
        extras={"steps": n_steps, "psi_seeds": seeds},
        snapshots={"state_final": za},
    )


def _run_phantom3(cfg: RunConfig) -> RunResult:
    grid = _grid2d(cfg)
    init = cfg.initial
    rng = np.random.default_rng(cfg.seed)
    omega = vx.random_vortex_state(
        1, grid, init.get("omega_kmax", 4), rng, init.get("omega_amplitude", 0.8)
    ).parts[0]
    psi = vx.random_vortex_state(
        1, grid, init.get("psi_kmax", 4), rng, init.get("psi_amplitude", 1.0)
    ).parts[0]
    z0 = vx.state_iii(omega, psi, Field2D(grid, psi.values.copy()))
    H = vx.rmhd_energy(3)
    pair = vx.make_casimir(vx.CasimirSpec("flux_pair", vx.PROFILES["identity"]))
    rhs = vx.vortex_rhs(3, H)
    integ = dyn.Integrator("rk4", cfg.dt)
    n_steps = int(round(cfg.t_end / cfg.dt))
    stride = max(1, int(round(cfg.output_every / cfg.dt)))
    series = dyn.DiagnosticSeries(("psi_pair_divergence", "flux_pair[identity]", "rmhd_energy"))
    series.record(0.0, [0.0, pair.value(z0), H.value(z0)])
    z = z0
    max_div = 0.0
    for n in range(1, n_steps + 1):
        z = dyn.step(integ, rhs, z)
        d = float(np.max(np.abs(z.parts[1].values - z.parts[2].values)))
        max_div = max(max_div, d)
        if n % stride == 0 or n == n_steps:
            series.record(n * cfg.dt, [d, pair.value(z), H.value(z)])
    _, pair_rel = series.drift("flux_pair[identity]")
    checks = [
        Check("psi_pair_max_divergence", max_div, 0.0, "==",
              note="equal initial data evolves under one identical generator"),
        Check("flux_pair_rel_drift", pair_rel, 1e-6, "<="),
    ]
    return RunResult(checks=checks, series=series, snapshots={"state_final": z})


def _run_kernel_deficit(cfg: RunConfig) -> RunResult:
    grid = _grid2d(cfg)
    init = cfg.initial
    zeta = vx.field_from_modes(
        grid, init.get("zeta_modes", [[1, 0, 1.0, 0.0], [0, 1, 1.0, 0.0]])
    )
    xi = vx.PROFILES[init.get("xi", "square")]
    eta = vx.PROFILES[init.get("eta", "identity")]
    z = vx.make_kernel_state(zeta, xi, eta)
    omega, psi = z.parts
    from .field_core import bracket2d

    commutator = bracket2d(omega, psi).max_abs()
    rows = [{"case": "commutator_max", "value": commutator}]
    checks = [Check("kernel_commutator", commutator, 1e-9, "<=")]
    J2 = vx.vortex_operator(2)
    for gname in ("identity", "square", "sin"):
        C1 = vx.make_casimir(vx.CasimirSpec("cross_helicity", vx.PROFILES[gname]))
        r = casimir_residual(C1, z, J2)
        rows.append({"case": f"cross_helicity_residual[{gname}]", "value": r})
        checks.append(Check(f"cross_helicity_residual_{gname}", r, 1e-9, "<="))
    witness = vx.function_dependence_witness(omega, psi, psi_gap=0.1)
    found = witness is not None
    rows.append({"case": "deficit_witness_found", "value": float(found)})
    checks.append(
        Check(
            "deficit_witness",
            1.0 if found else 0.0,
            1.0,
            "==",
            note="two grid points share omega but differ in psi: psi is not a "
            "function of omega, so no single-field profile integrates this kernel element",
        )
    )
    extras = {"witness": witness}
    return RunResult(checks=checks, rows=rows, extras=extras, snapshots={"state_kernel": z})


def _run_singular_leaf(cfg: RunConfig) -> RunResult:
    grid = _grid2d(cfg)
    rng = np.random.default_rng(cfg.seed)
    init = cfg.initial
    omega = vx.random_vortex_state(
        1, grid, init.get("omega_kmax", 4), rng, init.get("omega_amplitude", 0.8)
    ).parts[0]
    z0 = vx.state_ii(omega, Field2D.zeros(grid))
    H = vx.rmhd_energy(2)
    leaf = vx.Functional(
        "leaf_norm_sq", lambda z: vx.singular_leaf_indicator(z.parts[1])[0]
    )
    interior = vx.make_casimir(vx.CasimirSpec("enstrophy", vx.PROFILES["square"], level=2))
    series, zf = dyn.run_and_record(
        dyn.Integrator("rk4", cfg.dt),
        vx.vortex_rhs(2, H),
        z0,
        cfg.t_end,
        watch=[leaf, interior, H],
        output_every=cfg.output_every,
    )
    max_leaf = max(series.values["leaf_norm_sq"])
    on_leaf_end = vx.singular_leaf_indicator(zf.parts[1])[1]
    res_on = vx.interior_casimir_residual(omega, vx.PROFILES["square"])
    psi_off = Field2D.from_function(grid, lambda X, Y: np.sin(X))
    z_off = vx.state_ii(omega, psi_off)
    g_in = State(
        "vortex2",
        (Field2D(grid, 2.0 * omega.values), Field2D.zeros(grid)),
    )
    off_norm = l2norm(vx.apply_j2(z_off, g_in).parts[1])
    checks = [
        Check("leaf_indicator_max", max_leaf, 1e-20, "<=",
              note="an orbit starting on the leaf psi = 0 stays on it"),
        Check("on_leaf_at_end", 1.0 if on_leaf_end else 0.0, 1.0, "=="),
        Check("interior_enstrophy_rel_drift", series.drift("enstrophy[square]")[1], 1e-8, "<=",
              note="on the leaf, the subsystem conserves its own Casimir"),
        Check("interior_residual_on_leaf", res_on, 1e-9, "<="),
        Check("interior_residual_off_leaf", off_norm, 1e-3, ">=",
              note="off psi = 0 the same gradient is no longer annihilated"),
    ]
    return RunResult(checks=checks, series=series, snapshots={"state_final": zf})


def _run_finitedim(cfg: RunConfig) -> RunResult:
    init = cfg.initial
    rng = np.random.default_rng(cfg.seed)
    m = init.get("n_orbits", 100) // 2

    # loop family: closed level sets around a center off the singular plane
    a = rng.uniform(0.55, 0.95, m) * rng.choice([-1.0, 1.0], m)
    b = rng.uniform(-0.5, 0.5, m)
    q = rng.uniform(0.8, 1.2, m)
    loops = np.zeros((10, m))
    loops[0] = q * (a * a + b * b) / 2
    loops[1] = -q * a
    loops[2] = -q * b
    loops[3] = q / 2
    loops[5] = q / 2
    loops[6:10] = rng.uniform(-0.04, 0.04, (4, m))
    th = rng.uniform(0, 2 * math.pi, m)
    r = rng.uniform(0.05, 0.22, m)
    z0_loops = np.vstack([a + r * np.cos(th), b + r * np.sin(th)])

    # well family: confining well at the origin; orbits stall toward x = 0
    wells = np.zeros((10, m))
    wells[3] = rng.uniform(0.8, 1.2, m) / 2
    wells[5] = wells[3]
    wells[1:3] = rng.uniform(-0.1, 0.1, (2, m))
    wells[4] = rng.uniform(-0.2, 0.2, m)
    wells[6:10] = rng.uniform(-0.05, 0.05, (4, m))
    z0_wells = np.vstack(
        [
            rng.uniform(0.25, 0.7, m) * rng.choice([-1.0, 1.0], m),
            rng.uniform(-0.7, 0.7, m),
        ]
    )

    eps_fixed = init.get("eps", 0.05)
    rows = []
    all_checks = []

    def y_eps(xabs, eps):
        return 0.5 * (1.0 + math.erf(xabs / eps))

    for family, coeffs, z0 in (("loops", loops, z0_loops), ("wells", wells, z0_wells)):
        res = fd.simulate_plane_orbits(coeffs, z0, cfg.t_end, cfg.dt)
        mn, mx = res["x_min_signed"], res["x_max_signed"]
        sign_ok = bool(res["sign_ok"].all())
        drifts = []
        for x0, lo, hi in zip(np.abs(res["x0"]), mn, mx):
            eps = eps_fixed if family == "loops" else min(eps_fixed, lo / 4.0)
            drifts.append(
                max(abs(y_eps(lo, eps) - y_eps(x0, eps)), abs(y_eps(hi, eps) - y_eps(x0, eps)))
            )
        for i in range(mn.size):
            rows.append(
                {
                    "case": f"{family}_{i}",
                    "x0": res["x0"][i],
                    "min_signed_x": mn[i],
                    "max_signed_x": mx[i],
                    "y_drift": drifts[i],
                }
            )
        all_checks.append(
            Check(f"{family}_sign_conserved", 1.0 if sign_ok else 0.0, 1.0, "==")
        )
        all_checks.append(Check(f"{family}_y_eps_drift_max", max(drifts), 1e-6, "<="))

    for eps in (0.05, 0.1, 0.5):
        nu_x, nu_y = fd.kernel_basis_regularized(eps)
        rx = fd.closedness_residual(nu_x)
        ry = fd.closedness_residual(nu_y)
        rows.append({"case": f"closedness_nu_x_eps_{eps}", "value": rx})
        rows.append({"case": f"closedness_nu_y_eps_{eps}", "value": ry})
        all_checks.append(Check(f"closedness_nu_x_eps_{eps}", rx, 1e-8, "<="))
        all_checks.append(
            Check(f"closedness_nu_y_eps_{eps}", ry, 1.0, ">=",
                  note="not a closed 1-form: no Casimir integrates this kernel element")
        )
    return RunResult(checks=all_checks, rows=rows)


def _run_ionacoustic1d(cfg: RunConfig) -> RunResult:
    grid = _grid1d(cfg)
    init = cfg.initial
    modes = init.get("modes", [1, 2])
    amp = init.get("amplitude", 1e-4)
    H = ik.ion_energy()
    checks = []
    extras = {"modes": {}}
    series_by_mode = {}
    for k in modes:
        z0 = ik.acoustic_mode_state(grid, int(k), amp)
        series, _ = dyn.run_and_record(
            dyn.Integrator("rk4", cfg.dt),
            ik.ion_rhs,
            z0,
            cfg.t_end,
            watch=[ik.mode_amplitude(int(k)), H, ik.total_mass(), ik.momentum()],
            output_every=cfg.output_every,
        )
        series_by_mode[int(k)] = series
        measured = dyn.estimate_frequency(series.times, series.values[f"mode_cos_{k}"])
        theory = ik.acoustic_dispersion(float(k))
        rel = abs(measured - theory) / theory
        extras["modes"][str(k)] = {"measured_omega": measured, "theory_omega": theory}
        checks.append(Check(f"dispersion_rel_error_k{k}", rel, 1e-2, "<="))
        checks.append(Check(f"energy_rel_drift_k{k}", series.drift("ion_energy")[1], 1e-7, "<="))
        checks.append(Check(f"mass_rel_drift_k{k}", series.drift("mass")[1], 1e-7, "<="))
        checks.append(Check(f"momentum_drift_k{k}", series.drift("momentum")[1], 1e-7, "<="))
    first = int(modes[0])
    return RunResult(
        checks=checks,
        series=series_by_mode[first],
        extras=extras | {"extra_series": {k: s for k, s in series_by_mode.items() if k != first}},
    )


def _run_kdv_soliton(cfg: RunConfig) -> RunResult:
    grid = _grid1d(cfg)
    init = cfg.initial
    c = init.get("c", 1.0)
    x0 = init.get("x0", 10.0)
    w0 = ik.kdv_soliton(c, x0, grid)
    z0 = ik.kdv_state(w0)
    watch = [ik.kdv_mass(), ik.kdv_momentum(), ik.kdv_energy()]
    series, zf = dyn.run_and_record(
        dyn.Integrator("if_rk4", cfg.dt), None, z0, cfg.t_end,
        watch=watch, output_every=cfg.output_every,
    )
    exact = ik.kdv_soliton(c, x0 + c * cfg.t_end, grid)
    err = float(np.max(np.abs(zf.parts[0].values - exact.values)))
    checks = [
        Check("soliton_linf_error", err, 1e-3, "<="),
        Check("mass_drift", series.drift("kdv_mass")[0], 1e-12, "<="),
        Check("momentum_rel_drift", series.drift("kdv_momentum")[1], 1e-8, "<="),
        Check("energy_rel_drift", series.drift("kdv_energy")[1], 1e-7, "<="),
    ]
    return RunResult(checks=checks, series=series, snapshots={"state_final": zf})


def _run_jacobi_check(cfg: RunConfig) -> RunResult:
    rng = np.random.default_rng(cfg.seed)
    step = cfg.initial.get("step", 1e-5)

    def rand_cubic():
        c = rng.uniform(-0.2, 0.2, 10)
        return fd.cubic_functional(c)

    def rand_quadratic():
        c = np.zeros(10)
        c[:6] = rng.uniform(-0.5, 0.5, 6)
        return fd.cubic_functional(c, "quadratic")

    rows = []
    checks = []
    z2 = State("finite", (rng.uniform(-1.0, 1.0, 2),))
    r = max(
        jacobi_residual(fd.canonical_operator(), z2, rand_quadratic(), rand_quadratic(), rand_quadratic(), step)
        for _ in range(5)
    )
    rows.append({"case": "canonical_quadratics", "value": r})
    checks.append(Check("jacobi_canonical", r, 1e-8, "<="))

    r = max(
        jacobi_residual(fd.x_scaled_canonical_operator(), State("finite", (rng.uniform(-1, 1, 2),)),
                        rand_cubic(), rand_cubic(), rand_cubic(), step)
        for _ in range(5)
    )
    rows.append({"case": "x_scaled_cubics", "value": r})
    checks.append(Check("jacobi_x_scaled", r, 1e-8, "<="))

    coords = [fd.coordinate_functional(i) for i in range(3)]
    z3 = State("finite", (np.array([0.4, 0.8, 0.6]),))
    r_ok = jacobi_residual(fd.so3_operator(), z3, *coords, step)
    r_bad = jacobi_residual(fd.broken_so3_operator(), z3, *coords, step)
    rows.append({"case": "so3_coordinates", "value": r_ok})
    rows.append({"case": "broken_so3_coordinates", "value": r_bad})
    checks.append(Check("jacobi_so3", r_ok, 1e-8, "<="))
    checks.append(Check("jacobi_broken_so3", r_bad, 1e-3, ">=",
                        note="the cyclic sum detects a genuine violation"))
    return RunResult(checks=checks, rows=rows)


# ---------------------------------------------------------------------------
# preset registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    defaults: dict
    runner: object
    grid_keys: frozenset = frozenset({"n", "nx", "ny", "l", "lx", "ly"})
    initial_keys: frozenset = frozenset()
    watch_names: tuple = ()


PRESETS = {
    p.name: p
    for p in (
        Preset(
            "euler2d",
            "single-field vortex dynamics; energy and enstrophy conservation",
            {"grid": {"n": 64}, "dt": 1e-2, "t_end": 10.0, "output_every": 0.1, "seed": 12,
             "initial": {"kind": "random", "kmax": 4, "amplitude": 0.8}},
            _run_euler2d,
            initial_keys=frozenset({"kind", "kmax", "amplitude"}),
            watch_names=("energy", "enstrophy"),
        ),
        Preset(
            "rmhd2d",
            "two-field dynamics: flux-coupled Hamiltonian breaks enstrophy conservation",
            {"grid": {"n": 64}, "dt": 1e-3, "t_end": 1.0, "output_every": 0.01, "seed": 0,
             "initial": {"omega_modes": [], "psi_modes": [[1, 0, 1.0, 0.0], [0, 2, 1.0, 0.0]]}},
            _run_rmhd2d,
            initial_keys=frozenset({"omega_modes", "psi_modes"}),
            watch_names=("energy", "cross_helicity", "flux_sq", "enstrophy"),
        ),
        Preset(
            "phantom2",
            "two psi seeds, one omega trajectory: bitwise phantom invariance",
            {"grid": {"n": 64}, "dt": 1e-2, "t_end": 10.0, "output_every": 0.1, "seed": 12,
             "initial": {"omega_kmax": 4, "omega_amplitude": 0.8, "psi_kmax": 4,
                          "psi_amplitude": 1.0, "psi_seeds": [101, 202]}},
            _run_phantom2,
            initial_keys=frozenset(
                {"omega_kmax", "omega_amplitude", "psi_kmax", "psi_amplitude", "psi_seeds"}
            ),
        ),
        Preset(
            "phantom3",
            "three-field run with equal flux fields: one generator, bitwise equal orbits",
            {"grid": {"n": 64}, "dt": 1e-2, "t_end": 5.0, "output_every": 0.1, "seed": 12,
             "initial": {"omega_kmax": 4, "omega_amplitude": 0.8, "psi_kmax": 4,
                          "psi_amplitude": 1.0}},
            _run_phantom3,
            initial_keys=frozenset({"omega_kmax", "omega_amplitude", "psi_kmax", "psi_amplitude"}),
        ),
        Preset(
            "kernel_deficit",
            "kernel state (omega, psi) = (xi(zeta), eta(zeta)) and the deficit witness",
            {"grid": {"n": 128}, "dt": 1e-2, "t_end": 1.0, "seed": 0,
             "initial": {"zeta_modes": [[1, 0, 1.0, 0.0], [0, 1, 1.0, 0.0]],
                          "xi": "square", "eta": "identity"}},
            _run_kernel_deficit,
            initial_keys=frozenset({"zeta_modes", "xi", "eta"}),
        ),
        Preset(
            "singular_leaf",
            "orbit on the leaf psi = 0: leaf indicator and interior Casimir",
            {"grid": {"n": 64}, "dt": 1e-2, "t_end": 5.0, "output_every": 0.1, "seed": 12,
             "initial": {"omega_kmax": 4, "omega_amplitude": 0.8}},
            _run_singular_leaf,
            initial_keys=frozenset({"omega_kmax", "omega_amplitude"}),
        ),
        Preset(
            "finitedim",
            "orbit batch for J = x * Jc: sign invariance, step-function drift, closedness",
            {"dt": 1e-3, "t_end": 20.0, "seed": 42, "initial": {"n_orbits": 100, "eps": 0.05}},
            _run_finitedim,
            grid_keys=frozenset(),
            initial_keys=frozenset({"n_orbits", "eps"}),
        ),
        Preset(
            "ionacoustic1d",
            "acoustic mode dispersion against k/sqrt(1+k^2) plus invariant drifts",
            {"grid": {"n": 128}, "dt": 1e-2, "t_end": 50.0, "output_every": 0.05, "seed": 0,
             "initial": {"modes": [1, 2], "amplitude": 1e-4}},
            _run_ionacoustic1d,
            initial_keys=frozenset({"modes", "amplitude"}),
        ),
        Preset(
            "kdv_soliton",
            "soliton transport against the exact translated profile",
            {"grid": {"n": 512, "l": 40.0}, "dt": 1e-3, "t_end": 10.0, "output_every": 0.1,
             "seed": 0, "initial": {"c": 1.0, "x0": 10.0}},
            _run_kdv_soliton,
            initial_keys=frozenset({"c", "x0"}),
        ),
        Preset(
            "jacobi_check",
            "finite-difference Jacobi residuals for sound and broken operators",
            {"dt": 1e-2, "t_end": 1.0, "seed": 7, "initial": {"step": 1e-5}},
            _run_jacobi_check,
            grid_keys=frozenset(),
            initial_keys=frozenset({"step"}),
        ),
    )
}


# ---------------------------------------------------------------------------
# artifact writing and entry points
# ---------------------------------------------------------------------------


def _write_rows_csv(path, rows: list[dict]):
    keys = []
    for row in rows:
        for k in row:
            if k not in keys:
                keys.append(k)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            cells = []
            for k in keys:
                v = row.get(k, "")
                cells.append(f"{v:.17g}" if isinstance(v, float) else str(v))
            fh.write(",".join(cells) + "\n")


def run_preset(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = PRESETS[cfg.preset]
    t0 = time.perf_counter()
    failure = None
    try:
        result = spec.runner(cfg)
    except dyn.IntegrationError as exc:
        result = RunResult(series=exc.series)
        failure = {"step": exc.step_index, "message": str(exc)}
    wall = time.perf_counter() - t0

    if result.series is not None:
        result.series.to_csv(out_dir / "diagnostics.csv")
    if result.rows:
        _write_rows_csv(out_dir / ("diagnostics.csv" if result.series is None else "table.csv"),
                        result.rows)
    for extra_k, extra_s in result.extras.get("extra_series", {}).items():
        extra_s.to_csv(out_dir / f"diagnostics_k{extra_k}.csv")
    if cfg.snapshot:
        for name, state in result.snapshots.items():
            save_snapshot(out_dir / f"{name}.snap", state)

    functionals = {}
    if result.series is not None and result.series.times:
        for lab in result.series.labels:
            absd, reld = result.series.drift(lab)
            functionals[lab] = {
                "initial": result.series.initial(lab),
                "final": result.series.final(lab),
                "abs_drift": absd,
                "rel_drift": reld,
            }
    passed = failure is None and all(c.passed for c in result.checks)
    summary = {
        "preset": cfg.preset,
        "config": cfg.echo(),
        "functionals": functionals,
        "checks": [c.as_dict() for c in result.checks],
        "pass": passed,
        "wall_time_s": wall,
        "failure": failure,
    }
    extras = {k: v for k, v in result.extras.items() if k != "extra_series"}
    if extras:
        summary["extras"] = extras
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, default=repr)
        fh.write("\n")

    for c in result.checks:
        status = "pass" if c.passed else "FAIL"
        note = f"  ({c.note})" if c.note else ""
        print(f"[{status}] {c.name}: {c.value:.6g} {c.op} {c.threshold:g}{note}")
    if failure is not None:
        print(f"[FAIL] run aborted: {failure['message']}")
    print(f"artifacts in {out_dir}  wall {wall:.2f}s  overall: {'pass' if passed else 'FAIL'}")
    return 0 if passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="casimirlab",
        description="preset experiments for degenerate Poisson systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a preset experiment")
    p_run.add_argument("preset", help="preset name (see list-presets)")
    p_run.add_argument("--config", help="JSON config file")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry (dotted path, JSON value)")
    p_run.add_argument("--out-dir", help="artifact directory")

    sub.add_parser("list-presets", help="list preset names and descriptions")

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    args = parser.parse_args(argv)

    if args.command == "list-presets":
        for name in sorted(PRESETS):
            print(f"{name:16s} {PRESETS[name].description}")
        return 0

    try:
        if args.command == "validate":
            cfg = parse_config(path=args.config, sets=tuple(args.set))
            print(json.dumps(cfg.echo(), indent=2))
            print("config ok")
            return 0
        cfg = parse_config(
            preset=args.preset,
            path=args.config,
            sets=tuple(args.set),
            out_dir_flag=args.out_dir,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_preset(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
