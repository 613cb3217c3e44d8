"""Command-line front end.

Every subcommand resolves one flat configuration (built-in defaults, then an
optional ``key=value`` file, then command-line flags), runs a sweep and writes
CSV tables whose ``#`` header echoes the resolved configuration.  The worker
count and output directory are deliberately left out of the header so that
outputs are byte-identical for any degree of parallelism.

Exit codes: 0 success, 1 failed self-test or other numerical error,
2 configuration error, 3 eigensolver non-convergence.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import io as tables
from .circuit_modes import LineSpec, check_sum_rule, decompose_modes
from .errors import ConfigError, NotConverged, SchmidLabError
from .parallel import default_workers

COMMANDS = ("modes", "renorm", "crossings", "bands", "gap", "observables", "spectral", "converge", "selftest")

# key -> (kind, default); kinds are parsed by _convert
KEYS: dict[str, tuple[str, str]] = {
    "ej": ("float", "0.5"),
    "wp": ("float", "2"),
    "nm": ("int", "6"),
    "z": ("float", "1"),
    "nu": ("float", "0"),
    "zgrid": ("grid", "0.05:2:40"),
    "nugrid": ("grid", "0:0.5:11"),
    "phigrid": ("grid", "-0.5:0.5:21"),
    "sizes": ("intgrid", "8,16,32,64"),
    "ecut": ("float", "15"),
    "nbands": ("int", "5"),
    "ecut_grid": ("grid", "6,9,12,15"),
    "nbands_grid": ("intgrid", "2,3,4,5,6"),
    "ewindow": ("window", "0.3,0.6"),
    "n_energies": ("int", "601"),
    "gamma": ("float", "0.02"),
    "k": ("int", "12"),
    "tol": ("float", "1e-10"),
    "max_restarts": ("optint", "none"),
    "m_max": ("int", "30"),
    "pgm": ("bool", "false"),
    "out": ("str", "."),
    "workers": ("optint", "none"),
}

# per-command defaults matching the figure each command reproduces
COMMAND_DEFAULTS: dict[str, dict[str, str]] = {
    "renorm": {"ej": "1", "zgrid": "0.05:2:400"},
    "crossings": {"wp": "5", "nm": "16", "zgrid": "0.3:2:400"},
    "spectral": {"ej": "0.1", "wp": "5", "nm": "16", "ecut": "14", "nbands": "3", "k": "6"},
}

_UNRECORDED = ("out", "workers")


def parse_grid(text: str, key: str = "grid") -> np.ndarray:
    """``a:b:n`` (inclusive linspace), ``a,b,c`` or a single number."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ValueError
            grid = np.linspace(lo, hi, n)
        else:
            grid = np.array([float(v) for v in text.split(",") if v.strip()], float)
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r} for {key}", key) from None
    if grid.size == 0:
        raise ConfigError(f"{key} grid is empty", key)
    if not np.all(np.isfinite(grid)):
        raise ConfigError(f"{key} grid has non-finite entries", key)
    if np.any(np.diff(grid) <= 0):
        raise ConfigError(f"{key} grid must be strictly ascending", key)
    return grid


def _convert(key: str, text: str):
    kind = KEYS[key][0]
    text = str(text).strip()
    try:
        if kind == "float":
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind == "int":
            return int(text)
        if kind == "optint":
            return None if text.lower() in ("", "none") else int(text)
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == "str":
            return text
    except ValueError:
        raise ConfigError(f"invalid value {text!r} for {key}", key) from None
    if kind == "grid":
        return parse_grid(text, key)
    if kind == "intgrid":
        grid = parse_grid(text, key)
        if np.any(grid != np.round(grid)):
            raise ConfigError(f"{key} must contain integers", key)
        return grid.astype(int)
    if kind == "window":
        grid = parse_grid(text, key)
        if grid.size != 2:
            raise ConfigError(f"{key} needs exactly two ascending values", key)
        return grid
    raise AssertionError(kind)


def _normalize_key(key: str) -> str:
    return key.strip().replace("-", "_").lower()


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}", "config") from None
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = _normalize_key(key)
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value", key or "config")
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key)
        raw[key] = value.strip()
    return raw


@dataclass
class RunConfig:
    command: str
    values: dict
    raw: dict

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def spec(self, **changes) -> LineSpec:
        fields = {"ej": self.ej, "wp": self.wp, "n_modes": self.nm, "z": self.z}
        fields.update(changes)
        try:
            return LineSpec(**fields)
        except ValueError as exc:
            raise ConfigError(str(exc), str(exc).split()[0]) from None

    def settings(self, **changes):
        from .spectrum import DiagSettings

        base = DiagSettings(
            e_cut=self.ecut,
            n_bands=self.nbands,
            k=self.k,
            tol=self.tol,
            m_max=self.m_max,
            max_restarts=self.max_restarts,
        )
        return base.replace(**changes)

    def header(self) -> dict:
        meta = {"command": self.command, "version": __version__}
        for key in KEYS:
            if key in _UNRECORDED:
                continue
            meta[key] = self.raw[key]
        return meta


def resolve_config(command: str, flags: dict[str, str | None], config_path=None) -> RunConfig:
    """Merge defaults, the config file and flags (flags win) and validate."""
    raw = {k: v[1] for k, v in KEYS.items()}
    raw.update(COMMAND_DEFAULTS.get(command, {}))
    if config_path is not None:
        raw.update(read_config_file(config_path))
    raw.update({k: v for k, v in flags.items() if v is not None})
    values = {key: _convert(key, text) for key, text in raw.items()}
    if values["workers"] is None:
        values["workers"] = default_workers()
    if values["workers"] < 1:
        raise ConfigError("workers must be >= 1", "workers")
    for key in ("k", "nbands", "m_max", "n_energies"):
        if values[key] < 1:
            raise ConfigError(f"{key} must be >= 1", key)
    for key in ("ecut", "gamma", "tol"):
        if values[key] <= 0:
            raise ConfigError(f"{key} must be positive", key)
    if values["nm"] < 0:
        raise ConfigError("nm must be >= 0", "nm")
    # canonical text of every key, so headers do not depend on how a value was typed
    return RunConfig(command, values, {k: _canonical(values[k]) for k in KEYS})


def _canonical(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, np.ndarray):
        return ",".join(tables._format(v) for v in value.tolist())
    return tables._format(value)


def _output_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}", "out") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable", "out")
    return out


def _emit(cfg: RunConfig, name: str, columns, rows, extra: dict | None = None) -> Path:
    meta = cfg.header()
    meta.update(extra or {})
    path = tables.write_table(_output_dir(cfg) / name, columns, rows, meta)
    print(f"wrote {path}")
    return path


def cmd_modes(cfg: RunConfig) -> int:
    md = decompose_modes(cfg.spec())
    rows = [(k + 1, md.omega[k], md.g[k], md.p_row0[k + 1]) for k in range(md.n_modes)]
    _emit(cfg, "modes.csv", ("k", "omega", "g", "p0k"), rows,
          {"p00": md.p00, "sum_rule_residual": check_sum_rule(md)})
    return 0


def cmd_renorm(cfg: RunConfig) -> int:
    from .renormalization import slope_at_critical, sweep_flow

    sizes = [int(n) for n in cfg.sizes]
    flow = sweep_flow(cfg.wp, cfg.ej, cfg.zgrid, sizes)
    rows = [(p.n_modes, p.delta, p.z, p.ej_tilde, p.ec_tilde, p.ratio) for p in flow.points]
    _emit(cfg, "renorm.csv", ("n_modes", "delta", "z", "ej_tilde", "ec_tilde", "ratio"), rows)
    cross = [(a, b, z) for (a, b), zs in flow.crossings.items() for z in zs]
    _emit(cfg, "renorm_crossings.csv", ("n_small", "n_large", "z_star"), cross)
    if len(sizes) >= 4:
        fit = slope_at_critical(cfg.wp, cfg.ej, sizes)
        rows = list(zip(sizes, fit.deltas.tolist(), fit.slopes.tolist()))
        _emit(cfg, "renorm_slope.csv", ("n_modes", "delta", "slope"), rows,
              {"fit_a": fit.a, "fit_b": fit.b, "fit_r2": fit.r2})
    return 0


def cmd_crossings(cfg: RunConfig) -> int:
    from .renormalization import charge_crossings

    z_star = charge_crossings(cfg.wp, cfg.zgrid, cfg.nm)
    rows = [(k + 1, z) for k, z in enumerate(z_star.tolist())]
    _emit(cfg, "crossings.csv", ("mode", "z_star"), rows)
    return 0


def cmd_bands(cfg: RunConfig) -> int:
    from .spectrum import BAND_COLUMNS, band_sweep

    table = band_sweep(cfg.spec(), cfg.zgrid, cfg.nugrid, settings=cfg.settings(), workers=cfg.workers)
    _emit(cfg, "bands.csv", BAND_COLUMNS, table.rows(), {"delta": table.delta})
    return 0


def cmd_gap(cfg: RunConfig) -> int:
    from .observables import zone_edge_gap

    table = zone_edge_gap(cfg.spec(), cfg.zgrid, cfg.settings(), workers=cfg.workers)
    rows = list(zip(table.z.tolist(), table.gap.tolist(), table.rescaled.tolist()))
    _emit(cfg, "gap.csv", ("z", "gap", "rescaled_gap"), rows, {"delta": table.delta})
    return 0


def cmd_observables(cfg: RunConfig) -> int:
    from .observables import cooper_pair_box_variance, ground_observables

    obs = ground_observables(cfg.spec(), cfg.zgrid, cfg.settings(), workers=cfg.workers)
    rows = [(o.z, o.energy, o.sigma2, o.cos_phi, o.purity) for o in obs]
    _emit(cfg, "observables.csv", ("z", "energy", "sigma2", "cos_phi", "purity"), rows,
          {"cpb_sigma2": cooper_pair_box_variance(cfg.ej, cfg.m_max)})
    return 0


def cmd_spectral(cfg: RunConfig) -> int:
    from .observables import flux_sweep

    smap = flux_sweep(cfg.spec(), cfg.phigrid, cfg.gamma, tuple(cfg.ewindow), cfg.settings(),
                      n_energies=cfg.n_energies, workers=cfg.workers)
    rows = [
        (phi, e, d)
        for phi, line in zip(smap.phi.tolist(), smap.values.tolist())
        for e, d in zip(smap.energies.tolist(), line)
    ]
    _emit(cfg, "spectral.csv", ("phi", "energy", "D"), rows)
    if cfg.pgm:
        # energy increases upwards, flux left to right
        path = tables.write_pgm(_output_dir(cfg) / "spectral.pgm", smap.values.T[::-1])
        print(f"wrote {path}")
    return 0


def cmd_converge(cfg: RunConfig) -> int:
    from .spectrum import convergence_study

    ct = convergence_study(cfg.spec(), cfg.nu, cfg.ecut_grid, cfg.nbands_grid, cfg.settings(),
                           workers=cfg.workers)
    rows = [
        (float(ec), int(nb), lvl, float(ct.levels[i, j, lvl]))
        for i, ec in enumerate(ct.e_cut_grid)
        for j, nb in enumerate(ct.n_bands_grid)
        for lvl in range(ct.levels.shape[2])
    ]
    _emit(cfg, "converge.csv", ("e_cut", "n_bands", "level", "energy"), rows)
    return 0


def cmd_selftest(cfg: RunConfig) -> int:
    import scipy.sparse as sp

    from .eigensolver import dense_eigenpairs, lanczos_eigenpairs
    from .polaron_oracle import shift_spectrum_check

    checks = []
    worst = 0.0
    for wp in (2.0, 5.0):
        for n in (4, 16, 64):
            for z in (0.05, 1.0, 2.0):
                worst = max(worst, check_sum_rule(decompose_modes(LineSpec(0.5, wp, n, z))))
    checks.append(("sum rule", worst, 1e-10))
    worst = max(shift_spectrum_check(w, g, q, 60) for w, g, q in ((1.0, 0.3, 1), (0.7, 0.5, -2), (2.0, 1.1, 3)))
    checks.append(("shift identity", worst, 1e-10))
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(3):
        a = sp.random(800, 800, density=0.01, random_state=rng)
        h = (a + a.T + sp.diags(rng.normal(size=800))).tocsr()
        dense = dense_eigenpairs(h, 8).eigenvalues
        iterative = lanczos_eigenpairs(h, 8, 1e-12).eigenvalues
        worst = max(worst, float(np.max(np.abs(dense - iterative))))
    checks.append(("dense vs iterative", worst, 1e-10))
    ok = True
    for name, value, tol in checks:
        passed = value <= tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {value:.3e} (tol {tol:.0e})")
    return 0 if ok else 1


HANDLERS = {
    "modes": cmd_modes,
    "renorm": cmd_renorm,
    "crossings": cmd_crossings,
    "bands": cmd_bands,
    "gap": cmd_gap,
    "observables": cmd_observables,
    "spectral": cmd_spectral,
    "converge": cmd_converge,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schmid-lab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value configuration file")
        for key in KEYS:
            flag = "--" + key.replace("_", "-")
            if KEYS[key][0] == "bool":
                p.add_argument(flag, dest=key, action="store_const", const="true")
            else:
                p.add_argument(flag, dest=key)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {key: getattr(args, key) for key in KEYS}
    try:
        cfg = resolve_config(args.command, flags, args.config)
        return HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error [{exc.key}]: {exc}", file=sys.stderr)
        return 2
    except NotConverged as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return 3
    except (SchmidLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
