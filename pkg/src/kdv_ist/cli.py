"""Command-line front end: ``kdv-ist {direct,evolve,invert,solve,validate}``.

Settings come from an optional key-value file (``--config``) and are
overridden by flags.  Exit status is 0 on success, 1 for usage errors and 2
when a numerical stage fails.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .glm import DEFAULT_DX, DEFAULT_NS, recover_potential
from .jost import DEFAULT_N, direct_coefficients
from .pipeline import CauchyProblem, default_window, diagnostics, solve_cauchy, window_grid
from .potential import BUILTINS, DEFAULT_B, DEFAULT_NODES, builtin_potential, potential_from_file
from .scatter import DEFAULT_THETA_COUNT, ScatteringData, SeriesAtOrigin, direct_scattering, evolve

__all__ = ["UsageError", "RunConfig", "parse_config", "build_parser", "run", "main"]

log = logging.getLogger("kdv_ist")

COMMANDS = ("direct", "evolve", "invert", "solve", "validate")
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(ValueError):
    """Bad configuration: unknown key, malformed value or inconsistent settings."""


@dataclass
class RunConfig:
    command: str = "solve"
    potential: str = "gaussian"
    c: float = float(np.pi)
    b: float = DEFAULT_B
    nodes: int = DEFAULT_NODES
    N: int = DEFAULT_N
    Ns: int = DEFAULT_NS
    theta_count: int = DEFAULT_THETA_COUNT
    times: list[float] = field(default_factory=lambda: [0.0])
    window: tuple[float, float] | None = None
    dx: float = DEFAULT_DX
    out: Path = Path("out")
    data: Path | None = None
    verbose: bool = False

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        for name in ("nodes", "N", "theta_count"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}")
        if self.Ns < 0:
            raise UsageError(f"Ns must be nonnegative, got {self.Ns}")
        if self.b <= 0 or self.dx <= 0:
            raise UsageError("b and dx must be positive")
        if self.times != sorted(self.times) or (self.times and self.times[0] < 0):
            raise UsageError(f"times must be sorted and nonnegative, got {self.times}")
        lo, hi = self.resolved_window
        if not (-self.b < lo < hi < self.b):
            raise UsageError(f"window ({lo}, {hi}) must lie inside (-{self.b}, {self.b})")
        return self

    @property
    def resolved_window(self) -> tuple[float, float]:
        return self.window if self.window is not None else default_window(self.potential)


def _parse_list(text: str) -> list[float]:
    return sorted(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _parse_window(text: str) -> tuple[float, float]:
    vals = [float(v) for v in text.split(",") if v.strip()]
    if len(vals) != 2:
        raise ValueError("expected LO,HI")
    return vals[0], vals[1]


_CONVERTERS = {
    "potential": str,
    "c": float,
    "b": float,
    "nodes": int,
    "N": int,
    "Ns": int,
    "theta_count": int,
    "times": _parse_list,
    "window": _parse_window,
    "dx": float,
    "out": Path,
    "data": Path,
    "verbose": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}
# Accept the flag spellings in files too.
_ALIASES = {"theta-count": "theta_count", "n": "N", "ns": "Ns"}


def _convert(key: str, raw: str):
    name = _ALIASES.get(key, key)
    if name not in _CONVERTERS:
        raise UsageError(f"unknown configuration key {key!r}")
    try:
        return name, _CONVERTERS[name](raw)
    except ValueError as exc:
        raise UsageError(f"malformed value for {key!r}: {raw!r} ({exc})") from None


def read_config_file(path: str | Path) -> dict:
    """``key = value`` lines (``#`` comments allowed) into converted settings."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"configuration file not found: {p}")
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep N / Ns case
    try:
        parser.read_string("[run]\n" + p.read_text())
    except configparser.Error as exc:
        raise UsageError(f"{p}: {exc}") from None
    return dict(_convert(k, v) for k, v in parser["run"].items())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kdv-ist", description="KdV Cauchy problem by the inverse scattering transform.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", metavar="PATH", help="key = value settings file; flags override it")
    parser.add_argument("--potential", metavar="NAME|FILE", help=f"built-in ({', '.join(BUILTINS)}) or two-column data file")
    parser.add_argument("--c", type=float, help="soliton speed for the soliton preset")
    parser.add_argument("--b", type=float, help="half-width of the support interval [-b, b]")
    parser.add_argument("--nodes", type=int, help="grid nodes on [-b, b] (odd)")
    parser.add_argument("--N", type=int, help="number of series coefficients")
    parser.add_argument("--Ns", type=int, help="size of the truncated inverse systems minus one")
    parser.add_argument("--theta-count", dest="theta_count", type=int, help="samples of the reflection coefficients")
    parser.add_argument("--times", metavar="CSV", help="output times, e.g. 0,0.5,1")
    parser.add_argument("--window", metavar="LO,HI", help="recovery window")
    parser.add_argument("--dx", type=float, help="recovery grid spacing")
    parser.add_argument("--data", metavar="PATH", help="scattering-data file for evolve/invert")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--verbose", action="store_true", default=None)
    return parser


def parse_config(argv: list[str]) -> RunConfig:
    """Resolve a RunConfig from flags and an optional config file."""
    ns = build_parser().parse_args(argv)
    settings = read_config_file(ns.config) if ns.config else {}
    for f in fields(RunConfig):
        raw = getattr(ns, f.name, None)
        if f.name == "command" or raw is None:
            continue
        settings[f.name] = _convert(f.name, raw)[1] if isinstance(raw, str) else raw
    cfg = RunConfig(command=ns.command, **settings).validate()
    if cfg.verbose:
        resolved = asdict(cfg) | {"window": cfg.resolved_window}
        for key, value in resolved.items():
            print(f"{key} = {value}")
    return cfg


def _load_potential(cfg: RunConfig):
    kwargs = dict(b=cfg.b, node_count=cfg.nodes)
    if cfg.potential in BUILTINS:
        return builtin_potential(cfg.potential, c=cfg.c, **kwargs)
    if Path(cfg.potential).is_file():
        return potential_from_file(cfg.potential, **kwargs)
    raise UsageError(f"potential {cfg.potential!r} is neither a built-in ({', '.join(BUILTINS)}) nor a file")


def _scattering(cfg: RunConfig) -> ScatteringData:
    if cfg.data is not None:
        if not cfg.data.is_file():
            raise UsageError(f"scattering data file not found: {cfg.data}")
        return ScatteringData.load(cfg.data)
    tables, _ = direct_coefficients(_load_potential(cfg), cfg.N)
    return direct_scattering(SeriesAtOrigin.from_tables(tables), cfg.theta_count)


def _cmd_direct(cfg: RunConfig) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    data = _scattering(cfg)
    path = cfg.out / "scattering.txt"
    data.save(path)
    print(f"{data.count} eigenvalue(s); wrote {path}")


def _cmd_evolve(cfg: RunConfig) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    data = _scattering(cfg)
    for t in cfg.times:
        path = cfg.out / f"scattering_t{t:g}.txt"
        evolve(data, t).save(path)
        print(f"wrote {path}")


def _cmd_invert(cfg: RunConfig) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    data = _scattering(cfg)
    x = window_grid(*cfg.resolved_window, cfg.dx)
    rec = recover_potential(data, x, cfg.Ns, dx=cfg.dx)
    path = cfg.out / f"recovered_t{data.t:g}.txt"
    rec.save(path)
    print(f"stitch residual {rec.stitch_residual:.3e}, max cond {rec.max_cond:.3e}; wrote {path}")


def _cmd_solve(cfg: RunConfig) -> None:
    problem = CauchyProblem(
        _load_potential(cfg), cfg.times, cfg.resolved_window, N=cfg.N, Ns=cfg.Ns, theta_count=cfg.theta_count, dx=cfg.dx
    )
    sol = solve_cauchy(problem)
    paths = sol.save(cfg.out)
    rows = diagnostics(sol)
    diag_path = cfg.out / "diagnostics.txt"
    np.savetxt(
        diag_path,
        np.array([[d.t, d.mass, d.momentum, d.max_cond, d.stitch_residual, d.seconds] for d in rows]),
        fmt="%.10e",
        header=f"direct stage {sol.stage_seconds.get('direct', 0.0):.3f} s\nt mass momentum max_cond stitch_residual seconds",
    )
    for d in rows:
        print(f"t={d.t:g} mass={d.mass:.6e} momentum={d.momentum:.6e} cond={d.max_cond:.3e} stitch={d.stitch_residual:.3e}")
    print(f"wrote {len(paths)} solution file(s) and {diag_path}")


def _cmd_validate(cfg: RunConfig) -> bool:
    from .acceptance import run_all

    results = run_all()
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return not failed


def run(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        print(build_parser().format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if cfg.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if cfg.command == "validate":
            return EXIT_OK if _cmd_validate(cfg) else EXIT_NUMERIC
        {"direct": _cmd_direct, "evolve": _cmd_evolve, "invert": _cmd_invert, "solve": _cmd_solve}[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure in {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())
