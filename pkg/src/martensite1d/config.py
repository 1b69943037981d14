"""
Flat ``key = value`` configuration files.

One setting per line, ``#`` starts a comment, blank lines are ignored.
Values are decimal numbers, whitespace-separated number lists, booleans
(``true``/``false``), ``none`` or bare strings.  Unknown keys are an error.

Keys
----
Domain and grid
    ``domain_a``, ``domain_d``, ``nodes``
Elasticity
    ``lambda``, ``mu`` (isotropic), or ``D_upper`` with the 21 row-major
    upper-triangle entries of the 6x6 Mandel matrix (overrides the moduli)
Material
    ``misfit`` (six entries ``a11 a22 a33 a12 a13 a23``), ``c``, ``nu``,
    ``kappa``, ``theta``, ``tilt``
Load
    ``load`` (three numbers ``b1 b2 b3``), ``load_shape``
    (``constant`` or ``sine``: ``b sin(pi (x-a)/(d-a))``)
Initial data
    ``initial`` (``bump``, ``front`` or ``zero``); ``bump_center``,
    ``bump_width``, ``bump_height``; ``front_z``, ``orientation``
Time stepping
    ``t_end``, ``dt`` (``none`` for adaptive), ``cfl``, ``scheme``,
    ``gradient``, ``output_stride``, ``fixed_point``, ``fp_tol``,
    ``fp_max_iter``, ``mollify``
Studies
    ``seed``, ``viscosity_tests``, ``kappa_sequence``, ``grid_sequence``,
    ``grid_dt``, ``sharp_nu``, ``sharp_tilt``, ``sharp_nodes``,
    ``sharp_z0``, ``sharp_dt``, ``sharp_t_end``
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import tensor_core as tc
from .errors import ConfigError, Martensite1DError
from .evolution import CoupledModel, RunConfig, _smoothstep
from .grid import Grid1D
from .material import DoubleWell, MaterialParams


@dataclass(frozen=True)
class Config:
    domain_a: float = 0.0
    domain_d: float = 1.0
    nodes: int = 201
    lam: float = 1.0
    mu: float = 1.0
    D_upper: Optional[tuple] = None
    misfit: tuple = (0.1, 0.0, 0.0, 0.0, 0.0, 0.0)
    c: float = 1.0
    nu: float = 1e-3
    kappa: float = 0.05
    theta: float = 1.0
    tilt: float = 0.0
    load: tuple = (0.0, 0.0, 0.0)
    load_shape: str = "constant"
    initial: str = "bump"
    bump_center: float = 0.5
    bump_width: float = 0.3
    bump_height: float = 0.9
    front_z: float = 0.5
    orientation: int = 1
    t_end: float = 0.5
    dt: Optional[float] = 2.5e-3
    cfl: float = 0.5
    scheme: str = "semi-implicit"
    gradient: str = "limited"
    output_stride: int = 4
    fixed_point: bool = False
    fp_tol: float = 1e-10
    fp_max_iter: int = 50
    mollify: bool = False
    seed: int = 0
    viscosity_tests: int = 200
    kappa_sequence: tuple = (0.2, 0.1, 0.05, 0.025, 0.0125)
    grid_sequence: tuple = (101, 201, 401)
    grid_dt: float = 2e-3
    sharp_nu: tuple = (4e-3, 1e-3, 2.5e-4)
    sharp_tilt: float = -0.1
    sharp_nodes: int = 801
    sharp_z0: float = 0.5
    sharp_dt: float = 1e-3
    sharp_t_end: float = 0.5

    def __post_init__(self):
        if not self.domain_d > self.domain_a:
            raise ConfigError("domain_d must exceed domain_a")
        if self.nodes < 3:
            raise ConfigError(f"need at least 3 nodes, got {self.nodes}")
        if self.load_shape not in ("constant", "sine"):
            raise ConfigError(f"unknown load_shape {self.load_shape!r}")
        if self.initial not in ("bump", "front", "zero"):
            raise ConfigError(f"unknown initial profile {self.initial!r}")
        if len(self.misfit) != 6:
            raise ConfigError("misfit needs six entries")
        if len(self.load) != 3:
            raise ConfigError("load needs three entries")
        if self.D_upper is not None and len(self.D_upper) != 21:
            raise ConfigError("D_upper needs 21 entries")
        ks = np.asarray(self.kappa_sequence, dtype=float)
        if ks.size < 1 or np.any(np.diff(ks) >= 0) or ks[0] >= 1 or ks[-1] <= 0:
            raise ConfigError("kappa_sequence must be strictly decreasing within (0, 1)")
        if not self.viscosity_tests > 0:
            raise ConfigError("viscosity_tests must be positive")

    def replace(self, **changes) -> "Config":
        return replace(self, **changes)


# file key -> field name where they differ
_ALIASES = {"lambda": "lam"}
_FIELDS = {f.name: f for f in fields(Config)}
_INT_KEYS = {"nodes", "orientation", "output_stride", "fp_max_iter", "seed", "viscosity_tests", "sharp_nodes"}
_TUPLE_KEYS = {"D_upper", "misfit", "load", "kappa_sequence", "grid_sequence", "sharp_nu"}
_BOOL_KEYS = {"fixed_point", "mollify"}
_STR_KEYS = {"load_shape", "initial", "scheme", "gradient"}


def _parse_value(key: str, raw: str, where: str):
    raw = raw.strip()
    try:
        if raw.lower() == "none":
            if key not in ("dt", "D_upper"):
                raise ConfigError(f"{where}: {key} may not be none")
            return None
        if key in _BOOL_KEYS:
            low = raw.lower()
            if low not in ("true", "false"):
                raise ConfigError(f"{where}: {key} must be true or false, got {raw!r}")
            return low == "true"
        if key in _STR_KEYS:
            return raw
        if key in _TUPLE_KEYS:
            items = raw.replace(",", " ").split()
            if key == "grid_sequence":
                return tuple(int(v) for v in items)
            return tuple(float(v) for v in items)
        if key in _INT_KEYS:
            value = float(raw)
            if value != int(value):
                raise ConfigError(f"{where}: {key} must be an integer, got {raw!r}")
            return int(value)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {key} = {raw!r}") from exc


def parse_config(text: str, source: str = "<string>", base: Optional[Config] = None) -> Config:
    """Parse configuration text on top of ``base`` (defaults if omitted)."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        name = _ALIASES.get(key, key)
        if name not in _FIELDS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if name in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[name] = _parse_value(name, raw, where)
    try:
        return replace(base or Config(), **values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_config(text, source=str(path))


def default_config_text() -> str:
    return resources.files("martensite1d").joinpath("data/default.cfg").read_text()


def default_config() -> Config:
    return parse_config(default_config_text(), source="default.cfg")


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple):
        return " ".join(_fmt(v) for v in value)
    return str(value)


def config_text(cfg: Config) -> str:
    """Resolved configuration, every key, in field order."""
    inverse = {v: k for k, v in _ALIASES.items()}
    lines = []
    for f in fields(Config):
        lines.append(f"{inverse.get(f.name, f.name)} = {_fmt(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# building model objects


def make_grid(cfg: Config, nodes: Optional[int] = None) -> Grid1D:
    return Grid1D(cfg.domain_a, cfg.domain_d, cfg.nodes if nodes is None else nodes)


def make_params(cfg: Config, **overrides) -> MaterialParams:
    """Material constants; ``overrides`` replace config fields first."""
    if overrides:
        cfg = cfg.replace(**overrides)
    try:
        if cfg.D_upper is not None:
            D = tc.ElasticityTensor.from_upper_triangle(cfg.D_upper)
        else:
            D = tc.ElasticityTensor.isotropic(cfg.lam, cfg.mu)
    except (Martensite1DError, ValueError) as exc:
        raise ConfigError(f"elasticity tensor: {exc}") from exc
    return MaterialParams(
        c=cfg.c,
        nu=cfg.nu,
        kappa=cfg.kappa,
        misfit=tc.sym(*cfg.misfit),
        D=D,
        well=DoubleWell(cfg.theta, cfg.tilt),
    )


def make_load(cfg: Config):
    b = np.asarray(cfg.load, dtype=float)
    if not np.any(b):
        return None
    if cfg.load_shape == "constant":
        return lambda t, x: np.broadcast_to(b, (np.size(x), 3))
    a, L = cfg.domain_a, cfg.domain_d - cfg.domain_a
    return lambda t, x: np.sin(np.pi * (np.asarray(x) - a) / L)[:, None] * b


def make_model(cfg: Config, nodes: Optional[int] = None, **overrides) -> CoupledModel:
    return CoupledModel(
        make_params(cfg, **overrides), make_grid(cfg, nodes), load=make_load(cfg), gradient=cfg.gradient
    )


def make_run_config(cfg: Config, **overrides) -> RunConfig:
    values = dict(
        t_end=cfg.t_end,
        cfl=cfg.cfl,
        dt=cfg.dt,
        scheme=cfg.scheme,
        gradient=cfg.gradient,
        output_stride=cfg.output_stride,
        fixed_point=cfg.fixed_point,
        fp_tol=cfg.fp_tol,
        fp_max_iter=cfg.fp_max_iter,
        mollify=cfg.mollify,
    )
    values.update(overrides)
    return RunConfig(**values)


def bump(x, center: float, width: float, height: float) -> np.ndarray:
    """Compactly supported smooth bump ``height * exp(1 - 1/(1 - r^2))``."""
    r = (np.asarray(x, dtype=float) - center) / width
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def make_initial(cfg: Config, grid: Grid1D) -> np.ndarray:
    if cfg.initial == "zero":
        return grid.zeros()
    if cfg.initial == "bump":
        return bump(grid.x, cfg.bump_center, cfg.bump_width, cfg.bump_height)
    from .sharp_interface import diffuse_profile

    return diffuse_profile(cfg.front_z, grid, cfg.nu, cfg.theta, cfg.orientation)


def random_compatible_data(grid: Grid1D, rng, n_modes: int = 6, amplitude: float = 1.0) -> np.ndarray:
    """
    Random smooth initial data vanishing near both ends: a short random
    sine series times a smooth cutoff.  Values may leave [0, 1].
    """
    s = (grid.x - grid.a) / grid.length
    k = np.arange(1, n_modes + 1)
    coef = rng.normal(0.0, amplitude, n_modes) / k
    S = np.sin(np.pi * np.outer(s, k)) @ coef
    dist = np.minimum(s, 1.0 - s)
    S *= _smoothstep(dist / 0.15)
    S[0] = S[-1] = 0.0
    return S
