"""Run configuration: a TOML file with nested tables, every key optional.

See docs/config.md for the full key list and defaults.
"""

from dataclasses import dataclass, field, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bounds import DEFAULT_HNS_IDS, DEFAULT_TD_IDS
from .grid import ConfigurationError


@dataclass
class SweepConfig:
    k: list = field(default_factory=lambda: [8.0, 16.0, 32.0, 64.0])
    imag_multipliers: list = field(default_factory=lambda: [0.0, 1.0, -1.0, 4.0, -4.0])
    K_star: float = 1.0
    k0: float = 8.0
    data: str = "gaussian"
    A_init: object = "compatible"
    inequalities: list = field(default_factory=lambda: list(DEFAULT_TD_IDS))
    ceiling_factor: float = 10.0
    s0: float = 1.0


@dataclass
class ResolventConfig:
    k: list = field(default_factory=lambda: [16.0])
    imag_multipliers: list = field(default_factory=lambda: [0.0, -1.0])


@dataclass
class HnsConfig:
    profile: str = "ChannelConcave"
    N: int = 256
    k: list = field(default_factory=lambda: [8.0, 16.0, 32.0, 64.0, 128.0])
    imag_multipliers: list = field(default_factory=lambda: [0.0, 1.0, -1.0, 4.0, -4.0])
    K_star: float = 4.0
    data: str = "gaussian"
    inequalities: list = field(default_factory=lambda: list(DEFAULT_HNS_IDS))


@dataclass
class EvolveConfig:
    k: list = field(default_factory=lambda: [16.0, 32.0, 64.0, 128.0, 256.0])
    T: float = 1.0
    dt_fraction: float = 1.0
    sample_interval: float = 0.01
    window: list = field(default_factory=lambda: [0.5, 1.0])
    data: str = "gaussian"


@dataclass
class RunConfig:
    profile: str = "ExpConcave"
    profile_params: dict = field(default_factory=dict)
    N: int = 512
    Y_max: float = 40.0
    stretch: float = 1.0
    sweep: SweepConfig = field(default_factory=SweepConfig)
    resolvent: ResolventConfig = field(default_factory=ResolventConfig)
    hns: HnsConfig = field(default_factory=HnsConfig)
    evolve: EvolveConfig = field(default_factory=EvolveConfig)
    out: str = "out"
    workers: int = 1
    figures: bool = True
    drift_tol: float = 1e-3

    def validate(self):
        for name, ks in (("sweep", self.sweep.k), ("resolvent", self.resolvent.k),
                         ("hns", self.hns.k), ("evolve", self.evolve.k)):
            if not ks:
                raise ConfigurationError(f"[{name}] k list is empty")
            if any(float(k) == 0 for k in ks):
                raise ConfigurationError(f"[{name}] k list contains 0")
        positive = {
            "drift_tol": self.drift_tol,
            "sweep.ceiling_factor": self.sweep.ceiling_factor,
            "sweep.K_star": self.sweep.K_star,
            "hns.K_star": self.hns.K_star,
            "evolve.T": self.evolve.T,
            "evolve.dt_fraction": self.evolve.dt_fraction,
            "evolve.sample_interval": self.evolve.sample_interval,
        }
        for key, val in positive.items():
            if not float(val) > 0:
                raise ConfigurationError(f"{key} must be positive")
        if self.evolve.dt_fraction > 1:
            raise ConfigurationError("evolve.dt_fraction must be at most 1")
        if int(self.workers) < 1:
            raise ConfigurationError("workers must be at least 1")
        if len(self.evolve.k) < 4:
            raise ConfigurationError("[evolve] needs at least 4 wavenumbers")
        a = self.sweep.A_init
        if not (a == "compatible" or isinstance(a, (int, float))):
            raise ConfigurationError("sweep.A_init must be 'compatible' or a number")
        return self


def _section(cls, table, name):
    if table is None:
        return cls()
    if not isinstance(table, dict):
        raise ConfigurationError(f"[{name}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = set(table) - known
    if unknown:
        raise ConfigurationError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return cls(**table)


def from_dict(doc):
    """Build a RunConfig from a parsed TOML document."""
    doc = dict(doc)
    flow = doc.pop("flow", {}) or {}
    grid = doc.pop("grid", {}) or {}
    output = doc.pop("output", {}) or {}
    run = doc.pop("run", {}) or {}
    cfg = RunConfig(
        sweep=_section(SweepConfig, doc.pop("sweep", None), "sweep"),
        resolvent=_section(ResolventConfig, doc.pop("resolvent", None), "resolvent"),
        hns=_section(HnsConfig, doc.pop("hns", None), "hns"),
        evolve=_section(EvolveConfig, doc.pop("evolve", None), "evolve"),
    )
    if doc:
        raise ConfigurationError(f"unknown top-level tables: {sorted(doc)}")
    allowed = {"flow": {"profile", "params"}, "grid": {"N", "Y_max", "stretch"},
               "output": {"dir", "figures"}, "run": {"workers", "drift_tol"}}
    for name, table in (("flow", flow), ("grid", grid), ("output", output), ("run", run)):
        extra = set(table) - allowed[name]
        if extra:
            raise ConfigurationError(f"unknown keys in [{name}]: {sorted(extra)}")
    cfg = replace(
        cfg,
        profile=flow.get("profile", cfg.profile),
        profile_params=dict(flow.get("params", {})),
        N=int(grid.get("N", cfg.N)),
        Y_max=float(grid.get("Y_max", cfg.Y_max)),
        stretch=float(grid.get("stretch", cfg.stretch)),
        out=str(output.get("dir", cfg.out)),
        figures=bool(output.get("figures", cfg.figures)),
        workers=int(run.get("workers", cfg.workers)),
        drift_tol=float(run.get("drift_tol", cfg.drift_tol)),
    )
    return cfg


def load(path=None):
    """Read ``path`` (or use defaults when None) and return a RunConfig."""
    if path is None:
        return RunConfig().validate()
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"invalid TOML in {path}: {exc}") from None
    try:
        return from_dict(doc).validate()
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
