"""Run configuration: INI-style files with one dataclass per section.

Values come from the dataclass defaults, then the config file, then command
line flags. Unknown sections or keys are rejected before anything runs.
"""
import configparser
import dataclasses
import typing
from dataclasses import dataclass, field
from typing import Optional, Tuple


@dataclass
class MatrixConfig:
    model: str = "topi"             # topi | graphene | flat | linear | file
    path: Optional[str] = None
    dim: int = 40000
    L_x: int = 8
    L_y: int = 8
    L_z: int = 8
    t: float = 1.0
    V: float = 0.0
    boundary: Optional[str] = None
    spectrum: Tuple[float, float] = (-1.0, 1.0)   # eigenvalue range of the flat model
    seed: int = 0


@dataclass
class ProbeConfig:
    bounds: Optional[Tuple[float, float]] = None
    lanczos_iters: int = 30
    moments: int = 2000
    samples: int = 32
    dos: str = "kpm"                # kpm | flat | linear (analytic densities)


@dataclass
class FilterConfig:
    target: Optional[Tuple[float, float]] = None
    kernel: str = "lanczos:2"
    degree: int = 0
    search_vectors: int = 0
    margin: Optional[float] = None
    epsilon: float = 1e-12


@dataclass
class SolverConfig:
    max_iters: int = 50
    drop_tol: float = 1e-14
    dump_vectors: bool = False


@dataclass
class BenchConfig:
    block_sizes: Tuple[int, ...] = (1, 2, 4, 8, 16, 32)
    degree: int = 100
    bandwidth: Optional[float] = None


@dataclass
class RunOptions:
    seed: int = 0
    threads: Optional[int] = None
    deterministic: bool = True
    out: str = "."


@dataclass
class RunConfig:
    matrix: MatrixConfig = field(default_factory=MatrixConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    run: RunOptions = field(default_factory=RunOptions)

    @classmethod
    def sections(cls) -> dict:
        return {f.name: f.default_factory for f in dataclasses.fields(cls)}

    def update(self, section: str, key: str, value) -> None:
        """Set one value; strings are converted to the declared type."""
        sections = self.sections()
        if section not in sections:
            raise KeyError(f"unknown config section [{section}]")
        target = getattr(self, section)
        hints = typing.get_type_hints(type(target))
        if key not in hints:
            raise KeyError(f"unknown key {key!r} in section [{section}]")
        if isinstance(value, str):
            value = convert(value, hints[key], f"{section}.{key}")
        setattr(target, key, value)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def convert(text: str, hint, name: str = "value"):
    """Parse ``text`` according to a type hint of the config dataclasses."""
    text = text.strip()
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union:
        if text.lower() in ("", "none"):
            return None
        inner = [a for a in args if a is not type(None)][0]
        return convert(text, inner, name)
    try:
        if origin is tuple:
            parts = [p for p in text.replace(",", " ").split() if p]
            if len(args) == 2 and args[1] is Ellipsis:
                return tuple(args[0](p) for p in parts)
            if len(parts) != len(args):
                raise ValueError(f"expected {len(args)} values")
            return tuple(a(p) for a, p in zip(args, parts))
        if hint is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError("expected a boolean")
        return hint(text)
    except ValueError as err:
        raise ValueError(f"bad value {text!r} for {name}: {err}") from None


def load_config(path=None, overrides=None) -> RunConfig:
    """Build a RunConfig from an optional file plus ``{(section, key): value}`` overrides."""
    cfg = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str       # keys are case sensitive (L_x, V)
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        for section in parser.sections():
            for key, value in parser.items(section):
                cfg.update(section, key, value)
    for (section, key), value in (overrides or {}).items():
        if value is not None:
            cfg.update(section, key, value)
    return cfg
