"""Experiment configuration: a flat INI document with one section per concern."""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, fields, replace

from .decomposition import dyadic_family
from .maximal import RGrid, XGrid
from .radial import GridSpec
from .setting import MultiplicitySetting

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "FAMILY_KINDS"]

KINDS = ("verify", "sweep-p", "sweep-j", "asymptotics")
FAMILY_KINDS = ("gaussian", "plateau", "power", "mixture")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _floats(text):
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _names(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class SettingSection:
    d: int = 1
    multiplicities: tuple = (1.0,)


@dataclass(frozen=True)
class GridSection:
    n: int = 2048
    r_min: float = 1e-3
    r_max: float = 1e3
    r_per_decade: int = 64
    x_per_decade: int = 32
    x_min: float = 1e-2
    x_max: float = 16.0
    refine_iters: int = 6
    levels: int = 8


@dataclass(frozen=True)
class FamilySection:
    kinds: tuple = FAMILY_KINDS
    size: int = 30
    seed: int = 0
    widths: tuple = (0.2, 0.8)


@dataclass(frozen=True)
class ExperimentSection:
    kind: str = "verify"
    p_list: tuple = (1.6, 2.0, 2.5)
    j_min: int = 1
    j_max: int = 6
    strict: bool = False


@dataclass(frozen=True)
class ToleranceSection:
    plancherel: float = 1e-8
    inversion: float = 1e-8
    sphere: float = 1e-10
    translation: float = 1e-6
    convolution: float = 1e-10
    flatness: float = 1e-6
    telescoping: float = 1e-12
    power_exponent: float = 0.1
    envelope_ratio: float = 3.0
    slope: float = 0.3
    asymptotic: float = 0.05
    stability: float = 0.05
    domination: float = 1e-6


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"


_SECTIONS = {
    "setting": SettingSection,
    "grids": GridSection,
    "family": FamilySection,
    "experiment": ExperimentSection,
    "tolerances": ToleranceSection,
    "output": OutputSection,
}


def _parse_value(cls, name, raw):
    default = getattr(cls(), name)
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(raw)
            return low in ("true", "yes", "1")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return _names(raw) if default and isinstance(default[0], str) else _floats(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {cls.__name__}.{name}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun an experiment; the seed fixes the family."""

    setting: SettingSection = field(default_factory=SettingSection)
    grids: GridSection = field(default_factory=GridSection)
    family: FamilySection = field(default_factory=FamilySection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    tolerances: ToleranceSection = field(default_factory=ToleranceSection)
    output: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self):
        self.validate()

    def validate(self):
        s, g, f, e = self.setting, self.grids, self.family, self.experiment
        if s.d < 1 or len(s.multiplicities) not in (1, s.d):
            raise ConfigError("need d >= 1 and one or d multiplicities")
        if any(k < 0 for k in s.multiplicities):
            raise ConfigError("multiplicities must be nonnegative")
        if not (0 < g.r_min < g.r_max and 0 < g.x_min < g.x_max):
            raise ConfigError("grid ranges must be positive and increasing")
        if min(g.n, g.r_per_decade, g.x_per_decade) < 4 or g.refine_iters < 0:
            raise ConfigError("grid densities must be at least 4")
        if not 1 <= g.levels <= 12:
            raise ConfigError("levels must lie in 1..12")
        if e.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {e.kind!r}; choose from {KINDS}")
        if not e.p_list or any(p < 1 for p in e.p_list):
            raise ConfigError("p_list must hold exponents >= 1")
        if not 0 <= e.j_min <= e.j_max <= g.levels:
            raise ConfigError("need 0 <= j_min <= j_max <= levels")
        bad = set(f.kinds) - set(FAMILY_KINDS)
        if bad or not f.kinds:
            raise ConfigError(f"unknown family kinds {sorted(bad)}")
        if f.size < 1 or len(f.widths) != 2 or not 0 < f.widths[0] <= f.widths[1]:
            raise ConfigError("family needs size >= 1 and widths = lo, hi")

    # -- derived objects ------------------------------------------------------

    def multiplicity_setting(self):
        s = self.setting
        k = s.multiplicities
        if len(k) == 1 and s.d > 1:
            k = k * s.d
        return MultiplicitySetting(s.d, tuple(k))

    def r_grid(self):
        g = self.grids
        return RGrid(g.r_per_decade, g.r_min, g.r_max, g.refine_iters)

    def x_grid(self):
        g = self.grids
        return XGrid(g.x_per_decade, g.x_min, g.x_max)

    def grid_spec(self):
        g = self.grids
        return GridSpec(g.n, g.r_min, g.r_max)

    @property
    def grid_id(self):
        return f"{self.grid_spec().grid_id}|{self.r_grid().grid_id}|{self.x_grid().grid_id}"

    def dyadic(self):
        return dyadic_family(self.multiplicity_setting(), J=self.grids.levels)

    def with_updates(self, **sections):
        """Copy with per-section field overrides, e.g. ``family={'seed': 3}``."""
        out = self
        for name, changes in sections.items():
            out = replace(out, **{name: replace(getattr(out, name), **changes)})
        return out

    # -- serialization --------------------------------------------------------

    def to_dict(self):
        return {name: {k: list(v) if isinstance(v, tuple) else v
                       for k, v in asdict(getattr(self, name)).items()}
                for name in _SECTIONS}

    @classmethod
    def from_dict(cls, data):
        kwargs = {}
        for name, sec in _SECTIONS.items():
            raw = dict(data.get(name, {}))
            names = {f.name for f in fields(sec)}
            unknown = set(raw) - names
            if unknown:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
            vals = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
            try:
                kwargs[name] = sec(**vals)
            except TypeError as exc:
                raise ConfigError(str(exc)) from None
        return cls(**kwargs)

    def to_ini(self):
        cp = configparser.ConfigParser(interpolation=None)
        for name in _SECTIONS:
            cp[name] = {k: _fmt(v) for k, v in asdict(getattr(self, name)).items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text):
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        unknown = set(cp.sections()) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown sections {sorted(unknown)}")
        kwargs = {}
        for name, sec in _SECTIONS.items():
            if not cp.has_section(name):
                kwargs[name] = sec()
                continue
            names = {f.name for f in fields(sec)}
            vals = {}
            for key, raw in cp.items(name):
                if key not in names:
                    raise ConfigError(f"unknown key {key!r} in [{name}]")
                vals[key] = _parse_value(sec, key, raw)
            kwargs[name] = sec(**vals)
        return cls(**kwargs)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_ini(text)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_ini())
