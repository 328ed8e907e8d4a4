"""Experiment configuration: a ``key = value`` text file.

Blank lines and ``#`` comments are ignored. Vector values are comma
separated. Every key is optional; missing keys take the defaults below.
"""
from dataclasses import dataclass, field, fields

from ..channel import LoadCodebook, Scenario
from ..em import Wave
from ..selection import GaParams

METHODS = ("ga", "random", "hss")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    # scene
    frequency: float = 2.4e9
    room: tuple = (0.0, 20.0, 0.0, 20.0)
    ap_position: tuple = (-1.0, 21.0, 1.5)
    ris_center: tuple = (10.0, 0.0, 1.5)
    ris_rows: int = 4
    ris_cols: int = 4
    ris_spacing: float = 0.0  # 0 -> half a wavelength
    mu_height: float = 1.5
    p_ap: float = 0.1
    noise_sigma: float = 3.0
    los_enabled: bool = False
    burst_period_ms: float = 100.0
    z0_ref: float = 50.0
    # configuration superset
    codebook_d: int = 200
    codebook_min: float = -600.0
    codebook_max: float = 600.0
    n_uniform: int = 10
    n_ramp: int = 10
    n_random: int = 30
    # databases and matching
    grid_spacings: tuple = (2.0, 1.0)
    k_avg: int = 10
    knn_k: int = 5
    train_fraction: float = 0.1
    # experiments
    m: int = 15
    exp1_spacing: float = 1.0
    m_sweep: tuple = (4, 8, 12, 16, 20, 24, 28)
    methods: tuple = METHODS
    trials: int = 20
    seed: int = 0
    out: str = "results"
    threads: int = 1
    # genetic algorithm
    ga_population: int = 40
    ga_generations: int = 50
    ga_tournament_size: int = 3
    ga_crossover_rate: float = 0.9
    ga_mutation_rate: float = 0.1
    ga_elitism: int = 2
    ga_queries_per_location: int = 10

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        s_tilde = self.s_tilde
        for mm in (self.m, *self.m_sweep):
            if not 1 <= mm <= s_tilde:
                raise ConfigError(f"M={mm} must lie in [1, S~={s_tilde}]")
        if any(mm < 2 for mm in self.m_sweep) and "hss" in self.methods:
            raise ConfigError("HSS needs M >= 2")
        bad = [mm for mm in self.methods if mm not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; valid: {', '.join(METHODS)}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not self.grid_spacings:
            raise ConfigError("grid_spacings must not be empty")
        # validate the derived objects eagerly so errors surface at parse time
        self.scenario()
        self.codebook()
        self.ga_params()

    @property
    def s_tilde(self) -> int:
        return self.n_uniform + self.n_ramp + self.n_random

    def scenario(self) -> Scenario:
        return Scenario(
            wave=Wave(self.frequency),
            room=tuple(self.room),
            ap_position=tuple(self.ap_position),
            ris_center=tuple(self.ris_center),
            ris_rows=self.ris_rows,
            ris_cols=self.ris_cols,
            ris_spacing=self.ris_spacing or None,
            mu_height=self.mu_height,
            p_ap=self.p_ap,
            noise_sigma=self.noise_sigma,
            los_enabled=self.los_enabled,
            burst_period_ms=self.burst_period_ms,
            z0_ref=self.z0_ref,
        )

    def codebook(self) -> LoadCodebook:
        return LoadCodebook.uniform(self.codebook_d, self.codebook_min, self.codebook_max)

    def ga_params(self) -> GaParams:
        return GaParams(
            population=self.ga_population,
            generations=self.ga_generations,
            tournament_size=self.ga_tournament_size,
            crossover_rate=self.ga_crossover_rate,
            mutation_rate=self.ga_mutation_rate,
            elitism=self.ga_elitism,
            queries_per_location=self.ga_queries_per_location,
            k=self.knn_k,
        )

    def replace(self, **kw) -> "ExperimentConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(kw)
        return ExperimentConfig(**vals)


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_DEFAULTS = ExperimentConfig.__dataclass_fields__


def _kind(name):
    default = _DEFAULTS[name].default
    return type(default), (type(default[0]) if isinstance(default, tuple) and default else None)


def _parse_scalar(tp, text):
    if tp is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if tp is int:
        return int(text)
    if tp is float:
        return float(text)
    return text


def _parse_value(name, text):
    tp, elem = _kind(name)
    if tp is tuple:
        items = [t.strip() for t in text.split(",") if t.strip()]
        return tuple(_parse_scalar(elem, t) for t in items)
    return _parse_scalar(tp, text)


def parse_config_text(text: str, source="<config>") -> ExperimentConfig:
    values = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}: line {no}: expected 'key = value'")
        if key not in _FIELDS:
            raise ConfigError(
                f"{source}: line {no}: unknown key {key!r}; valid keys: {', '.join(sorted(_FIELDS))}"
            )
        try:
            values[key] = _parse_value(key, value.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}: line {no}: bad value for {key!r}: {exc}") from None
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def parse_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    return str(v)


def dump_config(cfg: ExperimentConfig) -> str:
    return "".join(f"{name} = {_format(getattr(cfg, name))}\n" for name in _FIELDS)
