"""Run configuration: TOML file, named presets and command-line overrides.

Precedence, lowest first: built-in defaults, preset, file, overrides.
Validation errors name the offending field as ``section.key``.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import NoiseModel
from .coopset import CoopSetConfig
from .coopshare import QosConfig, build_grid, dbm_to_watt
from .dqn import TrainConfig

__all__ = ["ConfigError", "RunConfig", "PRESETS", "load_config", "parse_config", "parse_range"]


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted field name."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


@dataclass
class ScenarioSection:
    m_links: int = 10
    radius_m: float = 500.0
    pl_exponent: float = 3.8
    d2d_max_pair_distance_m: float = 0.0  # 0 disables the cap


@dataclass
class QosSection:
    q_c: float = 5.0
    q_d: float = 3.0
    mu: float = 1.0
    nu: float = 1.0
    phi: float = 1.0
    phi2: float = 1.0
    p_min_dbm: float = -40.0
    p_max_dbm: float = 23.0


@dataclass
class GridSection:
    dp_db: float = 3.0
    training_dp_db: float = 9.0
    dtheta: float = 0.05


@dataclass
class TrainSection:
    episodes: int = 500
    steps_per_episode: int = 100
    minibatch: int = 32
    learning_rate: float = 1e-3
    discount: float = 0.0
    replay_capacity: int = 20_000
    hidden: list = field(default_factory=lambda: [64, 64])
    optimizer: str = "sgd"
    qos_mask: bool = True
    reward_transform: str = "symlog"
    epsilon_floor: float = 0.2
    target_candidates: int = 256


@dataclass
class CoopSetSection:
    r_n1_m: float = 375.0
    r_n2_m: float = 375.0


@dataclass
class NoiseSection:
    n0_dbm_per_hz: float = -174.0
    bandwidth_hz: float = 180e3


@dataclass
class RunSection:
    seed: int = 0
    runs_per_point: int = 1000
    n_sweep: list = field(default_factory=lambda: list(range(5, 16)))
    schemes: list = field(default_factory=lambda: ["Optimal", "Random", "Proposed", "ProposedCoopSets"])
    workers: int = 1
    out_dir: str = "out"
    record_timing: bool = False


@dataclass
class SinglePairSection:
    distances_m: list = field(default_factory=lambda: [500.0, 750.0, 1000.0, 1250.0, 1500.0])
    d_cu_bs_m: float = 1000.0
    d_dt_bs_m: float = 500.0
    d_dt_dr_m: float = 500.0
    bandwidth_hz: float = 15e3
    warm_start: bool = True
    timing_repeats: int = 5


_SECTIONS = {
    "scenario": ScenarioSection,
    "qos": QosSection,
    "grid": GridSection,
    "train": TrainSection,
    "coopset": CoopSetSection,
    "noise": NoiseSection,
    "run": RunSection,
    "single_pair": SinglePairSection,
}

PRESETS = {
    "paper": {},
    "desk": {
        "scenario": {"m_links": 6},
        "train": {"episodes": 200, "steps_per_episode": 50},
        "run": {"runs_per_point": 20, "n_sweep": [3, 4, 5, 6, 7, 8]},
    },
    "smoke": {
        "scenario": {"m_links": 3},
        "train": {"episodes": 20, "steps_per_episode": 20},
        "run": {"runs_per_point": 2, "n_sweep": [2, 3]},
        "single_pair": {"distances_m": [500.0, 1000.0], "timing_repeats": 1},
    },
}


@dataclass
class RunConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    qos: QosSection = field(default_factory=QosSection)
    grid: GridSection = field(default_factory=GridSection)
    train: TrainSection = field(default_factory=TrainSection)
    coopset: CoopSetSection = field(default_factory=CoopSetSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    run: RunSection = field(default_factory=RunSection)
    single_pair: SinglePairSection = field(default_factory=SinglePairSection)

    # -- derived library objects -------------------------------------------------

    def qos_config(self) -> QosConfig:
        s = self.qos
        return _wrap("qos", lambda: QosConfig(
            q_c=s.q_c, q_d=s.q_d, mu=s.mu, nu=s.nu, phi=s.phi, phi2=s.phi2,
            p_min=dbm_to_watt(s.p_min_dbm), p_max=dbm_to_watt(s.p_max_dbm),
        ))

    def fine_grid(self):
        q = self.qos_config()
        return _wrap("grid.dp_db", lambda: build_grid(q.p_min, q.p_max, self.grid.dp_db, self.grid.dtheta))

    def training_grid(self):
        q = self.qos_config()
        return _wrap("grid.training_dp_db",
                     lambda: build_grid(q.p_min, q.p_max, self.grid.training_dp_db, self.grid.dtheta))

    def train_config(self, seed: int = 0) -> TrainConfig:
        t = self.train
        return _wrap("train", lambda: TrainConfig(
            episodes=t.episodes, steps_per_episode=t.steps_per_episode, minibatch=t.minibatch,
            learning_rate=t.learning_rate, discount=t.discount, replay_capacity=t.replay_capacity,
            hidden=tuple(t.hidden), seed=seed, optimizer=t.optimizer, target_candidates=t.target_candidates,
            qos_mask=t.qos_mask, reward_transform=t.reward_transform, epsilon_floor=t.epsilon_floor,
        ))

    def coopset_config(self) -> CoopSetConfig:
        return _wrap("coopset", lambda: CoopSetConfig(self.coopset.r_n1_m, self.coopset.r_n2_m))

    def noise_model(self) -> NoiseModel:
        return _wrap("noise", lambda: NoiseModel(self.noise.n0_dbm_per_hz, self.noise.bandwidth_hz))

    def single_pair_noise_model(self) -> NoiseModel:
        return _wrap("single_pair.bandwidth_hz",
                     lambda: NoiseModel(self.noise.n0_dbm_per_hz, self.single_pair.bandwidth_hz))

    def experiment_setup(self, workers: int | None = None):
        from .harness import ExperimentSetup

        cap = self.scenario.d2d_max_pair_distance_m
        return ExperimentSetup(
            q=self.qos_config(), grid=self.training_grid(), train=self.train_config(),
            coop=self.coopset_config(), noise=self.noise_model(), m_links=self.scenario.m_links,
            radius=self.scenario.radius_m, pl_exponent=self.scenario.pl_exponent,
            d2d_max_pair_distance=cap if cap > 0 else None,
            workers=workers if workers is not None else self.run.workers,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _wrap(path, fn):
    try:
        return fn()
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _coerce(path: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ConfigError(path, f"expected a non-empty list, got {value!r}")
        proto = default[0] if default else value[0]
        return [_coerce(f"{path}[{i}]", v, proto) for i, v in enumerate(value)]
    raise ConfigError(path, "unsupported field type")


# short spellings accepted in files and overrides
ALIASES = {
    "scenario": {"M": "m_links"},
    "train": {"steps": "steps_per_episode", "lr": "learning_rate", "replay": "replay_capacity"},
    "coopset": {"r1_m": "r_n1_m", "r2_m": "r_n2_m"},
}


def _merge(cfg: RunConfig, data: dict):
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a table")
    for sec_name, body in data.items():
        if sec_name not in _SECTIONS:
            raise ConfigError(sec_name, "unknown section")
        if not isinstance(body, dict):
            raise ConfigError(sec_name, "expected a table")
        section = getattr(cfg, sec_name)
        known = {f.name for f in dataclasses.fields(section)}
        aliases = ALIASES.get(sec_name, {})
        seen = set()
        for key, value in body.items():
            path = f"{sec_name}.{key}"
            key = aliases.get(key, key)
            if key in seen:
                raise ConfigError(path, f"duplicates {sec_name}.{key}")
            seen.add(key)
            if key not in known:
                raise ConfigError(path, "unknown key")
            setattr(section, key, _coerce(path, value, getattr(section, key)))


def _check(cfg: RunConfig):
    def positive(path, v):
        if not v > 0:
            raise ConfigError(path, f"must be positive, got {v!r}")

    s = cfg.scenario
    positive("scenario.m_links", s.m_links)
    positive("scenario.radius_m", s.radius_m)
    positive("scenario.pl_exponent", s.pl_exponent)
    if s.d2d_max_pair_distance_m < 0:
        raise ConfigError("scenario.d2d_max_pair_distance_m", "must be non-negative")
    if cfg.qos.p_min_dbm >= cfg.qos.p_max_dbm:
        raise ConfigError("qos.p_min_dbm", f"must be below qos.p_max_dbm ({cfg.qos.p_max_dbm!r})")
    for key in ("q_c", "q_d"):
        positive(f"qos.{key}", getattr(cfg.qos, key))
    for key in ("mu", "nu", "phi", "phi2"):
        if getattr(cfg.qos, key) < 0:
            raise ConfigError(f"qos.{key}", "must be non-negative")
    positive("grid.dp_db", cfg.grid.dp_db)
    positive("grid.training_dp_db", cfg.grid.training_dp_db)
    if not 0 < cfg.grid.dtheta < 0.5:
        raise ConfigError("grid.dtheta", "must lie in (0, 0.5)")
    t = cfg.train
    for key in ("episodes", "steps_per_episode", "minibatch", "replay_capacity", "learning_rate", "target_candidates"):
        positive(f"train.{key}", getattr(t, key))
    for i, h in enumerate(t.hidden):
        positive(f"train.hidden[{i}]", h)
    if not 0.0 <= t.discount < 1.0:
        raise ConfigError("train.discount", "must lie in [0, 1)")
    if not 0.0 <= t.epsilon_floor <= 1.0:
        raise ConfigError("train.epsilon_floor", "must lie in [0, 1]")
    if t.optimizer not in ("sgd", "adam"):
        raise ConfigError("train.optimizer", f"expected 'sgd' or 'adam', got {t.optimizer!r}")
    if t.reward_transform not in ("symlog", "none"):
        raise ConfigError("train.reward_transform", f"expected 'symlog' or 'none', got {t.reward_transform!r}")
    positive("noise.bandwidth_hz", cfg.noise.bandwidth_hz)
    positive("single_pair.bandwidth_hz", cfg.single_pair.bandwidth_hz)
    positive("coopset.r_n1_m", cfg.coopset.r_n1_m)
    positive("coopset.r_n2_m", cfg.coopset.r_n2_m)
    r = cfg.run
    if r.seed < 0:
        raise ConfigError("run.seed", "must be non-negative")
    positive("run.runs_per_point", r.runs_per_point)
    positive("run.workers", r.workers)
    for i, n in enumerate(r.n_sweep):
        positive(f"run.n_sweep[{i}]", n)
    for i, name in enumerate(r.schemes):
        if name not in ("Optimal", "Random", "Proposed", "ProposedCoopSets"):
            raise ConfigError(f"run.schemes[{i}]", f"unknown scheme {name!r}")
    for i, d in enumerate(cfg.single_pair.distances_m):
        positive(f"single_pair.distances_m[{i}]", d)
    positive("single_pair.timing_repeats", cfg.single_pair.timing_repeats)
    # build every derived object so range errors surface now
    cfg.qos_config()
    cfg.fine_grid()
    cfg.training_grid()
    cfg.train_config()


def parse_config(text: str = "", preset: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig` from TOML text.

    ``overrides`` maps dotted paths (``"train.episodes"``) to values and is
    applied last.
    """
    cfg = RunConfig()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        _merge(cfg, PRESETS[preset])
    try:
        data = tomllib.loads(text) if text else {}
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML: {exc}") from None
    _merge(cfg, data)
    nested: dict = {}
    for path, value in (overrides or {}).items():
        sec, _, key = path.partition(".")
        if not key:
            raise ConfigError(path, "override must be section.key")
        nested.setdefault(sec, {})[key] = value
    _merge(cfg, nested)
    _check(cfg)
    return cfg


def load_config(path=None, preset: str | None = None, overrides: dict | None = None) -> RunConfig:
    text = ""
    if path is not None:
        try:
            with open(path, "rb") as fh:
                text = fh.read().decode("utf-8")
        except OSError as exc:
            raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, preset, overrides)


def parse_range(text: str, kind=float) -> list:
    """``"500:1500:250"`` -> [500, 750, ..., 1500] (inclusive); ``"3,5,8"`` -> list."""
    try:
        if ":" in text:
            parts = [kind(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(kind(1))
            if len(parts) != 3:
                raise ValueError
            lo, hi, step = parts
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(round((hi - lo) / step)) + 1
            out = [kind(lo + i * step) for i in range(count)]
            if out[-1] > hi + 1e-9 * max(1, abs(hi)):
                out.pop()
            return out
        return [kind(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"bad range {text!r}; use lo:hi:step or a comma list") from None
