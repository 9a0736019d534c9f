"""System configuration shared by the simulator, estimators and experiments."""

import configparser
from dataclasses import dataclass, field, replace

SPEED_OF_LIGHT = 299792458.0


@dataclass
class SystemConfig:
    """Scenario parameters for one simulated link.

    Either ``user_speed`` (m/s) or ``f_n`` (normalized Doppler) must be
    given; when both are present ``f_n`` wins.
    """

    n_bs: int = 5                 # BS antennas N
    n_users: int = 5              # single-antenna users K
    n_ris: int = 16               # RIS elements M
    groups: int = 1               # 1 = fully-connected
    n_blocks: int = 20            # training blocks T per estimated interval
    q_intervals: int = 16         # coherence intervals in the training phase
    p_intervals: int = 10         # coherence intervals in the prediction phase
    t_coherence: int = 10_000     # slots per coherence interval
    t_sampling: float = 1e-5      # sampling duration (s)
    f_carrier: float = 3e9        # carrier frequency (Hz)
    user_speed: float | None = None
    f_n: float | None = 0.005
    rician_factor: float = 2.8
    beta_e: float = 1.0
    beta_h: float = 1.0
    snr_db: float = 20.0
    rho_ris: float = 0.5          # exponential correlation at the RIS
    rho_bs: float = 0.5           # exponential correlation at the BS
    seed: int = 0

    def __post_init__(self):
        self.validate()

    # -- derived quantities -------------------------------------------------
    @property
    def group_size(self):
        """Elements per group, M/G."""
        return self.n_ris // self.groups

    @property
    def blocks_per_group(self):
        return self.n_blocks // self.groups

    @property
    def normalized_doppler(self):
        if self.f_n is not None:
            return self.f_n
        f_d = self.user_speed * self.f_carrier / SPEED_OF_LIGHT
        return f_d * self.t_sampling

    @property
    def noise_power(self):
        """Noise variance per post-processed pilot entry (P_p normalized to 1)."""
        return 10.0 ** (-self.snr_db / 10.0)

    def validate(self):
        counts = {
            "n_bs": self.n_bs,
            "n_users": self.n_users,
            "n_ris": self.n_ris,
            "groups": self.groups,
            "n_blocks": self.n_blocks,
            "q_intervals": self.q_intervals,
            "p_intervals": self.p_intervals,
            "t_coherence": self.t_coherence,
        }
        for name, value in counts.items():
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.n_ris % self.groups != 0:
            raise ValueError(
                f"n_ris={self.n_ris} is not divisible into {self.groups} groups"
            )
        if self.t_coherence <= self.n_users * self.n_blocks:
            raise ValueError(
                "coherence interval too short: need t_coherence > K*T, got "
                f"{self.t_coherence} <= {self.n_users * self.n_blocks}"
            )
        if self.f_n is None and self.user_speed is None:
            raise ValueError("one of f_n or user_speed is required")
        if not (0.0 <= self.rho_ris < 1.0 and 0.0 <= self.rho_bs < 1.0):
            raise ValueError("correlation coefficients must lie in [0, 1)")

    def with_updates(self, **kwargs):
        return replace(self, **kwargs)


_SYSTEM_KEYS = {
    "n_bs": int, "n_users": int, "n_ris": int, "groups": int,
    "n_blocks": int, "q_intervals": int, "p_intervals": int,
    "t_coherence": int, "t_sampling": float, "f_carrier": float,
    "user_speed": float, "f_n": float, "rician_factor": float,
    "beta_e": float, "beta_h": float, "snr_db": float,
    "rho_ris": float, "rho_bs": float, "seed": int,
}


@dataclass
class ExperimentSpec:
    """One experiment: a scenario, a sweep axis and a drop budget."""

    scenario: str
    system: SystemConfig
    snr_db_list: list = field(default_factory=list)
    t_list: list = field(default_factory=list)
    f_n_list: list = field(default_factory=list)
    horizon: int = 10
    drops: int = 200
    output: str = "out.csv"
    parallelism: int = 1
    cnn_options: dict = field(default_factory=dict)

    def validate(self):
        if self.drops < 1:
            raise ValueError("drops must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        axes = [self.snr_db_list, self.t_list, self.f_n_list]
        if self.scenario in ("nmse_vs_snr", "sumrate") and not self.snr_db_list:
            raise ValueError(f"{self.scenario} needs a non-empty snr_db list")
        if self.scenario == "nmse_vs_t" and not self.t_list:
            raise ValueError("nmse_vs_t needs a non-empty T list")
        del axes


def _parse_list(raw, cast):
    return [cast(tok) for tok in raw.replace(",", " ").split()]


def load_config(path):
    """Read an INI-style config file into (SystemConfig, ExperimentSpec).

    Schema (all keys optional unless noted)::

        [system]
        n_bs = 5
        n_users = 5
        n_ris = 16
        groups = 1
        n_blocks = 20
        q_intervals = 16
        p_intervals = 10
        f_n = 0.005          ; or user_speed = 50.0 (m/s)
        snr_db = 20
        seed = 0

        [experiment]
        scenario = nmse_vs_snr   ; nmse_vs_snr | nmse_vs_t | prediction | sumrate | overhead
        snr_db = 0 5 10 15 20
        t_blocks = 8 12 16 20 24
        f_n = 0.00025 0.001 0.005
        horizon = 10
        drops = 200
        parallelism = 1
        output = out.csv
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")

    sys_kwargs = {}
    if parser.has_section("system"):
        for key, raw in parser.items("system"):
            if key not in _SYSTEM_KEYS:
                raise ValueError(f"unknown [system] key: {key}")
            sys_kwargs[key] = _SYSTEM_KEYS[key](raw)
    if "f_n" in sys_kwargs:
        sys_kwargs.setdefault("user_speed", None)
    elif "user_speed" in sys_kwargs:
        sys_kwargs["f_n"] = None
    system = SystemConfig(**sys_kwargs)

    exp_kwargs = {"scenario": "nmse_vs_snr"}
    if parser.has_section("experiment"):
        section = parser["experiment"]
        exp_kwargs["scenario"] = section.get("scenario", "nmse_vs_snr")
        if "snr_db" in section:
            exp_kwargs["snr_db_list"] = _parse_list(section["snr_db"], float)
        if "t_blocks" in section:
            exp_kwargs["t_list"] = _parse_list(section["t_blocks"], int)
        if "f_n" in section:
            exp_kwargs["f_n_list"] = _parse_list(section["f_n"], float)
        for key, cast in (("horizon", int), ("drops", int), ("parallelism", int)):
            if key in section:
                exp_kwargs[key] = cast(section[key])
        if "output" in section:
            exp_kwargs["output"] = section["output"]
    spec = ExperimentSpec(system=system, **exp_kwargs)
    spec.validate()
    return spec
