"""Experiment configuration and its JSON form."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

from ..client import DeviceProfile
from ..crypto.he import HeParams
from ..errors import ValidationError

STRATEGIES = ("she_lora", "plain_fedavg_oracle", "full_encrypt_oracle")


@dataclass(frozen=True)
class ProfileSpec:
    type_id: int
    rank: int
    gamma: float
    count: int

    def device(self):
        return DeviceProfile(self.type_id, self.rank, self.gamma)


def default_profiles():
    """Four heterogeneous device types: ranks, budgets and head counts."""
    return (
        ProfileSpec(1, 8, 0.004, 20),
        ProfileSpec(2, 16, 0.004, 15),
        ProfileSpec(3, 16, 0.008, 10),
        ProfileSpec(4, 32, 0.016, 5),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a run.  Two equal configs give identical reports."""

    n_clients: int = 50
    rounds: int = 50
    m: int = 64
    n: int = 256
    profiles: tuple = field(default_factory=default_profiles)
    dirichlet_rho: float = 0.3
    poly_degree: int = 8192
    # matmul, per-column divide and truncation mask each use one level
    moduli_bits: tuple = (60, 40, 40, 40, 60)
    noise_epsilon: float = 0.0
    chunk: int | None = None
    negotiation_period: int = 1
    seed: int = 0
    strategy: str = "she_lora"
    local_steps: int = 5
    lr: float = 0.5
    samples_per_client: int = 40
    test_samples: int = 512
    n_clusters: int = 10
    teacher_rank: int = 4
    calibration_size: int = 32
    n_opt: int = 50
    mi_every: int = 0
    # subsampling hook; 1.0 means every client joins every round
    participation: float = 1.0

    def __post_init__(self):
        profiles = tuple(p if isinstance(p, ProfileSpec) else ProfileSpec(**p) for p in self.profiles)
        object.__setattr__(self, "profiles", profiles)
        object.__setattr__(self, "moduli_bits", tuple(int(b) for b in self.moduli_bits))
        if sum(p.count for p in profiles) != self.n_clients:
            raise ValidationError(f"profile counts sum to {sum(p.count for p in profiles)}, not n_clients={self.n_clients}")
        if self.dirichlet_rho <= 0:
            raise ValidationError("dirichlet_rho must be positive")
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.rounds < 0 or self.m < 1 or self.n < 1:
            raise ValidationError("rounds, m and n must be positive")
        if self.negotiation_period < 1:
            raise ValidationError("negotiation_period must be >= 1")
        if self.chunk is not None and self.chunk < 1:
            raise ValidationError("chunk must be >= 1")
        if self.participation != 1.0:
            raise ValidationError("client subsampling is not implemented; participation must be 1.0")
        for p in profiles:
            p.device()

    @property
    def he_params(self):
        return HeParams(self.poly_degree, self.moduli_bits, self.noise_epsilon)

    def client_profiles(self):
        """Device profile of each client id, types in table order."""
        out = []
        for p in self.profiles:
            out.extend([p.device()] * p.count)
        return out

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = asdict(self)
        d["profiles"] = [asdict(p) for p in self.profiles]
        d["moduli_bits"] = list(self.moduli_bits)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(d)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_json(fh.read())
