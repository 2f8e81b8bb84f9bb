"""Request and response shapes for the experiment service.

Each experiment has one config model; unknown fields are rejected so a
typo in a config file fails loudly instead of silently running defaults.
Randomized experiments require an explicit seed.
"""
from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class _Config(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RelationPConfig(_Config):
    n: int = 16
    k: int = Field(default=4, description="rows are produced for 1..k repetitions")
    eps: float | None = Field(default=None, description="dont_know budget; default 2^-k per row")
    instances: int = 100
    trials: int = 2000
    seed: int


class MarginsConfig(_Config):
    n: int = Field(default=4, description="largest inner-product instance size, <= 4")
    points: int = Field(default=4, description="equality domain size")
    seed: int = 0


class YaoSimConfig(_Config):
    tables: int = 50
    eps: float = 1.0 / 3.0
    seed: int


class HammingConfig(_Config):
    n: int = 32
    d: int = 2
    eps: float = 1.0 / 3.0
    trials: int = 10000
    ball_n: int = 12
    ball_d: int = 1
    ball_rate: float = 0.25
    coherent_runs: int = 1000
    seed: int


class LemmasConfig(_Config):
    trials: int = Field(default=200, description="direct-product quadruples")
    swap_pairs: int = 20
    swap_trials: int = 100000
    conversions: int = 100
    seed: int


class TableResponse(BaseModel):
    name: str
    columns: list[str]
    rows: list[list[str]]
    all_pass: bool
    notes: list[str]
    csv: str
