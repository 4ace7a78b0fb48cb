"""Run configuration: every tunable of the pipeline, serializable as key=value text."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import ArgumentError


def parse_bands(text: str, wrap: bool = False) -> dict[str, tuple[int, int | None]]:
    """Parse ``name:lo-hi`` pairs; ``hi`` may be empty for an open upper bound."""
    bands: dict[str, tuple[int, int | None]] = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            name, rng = item.split(":")
            lo, hi = rng.split("-")
            bands[name.strip()] = (int(lo), int(hi) if hi.strip() else None)
        except ValueError:
            raise ArgumentError(f"bad band definition {item!r}, expected name:lo-hi") from None
    return bands


@dataclass(frozen=True)
class RunConfig:
    lixel_length: float = 50.0
    connectivity_radius: float = 15.0
    dedup_epsilon: float = 1.0
    date_format: str = "%m/%d/%Y"
    weather_values: str = "Clear,Cloudy,Rain"
    age_bands: str = "teen:16-19,adult:20-64,elderly:65-"
    hour_bands: str = "morning:6-11,afternoon:12-17,night:18-5"
    pagerank_d: float = 0.15
    pagerank_max_iterations: int = 100
    pagerank_tolerance: float = 1e-12
    pagerank_dangling: str = "redistribute"
    pagerank_convention: str = "paper"

    def __post_init__(self):
        for name in ("lixel_length", "connectivity_radius", "dedup_epsilon"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be > 0")
        if not self.weather_list:
            raise ArgumentError("weather_values must name at least one condition")
        parse_bands(self.age_bands)
        parse_bands(self.hour_bands)
        self.pagerank_config()  # validates the PageRank fields

    @property
    def weather_list(self) -> tuple[str, ...]:
        return tuple(w.strip() for w in self.weather_values.split(",") if w.strip())

    def pagerank_config(self):
        from .metrics import PageRankConfig

        return PageRankConfig(
            d=self.pagerank_d,
            max_iterations=self.pagerank_max_iterations,
            tolerance=self.pagerank_tolerance,
            dangling_policy=self.pagerank_dangling,
            convention=self.pagerank_convention,
        )

    def bands(self):
        from .projection import Bands

        return Bands(age=parse_bands(self.age_bands), hour=parse_bands(self.hour_bands))

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k}={v!r}\n" if isinstance(v, float) else f"{k}={v}\n" for k, v in self.as_dict().items())

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_text(cls, text: str) -> RunConfig:
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if not sep or key not in types:
                raise ArgumentError(f"config line {lineno}: unknown or malformed entry {line!r}")
            kind = types[key]
            try:
                values[key] = float(raw) if kind == "float" else int(raw) if kind == "int" else raw
            except ValueError:
                raise ArgumentError(f"config line {lineno}: {key} expects a {kind}, got {raw!r}") from None
        return cls(**values)

    @classmethod
    def load(cls, path: str | Path | None) -> RunConfig:
        if path is None:
            return cls()
        return cls.from_text(Path(path).read_text(encoding="utf-8"))
