"""Flat ``key = value`` run configurations."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

FAMILIES = (
    "polynomial-power",
    "polynomial-perturbed",
    "polynomial-general",
    "polynomial-sin",
    "gaussian",
    "mera",
    "expr",
)
REFERENCES = ("brute-force", "converged-tn", "analytic")
_LISTS = ("seed", "chi", "G", "n_samples")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    family: str
    N: int = 4
    k: int = 2
    W: int = 1
    delta: float = 0.0
    lam: float = -1.0
    c: float = 0.0
    seed: list[int] = field(default_factory=lambda: [0])
    chi: list[int] = field(default_factory=lambda: [1])
    G: list[int] = field(default_factory=lambda: [4])
    n_samples: list[int] = field(default_factory=list)
    reference: str = "brute-force"
    rule: str = "default"
    batch: int = 10**6
    expr: str = ""
    bindings: str = ""
    interval: str = "0,1"
    out: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; choose one of {', '.join(FAMILIES)}")
        if self.reference not in REFERENCES:
            raise ConfigError(f"unknown reference {self.reference!r}; choose one of {', '.join(REFERENCES)}")
        for name in ("seed", "chi", "G"):
            if not getattr(self, name):
                raise ConfigError(f"sweep list {name!r} must be nonempty")
        if any(c < 1 for c in self.chi):
            raise ConfigError("every chi must be >= 1")
        if any(g < 1 for g in self.G):
            raise ConfigError("every G must be >= 1")
        if any(n < 1 for n in self.n_samples):
            raise ConfigError("every n_samples entry must be >= 1")
        if self.N < 1 or self.k < 1 or self.W < 0:
            raise ConfigError("N and k must be >= 1 and W >= 0")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if self.rule not in ("default", "uniform", "gauss"):
            raise ConfigError(f"unknown rule {self.rule!r}")
        if self.family == "expr" and not self.expr:
            raise ConfigError("family=expr needs an expr key")

    @classmethod
    def from_pairs(cls, pairs: dict[str, str]) -> RunConfig:
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in pairs.items():
            name = "lam" if key == "lambda" else key
            if name not in known:
                raise ConfigError(f"unknown key {key!r}")
            kwargs[name] = _convert(name, known[name].type, raw)
        if "family" not in kwargs:
            raise ConfigError("config must set family")
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str, overrides: dict[str, str] | None = None) -> RunConfig:
        pairs = parse_pairs(text)
        pairs.update(overrides or {})
        return cls.from_pairs(pairs)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            key = "lambda" if f.name == "lam" else f.name
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def parse_pairs(text: str) -> dict[str, str]:
    pairs = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _int_list(raw: str) -> list[int]:
    """Comma list where ``a..b`` expands to the inclusive range."""
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(float(part)) if "e" in part.lower() else int(part))
    return out


def _convert(name: str, typ, raw: str):
    try:
        if name in _LISTS:
            return _int_list(raw)
        if typ in ("int", int):
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if typ in ("float", float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name!r}: {raw!r}") from None
