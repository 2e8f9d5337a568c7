"""Experiment configuration: a ``key = value`` text format with ``#`` comments.

Every key has a default, and the resolved configuration (defaults included)
is echoed into each report.  Parsing collects all range violations before
raising, so a single run reports every bad field.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields

from .errors import ParseError, ValidationError

__all__ = ["KINDS", "WEIGHT_MODELS", "ExperimentConfig", "parse_config", "validate"]

KINDS = ("ap-check", "reduce", "norms", "equivalence", "wavelet", "sobolev",
         "inequalities", "riesz")
WEIGHT_MODELS = ("identity", "constant", "shipped", "scalar_power", "diagonal_power",
                 "rotated")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "norms"
    J: int = 10
    J2: int | None = None
    n: int = 1
    m: int = 1
    p: float = 2.0
    q: float = 2.0
    alpha: float = 0.0
    homogeneous: bool = True
    weight_model: str = "identity"
    weight_a: tuple = (0.5,)
    weight_center: float = 0.5
    weight_matrix: tuple = ()
    weight_angle_freq: int = 1
    strategy: str = "auto"
    wavelet: str = "meyer"
    trials: int = 10
    seed: int = 0
    k: int = 1
    beta: float = 2.0
    riesz_betas: tuple = (-1.0, 1.0)
    margin: float = 0.5
    out: str = "mwlp_out"

    @property
    def refine_J(self) -> int:
        """The second (coarser) resolution used for refinement checks."""
        return self.J - 1 if self.J2 is None else self.J2

    def to_dict(self) -> dict:
        d = asdict(self)
        d["q"] = "inf" if math.isinf(self.q) else self.q
        d["J2"] = self.refine_J
        for key in ("weight_a", "weight_matrix", "riesz_betas"):
            d[key] = list(d[key])
        return d

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def replace(self, **kw) -> "ExperimentConfig":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        cfg = ExperimentConfig(**d)
        validate(cfg)
        return cfg


# file key -> (attribute, converter)
def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float(text: str) -> float:
    t = text.lower()
    if t in ("inf", "infinity", "+inf"):
        return math.inf
    return float(text)


def _floats(text: str) -> tuple:
    return tuple(_float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _int(text: str) -> int:
    return int(text, 0)


_KEYS = {
    "kind": ("kind", str),
    "J": ("J", _int),
    "J2": ("J2", _int),
    "n": ("n", _int),
    "m": ("m", _int),
    "p": ("p", _float),
    "q": ("q", _float),
    "alpha": ("alpha", _float),
    "homogeneous": ("homogeneous", _bool),
    "weight.model": ("weight_model", str),
    "weight.a": ("weight_a", _floats),
    "weight.center": ("weight_center", _float),
    "weight.matrix": ("weight_matrix", _floats),
    "weight.angle_freq": ("weight_angle_freq", _int),
    "strategy": ("strategy", str),
    "wavelet": ("wavelet", str),
    "trials": ("trials", _int),
    "seed": ("seed", _int),
    "k": ("k", _int),
    "beta": ("beta", _float),
    "riesz.betas": ("riesz_betas", _floats),
    "margin": ("margin", _float),
    "out": ("out", str),
}


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse and validate a configuration.

    Parameters
    ----------
    text : str
        Lines of ``key = value``; blank lines and ``#`` comments are ignored.
    **overrides
        Attribute values applied after parsing (command-line flags).

    Raises
    ------
    ParseError
        Malformed line, unknown or repeated key, or unconvertible value.
    ValidationError
        Values outside their documented ranges; lists every violation.
    """
    values = {}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ParseError(f"key {key!r} repeated (first on line {seen[key]})", lineno)
        seen[key] = lineno
        attr, conv = _KEYS[key]
        try:
            values[attr] = conv(value)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", lineno) from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    bad = []

    def check(ok: bool, name: str, msg: str):
        if not ok:
            bad.append(f"{name}: {msg}")

    check(cfg.kind in KINDS, "kind", f"must be one of {', '.join(KINDS)}")
    check(4 <= cfg.J <= 14, "J", "must lie in [4, 14]")
    check(cfg.J2 is None or 4 <= cfg.J2 <= 14, "J2", "must lie in [4, 14]")
    check(cfg.n in (1, 2), "n", "must be 1 or 2")
    check(1 <= cfg.m <= 3, "m", "must lie in [1, 3]")
    check(0 < cfg.p <= 16, "p", "must lie in (0, 16]")
    check(cfg.q > 0, "q", "must be positive or inf")
    check(-8 <= cfg.alpha <= 8, "alpha", "must lie in [-8, 8]")
    check(cfg.weight_model in WEIGHT_MODELS, "weight.model",
          f"must be one of {', '.join(WEIGHT_MODELS)}")
    check(len(cfg.weight_a) >= 1, "weight.a", "needs at least one exponent")
    if cfg.weight_model == "constant":
        check(len(cfg.weight_matrix) == cfg.m * cfg.m, "weight.matrix",
              f"needs {cfg.m * cfg.m} row-major entries")
    if cfg.weight_model == "diagonal_power":
        check(len(cfg.weight_a) == cfg.m, "weight.a", f"needs {cfg.m} exponents")
    if cfg.weight_model == "rotated":
        check(cfg.m == 2, "m", "the rotated model needs m = 2")
        check(len(cfg.weight_a) == 2, "weight.a", "needs 2 exponents")
    check(cfg.strategy in ("auto", "gram2", "mvee", "scalar"), "strategy",
          "must be auto, gram2, mvee or scalar")
    wav = cfg.wavelet
    check(wav == "meyer" or (wav.startswith("db") and wav[2:].isdigit() and 1 <= int(wav[2:]) <= 10),
          "wavelet", "must be meyer or db1..db10")
    check(cfg.trials >= 1, "trials", "must be at least 1")
    check(cfg.seed >= 0, "seed", "must be nonnegative")
    check(cfg.k >= 0, "k", "must be nonnegative")
    check(cfg.margin > 0, "margin", "must be positive")
    if bad:
        raise ValidationError(bad)
