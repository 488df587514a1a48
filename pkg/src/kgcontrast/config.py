"""Training configuration: defaults, flat ``key=value`` files, validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .contrastive import CLConfig
from .errors import ConfigError
from .model import MODEL_KINDS

def _preset(model, dim, batch_size, epochs, tau, alphas):
    h, t, hr, tr = alphas
    return dict(model=model, dim=dim, batch_size=batch_size, epochs=epochs, tau=tau,
                alpha_h=h, alpha_t=t, alpha_hr=hr, alpha_tr=tr)


# Per-dataset hyper-parameters of the two CL models. ``batch_size`` and
# ``epochs`` follow the experimental-setting text.
PRESETS = {
    "wn18rr-rescal": _preset("rescal", 512, 512, 200, 0.9, (0.0, 0.0, 2.0, 0.0)),
    "wn18rr-complex": _preset("complex", 2000, 200, 50, 0.5, (0.0, 0.0, 0.0, 2.0)),
    "fb15k237-rescal": _preset("rescal", 512, 512, 200, 0.9, (0.0, 0.0, 0.0, 2.0)),
    "fb15k237-complex": _preset("complex", 2000, 200, 200, 0.5, (2.0, 0.0, 0.0, 0.0)),
    "yago3-10-rescal": _preset("rescal", 512, 512, 200, 0.9, (0.0, 0.0, 0.0, 1.0)),
    "yago3-10-complex": _preset("complex", 2000, 200, 200, 0.5, (0.0, 1.0, 0.0, 0.0)),
}

DEFAULT_REG_WEIGHT = {"rescal": 0.1, "complex": 0.05}


@dataclass(frozen=True)
class TrainConfig:
    model: str = "rescal"
    dim: int = 512
    batch_size: int = 512
    epochs: int = 200
    learning_rate: float = 0.1
    reg_weight: float | None = None
    tau: float = 0.9
    alpha_h: float = 0.0
    alpha_t: float = 0.0
    alpha_hr: float = 2.0
    alpha_tr: float = 0.0
    init_scale: float = 1e-3
    seed: int = 0
    valid_every: int = 5
    reciprocals: bool = True
    dataset: str = ""
    checkpoint: str = ""
    log: str = ""

    def __post_init__(self):
        if self.reg_weight is None:
            object.__setattr__(self, "reg_weight", DEFAULT_REG_WEIGHT.get(self.model, 0.1))
        errors = self.problems()
        if errors:
            raise ConfigError("invalid configuration: " + "; ".join(errors))

    def problems(self):
        out = []
        if self.model not in MODEL_KINDS:
            out.append(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        for name in ("dim", "batch_size", "epochs", "valid_every"):
            if getattr(self, name) < 1:
                out.append(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.learning_rate > 0:
            out.append(f"learning_rate must be > 0, got {self.learning_rate}")
        if not self.tau > 0:
            out.append(f"tau must be > 0, got {self.tau}")
        for name in ("reg_weight", "init_scale", "alpha_h", "alpha_t", "alpha_hr", "alpha_tr"):
            if not getattr(self, name) >= 0:
                out.append(f"{name} must be >= 0, got {getattr(self, name)}")
        return out

    @property
    def cl(self):
        return CLConfig(self.tau, self.alpha_h, self.alpha_t, self.alpha_hr, self.alpha_tr)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_text(self):
        return "".join(f"{k}={'' if v is None else v}\n" for k, v in self.to_dict().items())


FIELD_TYPES = {
    "model": str, "dim": int, "batch_size": int, "epochs": int,
    "learning_rate": float, "reg_weight": float, "tau": float,
    "alpha_h": float, "alpha_t": float, "alpha_hr": float, "alpha_tr": float,
    "init_scale": float, "seed": int, "valid_every": int, "reciprocals": bool,
    "dataset": str, "checkpoint": str, "log": str,
}
assert set(FIELD_TYPES) == {f.name for f in dataclasses.fields(TrainConfig)}


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def convert(key, value):
    """Coerce a text value to the type of ``TrainConfig.<key>``."""
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    if not isinstance(value, str):
        return value
    typ = FIELD_TYPES[key]
    try:
        if typ is bool:
            return _parse_bool(value)
        if key == "reg_weight" and value.strip() == "":
            return None
        return typ(value.strip())
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {e}") from None


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = convert(key, value)
    return values


def load_config(path=None, overrides=None, preset=None):
    """Merge preset < config file < overrides into a validated config."""
    values = {}
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}") from None
        values.update(parse_config_text(text, str(path)))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = convert(key, value)
    return TrainConfig(**values)
