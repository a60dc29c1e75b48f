"""Campaign configuration: flat ``key = value`` files with # comments.

Every :class:`ExperimentParams` field can appear as a key; unknown keys are
rejected by name.  A sweep is declared with ``sweep_param`` (any numeric
ExperimentParams field) and ``sweep_values`` (a comma-separated, strictly
increasing list).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .params import AngleSettings, ExperimentParams, ParameterError
from .trialsim import TrialMode


class ConfigError(ValueError):
    """Bad configuration key or value; message names the offending key."""


_PARAM_FIELDS = {f.name: f.type for f in fields(ExperimentParams)}
_ANGLE_KEYS = ("theta_s", "theta_s_prime", "theta_as", "theta_as_prime")
_SWEEPABLE = tuple(n for n in _PARAM_FIELDS if n != "envelope")


@dataclass
class CampaignConfig:
    params: ExperimentParams = field(default_factory=ExperimentParams)
    angles: AngleSettings = field(default_factory=AngleSettings)
    mode: TrialMode = TrialMode.SWPE
    n_trials: int = 100_000
    seed: int = 1
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()
    out_dir: str | None = None

    def sweep_configs(self) -> list["CampaignConfig"]:
        if not self.sweep_param:
            raise ConfigError("sweep_param: no sweep declared")
        out = []
        for v in self.sweep_values:
            p = replace(self.params, **{self.sweep_param: v})
            out.append(replace_config(self, params=p))
        return out


def replace_config(cfg: CampaignConfig, **kw) -> CampaignConfig:
    d = {f.name: getattr(cfg, f.name) for f in fields(CampaignConfig)}
    d.update(kw)
    return CampaignConfig(**d)


def _parse_scalar(key: str, raw: str):
    if key == "envelope":
        return raw
    if key == "mode":
        try:
            return TrialMode(raw.lower())
        except ValueError:
            raise ConfigError(f"{key}: unknown mode {raw!r} "
                              "(expected swpe or g2)") from None
    if key in ("n_trials", "seed"):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") \
                from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def parse_config_text(text: str) -> CampaignConfig:
    param_kw: dict = {}
    angle_kw: dict = {}
    other: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key in _PARAM_FIELDS:
            param_kw[key] = _parse_scalar(key, raw)
        elif key in _ANGLE_KEYS:
            angle_kw[key] = _parse_scalar(key, raw)
        elif key in ("mode", "n_trials", "seed"):
            other[key] = _parse_scalar(key, raw)
        elif key == "sweep_param":
            if raw not in _SWEEPABLE:
                raise ConfigError(
                    f"sweep_param: {raw!r} is not a sweepable parameter "
                    f"(choose from {', '.join(_SWEEPABLE)})")
            other["sweep_param"] = raw
        elif key == "sweep_values":
            try:
                values = tuple(float(v) for v in raw.split(",") if v.strip())
            except ValueError:
                raise ConfigError(
                    f"sweep_values: expected comma-separated numbers, "
                    f"got {raw!r}") from None
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError(
                    "sweep_values: values must be strictly increasing")
            other["sweep_values"] = values
        elif key == "out_dir":
            other["out_dir"] = raw
        else:
            raise ConfigError(f"{key}: unknown configuration key")
    try:
        params = ExperimentParams(**param_kw)
        angles = AngleSettings(**angle_kw)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = CampaignConfig(params=params, angles=angles, **other)
    if cfg.n_trials < 1:
        raise ConfigError(f"n_trials: must be >= 1, got {cfg.n_trials}")
    if cfg.sweep_values and not cfg.sweep_param:
        raise ConfigError("sweep_values: sweep_param is missing")
    return cfg


def load_config(path: str | Path) -> CampaignConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))
