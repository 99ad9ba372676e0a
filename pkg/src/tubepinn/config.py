"""Run configuration: a sectioned plain-text key=value format.

TOML-like syntax, deliberately tiny: ``[section]`` headers, ``key = value``
pairs, ``#`` comments.  Values are integers, floats, booleans (true/false)
or strings (bare or double-quoted).  Unknown sections or keys are rejected
with their line number.  Every key has a default, so an empty file is a
valid paper-scale forward run; the ``desk`` profile swaps in the reduced
test-scale defaults.  Mode-dependent defaults (inverse runs use different
network sizes, weights and learning-rate decay) resolve when the mode is
known.
"""

from __future__ import annotations

import copy
import io

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_file", "serialize_config"]


class ConfigError(ValueError):
    """Malformed configuration text or unknown key."""


# schema: section -> key -> (type, base default)
_SCHEMA = {
    "air": {
        "rho": (float, 1.20),
        "bulk_modulus": (float, 1.39e5),
        "speed_of_sound": (float, 340.0),
        "viscosity": (float, 19.0e-6),
        "heat_capacity_ratio": (float, 1.40),
        "thermal_conductivity": (float, 2.41e-2),
        "cp": (float, 0.0),  # 0 = pick from cp_convention
        "cp_convention": (str, "paper_kJ"),
    },
    "tube": {
        "length": (float, 1.0),
        "diameter": (float, 0.01),
        "omega_c": (float, 1643.7),
    },
    "source": {
        "f0": (float, 261.6),
        "peak_velocity": (float, 1.0),
        "rise_fraction": (float, 0.4),
        "fall_fraction": (float, 0.16),
        "smoothing_window": (int, 0),  # 0 = auto (~1/20 period)
        "sample_count": (int, 8192),
        "n_harmonics": (int, 20),  # 0 = no band limit
    },
    "network": {
        "n_nodes": (int, 0),  # 0 = profile/mode default
        "n_blocks": (int, 0),
        "alpha_phi": (float, 0.002),
        "alpha_u": (float, 3.4e-5),
        "activation": (str, "snake"),
    },
    "sampler": {
        "n_interior": (int, 0),
        "n_boundary": (int, 0),
        "n_coupling": (int, 0),
        "n_periodic": (int, 0),
        "n_measurement": (int, 0),
        "sequence": (str, "sobol"),
        "skip": (int, 0),
    },
    "weights": {
        "lambda_E": (float, 0.0),  # 0 = mode default (0.58 forward, 5.8 inverse)
        "lambda_P": (float, 1.0),
        "lambda_C": (float, 1.0),
        "lambda_p": (float, 8.7e-6),
        "lambda_t": (float, 1.3e-12),
        "lambda_M": (float, 0.0),  # inverse default 5.0e-3
        "lambda_B_primed": (float, 1.0),
        "lambda_u_primed": (float, 1.0),
        "lambda_l_primed": (float, 1.0),
        "lambda_r_primed": (float, 50.0),
    },
    "training": {
        "epochs": (int, 0),  # 0 = profile/mode default
        "lr_init": (float, 0.001),
        "lr_decay": (float, 0.0),  # 0 = mode default (0.007 forward, 0.005 inverse)
        "early_stop": (float, 1e-5),
        "seed": (int, 0),
        "noise_fraction": (float, 0.0),
        "checkpoint_every": (int, 0),
        "include_periodicity": (bool, True),
        "log_every": (int, 0),
        "scalar_warmup_epochs": (int, -1),  # -1 = mode default (0 forward, 3000 inverse)
    },
    "fdm": {
        "delta_x": (float, 1e-3),
        "delta_t": (float, 0.5e-6),
        "n_periods": (int, 20),
        "steady_tol": (float, 1e-3),
        "store_stride": (int, 5),
        "field_periods": (int, 3),
        "csv_stride_x": (int, 10),
        "csv_stride_t": (int, 10),
    },
    "inverse": {
        "mode": (str, "omega"),
        "omega_c_init": (float, 1.3149e3),
        "length_init": (float, 0.8),
        "diameter_init": (float, 0.008),
        "shift": (float, 0.0),
        "ground_truth_omega_c": (float, 1643.7),
        "ground_truth_length": (float, 1.0),
        "ground_truth_diameter": (float, 0.01),
    },
    "output": {
        "grid_nx": (int, 81),
        "grid_nt": (int, 161),
    },
}

# profile/mode-dependent defaults for keys whose base default is the 0 sentinel
_NETWORK_SIZES = {
    # (profile, is_inverse) -> (n_nodes, n_blocks)
    ("paper", False): (200, 5),
    ("paper", True): (400, 2),
    ("desk", False): (64, 3),
    ("desk", True): (64, 2),
}
_SAMPLER_COUNTS = {
    "paper": {"n_interior": 5000, "n_boundary": 1000, "n_coupling": 1000, "n_periodic": 1000, "n_measurement": 1000},
    "desk": {"n_interior": 2000, "n_boundary": 400, "n_coupling": 400, "n_periodic": 400, "n_measurement": 400},
}
_EPOCHS = {
    ("paper", False): 20000,
    ("paper", True): 100000,
    ("desk", False): 5000,
    ("desk", True): 20000,
}


class RunConfig:
    """Parsed configuration: explicit values over schema defaults."""

    def __init__(self, explicit: dict | None = None):
        self.explicit = explicit or {}
        for (section, key) in self.explicit:
            if section not in _SCHEMA or key not in _SCHEMA[section]:
                raise ConfigError(f"unknown configuration key [{section}] {key}")

    def get(self, section: str, key: str):
        if (section, key) in self.explicit:
            return self.explicit[(section, key)]
        return _SCHEMA[section][key][1]

    def set(self, section: str, key: str, value):
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown configuration key [{section}] {key}")
        typ = _SCHEMA[section][key][0]
        self.explicit[(section, key)] = typ(value)

    def copy(self) -> "RunConfig":
        return RunConfig(copy.deepcopy(self.explicit))

    def resolved(self, profile: str = "paper", inverse: bool = False) -> dict:
        """Full section->key->value mapping with profile/mode defaults applied."""
        if profile not in ("paper", "desk"):
            raise ConfigError(f"profile must be 'paper' or 'desk', got {profile!r}")
        out = {s: {k: self.get(s, k) for k in keys} for s, keys in _SCHEMA.items()}
        nn, nb = _NETWORK_SIZES[(profile, inverse)]
        if out["network"]["n_nodes"] == 0:
            out["network"]["n_nodes"] = nn
        if out["network"]["n_blocks"] == 0:
            out["network"]["n_blocks"] = nb
        for key, val in _SAMPLER_COUNTS[profile].items():
            if out["sampler"][key] == 0:
                out["sampler"][key] = val
        if out["training"]["epochs"] == 0:
            out["training"]["epochs"] = _EPOCHS[(profile, inverse)]
        if out["training"]["lr_decay"] == 0.0:
            out["training"]["lr_decay"] = 0.005 if inverse else 0.007
        if out["weights"]["lambda_E"] == 0.0:
            out["weights"]["lambda_E"] = 5.8 if inverse else 0.58
        if inverse and out["weights"]["lambda_M"] == 0.0:
            out["weights"]["lambda_M"] = 5.0e-3
        if out["training"]["scalar_warmup_epochs"] < 0:
            out["training"]["scalar_warmup_epochs"] = 3000 if inverse else 0
        if out["air"]["cp"] == 0.0:
            out["air"]["cp"] = 1.01 if out["air"]["cp_convention"] == "paper_kJ" else 1010.0
        return out


def _parse_value(raw: str, lineno: int):
    raw = raw.strip()
    if not raw:
        raise ConfigError(f"line {lineno}: empty value")
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw  # bare string


def parse_config(text: str) -> RunConfig:
    explicit = {}
    section = None
    for lineno, line in enumerate(io.StringIO(text), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in section [{section}]")
        value = _parse_value(raw, lineno)
        typ = _SCHEMA[section][key][0]
        if typ is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"line {lineno}: {key} expects true/false")
        elif typ is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"line {lineno}: {key} expects an integer")
        elif typ is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"line {lineno}: {key} expects a number")
            value = float(value)
        elif typ is str:
            if not isinstance(value, str):
                raise ConfigError(f"line {lineno}: {key} expects a string")
        explicit[(section, key)] = value
    return RunConfig(explicit)


def parse_config_file(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    return f'"{value}"'


def serialize_config(config: RunConfig, include_defaults: bool = False) -> str:
    """Canonical text form; parse(serialize(c)) recovers the same values."""
    lines = []
    for section, keys in _SCHEMA.items():
        emitted = []
        for key in keys:
            explicit = (section, key) in config.explicit
            if explicit or include_defaults:
                emitted.append(f"{key} = {_format_value(config.get(section, key))}")
        if emitted:
            lines.append(f"[{section}]")
            lines.extend(emitted)
            lines.append("")
    return "\n".join(lines)
