"""Configuration management for homogenize."""

import configparser
import os
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Tuple

from .exceptions import ConfigurationError


class Config:
    """Configuration manager for homogenize runs."""

    # Default configuration values, keyed "section.key"
    DEFAULTS = {
        # Microstructure of the periodic cell
        "microstructure.kind": "circular_inclusion",
        "microstructure.a_matrix": 1.0,
        "microstructure.a_inclusion": 10.0,
        "microstructure.radius": 0.25,
        # Monotone nonlinearity g
        "nonlinearity.kind": "cubic",
        "nonlinearity.c": 1.0,
        # Right-hand side f
        "load.kind": "constant",
        "load.value": 1.0,
        # Epsilon sweep
        "sweep.eps_list": (0.25, 0.125, 0.0625),
        "sweep.cells_per_period": 16,  # fine mesh n = cells_per_period / eps
        "sweep.cell_mesh_n": 128,
        "sweep.reference_n": 128,  # mesh of the homogenized solve
        "sweep.max_workers": 1,
        # Solvers
        "solver.residual_tol": 1e-9,
        "solver.max_newton": 50,
        "solver.picard_fallback": True,
        "solver.force_picard": False,
        "solver.max_picard": 500,
        "solver.cg_tol": 1e-10,
        # Output
        "output.output_dir": "outputs",
        "output.log_filename": "homogenize.log",
        "output.verbose": False,
        "output.write_vtk": False,
    }

    def __init__(self, config_path: str = None):
        """
        Initialize configuration.

        Args:
            config_path: Path to a sectioned key = value file. If None, uses defaults.

        Raises:
            ConfigurationError: If the file contains unknown or malformed entries
        """
        self._config: Dict[str, Any] = self.DEFAULTS.copy()
        self._config_path = config_path

        if config_path:
            if not os.path.exists(config_path):
                raise ConfigurationError(
                    "config", f"Configuration file not found: {config_path}"
                )
            self.load_from_file(config_path)

    def load_from_file(self, config_path: str) -> None:
        """
        Load configuration from a sectioned key = value file.

        Args:
            config_path: Path to configuration file

        Raises:
            ConfigurationError: On unknown sections, unknown keys or bad values
        """
        parser = configparser.ConfigParser(
            inline_comment_prefixes=("#", ";"), interpolation=None
        )
        parser.optionxform = str
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                parser.read_file(f)
        except configparser.Error as e:
            raise ConfigurationError("config", f"Cannot parse {config_path}: {e}")

        sections = {key.split(".", 1)[0] for key in self.DEFAULTS}
        for section in parser.sections():
            if section not in sections:
                raise ConfigurationError(section, f"Unknown section [{section}]")
            for name, raw in parser.items(section):
                key = f"{section}.{name}"
                if key not in self.DEFAULTS:
                    raise ConfigurationError(
                        key, f"Unknown key '{name}' in section [{section}]"
                    )
                self._config[key] = _coerce(key, raw, self.DEFAULTS[key])

    def save_to_file(self, config_path: str = None) -> None:
        """
        Save current configuration as a sectioned key = value file.

        Args:
            config_path: Path to save configuration. If None, uses initialized path.
        """
        path = config_path or self._config_path
        if not path:
            raise ValueError("No configuration path specified")

        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value.

        Args:
            key: Configuration key in "section.key" form
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        return self._config.get(key, default)

    def set(self, key: str, value: Any) -> None:
        """
        Set configuration value.

        Args:
            key: Configuration key
            value: Configuration value
        """
        if key not in self.DEFAULTS:
            raise ConfigurationError(key, f"Unknown configuration key '{key}'")
        self._config[key] = value

    def update(self, config_dict: Dict[str, Any]) -> None:
        """
        Update multiple configuration values.

        Args:
            config_dict: Dictionary of configuration values to update
        """
        for key, value in config_dict.items():
            self.set(key, value)

    def get_output_path(self, filename: str) -> str:
        """Get full path for an output file, creating the output directory."""
        output_dir = self.get("output.output_dir")
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        return os.path.join(output_dir, filename)

    def get_log_path(self) -> str:
        """Get full path for log file."""
        return self.get("output.log_filename")

    def to_dict(self) -> Dict[str, Any]:
        """Get configuration as dictionary."""
        return self._config.copy()

    def to_text(self) -> str:
        """Render the configuration in the sectioned file format."""
        lines = []
        current = None
        for key, value in self._config.items():
            section, name = key.split(".", 1)
            if section != current:
                if current is not None:
                    lines.append("")
                lines.append(f"[{section}]")
                current = section
            if isinstance(value, tuple):
                value = ", ".join(repr(v) for v in value)
            elif isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{name} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def create_default_config_file(cls, path: str = "homogenize.cfg") -> None:
        """
        Create a default configuration file.

        Args:
            path: Path to save configuration file
        """
        cls().save_to_file(path)
        print(f"Default configuration file created at: {path}")


def _coerce(key: str, raw: str, default: Any) -> Any:
    """Convert a raw string to the type of the default value."""
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(Fraction(text))
        if isinstance(default, tuple):
            return _parse_float_list(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(
            key, f"Cannot read '{text}' as {type(default).__name__} for '{key}'"
        )
    return text


def _parse_float_list(text: str) -> Tuple[float, ...]:
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        raise ValueError(text)
    return tuple(float(Fraction(item)) for item in items)


# Global configuration instance
_global_config: Config = None


def get_config() -> Config:
    """
    Get global configuration instance.

    Returns:
        Global Config instance
    """
    global _global_config
    if _global_config is None:
        default_config_path = "homogenize.cfg"
        if os.path.exists(default_config_path):
            _global_config = Config(default_config_path)
        else:
            _global_config = Config()
    return _global_config


def set_config(config: Config) -> None:
    """
    Set global configuration instance.

    Args:
        config: Config instance to set as global
    """
    global _global_config
    _global_config = config


def reset_config() -> None:
    """Reset global configuration to defaults."""
    global _global_config
    _global_config = None
