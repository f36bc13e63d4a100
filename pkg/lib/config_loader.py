#!/usr/bin/env python3
"""Configuration loading and validation."""

import copy
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from .logger_config import get_logger

logger = get_logger("config_loader")


class ConfigValidationError(Exception):
    """Raised when configuration validation fails."""
    pass


class ConfigLoader:
    """Load and validate configuration from a YAML (or JSON) file."""

    DEFAULT_CONFIG_PATH = Path.home() / ".config" / "rcp-domains" / "config.yaml"

    DEFAULT_CONFIG = {
        "logging": {
            "level": "WARNING",
            "file": None,
            "console": True
        },
        "policy": {
            "alpha": 4,
            "beta": 3
        },
        "output": {
            "format": "json",
            "precision": 6,
            "member_limit": 10000
        },
        "sweep": {
            "beta_min": 3,
            "beta_max": 10,
            "threshold": 1000,
            "bucket_base": 2
        },
        "simulation": {
            "sizes": {
                "n_good": 1950,
                "n_bad": 50
            },
            "params": {
                "r": 0.05,
                "x": 3,
                "y": 4
            },
            "model": {
                "kind": "clique_chain",
                "clique_size": 6,
                "stride": 3,
                "rewire": 0.05,
                "bad_density": 0.3,
                "cross_fraction": 0.025
            },
            "seeds": {
                "start": 1,
                "count": 50
            },
            "policies": [
                {"alpha": 4, "beta": 3}
            ],
            "attack": None,
            "baseline_hops": 3,
            "baseline_sample": 200,
            "workers": 1,
            "negative_control": None
        }
    }

    VALID_FORMATS = ["json", "csv"]

    VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

    VALID_MODELS = ["clique_chain", "relaxed_caveman", "watts_strogatz"]

    VALID_STRATEGIES = ["random", "targeted", "clustered"]

    def __init__(self, config_path: Optional[Union[Path, str]] = None):
        """
        Initialize ConfigLoader.

        Args:
            config_path: Optional path to configuration file
        """
        self._explicit = config_path is not None
        if config_path:
            self.config_path = Path(config_path) if isinstance(config_path, str) else config_path
        else:
            self.config_path = self.DEFAULT_CONFIG_PATH

        self.config = copy.deepcopy(self.DEFAULT_CONFIG)
        self._loaded = False

    def load(self) -> Dict[str, Any]:
        """
        Load configuration from file.

        A missing file at the default location yields the defaults and a
        sample file; a missing explicitly named file is an error.

        Returns:
            Configuration dictionary

        Raises:
            ConfigValidationError: If configuration is missing or invalid
        """
        config = copy.deepcopy(self.DEFAULT_CONFIG)

        if not self.config_path.exists():
            if self._explicit:
                raise ConfigValidationError(f"Configuration file not found: {self.config_path}")
            logger.info(f"Configuration file not found at {self.config_path}, using defaults")
            self.create_sample_config()
            self.config = config
            self._loaded = True
            return config

        try:
            with open(self.config_path, 'r') as f:
                user_config = yaml.safe_load(f) or {}
            logger.info(f"Loaded configuration from {self.config_path}")
        except yaml.YAMLError as e:
            raise ConfigValidationError(f"Invalid YAML in configuration file: {e}")
        except Exception as e:
            raise ConfigValidationError(f"Error reading configuration file: {e}")

        if not isinstance(user_config, dict):
            raise ConfigValidationError("Configuration file must hold a mapping")

        config = self._merge_configs(config, user_config)
        config = self._expand_paths(config)

        if not self.validate(config):
            raise ConfigValidationError("Configuration validation failed")

        self.config = config
        self._loaded = True
        return config

    def _merge_configs(self, default: Dict, user: Dict) -> Dict:
        """
        Recursively merge user configuration with defaults.

        Args:
            default: Default configuration
            user: User configuration

        Returns:
            Merged configuration
        """
        result = copy.deepcopy(default)

        for key, value in user.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_configs(result[key], value)
            else:
                result[key] = value

        return result

    def _expand_paths(self, config: Dict) -> Dict:
        """Expand ~ in the log file path."""
        if "logging" in config and config["logging"].get("file"):
            config["logging"]["file"] = str(Path(config["logging"]["file"]).expanduser())
        return config

    def _require_int(self, value: Any, name: str, minimum: int) -> None:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigValidationError(f"{name} must be an integer")
        if value < minimum:
            raise ConfigValidationError(f"{name} must be >= {minimum}")

    def _require_probability(self, value: Any, name: str, open_interval: bool = False) -> None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigValidationError(f"{name} must be a number")
        if open_interval and not 0 < value < 1:
            raise ConfigValidationError(f"{name} must be between 0 and 1 (exclusive)")
        if not 0 <= value <= 1:
            raise ConfigValidationError(f"{name} must be between 0 and 1")

    def _validate_policy(self, policy: Any, name: str) -> None:
        if not isinstance(policy, dict):
            raise ConfigValidationError(f"{name} must be a mapping with alpha and beta")
        self._require_int(policy.get("alpha"), f"{name}.alpha", 1)
        self._require_int(policy.get("beta"), f"{name}.beta", 1)

    def validate(self, config: Dict[str, Any]) -> bool:
        """
        Validate configuration structure and values.

        Args:
            config: Configuration dictionary to validate

        Returns:
            True if configuration is valid

        Raises:
            ConfigValidationError: If validation fails
        """
        try:
            if "logging" in config:
                log_config = config["logging"]
                if "level" in log_config:
                    if log_config["level"] not in self.VALID_LOG_LEVELS:
                        raise ConfigValidationError(f"logging.level must be one of {self.VALID_LOG_LEVELS}")

            if "policy" in config:
                self._validate_policy(config["policy"], "policy")

            if "output" in config:
                output = config["output"]
                if output.get("format") not in self.VALID_FORMATS:
                    raise ConfigValidationError(f"output.format must be one of {self.VALID_FORMATS}")
                self._require_int(output.get("precision"), "output.precision", 0)
                self._require_int(output.get("member_limit"), "output.member_limit", 0)

            if "sweep" in config:
                sweep = config["sweep"]
                self._require_int(sweep.get("beta_min"), "sweep.beta_min", 1)
                self._require_int(sweep.get("beta_max"), "sweep.beta_max", 1)
                if sweep["beta_max"] < sweep["beta_min"]:
                    raise ConfigValidationError("sweep.beta_max must be >= sweep.beta_min")
                self._require_int(sweep.get("threshold"), "sweep.threshold", 1)
                self._require_int(sweep.get("bucket_base"), "sweep.bucket_base", 2)

            if "simulation" in config:
                self._validate_simulation(config["simulation"])

            return True

        except ConfigValidationError:
            raise
        except Exception as e:
            raise ConfigValidationError(f"Unexpected validation error: {e}")

    def _validate_simulation(self, sim: Dict[str, Any]) -> None:
        if not isinstance(sim, dict):
            raise ConfigValidationError("simulation must be a mapping")

        sizes = sim.get("sizes", {})
        self._require_int(sizes.get("n_good"), "simulation.sizes.n_good", 1)
        self._require_int(sizes.get("n_bad"), "simulation.sizes.n_bad", 0)

        params = sim.get("params", {})
        self._require_probability(params.get("r"), "simulation.params.r", open_interval=True)
        self._require_int(params.get("x"), "simulation.params.x", 1)
        self._require_int(params.get("y"), "simulation.params.y", 1)
        if params["y"] < params["x"] + 1:
            raise ConfigValidationError("simulation.params.y must be >= x + 1")

        model = sim.get("model", {})
        if model.get("kind") not in self.VALID_MODELS:
            raise ConfigValidationError(f"simulation.model.kind must be one of {self.VALID_MODELS}")
        self._require_int(model.get("clique_size"), "simulation.model.clique_size", 2)
        self._require_int(model.get("stride"), "simulation.model.stride", 1)
        self._require_probability(model.get("rewire"), "simulation.model.rewire")
        self._require_probability(model.get("bad_density"), "simulation.model.bad_density")
        self._require_probability(model.get("cross_fraction"), "simulation.model.cross_fraction")
        if model["cross_fraction"] >= 1:
            raise ConfigValidationError("simulation.model.cross_fraction must be < 1")

        seeds = sim.get("seeds")
        if isinstance(seeds, list):
            if not seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
                raise ConfigValidationError("simulation.seeds must be a nonempty list of integers")
        elif isinstance(seeds, dict):
            self._require_int(seeds.get("start"), "simulation.seeds.start", 0)
            self._require_int(seeds.get("count"), "simulation.seeds.count", 1)
        else:
            raise ConfigValidationError("simulation.seeds must be a list or {start, count}")

        policies = sim.get("policies")
        if not isinstance(policies, list) or not policies:
            raise ConfigValidationError("simulation.policies must be a nonempty list")
        for k, policy in enumerate(policies):
            self._validate_policy(policy, f"simulation.policies[{k}]")

        attack = sim.get("attack")
        if attack is not None:
            if not isinstance(attack, dict):
                raise ConfigValidationError("simulation.attack must be a mapping")
            self._require_int(attack.get("bots", 0), "simulation.attack.bots", 0)
            self._require_probability(attack.get("bot_density", 1.0), "simulation.attack.bot_density")
            self._require_int(attack.get("cross_link_budget", 0), "simulation.attack.cross_link_budget", 0)
            if attack.get("strategy", "random") not in self.VALID_STRATEGIES:
                raise ConfigValidationError(
                    f"simulation.attack.strategy must be one of {self.VALID_STRATEGIES}"
                )

        self._require_int(sim.get("baseline_hops"), "simulation.baseline_hops", 1)
        self._require_int(sim.get("baseline_sample"), "simulation.baseline_sample", 1)
        self._require_int(sim.get("workers"), "simulation.workers", 1)

        control = sim.get("negative_control")
        if control is not None:
            if not isinstance(control, dict):
                raise ConfigValidationError("simulation.negative_control must be a mapping")
            self._require_int(control.get("ties", 1), "simulation.negative_control.ties", 1)
            self._require_int(control.get("mutual_friends", 3),
                              "simulation.negative_control.mutual_friends", 1)

    def reload(self) -> Dict[str, Any]:
        """
        Reload configuration from file.

        Returns:
            Updated configuration dictionary
        """
        logger.info("Reloading configuration...")
        self._loaded = False
        return self.load()

    def create_sample_config(self) -> None:
        """Create a sample configuration file if none exists."""
        if self.config_path.exists():
            logger.info(f"Configuration file already exists at {self.config_path}")
            return

        self.config_path.parent.mkdir(parents=True, exist_ok=True)

        sample_config = {
            "policy": self.DEFAULT_CONFIG["policy"],
            "output": self.DEFAULT_CONFIG["output"],
            "sweep": self.DEFAULT_CONFIG["sweep"],
        }

        try:
            with open(self.config_path, 'w') as f:
                yaml.dump(sample_config, f, default_flow_style=False, sort_keys=False)
            logger.info(f"Created sample configuration at {self.config_path}")
        except Exception as e:
            logger.error(f"Failed to create sample configuration: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value by key.

        Supports nested keys with dot notation (e.g., "simulation.params.r").

        Args:
            key: Configuration key (supports dot notation)
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        if not self._loaded:
            self.load()

        keys = key.split('.')
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def get_policies(self) -> List[Dict[str, int]]:
        """Policies listed for the simulation."""
        return self.get("simulation.policies", [])

    def get_seeds(self) -> List[int]:
        """Simulation seeds as an explicit list."""
        seeds = self.get("simulation.seeds")
        if isinstance(seeds, list):
            return list(seeds)
        return list(range(seeds["start"], seeds["start"] + seeds["count"]))

    def get_simulation(self) -> Dict[str, Any]:
        return self.get("simulation", copy.deepcopy(self.DEFAULT_CONFIG["simulation"]))
