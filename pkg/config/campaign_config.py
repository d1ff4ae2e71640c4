"""
Campaign configuration: the CampaignConfig record and its .cfg persistence.

A campaign is fully described by one CampaignConfig. It can be built from CLI
flags, loaded from an INI-style file (``[campaign]`` section) and is echoed to
``<output>/campaign.cfg`` at the start of every run so reports can be traced
back to the exact settings and RNG seed that produced them.
"""

import os
import shlex
import configparser
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional

from config.config import (
    EXEC_TIMEOUT, MAX_AST_NODES, MAX_AST_DEPTH, STABILITY_REPEATS,
    DEFAULT_GENERATOR_COUNT, DEFAULT_MAX_TYPES, DEFAULT_MAX_FUNCTIONS,
    DEFAULT_MAX_STATEMENTS, DEFAULT_MAX_GLOBALS, MINIMIZE_MAX_EXECS,
    SHM_ENV_VAR, CONFIG_ECHO_FILE_NAME,
)
from util.error_utils import validate_numeric_range

SECTION = 'campaign'

TARGET_KINDS = ('reference', 'external')
DELIVERY_MODES = ('file', 'stdin')
ABLATION_KINDS = ('full', 'ir-disabled', 'ast-disabled', 'ir-delayed', 'ast-delayed')


class ConfigError(ValueError):
    """Invalid campaign configuration; raised before any execution."""


@dataclass(frozen=True)
class AblationMode:
    """Which mutation layers are enabled, possibly depending on campaign progress.

    ``switch_at`` is only meaningful for the delayed kinds. It is measured in
    executions, or in seconds when ``switch_unit`` is ``'s'``.
    """
    kind: str = 'full'
    switch_at: float = 0.0
    switch_unit: str = 'execs'

    @classmethod
    def parse(cls, text: str) -> 'AblationMode':
        """Parse ``full``, ``ir-disabled``, ``ast-delayed:5000`` or ``ir-delayed:300s``."""
        text = (text or '').strip().lower()
        kind, _, arg = text.partition(':')
        if kind not in ABLATION_KINDS:
            raise ConfigError(f"unknown ablation mode '{text}' (expected one of {', '.join(ABLATION_KINDS)})")
        if kind.endswith('-delayed'):
            if not arg:
                raise ConfigError(f"ablation mode '{kind}' needs a switch point, e.g. '{kind}:5000'")
            unit = 'execs'
            if arg.endswith('s'):
                unit, arg = 's', arg[:-1]
            try:
                value = float(arg)
            except ValueError:
                raise ConfigError(f"invalid switch point '{arg}' for '{kind}'")
            if value <= 0:
                raise ConfigError(f"switch point for '{kind}' must be positive")
            return cls(kind, value, unit)
        if arg:
            raise ConfigError(f"ablation mode '{kind}' takes no argument")
        return cls(kind)

    def __str__(self):
        if not self.kind.endswith('-delayed'):
            return self.kind
        value = int(self.switch_at) if float(self.switch_at).is_integer() else self.switch_at
        return f"{self.kind}:{value}{'s' if self.switch_unit == 's' else ''}"

    def enabled_layers(self, execs: int, elapsed_s: float) -> frozenset:
        """Layers ('ast', 'ir') whose mutations may run at this point of the campaign."""
        if self.kind == 'ir-disabled':
            return frozenset({'ast'})
        if self.kind == 'ast-disabled':
            return frozenset({'ir'})
        if self.kind.endswith('-delayed'):
            progress = elapsed_s if self.switch_unit == 's' else execs
            if progress < self.switch_at:
                return frozenset({'ast'}) if self.kind == 'ir-delayed' else frozenset({'ir'})
        return frozenset({'ast', 'ir'})


@dataclass
class CampaignConfig:
    """Everything a campaign needs. CLI flags mirror these fields one-to-one."""
    output_dir: str = 'out'
    target: str = 'reference'
    target_cmd: List[str] = field(default_factory=list)  # argv template with {input}
    target_delivery: str = 'file'
    target_env: List[str] = field(default_factory=list)  # passthrough variable names
    shm_env_var: str = SHM_ENV_VAR
    timeout: float = EXEC_TIMEOUT
    seeds_dir: Optional[str] = None
    generator_count: int = DEFAULT_GENERATOR_COUNT
    seed: int = 0
    max_execs: Optional[int] = None
    max_time: Optional[float] = None  # seconds
    ablation: AblationMode = field(default_factory=AblationMode)
    deterministic: bool = False  # energy from source size instead of wall time
    instances: int = 1
    resume: bool = False
    # limits
    max_ast_nodes: int = MAX_AST_NODES
    max_ast_depth: int = MAX_AST_DEPTH
    stability_repeats: int = STABILITY_REPEATS
    minimize_max_execs: int = MINIMIZE_MAX_EXECS
    max_types: int = DEFAULT_MAX_TYPES
    max_functions: int = DEFAULT_MAX_FUNCTIONS
    max_statements: int = DEFAULT_MAX_STATEMENTS
    max_globals: int = DEFAULT_MAX_GLOBALS

    def validate(self) -> 'CampaignConfig':
        """Check field consistency.

        Returns:
            self, for chaining

        Raises:
            ConfigError: On the first invalid field
        """
        if self.target not in TARGET_KINDS:
            raise ConfigError(f"unknown target '{self.target}' (expected {' or '.join(TARGET_KINDS)})")
        if self.target == 'external':
            if not self.target_cmd:
                raise ConfigError("external target needs --target-cmd")
            if self.target_delivery not in DELIVERY_MODES:
                raise ConfigError(f"unknown delivery mode '{self.target_delivery}'")
            if self.target_delivery == 'file' and not any('{input}' in a for a in self.target_cmd):
                raise ConfigError("file delivery needs an '{input}' placeholder in --target-cmd")
        if self.max_execs is None and self.max_time is None:
            raise ConfigError("a budget is required (--max-execs and/or --max-time)")
        if not isinstance(self.ablation, AblationMode):
            raise ConfigError("ablation must be an AblationMode")
        if self.ablation.kind.endswith('-delayed'):
            budget = self.max_time if self.ablation.switch_unit == 's' else self.max_execs
            if budget is not None and self.ablation.switch_at >= budget:
                raise ConfigError(f"switch point {self.ablation.switch_at} must be below the budget {budget}")
        if not self.output_dir:
            raise ConfigError("output directory must not be empty")
        if self.seeds_dir is not None and not os.path.isdir(self.seeds_dir):
            raise ConfigError(f"seed directory not found: {self.seeds_dir}")
        try:
            if self.max_execs is not None:
                validate_numeric_range(self.max_execs, 1, 10 ** 12, 'max_execs')
            if self.max_time is not None:
                validate_numeric_range(self.max_time, 0.001, 10 ** 9, 'max_time')
            validate_numeric_range(self.timeout, 0.001, 3600, 'timeout')
            validate_numeric_range(self.generator_count, 0, 10 ** 7, 'generator_count')
            validate_numeric_range(self.instances, 1, 1024, 'instances')
            validate_numeric_range(self.max_ast_nodes, 1, 10 ** 7, 'max_ast_nodes')
            validate_numeric_range(self.max_ast_depth, 1, 10 ** 5, 'max_ast_depth')
            validate_numeric_range(self.stability_repeats, 2, 1000, 'stability_repeats')
            validate_numeric_range(self.minimize_max_execs, 0, 10 ** 7, 'minimize_max_execs')
            validate_numeric_range(self.max_types, 0, 64, 'max_types')
            validate_numeric_range(self.max_functions, 1, 64, 'max_functions')
            validate_numeric_range(self.max_statements, 0, 1024, 'max_statements')
            validate_numeric_range(self.max_globals, 0, 64, 'max_globals')
        except ValueError as e:
            raise ConfigError(str(e))
        return self

    def for_instance(self, index: int) -> 'CampaignConfig':
        """Copy for instance `index` of a multi-instance run (own seed and output)."""
        return replace(
            self,
            seed=self.seed + index,
            output_dir=os.path.join(self.output_dir, f"instance_{index}"),
            instances=1,
        )

    # ------------------------------------------------------------------
    # flat string form, used by the .cfg file and report headers
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict[str, str]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                out[f.name] = ''
            elif isinstance(value, list):
                out[f.name] = shlex.join(value)
            elif isinstance(value, bool):
                out[f.name] = 'true' if value else 'false'
            else:
                out[f.name] = str(value)
        return out

    @classmethod
    def from_dict(cls, values: Dict[str, str]) -> 'CampaignConfig':
        """Build a config from string values; unknown keys are ignored.

        Raises:
            ConfigError: If a value cannot be converted
        """
        cfg = cls()
        for f in fields(cls):
            if f.name not in values:
                continue
            raw = values[f.name].strip()
            current = getattr(cfg, f.name)
            try:
                if f.name == 'ablation':
                    value = AblationMode.parse(raw or 'full')
                elif f.name in ('target_cmd', 'target_env'):
                    value = shlex.split(raw)
                elif f.name in ('seeds_dir', 'max_execs', 'max_time') and raw == '':
                    value = None
                elif f.name in ('max_execs',):
                    value = int(raw)
                elif f.name == 'max_time':
                    value = float(raw)
                elif f.name == 'seeds_dir':
                    value = raw
                elif isinstance(current, bool):
                    if raw.lower() not in ('true', 'false', '1', '0', 'yes', 'no'):
                        raise ValueError(f"not a boolean: {raw}")
                    value = raw.lower() in ('true', '1', 'yes')
                elif isinstance(current, int):
                    value = int(raw)
                elif isinstance(current, float):
                    value = float(raw)
                else:
                    value = raw
            except ValueError as e:
                raise ConfigError(f"invalid value for {f.name}: {e}")
            setattr(cfg, f.name, value)
        return cfg

    def header(self) -> str:
        """One-line config echo used as the first line of stats and report files."""
        return '# config ' + ' '.join(f"{k}={shlex.quote(v) if v else '-'}" for k, v in self.to_dict().items())


class CampaignConfigManager:
    """Loads and saves a CampaignConfig as an INI file with a [campaign] section."""

    def __init__(self, config_path: str):
        self.config_path = config_path

    @classmethod
    def for_output(cls, output_dir: str) -> 'CampaignConfigManager':
        """Manager for the config echo file of a campaign output directory."""
        return cls(os.path.join(output_dir, CONFIG_ECHO_FILE_NAME))

    def exists(self) -> bool:
        return os.path.exists(self.config_path)

    def load_values(self) -> Dict[str, str]:
        """Raw [campaign] values; empty dict if the file is missing or has no section.

        Raises:
            ConfigError: If the file exists but cannot be parsed
        """
        if not os.path.exists(self.config_path):
            return {}
        cfg = configparser.ConfigParser(interpolation=None)
        try:
            cfg.read(self.config_path, encoding='utf-8')
        except configparser.Error as e:
            raise ConfigError(f"cannot parse {self.config_path}: {e}")
        if SECTION not in cfg:
            return {}
        return dict(cfg[SECTION])

    def load(self) -> CampaignConfig:
        return CampaignConfig.from_dict(self.load_values())

    def save(self, config: CampaignConfig) -> bool:
        """Save using an atomic write.

        Returns:
            True if save succeeded, False otherwise
        """
        cfg = configparser.ConfigParser(interpolation=None)
        cfg[SECTION] = config.to_dict()

        directory = os.path.dirname(self.config_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        tmp_path = self.config_path + '.tmp'

        try:
            with open(tmp_path, 'w', encoding='utf-8') as f:
                cfg.write(f)

            try:
                os.replace(tmp_path, self.config_path)
            except OSError:
                # Fallback for systems where replace might fail
                try:
                    if os.path.exists(self.config_path):
                        os.remove(self.config_path)
                except OSError:
                    pass
                try:
                    os.rename(tmp_path, self.config_path)
                except OSError:
                    with open(tmp_path, 'r', encoding='utf-8') as fr:
                        with open(self.config_path, 'w', encoding='utf-8') as fw:
                            fw.write(fr.read())
            return True

        except Exception as e:
            print(f"[CampaignConfigManager] Error saving {self.config_path}: {e}")
            try:
                if os.path.exists(tmp_path):
                    os.remove(tmp_path)
            except OSError:
                pass
            return False
