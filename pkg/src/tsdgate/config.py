"""
Run configurations for the TSD CNOT simulator.

A configuration is a flat JSON document. Packaged presets live in
``tsdgate/configs/<name>.json``; any other JSON file can be loaded by path.
Frequencies are entered as Omega/2pi in MHz (GHz for the qubit splitting),
times in ns or us and temperatures in uK. ``Config.channel_config`` is the one
place where these are converted to SI rad/s.

"""

import os
import json
import math
import logging
import importlib.resources as pkg_resources

from natsort import natsorted

from tsdgate import stark
from tsdgate.qmodel import INFINITE_BLOCKADE, GateChannelConfig

logger = logging.getLogger(__name__)

WORKERS_ENV = "TSDGATE_WORKERS"
MHZ = 2 * math.pi * 1e6
GHZ = 2 * math.pi * 1e9

DEFAULTS = {
    "name": "custom",
    "description": "",
    "reproduces": "",
    "omega_c_mhz": 3.5,
    "omega_t_mhz": None,
    "omega_t2_mhz": None,
    "override_ratio": False,
    "v_interaction_mhz": "infinite",
    "target2_k_sign": 1,
    "case_id": 1,
    "case2_scope": "target",
    "epsilon_ns": 0.0,
    "metric": "rotation",
    "velocity_points": 101,
    "v_max": 0.5,
    "temperatures_uk": [],
    "sigmas": [],
    "v_list_mhz": [],
    "taus_us": [],
    "omega_q_ghz": 9.1926,
    "c_factor_sq": None,
    "rabi1_mhz": 96.0,
    "rabi2_mhz": 96.0,
    "alpha_ratio": stark.ALPHA_RATIO,
    "resonant_coeff": stark.RESONANT_COEFF,
    "output_dir": ".",
    "dump_traces": False,
    "trace_samples": 401,
    "workers": None,
}

LIST_KEYS = ("temperatures_uk", "sigmas", "v_list_mhz", "taus_us")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def list_presets():
    """Names of the packaged presets in natural order."""
    from tsdgate import configs

    names = [
        entry.name[: -len(".json")]
        for entry in pkg_resources.files(configs).iterdir()
        if entry.name.endswith(".json")
    ]
    return natsorted(names)


def _load_json(name_or_path):
    if os.path.isfile(str(name_or_path)):
        with open(str(name_or_path)) as js:
            return json.load(js)
    from tsdgate import configs

    resource = pkg_resources.files(configs) / f"{name_or_path}.json"
    if not resource.is_file():
        raise FileNotFoundError(
            f"Config {name_or_path} is neither a file nor a preset "
            f"({', '.join(list_presets())})"
        )
    with resource.open() as js:
        return json.load(js)


def resolve_workers(workers=None):
    """Worker count: explicit value, else $TSDGATE_WORKERS, else the CPU count."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ConfigError(WORKERS_ENV, f"not an integer: {env!r}")
        else:
            workers = os.cpu_count() or 1
    if int(workers) < 1:
        raise ConfigError("workers", f"must be >= 1, got {workers}")
    return int(workers)


class Config:
    def __init__(self, name_or_path="ideal", overrides=None):
        """Generate Config object.

        Parameters
        ----------
        name_or_path : str
            Preset name (see ``list_presets``) or path to a JSON file.
        overrides : dict, optional
            Keys replacing values of the loaded document.

        Raises
        ------
        FileNotFoundError
            Neither a file nor a preset of that name exists.
        ConfigError
            Unknown key or invalid value.
        """
        document = _load_json(name_or_path)
        if not isinstance(document, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        document.update(overrides or {})
        self.config = {**DEFAULTS, **document}
        self.check(document)
        logger.info("Config %s loaded", self.config["name"])

    @classmethod
    def from_dict(cls, document):
        """Config from an in-memory mapping, validated like a file."""
        obj = cls.__new__(cls)
        obj.config = {**DEFAULTS, **document}
        obj.check(document)
        return obj

    def check(self, document=None):
        """Validate keys and values.

        Returns
        -------
        bool
            True; invalid entries raise ConfigError.
        """
        for key in document if document is not None else self.config:
            if key not in DEFAULTS:
                raise ConfigError(key, "unknown configuration key")
        c = self.config
        self._positive("omega_c_mhz")
        for key in ("omega_t_mhz", "omega_t2_mhz"):
            if c[key] is not None:
                self._positive(key)
        v = c["v_interaction_mhz"]
        if not (v == "infinite" or (isinstance(v, (int, float)) and v > 0)):
            raise ConfigError("v_interaction_mhz", f"expected a positive number or 'infinite', got {v!r}")
        if c["target2_k_sign"] not in (1, -1):
            raise ConfigError("target2_k_sign", f"must be +1 or -1, got {c['target2_k_sign']!r}")
        if c["case_id"] not in (1, 2):
            raise ConfigError("case_id", f"must be 1 or 2, got {c['case_id']!r}")
        if c["case2_scope"] not in ("all", "target"):
            raise ConfigError("case2_scope", f"must be 'all' or 'target', got {c['case2_scope']!r}")
        if c["metric"] not in ("rotation", "bell"):
            raise ConfigError("metric", f"must be 'rotation' or 'bell', got {c['metric']!r}")
        if not isinstance(c["epsilon_ns"], (int, float)) or c["epsilon_ns"] < 0:
            raise ConfigError("epsilon_ns", f"must be >= 0, got {c['epsilon_ns']!r}")
        points = c["velocity_points"]
        if not isinstance(points, int) or points < 3 or points % 2 == 0:
            raise ConfigError("velocity_points", f"must be an odd integer >= 3, got {points!r}")
        self._positive("v_max")
        for key in LIST_KEYS:
            values = c[key]
            if not isinstance(values, list) or not all(
                isinstance(x, (int, float)) for x in values
            ):
                raise ConfigError(key, "must be a list of numbers")
            if key != "temperatures_uk" and any(x <= 0 for x in values):
                raise ConfigError(key, "values must be > 0")
            if key == "temperatures_uk" and any(x < 0 for x in values):
                raise ConfigError(key, "values must be >= 0")
        for key in ("omega_q_ghz", "rabi1_mhz", "rabi2_mhz", "alpha_ratio", "trace_samples"):
            self._positive(key)
        if c["workers"] is not None:
            if not isinstance(c["workers"], int) or c["workers"] < 1:
                raise ConfigError("workers", f"must be a positive integer, got {c['workers']!r}")
        if c["omega_t_mhz"] is not None and not c["override_ratio"]:
            ratio = c["omega_t_mhz"] / c["omega_c_mhz"]
            if abs(ratio - math.sqrt(1.5)) > 1e-9 * math.sqrt(1.5):
                raise ConfigError(
                    "omega_t_mhz",
                    f"omega_t/omega_c = {ratio:.6g} differs from sqrt(6)/2; "
                    'set "override_ratio": true',
                )
        if c["omega_t2_mhz"] is not None and not c["override_ratio"]:
            raise ConfigError("omega_t2_mhz", 'a separate omega_t2 needs "override_ratio": true')
        return True

    def _positive(self, key):
        value = self.config[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ConfigError(key, f"must be a positive number, got {value!r}")

    def get(self, key):
        """Get value in config specified by key.

        Parameters
        ----------
        key : str
            Key of value to retrieve from config.

        Returns
        -------
        object
            Value of Key in config.
        """
        if key not in self.config:
            raise ConfigError(key, "unknown configuration key")
        return self.config[key]

    def get_config(self):
        """Get config as dict."""
        return self.config

    @property
    def name(self):
        return self.config["name"]

    def channel_config(self):
        """GateChannelConfig in SI units."""
        c = self.config
        omega_c = c["omega_c_mhz"] * MHZ
        omega_t = (
            math.sqrt(1.5) * omega_c if c["omega_t_mhz"] is None else c["omega_t_mhz"] * MHZ
        )
        v = c["v_interaction_mhz"]
        return GateChannelConfig(
            omega_c=omega_c,
            omega_t=omega_t,
            v_interaction=INFINITE_BLOCKADE if v == "infinite" else v * MHZ,
            target2_k_sign=c["target2_k_sign"],
            omega_t2=None if c["omega_t2_mhz"] is None else c["omega_t2_mhz"] * MHZ,
        )

    @property
    def epsilon(self):
        """Gap between the pulses in s."""
        return self.config["epsilon_ns"] * 1e-9

    @property
    def temperatures(self):
        """Temperatures in K."""
        return [t * 1e-6 for t in self.config["temperatures_uk"]]

    @property
    def taus(self):
        """Rydberg lifetimes in s."""
        return [t * 1e-6 for t in self.config["taus_us"]]

    @property
    def v_list(self):
        """Interaction energies in rad/s."""
        return [v * MHZ for v in self.config["v_list_mhz"]]

    @property
    def omega_q(self):
        return self.config["omega_q_ghz"] * GHZ

    @property
    def workers(self):
        return resolve_workers(self.config["workers"])

    def c_factor_sq(self):
        """Configured C^2, or the value computed for the cesium transition."""
        value = self.config["c_factor_sq"]
        return stark.c_factor_squared() if value is None else value

    def header(self):
        """Comment lines naming the preset and what it reproduces."""
        lines = [f"config: {self.name}"]
        if self.config["reproduces"]:
            lines.append(f"reproduces: {self.config['reproduces']}")
        if self.config["description"]:
            lines.append(self.config["description"])
        return lines
