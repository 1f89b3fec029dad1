# Copyright Fracsense Authors 2026
"""fracsense keeps configurability of its numerics to a minimum.

Experiment parameters (geometry, medium, noise, inversion knobs) live in experiment configs,
see `fracsense.experiment`. The settings here control *how* the numerics run and can be set
in two ways:

1. In a ``.fracsense.toml`` file in your home directory.
2. By setting environment variables of the form ``FRACSENSE_<SETTING>``.
   This takes precedence over the previous method.

.fracsense.toml
---------------

The ``.fracsense.toml`` file should look like this::

```toml
[default]
loglevel = "INFO"
threads = 4
```

Settings
--------

* ``loglevel`` / ``FRACSENSE_LOGLEVEL``. Defaults to ``WARNING``.
  Set this to ``INFO`` to follow the stages, or ``DEBUG`` for quadrature details.
* ``threads`` / ``FRACSENSE_THREADS``. Defaults to 0 (one thread per core, at most 8).
  Parallelizes operator assembly and indicator evaluation. Results do not depend on it.
* ``quadrature_order`` / ``FRACSENSE_QUADRATURE_ORDER``. Defaults to 4.
  Gauss points per direction on regular elements and subdivision cells.
* ``singular_order`` / ``FRACSENSE_SINGULAR_ORDER``. Defaults to 8.
  Base Gauss order on the element hosting a collocation point; doubled until converged.
* ``singular_tolerance`` / ``FRACSENSE_SINGULAR_TOLERANCE``. Defaults to 1e-3.
* ``near_field_ratio`` / ``FRACSENSE_NEAR_FIELD_RATIO``. Defaults to 1.5.
  An element closer than this many diameters to an evaluation point is subdivided.
* ``subdivision_depth`` / ``FRACSENSE_SUBDIVISION_DEPTH``. Defaults to 6.
* ``traceback`` / ``FRACSENSE_TRACEBACK``. Defaults to True.

Meta-configuration
------------------

* ``FRACSENSE_CONFIG_PATH`` overrides the location of the .toml file, by default ``~/.fracsense.toml``.
* ``FRACSENSE_ENV`` selects a section of the .toml file. It defaults to the section marked
  ``active = true``, else "default".
"""

import logging
import os
import typing
import warnings

import toml

from ._traceback import setup_rich_traceback

# Locate config file and read it

user_config_path: str = os.environ.get("FRACSENSE_CONFIG_PATH") or os.path.expanduser("~/.fracsense.toml")


def _read_user_config():
    if os.path.exists(user_config_path):
        with open(user_config_path) as f:
            return toml.load(f)
    else:
        return {}


_user_config = _read_user_config()


def _config_active_env():
    for key, values in _user_config.items():
        if values.get("active", False) is True:
            return key
    else:
        return "default"


_env = os.environ.get("FRACSENSE_ENV", _config_active_env())

# Define settings


def _to_bool(x) -> bool:
    if isinstance(x, bool):
        return x
    return str(x).lower() not in ("", "0", "false", "no")


class _Setting(typing.NamedTuple):
    default: typing.Any = None
    transform: typing.Callable[[str], typing.Any] = lambda x: x  # noqa: E731


_SETTINGS = {
    "loglevel": _Setting("WARNING", lambda s: s.upper()),
    "threads": _Setting(0, int),
    "quadrature_order": _Setting(4, int),
    "singular_order": _Setting(8, int),
    "singular_tolerance": _Setting(1e-3, float),
    "near_field_ratio": _Setting(1.5, float),
    "subdivision_depth": _Setting(6, int),
    "traceback": _Setting(True, _to_bool),
}


class Config:
    """Singleton that holds configuration used by fracsense internally."""

    def __init__(self):
        pass

    def get(self, key, env=None):
        """Looks up a configuration value.

        Will check (in decreasing order of priority):
        1. Any environment variable of the form FRACSENSE_FOO_BAR
        2. Settings in the user's .toml configuration file
        3. The default value of the setting
        """
        if env is None:
            env = _env
        s = _SETTINGS[key]
        env_var_key = "FRACSENSE_" + key.upper()
        if env_var_key in os.environ:
            return s.transform(os.environ[env_var_key])
        elif env in _user_config and key in _user_config[env]:
            return s.transform(_user_config[env][key])
        else:
            return s.default

    def __getitem__(self, key):
        return self.get(key)

    def __repr__(self):
        return repr({key: self.get(key) for key in _SETTINGS.keys()})


config = Config()

# Logging

logging.basicConfig(format="%(asctime)s %(message)s", datefmt="%Y-%m-%dT%H:%M:%S%z")
logger = logging.getLogger("fracsense")
log_level_numeric = logging.getLevelName(config["loglevel"])
logger.setLevel(log_level_numeric)

# Utils to write config


def _store_user_config(new_settings, env=None):
    """Internal method, used by the CLI to persist settings."""
    if env is None:
        env = _env
    user_config = _read_user_config()
    user_config.setdefault(env, {}).update(**new_settings)
    _write_user_config(user_config)


def _write_user_config(user_config):
    with open(user_config_path, "w") as f:
        toml.dump(user_config, f)


# Regularization fallbacks are worth seeing every time they happen
warnings.filterwarnings("always", module="fracsense")

# Set up rich tracebacks, but only on user's end.
if _user_config and config["traceback"]:
    setup_rich_traceback()
