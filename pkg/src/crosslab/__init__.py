from importlib import metadata

try:
    __version__ = metadata.version('crosslab')
except metadata.PackageNotFoundError:
    __version__ = '0.1.0'

from .interface import (  # noqa: E402
    ablate,
    evaluate,
    gen_terrain,
    navigate,
    serve_planner,
    train_baseline,
    train_oracle,
    train_pas,
    train_terrain_estimator,
)
from .exceptions import CrossLabException, ConfigurationError, CallbackError  # noqa: E402
from .config import RunConfig, load_config  # noqa: E402
from .runner import Runner, RunManifest, write_logs  # noqa: E402
