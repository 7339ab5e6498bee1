"""Dunkl spherical maximal functions on radial data: special functions,
the weighted setting, radial transforms, maximal operators, the dyadic
decomposition and an experiment driver."""

from .special import *  # noqa: F401,F403
from .setting import *  # noqa: F401,F403
from .radial import *  # noqa: F401,F403
from .maximal import *  # noqa: F401,F403
from .decomposition import *  # noqa: F401,F403
from .config import ConfigError, ExperimentConfig
from .parallel import WORKER_ENV, pmap, worker_count

__version__ = "0.1.0"
