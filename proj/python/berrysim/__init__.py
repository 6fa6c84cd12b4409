"""Python surface of the harvesting-gripper simulator.

The heavy lifting lives in the C++ extension `_berrysim`; this package adds
dict-returning conveniences around the JSON entry points and locates the
bundled scenario presets.
"""

import json as _json
import os as _os
from pathlib import Path as _Path

try:  # installed wheel layout: extension inside the package
    from ._berrysim import *  # noqa: F401,F403
    from . import _berrysim as _core
except ImportError:  # build-tree layout: extension on PYTHONPATH
    from _berrysim import *  # noqa: F401,F403
    import _berrysim as _core

__version__ = _core.__version__


def presets_dir():
    """Directory of bundled scenario presets, or None when not packaged."""
    bundled = _Path(__file__).resolve().parent / "presets"
    return bundled if bundled.is_dir() else None


_bundled = presets_dir()
if _bundled is not None:
    _os.environ.setdefault("BERRYSIM_PRESETS", str(_bundled))


def run(scenario, out_dir=None, seed=None):
    """Run one scenario (path or preset name); returns the report as a dict."""
    return _json.loads(_core.run_scenario_json(str(scenario), str(out_dir or ""), seed))


def monte_carlo(scenario, trials, seed=None, out_dir=None):
    """Run independent trial replicas; returns the aggregate report as a dict."""
    return _json.loads(
        _core.monte_carlo_json(str(scenario), int(trials), seed, str(out_dir or ""))
    )
