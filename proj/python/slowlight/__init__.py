import os
import sys

# a build tree can be pointed at directly, mainly for ctest
_extra = os.environ.get("SLOWLIGHT_PYTHONPATH")
if _extra and _extra not in sys.path:
    sys.path.insert(0, _extra)

try:
    from slowlight._core import *  # noqa: F401,F403
    from slowlight._core import SlowlightError, PhysicalParams
except ImportError:
    from _core import *  # noqa: F401,F403
    from _core import SlowlightError, PhysicalParams

__version__ = "0.1.0"
