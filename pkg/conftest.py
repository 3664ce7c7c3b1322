import os
import sys

try:
    import perfadapt  # noqa: F401
except ImportError:
    # allow running the suite from a fresh checkout without installing
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "src"))
