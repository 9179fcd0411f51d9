"""
SIGIL - Command Line Runner
Same as `python -m cli`, runnable from a checkout.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli.main import main

if __name__ == "__main__":
    sys.exit(main())
