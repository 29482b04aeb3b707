"""
__main__ support for the revpref package.

Allows running the CLI with:
    python -m revpref <command> [options]
"""

import sys

from revpref.main import main

sys.exit(main())
