"""``python -m horizon_lab`` dispatches to the command line interface."""

import sys

from horizon_lab.cli import main

if __name__ == "__main__":
    sys.exit(main())
