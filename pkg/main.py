"""Command line entry point for a source checkout: `python main.py <command>`."""

import sys

from kofx.cli import main

if __name__ == "__main__":
    sys.exit(main())
