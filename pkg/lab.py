"""Command-line entry point: python lab.py run <scenario.json|name> [--out DIR] [--seed N] [--threads N]."""
import sys

from utils.cli import main

if __name__ == "__main__":
    sys.exit(main())
