#!/usr/bin/env python3
"""
DAPAMT Lab - Main Entry Point

Run the CLI interface for dataset building, training and experiments.
"""

import sys

from cli import main as cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
