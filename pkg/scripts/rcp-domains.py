#!/usr/bin/env python3
"""Command-line entry point for rcp-domains."""

import sys
from pathlib import Path

# Add project library to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from lib.analysis_cli import main

if __name__ == "__main__":
    sys.exit(main())
