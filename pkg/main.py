#!/usr/bin/env python3
"""
ccoc - Main Entry Point

Runs the command-line interface from a source checkout:

    python main.py reproduce --example reach-avoid
"""

import sys
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT))

from ccoc.cli import main

if __name__ == "__main__":
    main()
