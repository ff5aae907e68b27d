#!/usr/bin/env python3
"""
NCC Minimax command-line entry point.

Usage: ./ncc.py run --config configs/toy_convergence.json --out runs/toy
"""

import sys

from ncc_minimax.cli import main

if __name__ == "__main__":
    sys.exit(main())
