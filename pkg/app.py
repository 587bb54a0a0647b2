"""
Passive CKA key-rate simulator
Command-line launcher: python app.py <command> ...
"""

import os
import sys

# Add project root to path
sys.path.insert(0, os.path.dirname(__file__))

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
