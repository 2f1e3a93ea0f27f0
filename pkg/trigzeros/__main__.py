"""
Entry point for running trigzeros as a module.
This allows users to run: python -m trigzeros
"""

import sys

from .cli import main

if __name__ == '__main__':
    sys.exit(main())
