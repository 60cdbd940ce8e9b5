#!/usr/bin/env python
"""Entry point: python tamecheck.py {analyze,plan,catalog,verify,schema} ..."""

import sys

from src.cli import main

if __name__ == '__main__':
    sys.exit(main())
