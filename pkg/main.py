#!/usr/bin/env python3
# main.py - Entry point for the debuglin command line

import sys

from debuglin.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
