#!/usr/bin/env python3
# Allows `python -m debuglin ...`

import sys

from debuglin.cli import main

if __name__ == '__main__':
    sys.exit(main())
