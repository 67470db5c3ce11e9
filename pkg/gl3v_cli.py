#!/usr/bin/env python3
import sys

from gl3v.harness import main


if __name__ == '__main__':
    sys.exit(main())
