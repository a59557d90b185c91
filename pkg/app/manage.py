#!/usr/bin/env python
"""Command-line utility for Floquet multiplier runs."""
import sys


def main():
    """Run one command."""
    try:
        from cli.commands import run
    except ImportError as exc:
        raise ImportError(
            "Couldn't import the toolkit; run from app/ or put it on PYTHONPATH"
        ) from exc
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
