#!/usr/bin/env python
"""Command-line utility for sampling, reconstruction and benchmark runs."""
import sys


def main():
    """Run a reconstruction command."""
    try:
        from nrfse.management import run_cli
    except ImportError as exc:
        raise ImportError(
            "Couldn't import nrfse. Are its dependencies (numpy, scipy, opencv) "
            "installed and available on your PYTHONPATH environment variable? "
            "Did you forget to activate a virtual environment?"
        ) from exc
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == '__main__':
    main()
