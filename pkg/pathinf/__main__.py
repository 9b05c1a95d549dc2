"""Run the command line with ``python -m pathinf``."""

from .cli import main

raise SystemExit(main())
