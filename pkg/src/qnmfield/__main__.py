"""Allow ``python -m qnmfield``."""
import sys

from .cli import main

sys.exit(main())
