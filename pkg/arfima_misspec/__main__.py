import sys

from arfima_misspec.cli import main

sys.exit(main())
