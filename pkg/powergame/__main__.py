import sys

from powergame.cli import main

sys.exit(main())
