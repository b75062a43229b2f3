import sys

from bcoh.cli import main

sys.exit(main())
