import sys

from covns.cli import main

sys.exit(main())
