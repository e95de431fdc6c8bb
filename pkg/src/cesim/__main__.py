import sys

from cesim.cli import main

sys.exit(main())
