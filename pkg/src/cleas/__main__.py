import sys

from cleas.cli import main

sys.exit(main())
