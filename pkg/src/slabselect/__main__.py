import sys

from slabselect.cli import main

sys.exit(main())
