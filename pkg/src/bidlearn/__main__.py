import sys

from bidlearn.cli import main

sys.exit(main())
