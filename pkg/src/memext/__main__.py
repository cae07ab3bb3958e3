import sys

from memext.cli import main

sys.exit(main())
