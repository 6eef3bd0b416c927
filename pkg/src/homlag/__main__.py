import sys

from homlag.cli import main

sys.exit(main())
