import sys

from genreforge.cli import main

sys.exit(main())
