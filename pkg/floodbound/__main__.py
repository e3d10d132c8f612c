import sys

from floodbound.cli import main


sys.exit(main())
