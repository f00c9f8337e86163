import sys

from peerconn.cli import main

sys.exit(main())
