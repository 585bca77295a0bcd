import sys

from revpref.cli import main

sys.exit(main())
