import sys

from linkprop.cli import main

sys.exit(main())
