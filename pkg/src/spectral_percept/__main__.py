import sys

from spectral_percept.cli import main

sys.exit(main())
