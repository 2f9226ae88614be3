# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Run the `qgsa` command-line tool with `python -m frequenz.gradient_sampling`."""

import sys

from .cli import main

sys.exit(main())
