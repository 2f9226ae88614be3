# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Tests for gradient sampling and quantile surfaces."""
