"""Shared fixtures: one solved profile per default parameter set.

Profiles are session-scoped because the table build is the expensive part;
every test module reads from the same three instances.
"""

import pytest

from bicons.profile import solve_profile
from bicons.gluing import build_glued_profile
from bicons.geometry import GluedMetric

# default parameter sets: (eps, C); coverage is generous for the
# non-periodic cases so long geodesics stay inside the table
DEFAULTS = {1: 3.0, 0: 1.0, -1: 0.0}
COVERAGE = {1: 12.0, 0: 120.0, -1: 120.0}


@pytest.fixture(scope="session")
def profiles():
    return {eps: solve_profile(eps, C, coverage=COVERAGE[eps])
            for eps, C in DEFAULTS.items()}


@pytest.fixture(scope="session")
def glued(profiles):
    return {eps: build_glued_profile(sol) for eps, sol in profiles.items()}


@pytest.fixture(scope="session")
def metrics(glued):
    return {eps: GluedMetric(gp) for eps, gp in glued.items()}
