"""
Test configuration: app/ on the path and shared fixture data.
"""
import os
import sys

import pytest

# Add the app directory to Python path
app_dir = os.path.join(os.path.dirname(__file__), '..', 'app')
if app_dir not in sys.path:
    sys.path.insert(0, app_dir)

from core.lattice import Lattice  # noqa: E402
from fixtures.clifford import clifford_r3, clifford_s3  # noqa: E402


@pytest.fixture(scope='session')
def square():
    return Lattice.square()


@pytest.fixture(scope='session')
def s3():
    return clifford_s3()


@pytest.fixture(scope='session')
def r3():
    return clifford_r3()
