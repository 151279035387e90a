#!/usr/bin/env python3

import pytest

from pynv.fitting import reference_odmr_bundle


def pytest_configure(config):
    config.addinivalue_line(
        'markers', 'slow: Monte Carlo and quadrature heavy acceptance runs')


@pytest.fixture(scope='session')
def odmr_bundle():
    return reference_odmr_bundle()
