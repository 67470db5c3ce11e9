import hypothesis
import numpy as np

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10)
hypothesis.settings.register_profile("thorough", max_examples=500)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: minutes-scale numerical experiment (deselect with -m 'not slow')")
