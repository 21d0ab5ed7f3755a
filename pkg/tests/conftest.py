from hypothesis import settings

from vbq import NUMBA_AVAILABLE

BACKENDS = ("numba", "numpy") if NUMBA_AVAILABLE else ("numpy",)

# the first call of each jitted kernel compiles, which trips per-example deadlines
settings.register_profile("vbq", deadline=None)
settings.load_profile("vbq")


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
