import pytest
from hypothesis import HealthCheck, settings

from pageflip.rig import PagePlant, Rig
from pageflip.control import FingerPose
from pageflip.physics import PageMaterial, flat_page
from pageflip.strategy import StageContext, run_turning

settings.register_profile("repo", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def default_rig(stiffness="medium", start=(0.012, 0.0005), **material):
    return Rig(PagePlant(flat_page(20), PageMaterial.of_class(stiffness, **material)), FingerPose(start))


@pytest.fixture(scope="session")
def post_up():
    """Context and rig at the moment the default medium run enters shape control."""
    ctx, trace = run_turning(StageContext(1000.0), default_rig())
    return ctx, trace


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import report_lines

    lines = list(report_lines())
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
