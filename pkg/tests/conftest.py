import numpy as np
import pytest

from occlusion_mvdr.scene import ArrayGeometry
from occlusion_mvdr.wola import WolaConfig

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line(
        'markers', 'criterion(number, title): acceptance criterion check')


def pytest_runtest_logreport(report):
    number = getattr(report, 'criterion', None)
    if number is None:
        return
    if report.when == 'call' or report.outcome != 'passed':
        entry = _criteria.setdefault(number[0], [number[1], True, []])
        if report.outcome != 'passed':
            entry[1] = False
            entry[2].append(report.nodeid.split('::')[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker('criterion')
    if marker is not None:
        report.criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section('acceptance criteria')
    for number in sorted(_criteria):
        title, ok, failed = _criteria[number]
        line = f'criterion {number:2d}: {"PASS" if ok else "FAIL"}  {title}'
        if failed:
            line += f'  (failed: {", ".join(failed)})'
        terminalreporter.write_line(line)


@pytest.fixture(scope='session')
def wola_cfg():
    return WolaConfig()


@pytest.fixture(scope='session')
def geom():
    return ArrayGeometry.glasses()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope='session')
def small_scene(wola_cfg, geom):
    from occlusion_mvdr.scene import SceneConfig, build_scene
    from occlusion_mvdr.speech import synthetic_utterance
    source = synthetic_utterance(3, duration_s=3.0)
    return build_scene(source, SceneConfig(duration_s=3.0), geom, wola_cfg,
                       noise_seed=5, user_seed=6)
