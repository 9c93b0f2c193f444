"""The twelve acceptance criteria at their stated tolerances.

The suite runs once per session; each criterion is reported as its own test
and its pass/fail line is printed to the terminal.
"""
import pytest

from heis_besov import acceptance

pytestmark = pytest.mark.slow

IDS = sorted(acceptance.CHECKS)


@pytest.fixture(scope="module")
def results(pytestconfig):
    lines = []
    res = acceptance.run_suite(acceptance.SuiteConfig(), IDS, log=lines.append)
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        print("\nacceptance suite:")
        for ln in lines:
            print("  " + ln)
    return {r.id: r for r in res}


@pytest.mark.parametrize("cid", IDS)
def test_criterion(results, cid):
    r = results[cid]
    assert r.passed, f"{r.line()}\n{r.metrics}"
