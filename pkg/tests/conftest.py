"""Shared fixtures: toy corpora and the demo query."""

import sys
from pathlib import Path

TESTS_DIR = Path(__file__).resolve().parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

import pytest

from codelect.analysis import summarize_unit
from codelect.langspec import Language

import corpusgen
from corpusgen import make_unit


# The query of the two-candidate selection demo, used across modules as
# the worked example: one method, one parameter, a foreign call chain.
DEMO_JAVA = """\
public void main(int num) {
    while (num < 20) {
        System.out.print(num);
        num++;
    }
}
"""


@pytest.fixture(scope="session")
def demo_unit():
    return make_unit(DEMO_JAVA, Language.JAVA, uid="demo-java")


@pytest.fixture(scope="session")
def demo_summary(demo_unit):
    return summarize_unit(demo_unit)


@pytest.fixture(scope="session")
def toy_java(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy_java")
    return corpusgen.build_toy_corpus(root, Language.JAVA)


@pytest.fixture(scope="session")
def toy_python(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy_python")
    return corpusgen.build_toy_corpus(root, Language.PYTHON)


@pytest.fixture(scope="session")
def small_java(tmp_path_factory):
    # 6 problems x 3 solutions: enough structure for pipeline tests,
    # cheap enough to rebuild per session
    root = tmp_path_factory.mktemp("small_java")
    return corpusgen.build_toy_corpus(root, Language.JAVA, problems=6)
