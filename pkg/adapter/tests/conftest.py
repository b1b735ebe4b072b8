"""Session fixtures; the heavy lifting lives in support.py."""

import sys
from pathlib import Path

TESTS_DIR = Path(__file__).resolve().parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

import pytest

import support


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    return support.save_tiny_checkpoint(tmp_path_factory.mktemp("ckpt") / "tiny")


@pytest.fixture(scope="session")
def bundle(tmp_path_factory):
    return support.build_bundle(tmp_path_factory.mktemp("bench"))
