from hypothesis import given, settings
from hypothesis import strategies as st

from codelect.seeds import derive, hash64, hash64_str


def test_derive_is_deterministic():
    assert derive(42, "perturb:obfuscate", "java-001") == derive(42, "perturb:obfuscate", "java-001")


def test_derive_frozen_values():
    # regression anchors: these must never change across releases, or every
    # recorded perturbation seed silently shifts
    assert derive(0, "a", "b") == 12321517611397843158
    assert derive(11, "perturb:obfuscate", "java-abc") == 2633076671329948187
    assert hash64(b"") == 14087677454934409008
    assert hash64_str("x", 7) == 12491207013002975180


def test_derive_sensitive_to_every_argument():
    base = derive(1, "stage", "unit")
    assert derive(2, "stage", "unit") != base
    assert derive(1, "stage2", "unit") != base
    assert derive(1, "stage", "unit2") != base


def test_stage_unit_concatenation_does_not_alias():
    # ("ab", "c") and ("a", "bc") must land differently: the fields are
    # framed, not glued
    assert derive(0, "ab", "c") != derive(0, "a", "bc")
    assert derive(0, "", "x") != derive(0, "x", "")


@given(st.integers(min_value=0, max_value=2**63), st.text(max_size=40), st.text(max_size=40))
@settings(max_examples=200)
def test_derive_range(seed, stage, unit):
    v = derive(seed, stage, unit)
    assert 0 <= v < 2**64


def test_no_collisions_over_unit_id_family():
    seen = {derive(7, "perturb:line_shuffle", f"unit-{i:05d}") for i in range(5000)}
    assert len(seen) == 5000


@given(st.binary(max_size=64), st.integers(min_value=0, max_value=2**64 - 1))
@settings(max_examples=200)
def test_hash64_deterministic_and_bounded(data, seed):
    a = hash64(data, seed)
    assert a == hash64(data, seed)
    assert 0 <= a < 2**64
