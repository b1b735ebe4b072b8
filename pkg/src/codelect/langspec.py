"""Per-language facts: reserved keywords and structural symbols.

Keyword lists ship as versioned data files (Java 17 reserved words plus
the boolean/null literals; Python 3.10 keywords) so replacement
perturbations are reproducible independent of the interpreter running
the pipeline.
"""

from __future__ import annotations

import enum
from functools import lru_cache
from importlib import resources


class Language(str, enum.Enum):
    JAVA = "java"
    PYTHON = "python"

    @classmethod
    def parse(cls, value: str) -> "Language":
        try:
            return cls(value.lower())
        except ValueError:
            raise ValueError(f"unsupported language: {value!r}") from None


FILE_EXTENSIONS = {Language.JAVA: ".java", Language.PYTHON: ".py"}

# The nine structure-related symbols eligible for symbol replacement.
STRUCTURAL_SYMBOLS = ("(", ")", "[", "]", "{", "}", ",", ".", ";")

# Replacing a symbol may also substitute a single blank space (stands in
# for deletion without merging neighbouring tokens).
SYMBOL_REPLACEMENT_EXTRA = " "


@lru_cache(maxsize=None)
def reserved_keywords(language: Language) -> tuple[str, ...]:
    name = f"{language.value}_keywords.txt"
    text = resources.files("codelect.data").joinpath(name).read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


@lru_cache(maxsize=None)
def keyword_set(language: Language) -> frozenset[str]:
    return frozenset(reserved_keywords(language))


def extension_for(language: Language) -> str:
    return FILE_EXTENSIONS[language]
