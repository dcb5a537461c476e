import sys

import numpy as np
import pytest

from recurlab.words import Language, all_words


def language_from_mask(alphabet_size, word_length, mask):
    """Subset of A^m selected by the bits of ``mask`` (bit i = i-th word in lexicographic order)."""
    words = all_words(alphabet_size, word_length)
    keep = [i for i in range(words.shape[0]) if mask >> i & 1]
    return Language.from_rows(words[keep], alphabet_size, assume_sorted=True)


def random_language(rng, alphabet_size, word_length, density=None):
    words = all_words(alphabet_size, word_length)
    p = rng.uniform(0.3, 1.0) if density is None else density
    return Language.from_rows(words[rng.random(words.shape[0]) < p], alphabet_size, assume_sorted=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
