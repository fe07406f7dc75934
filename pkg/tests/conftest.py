"""Shared fixtures for the test suite.

The expensive shared resource is a small synthetic corpus (10 speakers,
3 stories each) generated once per session. Tests that need a corpus on
disk (CLI round trips, nested CV audits, determinism checks) reuse it;
everything else builds tiny in-memory structures locally.
"""

from pathlib import Path

import numpy as np
import pytest

from affectpipe.synth import generate_corpus

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def small_synth(tmp_path_factory):
    """Synthetic corpus with manifest, resources, and both run configs."""
    out = tmp_path_factory.mktemp("smallcorpus")
    return generate_corpus(out, seed=11, n_speakers=10, stories_per_speaker=3)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260823)
