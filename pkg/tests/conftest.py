import pytest

from cps_synergy.demo import build_demo_corpus


@pytest.fixture(scope="session")
def demo_corpus():
    return build_demo_corpus()


@pytest.fixture(scope="session")
def demo_utterances(demo_corpus):
    return demo_corpus[0]


@pytest.fixture(scope="session")
def demo_profiles(demo_corpus):
    return demo_corpus[1]
