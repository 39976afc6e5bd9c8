from pathlib import Path

import pytest

from sumattack.corpus import load_corpus
from sumattack.perturb import AttackConfig, StaticParaphrases, StaticThesaurus

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return FIXTURES / "corpus8.jsonl"


@pytest.fixture(scope="session")
def clusters(corpus_path):
    return load_corpus(corpus_path)


@pytest.fixture(scope="session")
def paraphrases_path() -> Path:
    return FIXTURES / "paraphrases.json"


@pytest.fixture(scope="session")
def attack_config(paraphrases_path) -> AttackConfig:
    """Providers wired to the static fixtures so attacks never hit a network."""
    return AttackConfig(
        synonym_provider=StaticThesaurus.builtin(),
        paraphrase_provider=StaticParaphrases.from_file(paraphrases_path),
    )


@pytest.fixture(scope="session")
def outlier_dump_path() -> Path:
    return FIXTURES / "dumps" / "planted_outlier.gdmp"
