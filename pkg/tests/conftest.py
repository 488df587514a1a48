import numpy as np
import pytest

from kgcontrast.data import TripleStore, Vocab, add_reciprocals
from kgcontrast.model import init_params


def random_store(rng, n_entities=12, n_relations=3, n_triples=60, reciprocals=False, holdout=0.2):
    """A store of random unique triples split train/valid/test."""
    n_triples = min(n_triples, n_entities * n_entities * n_relations)
    codes = rng.choice(n_entities * n_relations * n_entities, size=n_triples, replace=False)
    h, rest = np.divmod(codes, n_relations * n_entities)
    r, t = np.divmod(rest, n_entities)
    triples = np.stack([h, r, t], axis=1)
    n_hold = int(len(triples) * holdout)
    n_valid = n_hold // 2
    train = triples[n_hold:]
    valid, test = triples[:n_valid], triples[n_valid:n_hold]
    store = TripleStore(
        Vocab([f"e{i}" for i in range(n_entities)], frozen=True),
        Vocab([f"r{i}" for i in range(n_relations)], frozen=True),
        train, valid, test,
    )
    return add_reciprocals(store) if reciprocals else store


def random_params(rng, kind, n_entities, n_relations, dim, scale=0.5):
    return init_params(kind, n_entities, n_relations, dim, scale, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_split(directory, name, lines):
    (directory / f"{name}.txt").write_text("".join("\t".join(x) + "\n" for x in lines), encoding="utf-8")


@pytest.fixture
def city_dir(tmp_path):
    """The cities example: two cities of the US, one capital."""
    write_split(tmp_path, "train", [
        ("NewYork", "City_of", "US"),
        ("LosAngeles", "City_of", "US"),
        ("WashingtonDC", "Captial_of", "US"),
        ("JoeBiden", "Children", "BeauBiden"),
        ("JoeBiden", "Children", "HunterBiden"),
    ])
    write_split(tmp_path, "valid", [("LosAngeles", "City_of", "US")])
    write_split(tmp_path, "test", [("NewYork", "City_of", "US")])
    return tmp_path


# one line per acceptance criterion, printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
