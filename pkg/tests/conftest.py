import math

import pytest

import treeot as T


@pytest.fixture
def tripod():
    """Center o with three unit legs to leaves a, b, c."""
    return T.MetricTree(
        ["o", "a", "b", "c"],
        [("ea", ("o", "a"), 1.0), ("eb", ("o", "b"), 1.0), ("ec", ("o", "c"), 1.0)],
        "o",
    )


@pytest.fixture
def tripod_completed():
    """Tripod with an infinite ray glued at each former leaf."""
    return T.MetricTree(
        ["o", "a", "b", "c"],
        [
            ("ea", ("o", "a"), 1.0),
            ("eb", ("o", "b"), 1.0),
            ("ec", ("o", "c"), 1.0),
            ("ra", ("a",), math.inf),
            ("rb", ("b",), math.inf),
            ("rc", ("c",), math.inf),
        ],
        "o",
    )


@pytest.fixture
def star3():
    return T.MetricTree(
        ["o"],
        [("r1", ("o",), math.inf), ("r2", ("o",), math.inf), ("r3", ("o",), math.inf)],
        "o",
    )


@pytest.fixture
def star4():
    return T.MetricTree(
        ["o"],
        [(f"r{i}", ("o",), math.inf) for i in (1, 2, 3, 4)],
        "o",
    )


@pytest.fixture
def barbell():
    """Two vertices joined by a unit edge, two infinite rays at each."""
    return T.MetricTree(
        ["u", "v"],
        [
            ("euv", ("u", "v"), 1.0),
            ("r1", ("u",), math.inf),
            ("r2", ("u",), math.inf),
            ("r3", ("v",), math.inf),
            ("r4", ("v",), math.inf),
        ],
        "u",
    )
