import random

import pytest

from freesum.enveloping import EnvelopingAlgebra
from freesum.presentation import load_presentation, parse_lie_expr
from freesum.subspace_calculus import ideal_from_spec

from oracle import INSTANCES


def load_algebra(name, cap=None):
    return EnvelopingAlgebra(load_presentation(INSTANCES / f"{name}.json", cap), cap)


@pytest.fixture(scope="session")
def p3():
    return load_algebra("p3")


@pytest.fixture(scope="session")
def ph():
    return load_algebra("ph")


@pytest.fixture(scope="session")
def free3():
    return load_algebra("free3")


@pytest.fixture(scope="session")
def mixed():
    return load_algebra("mixed")


@pytest.fixture(scope="session")
def p3_N(p3):
    return ideal_from_spec(p3)


def lie(alg, text):
    return alg.evaluate(parse_lie_expr(text, alg.by_name))


def random_element(alg, rng, max_degree=None, terms=3, min_degree=1):
    top = alg.cap if max_degree is None else max_degree
    out = alg.zero()
    for _ in range(terms):
        d = rng.randint(min_degree, top)
        ws = alg.words(d)
        if ws:
            out = out + alg.word(rng.choice(ws)).scale(rng.randint(-3, 3))
    return out


def random_lie(alg, rng, max_degree=None, terms=2):
    """Random combination of bracket monomials."""
    top = alg.cap if max_degree is None else max_degree
    out = alg.zero()
    for _ in range(terms):
        mons = alg.lie_monomials(rng.randint(1, top))
        if mons:
            out = out + rng.choice(mons)[1].scale(rng.randint(-3, 3))
    return out


def random_in(alg, space, rng, degrees=None, terms=3):
    """Random combination of basis vectors of a graded subspace."""
    degs = [d for d in space.degrees() if degrees is None or d in degrees]
    out = alg.zero()
    if not degs:
        return out
    for _ in range(terms):
        d = rng.choice(degs)
        out = out + rng.choice(alg.basis_elements(space, d)).scale(rng.randint(-2, 2))
    return out


@pytest.fixture
def rng():
    return random.Random(20261015)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
