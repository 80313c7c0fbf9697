import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lambdageq.diagram import build, parse_presentation  # noqa: E402
from lambdageq.geq import Base, GenEq  # noqa: E402

COMMUTATOR = """rank 2
generators x y
relator x y x^-1 y^-1
x = z
y = z^[0,1]
"""

COMMUTATOR_AB = """rank 2
generators x y
relator x y x^-1 y^-1
x = a b
y = (a b)^[0,1]
"""

FREE_PAIR = """generators x y
x = a
y = b
"""


@pytest.fixture
def omega_comm():
    asm = build(parse_presentation(COMMUTATOR))
    return asm.omega, asm.solution


@pytest.fixture
def omega_comm_ab():
    asm = build(parse_presentation(COMMUTATOR_AB))
    return asm.omega, asm.solution


def commutation_section():
    """One section whose relation reads B C = C B."""
    return GenEq(3, [
        Base("B", 1, 1, 3, "B~"), Base("B~", 1, 2, 4, "B"),
        Base("C", 1, 1, 2, "C~"), Base("C~", 1, 3, 4, "C"),
    ])


def genus_two_section():
    """One section whose relation reads a b c d = d c b a."""
    return GenEq(7, [
        Base("a", 1, 1, 2, "a~"), Base("b", 1, 2, 3, "b~"), Base("c", 1, 3, 4, "c~"),
        Base("d", 1, 4, 8, "d~"), Base("d~", 1, 1, 5, "d"), Base("c~", 1, 5, 6, "c"),
        Base("b~", 1, 6, 7, "b"), Base("a~", 1, 7, 8, "a"),
    ])
