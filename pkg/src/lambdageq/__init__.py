"""Lambda-words, Lyndon length functions and generalized equations."""

from .ordered import LambdaRational, LambdaScalar, compare, halve, height, project
from .words import Letter, LambdaWord, Power, Undefined, com, concat, invert, mult, parse_word

__all__ = [
    "LambdaRational",
    "LambdaScalar",
    "LambdaWord",
    "Letter",
    "Power",
    "Undefined",
    "com",
    "compare",
    "concat",
    "halve",
    "height",
    "invert",
    "mult",
    "parse_word",
    "project",
]
