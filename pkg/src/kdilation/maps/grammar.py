"""Command-line map specs such as `hopf∘wrap(2)`, `suspend(hopf)` or `@tree.json`.

    spec := term (('∘' | '*') term)*      composition, applied right to left
    term := name ['(' arg (',' arg)* ')'] | '@' path
    arg  := integer | spec

Names: hopf, wrap(d[, i, j]), reflect[(d)], identity(d), constant[(a, b)],
cube(m), suspend(spec).
"""

import re
from pathlib import Path

from pydantic import ValidationError

from .base import MapError, sphere
from .combinators import Compose, CompositionError, Suspend
from .expr import MapExpr, load_expr
from .primitives import Constant, CubeCollapse, DegreeWrap, Hopf, Rotation

TOKEN = re.compile(r"\s*(?:(?P<int>-?\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<path>@[^\s()*∘,]+)|(?P<op>[()*∘,]))")


class MapSpecError(MapError, ValueError):
    """Unparseable or ill-typed map spec."""


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens, pos = [], 0
    text = text.strip()
    while pos < len(text):
        match = TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise MapSpecError(f"unexpected character {text[pos]!r} at position {pos} in {text!r}")
        kind = match.lastgroup or ""
        tokens.append((kind, match.group(kind)))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, value: str | None = None) -> tuple[str, str]:
        token = self.peek()
        if token is None or (value is not None and token[1] != value):
            expected = value or "a token"
            raise MapSpecError(f"expected {expected} at token {self.pos} of {self.text!r}")
        self.pos += 1
        return token

    def spec(self) -> MapExpr:
        terms = [self.term()]
        while (token := self.peek()) is not None and token[1] in ("*", "∘"):
            self.take()
            terms.append(self.term())
        expr = terms[-1]
        for outer in reversed(terms[:-1]):
            expr = Compose(outer=outer, inner=expr)
        return expr

    def args(self) -> list[int | MapExpr]:
        token = self.peek()
        if token is None or token[1] != "(":
            return []
        self.take("(")
        out: list[int | MapExpr] = []
        while True:
            token = self.peek()
            if token is not None and token[0] == "int":
                out.append(int(self.take()[1]))
            else:
                out.append(self.spec())
            separator = self.take()[1]
            if separator == ")":
                return out
            if separator != ",":
                raise MapSpecError(f"expected ',' or ')', got {separator!r} in {self.text!r}")

    def term(self) -> MapExpr:
        kind, value = self.take()
        if kind == "path":
            return _load_file(value[1:])
        if kind != "name":
            raise MapSpecError(f"expected a map name, got {value!r} in {self.text!r}")
        args = self.args()
        ints = [a for a in args if isinstance(a, int)]
        exprs = [a for a in args if not isinstance(a, int)]
        match value, len(ints), len(exprs):
            case "hopf", 0, 0:
                return Hopf()
            case "wrap", 1, 0:
                return DegreeWrap(degree=ints[0])
            case "wrap", 3, 0:
                return DegreeWrap(degree=ints[0], axes=(ints[1], ints[2]))
            case "reflect", 0 | 1, 0:
                return Rotation.reflection(ints[0] if ints else 3)
            case "identity", 1, 0:
                return Rotation.identity(ints[0])
            case "constant", 0, 0:
                return Constant()
            case "constant", 2, 0:
                return Constant(source=sphere(ints[0]), target_dim=ints[1])
            case "cube", 1, 0:
                return CubeCollapse(dim=ints[0])
            case "suspend", 0, 1:
                return Suspend(inner=exprs[0])
        raise MapSpecError(f"bad arguments for {value!r} in {self.text!r}")


def _load_file(path: str) -> MapExpr:
    try:
        return load_expr(Path(path).read_bytes())
    except OSError as e:
        raise MapSpecError(f"cannot read map file {path}: {e}") from e
    except ValidationError as e:
        raise MapSpecError(f"map file {path} is not a valid expression tree: {e}") from e


def parse_map_spec(text: str) -> MapExpr:
    """Parse a map spec; composition errors and bad parameters become MapSpecError."""
    try:
        parser = _Parser(text)
        expr = parser.spec()
        if parser.peek() is not None:
            raise MapSpecError(f"trailing input after token {parser.pos} in {text!r}")
    except (CompositionError, ValidationError) as e:
        raise MapSpecError(f"invalid map {text!r}: {e}") from e
    return expr

