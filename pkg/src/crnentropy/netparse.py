"""Reader and writer for the line-oriented ``.crn`` network format.

Grammar (one statement per line, ``#`` starts a comment)::

    species <id> <id> ...
    reaction <complex> -> <complex> @ <rate>
    reaction <complex> <=> <complex> @ <forward>, <backward>
    diffusion <id> <coefficient>

    complex := term ('+' term)* | '0'
    term    := [<nonnegative int>] <id>

Errors carry the file name, line and column and print as ``file:line:col: message``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .network import Network, Reaction, validate_network


class NetworkFileError(ValueError):
    """Problem found while reading a network description."""

    kind = "error"

    def __init__(self, message: str, line: int | None = None, col: int | None = None, filename: str = "<string>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename

    def __str__(self):
        if self.line is None:
            return f"{self.filename}: {self.message}"
        return f"{self.filename}:{self.line}:{self.col}: {self.message}"


class NetworkSyntaxError(NetworkFileError):
    kind = "syntax error"


class NetworkSemanticError(NetworkFileError):
    kind = "semantic error"


class NetworkValidationError(NetworkFileError):
    kind = "validation error"


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<rev><=>)
  | (?P<arrow>->)
  | (?P<num>-?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>[+@,])
  | (?P<bad>.)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(line: str, lineno: int, filename: str) -> list[_Tok]:
    code = line.split("#", 1)[0]
    toks = []
    for m in _TOKEN.finditer(code):
        kind = m.lastgroup
        if kind == "ws":
            continue
        if kind == "bad":
            raise NetworkSyntaxError(f"unexpected character {m.group()!r}", lineno, m.start() + 1, filename)
        toks.append(_Tok(kind if kind != "op" else m.group(), m.group(), m.start() + 1))
    return toks


class _LineParser:
    def __init__(self, toks, lineno, filename, line_len):
        self.toks = toks
        self.pos = 0
        self.lineno = lineno
        self.filename = filename
        self.eol_col = line_len + 1

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def col(self):
        tok = self.peek()
        return tok.col if tok else self.eol_col

    def error(self, msg, col=None, cls=NetworkSyntaxError):
        return cls(msg, self.lineno, col if col is not None else self.col(), self.filename)

    def take(self, kind, what):
        tok = self.peek()
        if tok is None or tok.kind != kind:
            found = "end of line" if tok is None else repr(tok.text)
            raise self.error(f"expected {what}, found {found}")
        self.pos += 1
        return tok

    def at_end(self):
        return self.pos >= len(self.toks)

    def number(self, what):
        tok = self.take("num", what)
        return float(tok.text), tok

    def complex(self):
        """Parse a complex; returns list of (species, coefficient, col)."""
        tok = self.peek()
        if tok is not None and tok.kind == "num" and tok.text == "0":
            nxt = self.toks[self.pos + 1] if self.pos + 1 < len(self.toks) else None
            if nxt is None or nxt.kind != "id":
                self.pos += 1
                return []
        terms = []
        while True:
            tok = self.peek()
            coeff = 1
            if tok is not None and tok.kind == "num":
                if not re.fullmatch(r"-?\d+", tok.text):
                    raise self.error(f"stoichiometric coefficient must be an integer, got {tok.text!r}", tok.col)
                coeff = int(tok.text)
                if coeff < 0:
                    raise self.error(f"negative coefficient {coeff}", tok.col)
                self.pos += 1
            name = self.take("id", "species name")
            terms.append((name.text, coeff, name.col))
            tok = self.peek()
            if tok is None or tok.kind != "+":
                return terms
            self.pos += 1


def parse_network(text: str, filename: str = "<string>") -> Network:
    """Parse ``.crn`` text into a validated :class:`Network`.

    Raises :class:`NetworkSyntaxError`, :class:`NetworkSemanticError` or
    :class:`NetworkValidationError` with the offending position.
    """
    species: list[str] = []
    species_pos: dict[str, tuple[int, int]] = {}
    species_line: int | None = None
    raw_reactions: list[tuple[list, list, float, int]] = []
    diffusion: dict[str, float] = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = _tokenize(line, lineno, filename)
        if not toks:
            continue
        p = _LineParser(toks, lineno, filename, len(line.split("#", 1)[0]))
        head = p.take("id", "a statement keyword")
        if head.text == "species":
            if p.at_end():
                raise p.error("species statement needs at least one name")
            species_line = species_line or lineno
            while not p.at_end():
                tok = p.take("id", "species name")
                if tok.text in species_pos:
                    raise p.error(f"species {tok.text} declared twice", tok.col, NetworkSemanticError)
                species.append(tok.text)
                species_pos[tok.text] = (lineno, tok.col)
        elif head.text == "reaction":
            lhs = p.complex()
            tok = p.peek()
            if tok is None or tok.kind not in ("arrow", "rev"):
                raise p.error("expected '->' or '<=>'")
            p.pos += 1
            reversible = tok.kind == "rev"
            arrow_col = tok.col
            rhs = p.complex()
            p.take("@", "'@' before the rate")
            kf, kf_tok = p.number("rate")
            kb, kb_tok = None, None
            if reversible:
                p.take(",", "',' and a backward rate for '<=>'")
                kb, kb_tok = p.number("backward rate")
            if not p.at_end():
                raise p.error(f"unexpected {p.peek().text!r} after reaction")
            for k, ktok in ((kf, kf_tok), (kb, kb_tok)):
                if ktok is not None and not k > 0:
                    raise p.error("rate must be positive", ktok.col, NetworkSemanticError)
            if _as_counts(lhs) == _as_counts(rhs):
                raise p.error(
                    "trivial reaction: a complex may not react to itself (requirement 2)",
                    arrow_col,
                    NetworkValidationError,
                )
            raw_reactions.append((lhs, rhs, kf, lineno))
            if reversible:
                raw_reactions.append((rhs, lhs, kb, lineno))
        elif head.text == "diffusion":
            name = p.take("id", "species name")
            value, vtok = p.number("diffusion coefficient")
            if not p.at_end():
                raise p.error(f"unexpected {p.peek().text!r} after diffusion coefficient")
            if not value > 0:
                raise p.error("diffusion coefficient must be positive", vtok.col, NetworkSemanticError)
            if name.text in diffusion:
                raise p.error(f"diffusion for {name.text} given twice", name.col, NetworkSemanticError)
            if species_pos and name.text not in species_pos:
                raise p.error(f"unknown species {name.text}", name.col, NetworkSemanticError)
            diffusion[name.text] = value
        else:
            raise NetworkSyntaxError(f"unknown statement {head.text!r}", lineno, head.col, filename)

    if not species:
        raise NetworkSemanticError("no species declared", 1, 1, filename)
    index = {s: i for i, s in enumerate(species)}
    reactions = []
    for lhs, rhs, k, lineno in raw_reactions:
        for name, _, col in lhs + rhs:
            if name not in index:
                raise NetworkSemanticError(f"unknown species {name}", lineno, col, filename)
        reactions.append(Reaction(_as_vector(lhs, index), _as_vector(rhs, index), k))
    for name in diffusion:
        if name not in index:
            raise NetworkSemanticError(f"unknown species {name} in diffusion statement", None, None, filename)
    for name in species:
        if name not in diffusion:
            line, col = species_pos[name]
            raise NetworkSemanticError(f"missing diffusion entry for species {name}", line, col, filename)

    net = Network(tuple(species), tuple(reactions), tuple(diffusion[s] for s in species))
    problems = validate_network(net)
    if problems:
        first = problems[0]
        line, col = (None, None)
        if first.code == "unused_species":
            line, col = species_pos[species[first.index]]
        raise NetworkValidationError("; ".join(v.message for v in problems), line, col, filename)
    return net


def _as_counts(terms):
    counts: dict[str, int] = {}
    for name, coeff, _ in terms:
        counts[name] = counts.get(name, 0) + coeff
    return {k: v for k, v in counts.items() if v}


def _as_vector(terms, index):
    y = [0] * len(index)
    for name, coeff, _ in terms:
        y[index[name]] += coeff
    return tuple(y)


def load_network(path) -> Network:
    """Read and parse a ``.crn`` file."""
    path = Path(path)
    return parse_network(path.read_text(encoding="utf-8"), filename=str(path))


def _format_complex(y, names, order):
    terms = []
    for i in order:
        if y[i] == 0:
            continue
        terms.append(names[i] if y[i] == 1 else f"{y[i]} {names[i]}")
    return " + ".join(terms) if terms else "0"


def serialize_network(net: Network) -> str:
    """Canonical ``.crn`` text for ``net`` (species sorted by name, one reaction per line).

    Raises :class:`NetworkValidationError` for networks that fail validation.
    """
    problems = validate_network(net)
    if problems:
        raise NetworkValidationError("; ".join(v.message for v in problems))
    order = sorted(range(net.n_species), key=lambda i: net.species[i])
    names = net.species
    lines = ["species " + " ".join(names[i] for i in order)]
    for rxn in net.reactions:
        lines.append(
            f"reaction {_format_complex(rxn.source, names, order)} -> "
            f"{_format_complex(rxn.target, names, order)} @ {rxn.rate!r}"
        )
    for i in order:
        lines.append(f"diffusion {names[i]} {net.diffusion[i]!r}")
    return "\n".join(lines) + "\n"
