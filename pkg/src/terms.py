"""
Term syntax and corpus ingestion.

Terms are written as s-expressions: an atom `x`, or an application
`(head arg1 ... argN)` with N >= 1 where head and arguments recurse.
Binders are plain applications whose head names the binder, e.g.
`(Lambda x (f x))`.

Corpora are UTF-8 JSON lines, one record per line:

    {"hyps": [["h", "(eq a b)"]], "goal": "(eq b a)", "tactic": "symmetry",
     "seq": 0, "module": "Init.Logic"}

`seq` and `module` are optional.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import pyparsing
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.data_types import App, Atom, LabeledExampleRecord, ProofState, Term
from src.errors import (
    EmptyApplication,
    EmptyInput,
    RecordError,
    TermSyntaxError,
    UnbalancedParentheses,
)

logger = logging.getLogger(__name__)

LPAR, RPAR = map(pyparsing.Suppress, "()")

# Any run of characters other than whitespace and parentheses, Unicode included
identifier = pyparsing.Regex(r"[^\s()]+")


def _build_atom(s, loc, toks):
    return Atom(toks[0])


def _build_app(s, loc, toks):
    items = list(toks)
    if len(items) < 2:
        raise EmptyApplication(loc, "an application needs a head and at least one argument")
    return App(items[0], tuple(items[1:]))


sexp = pyparsing.Forward()
application = (LPAR + pyparsing.ZeroOrMore(sexp) + RPAR).set_parse_action(_build_app)
sexp <<= identifier.copy().set_parse_action(_build_atom) | application


def _check_balance(text: str) -> None:
    depth = 0
    opened: List[int] = []
    for pos, c in enumerate(text):
        if c == "(":
            opened.append(pos)
            depth += 1
        elif c == ")":
            if depth == 0:
                raise UnbalancedParentheses(pos, "closing parenthesis without a matching opening one")
            opened.pop()
            depth -= 1
    if opened:
        raise UnbalancedParentheses(opened[-1], "opening parenthesis is never closed")


def parse_term(text: str) -> Term:
    """
    Parse one s-expression into a Term.

    Raises:
        EmptyInput: text is empty or only whitespace
        UnbalancedParentheses: parentheses do not match
        EmptyApplication: `()` or `(f)`
        TermSyntaxError: any other grammar violation (e.g. two top-level terms)
    """
    if not text or not text.strip():
        raise EmptyInput(0, "empty term")
    _check_balance(text)
    try:
        result = sexp.parse_string(text, parse_all=True)
    except pyparsing.ParseBaseException as err:
        raise TermSyntaxError(err.loc, err.msg) from None
    return result[0]


def print_term(term: Term) -> str:
    """Render a Term back to its s-expression form."""
    if isinstance(term, Atom):
        return term.name
    parts = [print_term(term.head)] + [print_term(a) for a in term.args]
    return "(" + " ".join(parts) + ")"


class StateLine(BaseModel):
    """JSON shape of a bare proof state (as read by `predict`)."""

    model_config = ConfigDict(extra="ignore")

    hyps: List[Tuple[str, str]] = Field(default_factory=list)
    goal: str


class CorpusLine(StateLine):
    """JSON shape of one corpus record."""

    tactic: str = Field(min_length=1)
    seq: Optional[int] = Field(default=None, ge=0)
    module: str = ""


def _state_from_line(line: StateLine) -> ProofState:
    hyps = tuple((name, parse_term(text)) for name, text in line.hyps)
    return ProofState(hypotheses=hyps, goal=parse_term(line.goal))


def parse_state(text: str) -> ProofState:
    """Parse a JSON object with `hyps` and `goal` into a ProofState."""
    return _state_from_line(StateLine.model_validate_json(text))


def _describe(err: Exception) -> str:
    if isinstance(err, ValidationError):
        first = err.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ()))
        return f"{where}: {first['msg']}" if where else first["msg"]
    return str(err)


def parse_dataset(stream: Iterable[str], path: Optional[str] = None) -> List[LabeledExampleRecord]:
    """
    Read a JSON-lines corpus.

    Blank lines are skipped. Records without `seq` get their position among
    the non-blank records. The first malformed record aborts the whole read.

    Args:
        stream: iterable of text lines (an open file works)
        path: file name used in error messages

    Returns:
        records in file order

    Raises:
        RecordError: naming the 1-based line of the first bad record
    """
    records: List[LabeledExampleRecord] = []
    last_seq = -1
    for line_number, raw in enumerate(stream, 1):
        if not raw.strip():
            continue
        try:
            line = CorpusLine.model_validate_json(raw)
            seq = line.seq if line.seq is not None else len(records)
            if seq <= last_seq:
                raise ValueError(f"seq {seq} does not increase (previous {last_seq})")
            record = LabeledExampleRecord(
                state=_state_from_line(line),
                tactic=line.tactic,
                seq=seq,
                module_path=line.module,
            )
        except (ValidationError, ValueError) as err:
            raise RecordError(line_number, _describe(err), path) from err
        records.append(record)
        last_seq = seq
    logger.debug("read %d records from %s", len(records), path or "<stream>")
    return records


def load_corpus(path: Union[str, Path]) -> List[LabeledExampleRecord]:
    """Open and parse a corpus file."""
    with open(path, "r", encoding="utf-8") as f:
        return parse_dataset(f, path=str(path))


def record_to_json(record: LabeledExampleRecord) -> dict:
    """Inverse of one corpus line, used when writing synthetic corpora."""
    return {
        "hyps": [[name, print_term(t)] for name, t in record.state.hypotheses],
        "goal": print_term(record.state.goal),
        "tactic": record.tactic,
        "seq": record.seq,
        "module": record.module_path,
    }
