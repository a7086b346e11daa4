"""Text format for hierarchical timed nets (``.hpn``) and pattern trees (``.pat``).

Net documents::

    net Root {
      place start entry;
      place done exit tc [0,10];
      trans work "WorkService" guard ok tc [1,3] td 2 refine Detail;
      arc start -> work;
      arc work -> done;
    }
    net Detail { ... }

The first net is the root; later nets are subnets available to ``refine``.
Beyond ``refine X``, a transition may be marked ``refinable`` without a
binding and may declare condition labels ``pre {a, b}`` / ``post {c}``.
``#`` starts a comment.

Pattern documents use functional notation::

    seq(act(i, teb=[1,2]), act(j, teb=[2,3]), tec=[0,1])
    par(a, b, ...)   cond(pre, b1, b2, ..., tec=[..])   loop(body, k=3)
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

from .hierarchy import HierarchicalNet, refinement_cycle
from .net import INF, Arc, Net, Place, TimeInterval, Transition
from .patterns import ZERO, Cond, Leaf, Loop, Par, PatternExpr, Seq

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.@]*")
_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.@]*)
  | (?P<neg>-[0-9]+)
  | (?P<nat>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<badstring>"[^\n]*)
  | (?P<arrow>->)
  | (?P<punct>[{};\[\],()=])
""", re.VERBOSE)


@dataclass(frozen=True)
class SourceDocument:
    text: str | bytes
    origin: str = "<memory>"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    line: int
    column: int
    origin: str = "<memory>"

    def __str__(self):
        return f"{self.origin}:{self.line}:{self.column}: {self.severity} {self.code}: {self.message}"


class ParseError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(map(str, diagnostics)))


class DSLWarning(UserWarning):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class Token:
    kind: str  # ident, nat, neg, string, punct, eof
    value: str
    line: int
    column: int


class _Abort(Exception):
    pass


def _decode(source, origin) -> tuple[str, str, list[Diagnostic]]:
    if isinstance(source, SourceDocument):
        source, origin = source.text, source.origin
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            head = source[:exc.start]
            line = head.count(b"\n") + 1
            column = exc.start - (head.rfind(b"\n") + 1) + 1
            return "", origin, [Diagnostic("error", "ENCODING", "input is not valid UTF-8", line, column, origin)]
    return source, origin, []


def tokenize(text: str, origin: str = "<memory>") -> tuple[list[Token], list[Diagnostic]]:
    tokens, diags = [], []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            diags.append(Diagnostic("error", "LEX_ERROR", f"unexpected character {text[pos]!r}", line, col, origin))
            pos += 1
            continue
        kind, value = m.lastgroup, m.group()
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind == "badstring":
            diags.append(Diagnostic("error", "UNTERMINATED_STRING", "string literal is not closed", line, col, origin))
        elif kind == "string":
            tokens.append(Token("string", re.sub(r"\\(.)", lambda g: {"n": "\n", "t": "\t"}.get(g[1], g[1]),
                                                 value[1:-1]), line, col))
        elif kind == "arrow":
            tokens.append(Token("punct", value, line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens, diags


class _Parser:
    def __init__(self, tokens: list[Token], origin: str, diags: list[Diagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.origin = origin
        self.diags = diags

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, code, message, tok=None, severity="error"):
        tok = tok or self.tok
        self.diags.append(Diagnostic(severity, code, message, tok.line, tok.column, self.origin))

    def fail(self, code, message, tok=None):
        self.error(code, message, tok)
        raise _Abort

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, value, kind=None) -> bool:
        tok = self.tok
        return tok.value == value and tok.kind in ((kind,) if kind else ("ident", "punct"))

    def accept(self, value) -> Token | None:
        return self.advance() if self.at(value) else None

    def expect(self, value) -> Token:
        if not self.at(value):
            found = "end of input" if self.tok.kind == "eof" else repr(self.tok.value)
            code = "UNEXPECTED_EOF" if self.tok.kind == "eof" else "UNEXPECTED_TOKEN"
            self.fail(code, f"expected {value!r}, found {found}")
        return self.advance()

    def ident(self, what="identifier") -> Token:
        if self.tok.kind != "ident":
            found = "end of input" if self.tok.kind == "eof" else repr(self.tok.value)
            self.fail("UNEXPECTED_EOF" if self.tok.kind == "eof" else "UNEXPECTED_TOKEN",
                      f"expected {what}, found {found}")
        return self.advance()

    def nat(self, what="natural number") -> tuple[int, Token]:
        tok = self.tok
        if tok.kind == "neg":
            self.fail("NEGATIVE_VALUE", f"{what} must not be negative")
        if tok.kind != "nat":
            self.fail("UNEXPECTED_TOKEN", f"expected {what}, found {tok.value!r}")
        self.advance()
        return int(tok.value), tok

    def interval(self) -> TimeInterval:
        open_tok = self.expect("[")
        if self.at("inf", "ident"):
            self.fail("INF_LOWER", "'inf' is only allowed as an upper bound")
        lo, _ = self.nat("lower bound")
        self.expect(",")
        if self.accept("inf"):
            hi = INF
        else:
            hi, _ = self.nat("upper bound")
        self.expect("]")
        if lo > hi:
            self.fail("INTERVAL_ORDER", f"interval [{lo},{hi}] has lower bound above upper bound", open_tok)
        return TimeInterval(lo, hi)

    def sync(self, stops=(";",)):
        while self.tok.kind != "eof" and not any(self.at(s) for s in stops) and not self.at("}"):
            self.advance()
        self.accept(";")


# ---------------------------------------------------------------------------
# nets


@dataclass
class _NetDecl:
    name: Token
    places: list[tuple[Place, Token]]
    transitions: list[tuple[Transition, Token, Token | None]]
    arcs: list[tuple[Arc, Token, Token, Token]]


def _parse_document(p: _Parser) -> list[_NetDecl]:
    nets = []
    if p.tok.kind == "eof":
        p.error("EMPTY_DOCUMENT", "document declares no net")
    while p.tok.kind != "eof":
        try:
            p.expect("net")
            name = p.ident("net name")
            p.expect("{")
        except _Abort:
            p.sync(stops=("net",))
            while p.tok.kind != "eof" and not p.at("net"):
                p.advance()
            continue
        decl = _NetDecl(name, [], [], [])
        while not p.at("}") and p.tok.kind != "eof":
            try:
                _parse_item(p, decl)
            except _Abort:
                p.sync()
        try:
            p.expect("}")
        except _Abort:
            pass
        nets.append(decl)
    return nets


def _labels(p: _Parser) -> frozenset[str]:
    p.expect("{")
    out = []
    if not p.at("}"):
        out.append(p.ident("label").value)
        while p.accept(","):
            out.append(p.ident("label").value)
    p.expect("}")
    return frozenset(out)


def _parse_item(p: _Parser, decl: _NetDecl):
    kw = p.tok
    if p.accept("place"):
        ident = p.ident("place id")
        entry = exit_ = False
        while p.at("entry") or p.at("exit"):
            role = p.advance()
            if (role.value == "entry" and entry) or (role.value == "exit" and exit_):
                p.fail("DUPLICATE_ROLE", f"role {role.value!r} given twice", role)
            entry |= role.value == "entry"
            exit_ |= role.value == "exit"
        window = p.interval() if p.accept("tc") else None
        p.expect(";")
        decl.places.append((Place(ident.value, entry, exit_, window), ident))
    elif p.accept("trans"):
        ident = p.ident("transition id")
        name = p.advance().value if p.tok.kind == "string" else None
        guard = p.ident("guard label").value if p.accept("guard") else None
        window = p.interval() if p.accept("tc") else None
        duration = 0
        if p.accept("td"):
            if p.tok.kind == "neg":
                p.fail("NEGATIVE_DURATION", f"duration {p.tok.value} is negative")
            duration, _ = p.nat("duration")
        refine_tok, refinable = None, False
        if p.accept("refine"):
            refine_tok = p.ident("subnet name")
        elif p.accept("refinable"):
            refinable = True
        pre = _labels(p) if p.accept("pre") else frozenset()
        post = _labels(p) if p.accept("post") else frozenset()
        p.expect(";")
        t = Transition(ident.value, name, guard, window, duration, refinable,
                       refine_tok.value if refine_tok else None, pre, post)
        decl.transitions.append((t, ident, refine_tok))
    elif p.accept("arc"):
        src = p.ident("arc source")
        p.expect("->")
        dst = p.ident("arc target")
        p.expect(";")
        decl.arcs.append((Arc(src.value, dst.value), kw, src, dst))
    else:
        p.fail("UNEXPECTED_TOKEN", f"expected 'place', 'trans', 'arc' or '}}', found {p.tok.value!r}"
               if p.tok.kind != "eof" else "unexpected end of input")


def _check_net(p: _Parser, decl: _NetDecl, net_names: set[str]):
    kinds: dict[str, str] = {}
    for node, tok, kind in ([(pl, t, "place") for pl, t in decl.places]
                            + [(tr, t, "transition") for tr, t, _ in decl.transitions]):
        if node.id in kinds:
            p.error("DUPLICATE_ID", f"{kind} id {node.id!r} already declared as a {kinds[node.id]}", tok)
        else:
            kinds[node.id] = kind
    for arc, kw, src, dst in decl.arcs:
        bad = False
        for end in (src, dst):
            if end.value not in kinds:
                p.error("UNKNOWN_NODE", f"{end.value!r} is not declared in net {decl.name.value!r}", end)
                bad = True
        if not bad and kinds[src.value] == kinds[dst.value]:
            p.error("ARC_SHAPE", f"arc connects {kinds[src.value]} to {kinds[dst.value]}", kw)
    seen_arcs = set()
    for arc, kw, _, _ in decl.arcs:
        if arc in seen_arcs:
            p.error("DUPLICATE_ARC", f"arc {arc.source} -> {arc.target} declared twice", kw)
        seen_arcs.add(arc)
    for role, code in (("entry", "MULTIPLE_ENTRY"), ("exit", "MULTIPLE_EXIT")):
        holders = [(pl, tok) for pl, tok in decl.places if getattr(pl, role)]
        if not holders:
            p.error(f"MISSING_{role.upper()}", f"net {decl.name.value!r} has no {role} place", decl.name)
        for _, tok in holders[1:]:
            p.error(code, f"second {role} place in net {decl.name.value!r}", tok)
    for t, _, ref in decl.transitions:
        if ref is not None and ref.value not in net_names:
            p.error("UNKNOWN_SUBNET", f"no net named {ref.value!r} in this document", ref)


def parse_net(source: SourceDocument | str | bytes, origin: str = "<memory>") -> HierarchicalNet:
    """Parse a net document; raises :class:`ParseError` carrying positioned diagnostics."""
    text, origin, diags = _decode(source, origin)
    if diags:
        raise ParseError(diags)
    tokens, diags = tokenize(text, origin)
    p = _Parser(tokens, origin, diags)
    decls = _parse_document(p)
    names: dict[str, _NetDecl] = {}
    for d in decls:
        if d.name.value in names:
            p.error("DUPLICATE_NET", f"net {d.name.value!r} declared twice", d.name)
        else:
            names[d.name.value] = d
    for d in decls:
        _check_net(p, d, set(names))
    if any(x.severity == "error" for x in p.diags):
        raise ParseError(sorted(p.diags, key=lambda x: (x.line, x.column)))

    nets = [Net(d.name.value, tuple(pl for pl, _ in d.places), tuple(t for t, _, _ in d.transitions),
                tuple(a for a, _, _, _ in d.arcs)) for d in decls]
    h = HierarchicalNet(nets[0], {n.name: n for n in nets[1:]})
    cycle = refinement_cycle(h)
    if cycle:
        owner, target = cycle[0], cycle[1]
        tok = next(ref for t, _, ref in names[owner].transitions if ref is not None and ref.value == target)
        p.error("REFINEMENT_CYCLE", "refinement cycle " + " -> ".join(cycle), tok)
        raise ParseError(p.diags)
    return h


def parse_single_net(source, origin="<memory>") -> Net:
    return parse_net(source, origin).root


def _interval_text(w: TimeInterval) -> str:
    return str(w)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def _check_ident(value: str):
    if not IDENT_RE.fullmatch(value):
        raise ValueError(f"{value!r} cannot be written as an identifier")
    return value


def _serialize_one(net: Net) -> list[str]:
    lines = [f"net {_check_ident(net.name)} {{"]
    for pl in net.places:
        parts = ["place", _check_ident(pl.id)]
        parts += ["entry"] * pl.entry + ["exit"] * pl.exit
        if pl.window is not None:
            parts += ["tc", _interval_text(pl.window)]
        lines.append("  " + " ".join(parts) + ";")
    for t in net.transitions:
        parts = ["trans", _check_ident(t.id)]
        if t.name is not None:
            parts.append(_quote(t.name))
        if t.guard is not None:
            parts += ["guard", _check_ident(t.guard)]
        if t.window is not None:
            parts += ["tc", _interval_text(t.window)]
        if t.duration:
            parts += ["td", str(t.duration)]
        if t.refine is not None:
            parts += ["refine", _check_ident(t.refine)]
        elif t.refinable:
            parts.append("refinable")
        for kw, labels in (("pre", t.pre_labels), ("post", t.post_labels)):
            if labels:
                parts += [kw, "{" + ", ".join(_check_ident(x) for x in sorted(labels)) + "}"]
        lines.append("  " + " ".join(parts) + ";")
    for a in net.arcs:
        lines.append(f"  arc {_check_ident(a.source)} -> {_check_ident(a.target)};")
    lines.append("}")
    return lines


def serialize_net(net: HierarchicalNet | Net) -> str:
    """Canonical text: root first, subnets by name, nodes by id, one declaration per line."""
    if isinstance(net, Net):
        net = HierarchicalNet(net)
    blocks = [_serialize_one(net.root)] + [_serialize_one(net.subnets[k]) for k in sorted(net.subnets)]
    return "\n\n".join("\n".join(b) for b in blocks) + "\n"


# ---------------------------------------------------------------------------
# patterns


def _pattern(p: _Parser) -> PatternExpr:
    head = p.ident("pattern constructor")
    kind = head.value
    p.expect("(")
    if kind == "act":
        ident = p.ident("activity id")
        p.expect(",")
        p.expect("teb")
        p.expect("=")
        teb = p.interval()
        p.expect(")")
        return Leaf(ident.value, teb)
    if kind == "loop":
        body = _pattern(p)
        if p.at(")"):
            p.fail("LOOP_UNBOUNDED", "loops need a known iteration count 'k=N'")
        p.expect(",")
        p.expect("k")
        p.expect("=")
        if p.at("inf", "ident"):
            p.fail("LOOP_UNBOUNDED", "loops need a known iteration count")
        k, tok = p.nat("iteration count")
        if k < 1:
            p.fail("LOOP_BOUND", "iteration count must be at least 1", tok)
        p.expect(")")
        return Loop(body, k)
    if kind not in ("seq", "par", "cond"):
        p.fail("UNKNOWN_PATTERN", f"unknown pattern constructor {kind!r}", head)
    kids, tec = [_pattern(p)], None
    while p.accept(","):
        if p.at("tec") and kind in ("seq", "cond"):
            p.advance()
            p.expect("=")
            tec = p.interval()
            break
        kids.append(_pattern(p))
    p.expect(")")
    tec = tec or ZERO
    if kind == "seq":
        if len(kids) != 2:
            p.fail("SEQ_ARITY", f"seq takes exactly two patterns, got {len(kids)}", head)
        return Seq(kids[0], kids[1], tec)
    if kind == "par":
        if len(kids) == 1:
            p.error("PAR_SINGLE", "parallel composition of a single branch", head, severity="warning")
            return kids[0]
        return Par(tuple(kids))
    if len(kids) < 2:
        p.fail("COND_ARITY", "cond needs a preceding pattern and at least one branch", head)
    if len(kids) == 2:
        p.error("COND_SINGLE", "conditional with a single branch is a sequence", head, severity="warning")
        return Seq(kids[0], kids[1], tec)
    return Cond(kids[0], tuple(kids[1:]), tec)


def parse_pattern(source: SourceDocument | str | bytes, origin: str = "<memory>") -> PatternExpr:
    """Parse a pattern document. Warnings are issued as :class:`DSLWarning`."""
    text, origin, diags = _decode(source, origin)
    if diags:
        raise ParseError(diags)
    tokens, diags = tokenize(text, origin)
    p = _Parser(tokens, origin, diags)
    expr = None
    try:
        expr = _pattern(p)
        if p.tok.kind != "eof":
            p.fail("UNEXPECTED_TOKEN", f"trailing input {p.tok.value!r}")
    except _Abort:
        pass
    errors = [d for d in p.diags if d.severity == "error"]
    if errors or expr is None:
        raise ParseError(sorted(errors, key=lambda x: (x.line, x.column)))
    for d in p.diags:
        warnings.warn(DSLWarning(d), stacklevel=2)
    return expr


def format_pattern(e: PatternExpr) -> str:
    match e:
        case Leaf(id, teb):
            return f"act({id}, teb={teb})"
        case Seq(first, second, tec):
            return f"seq({format_pattern(first)}, {format_pattern(second)}, tec={tec})"
        case Par(branches):
            return "par(" + ", ".join(map(format_pattern, branches)) + ")"
        case Cond(pre, branches, tec):
            return "cond(" + ", ".join(map(format_pattern, (pre, *branches))) + f", tec={tec})"
        case Loop(body, k):
            return f"loop({format_pattern(body)}, k={k})"
    raise TypeError(f"not a pattern expression: {e!r}")
