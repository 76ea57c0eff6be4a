"""Representation families given by matrix-entry formulas.

A family specifies k generator matrices for every member index n and for
the limit, each entry an expression in a small grammar: integer
literals, variables ``n`` (member index) and ``z`` (abelian parameter),
``+ - * /``, ``pow(base, int_expr)``, ``E(expr)`` for the exponential
exp(p*expr), and ``seq(name)`` for a declared integer sequence.  Exact
rational subexpressions are evaluated exactly and embedded into the
field only when needed.

Family JSON schema (unknown keys are rejected)::

    {
      "name": "...",                     # optional
      "field": {"p": 5, "e": 1, "prec": 16},
      "d": 2,
      "generators": [[["E(z)", "0"], ["0", "E(seq(a)*z)"]]],
      "limit":      [[["E(z)", "0"], ["0", "E(2*z)"]]],   # optional iff
                                          # generators are n-free
      "sequences": {"a": {"table": [..], "formula": "2+pow(5,n)",
                          "limit": "2"}},
      "parametric": true
    }

Haar sampling is exact for parametric-abelian families (the parameter is
uniform modulo p**level, drawn from a splittable per-sample hash); for
other families only an explicitly requested random-word approximation is
available.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError, PrecisionError
from .field import FieldSpec, PadicScalar, padic_exp
from .matrices import PadicMatrix
from .words import Word, WordBall, word_ball

LIMIT = None

MIN_WALK_LEN = 8

# -- expression grammar -------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(\d+|[A-Za-z_][A-Za-z_0-9]*|[()+\-*/,])")

_FUNCS = ("pow", "E", "seq")


def parse_expr(text: str):
    """Parse an entry expression into an AST of nested tuples."""
    toks = []
    pos = 0
    while pos < len(text):
        mo = _TOKEN_RE.match(text, pos)
        if not mo:
            raise ConfigError(f"bad token in expression {text!r} at {pos}")
        toks.append(mo.group(1))
        pos = mo.end()
    toks.append(None)  # sentinel
    out, idx = _parse_sum(toks, 0)
    if toks[idx] is not None:
        raise ConfigError(f"trailing tokens in expression {text!r}")
    return out


def _parse_sum(toks, i):
    node, i = _parse_product(toks, i)
    while toks[i] in ("+", "-"):
        op = "add" if toks[i] == "+" else "sub"
        rhs, i = _parse_product(toks, i + 1)
        node = (op, node, rhs)
    return node, i


def _parse_product(toks, i):
    node, i = _parse_factor(toks, i)
    while toks[i] in ("*", "/"):
        op = "mul" if toks[i] == "*" else "div"
        rhs, i = _parse_factor(toks, i + 1)
        node = (op, node, rhs)
    return node, i


def _parse_factor(toks, i):
    if toks[i] == "-":
        node, i = _parse_factor(toks, i + 1)
        return ("neg", node), i
    return _parse_atom(toks, i)


def _parse_atom(toks, i):
    t = toks[i]
    if t is None:
        raise ConfigError("unexpected end of expression")
    if t == "(":
        node, i = _parse_sum(toks, i + 1)
        if toks[i] != ")":
            raise ConfigError("missing closing parenthesis")
        return node, i + 1
    if t.isdigit():
        return ("int", int(t)), i + 1
    if t == "pow":
        args, i = _parse_args(toks, i + 1, 2)
        return ("pow", args[0], args[1]), i
    if t == "E":
        args, i = _parse_args(toks, i + 1, 1)
        return ("exp", args[0]), i
    if t == "seq":
        if toks[i + 1] != "(" or not re.fullmatch(r"[A-Za-z_]\w*", toks[i + 2] or "") \
                or toks[i + 3] != ")":
            raise ConfigError("seq() takes a single sequence name")
        return ("seq", toks[i + 2]), i + 4
    if re.fullmatch(r"[A-Za-z_]\w*", t):
        # validated at evaluation time: families allow n and z only,
        # subvariety polynomials allow c0.., disc, det_inv
        return ("var", t), i + 1
    raise ConfigError(f"unknown token {t!r} in expression")


def _parse_args(toks, i, count):
    if toks[i] != "(":
        raise ConfigError("expected '(' after function name")
    args = []
    i += 1
    for a in range(count):
        node, i = _parse_sum(toks, i)
        args.append(node)
        expected = "," if a < count - 1 else ")"
        if toks[i] != expected:
            raise ConfigError(f"expected {expected!r} in argument list")
        i += 1
    return args, i


@dataclass(frozen=True)
class SequenceDef:
    """Integer sequence: finite table, optional closure formula in n, and
    an n-free expression for its limit."""

    table: tuple[int, ...]
    formula: object | None
    limit: object | None

    def value(self, n: int) -> int:
        if 0 <= n < len(self.table):
            return self.table[n]
        if self.formula is None:
            raise ConfigError(
                f"sequence table exhausted at n={n} and no closure formula")
        v = _eval_exact(self.formula, _Ctx(None, n, None, {}))
        if v.denominator != 1:
            raise ConfigError("sequence formula must produce integers")
        return int(v)


@dataclass
class _Ctx:
    field: FieldSpec | None
    n: int | None
    z: object | None  # ('x', Fraction) or ('s', PadicScalar)
    sequences: dict


def _eval_exact(node, ctx: _Ctx) -> Fraction:
    kind = node[0]
    if kind == "int":
        return Fraction(node[1])
    if kind == "neg":
        return -_eval_exact(node[1], ctx)
    if kind == "var":
        if node[1] == "n":
            if ctx.n is None:
                raise ConfigError("variable n is not available in limit expressions")
            return Fraction(ctx.n)
        if node[1] == "z":
            if ctx.z is not None and ctx.z[0] == "x":
                return ctx.z[1]
            raise ConfigError("variable z is not exact in this context")
        raise ConfigError(f"unknown variable {node[1]!r} in expression")
    if kind == "seq":
        return Fraction(_seq_value(node[1], ctx))
    if kind in ("add", "sub", "mul", "div"):
        a = _eval_exact(node[1], ctx)
        b = _eval_exact(node[2], ctx)
        if kind == "add":
            return a + b
        if kind == "sub":
            return a - b
        if kind == "mul":
            return a * b
        if b == 0:
            raise ConfigError("exact division by zero in expression")
        return a / b
    if kind == "pow":
        base = _eval_exact(node[1], ctx)
        expo = _eval_exact(node[2], ctx)
        if expo.denominator != 1:
            raise ConfigError("pow exponent must be an integer")
        return base ** int(expo)
    raise ConfigError(f"expression node {kind!r} has no exact value")


def _seq_value(name: str, ctx: _Ctx) -> int:
    if name not in ctx.sequences:
        raise ConfigError(f"unknown sequence {name!r}")
    sd = ctx.sequences[name]
    if ctx.n is None:
        if sd.limit is None:
            raise ConfigError(
                f"sequence {name!r} has no declared limit expression")
        v = _eval_exact(sd.limit, _Ctx(None, None, None, ctx.sequences))
        if v.denominator != 1:
            raise ConfigError("sequence limit must be an integer")
        return int(v)
    return sd.value(ctx.n)


def _eval_val(node, ctx: _Ctx):
    """Evaluate to ('x', Fraction) when exact, else ('s', PadicScalar)."""
    kind = node[0]
    if kind in ("int", "seq"):
        return ("x", _eval_exact(node, ctx))
    if kind == "var":
        if node[1] == "n":
            return ("x", _eval_exact(node, ctx))
        if node[1] != "z":
            raise ConfigError(f"unknown variable {node[1]!r} in family entry")
        if ctx.z is None:
            raise ConfigError("variable z outside a parametric context")
        return ctx.z
    if kind == "neg":
        v = _eval_val(node[1], ctx)
        return ("x", -v[1]) if v[0] == "x" else ("s", -v[1])
    if kind == "exp":
        arg = _as_scalar(_eval_val(node[1], ctx), ctx.field)
        return ("s", padic_exp(ctx.field.from_int(ctx.field.p) * arg))
    if kind == "pow":
        expo = _eval_exact(node[2], ctx)
        if expo.denominator != 1:
            raise ConfigError("pow exponent must be an integer")
        base = _eval_val(node[1], ctx)
        if base[0] == "x":
            if base[1] == 0 and expo < 0:
                raise ConfigError("zero base with negative exponent")
            return ("x", base[1] ** int(expo))
        return ("s", base[1] ** int(expo))
    if kind in ("add", "sub", "mul", "div"):
        a = _eval_val(node[1], ctx)
        b = _eval_val(node[2], ctx)
        if a[0] == "x" and b[0] == "x":
            if kind == "div" and b[1] == 0:
                raise ConfigError("exact division by zero in expression")
            return ("x", _frac_op(kind, a[1], b[1]))
        sa = _as_scalar(a, ctx.field)
        sb = _as_scalar(b, ctx.field)
        if kind == "add":
            return ("s", sa + sb)
        if kind == "sub":
            return ("s", sa - sb)
        if kind == "mul":
            return ("s", sa * sb)
        return ("s", sa / sb)
    raise ConfigError(f"cannot evaluate node {kind!r}")


def _frac_op(kind, a: Fraction, b: Fraction) -> Fraction:
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    return a / b


def _as_scalar(v, field: FieldSpec) -> PadicScalar:
    if v[0] == "s":
        return v[1]
    return field.from_fraction(v[1])


def eval_entry(node, field: FieldSpec, n: int | None, z, sequences) -> PadicScalar:
    """Evaluate one entry expression to a scalar.

    ``z`` may be None (non-parametric), an exact int/Fraction, or a
    scalar.
    """
    if z is None:
        zv = None
    elif isinstance(z, PadicScalar):
        zv = ("s", z)
    else:
        zv = ("x", Fraction(z))
    return _as_scalar(_eval_val(node, _Ctx(field, n, zv, sequences)), field)


# -- the family ----------------------------------------------------------------

_FIELD_KEYS = {"p", "e", "prec"}
_FAMILY_KEYS = {"name", "field", "d", "generators", "limit", "sequences",
                "parametric"}
_SEQ_KEYS = {"table", "formula", "limit"}


def _mentions(node, names: set[str]) -> bool:
    kind = node[0]
    if kind == "var":
        return node[1] in names
    if kind == "seq":
        return "seq" in names
    return any(_mentions(c, names) for c in node[1:]
               if isinstance(c, tuple))


class RepFamily:
    """A parametrized sequence of d-dimensional matrix representations
    plus its limit, with per-index evaluation caching.

    Immutable after construction; evaluation is pure, so instances are
    safe to share between tasks.
    """

    def __init__(self, field: FieldSpec, d: int, member_grids, limit_grids,
                 sequences=None, parametric: bool = False, name: str = ""):
        self.field = field
        self.d = d
        self.k = len(member_grids)
        self.member_grids = member_grids
        self.limit_grids = limit_grids
        self.sequences = dict(sequences or {})
        self.parametric = bool(parametric)
        self.name = name
        if self.k < 1:
            raise ConfigError("family needs at least one generator")
        if self.parametric and self.k != 1:
            raise ConfigError("parametric-abelian families have one generator")
        if len(limit_grids) != self.k:
            raise ConfigError("limit grid count differs from generator count")
        for grid in list(member_grids) + list(limit_grids):
            if len(grid) != d or any(len(r) != d for r in grid):
                raise ConfigError("generator grid shape must be d x d")
        for grid in limit_grids:
            for row in grid:
                for node in row:
                    if _mentions(node, {"n"}):
                        raise ConfigError("limit entries must not mention n")
        self._gen_cache: dict = {}
        self._inv_cache: dict = {}
        self._word_cache: dict = {}

    # -- construction ---------------------------------------------------

    @classmethod
    def from_json_dict(cls, doc: dict) -> RepFamily:
        unknown = set(doc) - _FAMILY_KEYS
        if unknown:
            raise ConfigError(f"unknown family keys: {sorted(unknown)}")
        for key in ("field", "d", "generators"):
            if key not in doc:
                raise ConfigError(f"family spec missing {key!r}")
        fdoc = doc["field"]
        if set(fdoc) - _FIELD_KEYS:
            raise ConfigError(f"unknown field keys: {sorted(set(fdoc) - _FIELD_KEYS)}")
        field = FieldSpec(fdoc["p"], fdoc.get("e", 1), fdoc.get("prec", 20))
        d = int(doc["d"])
        seqs = {}
        for name, sdoc in (doc.get("sequences") or {}).items():
            if set(sdoc) - _SEQ_KEYS:
                raise ConfigError(f"unknown sequence keys in {name!r}")
            seqs[name] = SequenceDef(
                tuple(int(x) for x in sdoc.get("table", ())),
                parse_expr(sdoc["formula"]) if "formula" in sdoc else None,
                parse_expr(sdoc["limit"]) if "limit" in sdoc else None,
            )
        member = [_parse_grid(g, d) for g in doc["generators"]]
        if "limit" in doc:
            limit = [_parse_grid(g, d) for g in doc["limit"]]
        else:
            limit = member
            for grid in member:
                for row in grid:
                    for node in row:
                        if _mentions(node, {"n", "seq"}):
                            raise ConfigError(
                                "generators depend on n; an explicit limit "
                                "is required")
        return cls(field, d, member, limit, seqs,
                   bool(doc.get("parametric", False)), doc.get("name", ""))

    # -- evaluation ------------------------------------------------------

    def _grid_matrix(self, grid, n, z=None) -> PadicMatrix:
        rows = []
        for row in grid:
            rows.append([eval_entry(node, self.field, n, z, self.sequences)
                         for node in row])
        return PadicMatrix(self.field, rows)

    def generator_matrices(self, idx) -> tuple[PadicMatrix, ...]:
        """Generator images at member index idx (LIMIT for the limit).
        Parametric families use the image of z = 1."""
        if idx in self._gen_cache:
            return self._gen_cache[idx]
        grids = self.limit_grids if idx is LIMIT else self.member_grids
        z = 1 if self.parametric else None
        mats = tuple(self._grid_matrix(g, idx, z) for g in grids)
        self._gen_cache[idx] = mats
        return mats

    def generator_inverses(self, idx) -> tuple[PadicMatrix, ...]:
        if idx in self._inv_cache:
            return self._inv_cache[idx]
        try:
            invs = tuple(m.inverse() for m in self.generator_matrices(idx))
        except PrecisionError as ex:
            raise ConfigError(f"non-invertible generator matrix: {ex}") from ex
        self._inv_cache[idx] = invs
        return invs

    def eval(self, idx, word: Word) -> PadicMatrix:
        """Image of a reduced word; the empty word maps to the identity."""
        key = (idx, word)
        cached = self._word_cache.get(key)
        if cached is not None:
            return cached
        if not word:
            out = PadicMatrix.identity(self.field, self.d)
        else:
            prefix = self.eval(idx, word[:-1])
            l = word[-1]
            gens = self.generator_matrices(idx) if l > 0 \
                else self.generator_inverses(idx)
            out = prefix @ gens[abs(l) - 1]
        self._word_cache[key] = out
        return out

    def param_matrix(self, idx, z) -> PadicMatrix:
        """Image of parameter value z (parametric families only)."""
        if not self.parametric:
            raise ConfigError("param_matrix requires a parametric family")
        return self._grid_matrix(
            (self.limit_grids if idx is LIMIT else self.member_grids)[0],
            idx, z)

    def ball(self, radius: int, cap: int = 200_000) -> WordBall:
        return word_ball(self.k, radius, cap)

    def __repr__(self):
        return (f"RepFamily(name={self.name!r}, d={self.d}, k={self.k}, "
                f"parametric={self.parametric})")


def _parse_grid(grid, d: int):
    if len(grid) != d or any(len(r) != d for r in grid):
        raise ConfigError("generator grid shape must be d x d")
    return tuple(tuple(parse_expr(s) for s in row) for row in grid)


def load_family(path) -> RepFamily:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        return RepFamily.from_json_dict(json.load(fh))


# -- Haar sampling -------------------------------------------------------------


def _hash_int(seed, i: int, tag: str) -> int:
    h = hashlib.sha256(f"{tag}|{seed}|{i}".encode()).digest()
    return int.from_bytes(h, "big")


def haar_parameters(fam: RepFamily, seed, count: int, level: int) -> list[int]:
    """Per-sample parameters, uniform modulo p**level, reproducible from
    the seed and splittable by sample index."""
    if not fam.parametric:
        raise ConfigError("exact Haar parameters need a parametric family")
    if count < 0:
        raise ConfigError("sample count must be nonnegative")
    if level < 1:
        raise ConfigError("sampling level must be >= 1")
    m = fam.field.p ** level
    return [_hash_int(seed, i, "haar-z") % m for i in range(count)]


def haar_sample(fam: RepFamily, seed, count: int, level: int,
                idx=LIMIT, walk_len: int | None = None):
    """Stream of sampled matrices.

    Exact mode (parametric families): the parameter is uniform modulo
    p**level.  Approximate mode (other families): a random word of
    explicitly requested length walk_len >= MIN_WALK_LEN is evaluated;
    this does not claim exact Haar distribution.
    """
    if count < 0:
        raise ConfigError("sample count must be nonnegative")
    if fam.parametric:
        for z in haar_parameters(fam, seed, count, level):
            yield fam.param_matrix(idx, z)
        return
    if walk_len is None:
        raise ConfigError(
            "non-parametric family: pass walk_len to request the "
            "random-walk approximation explicitly")
    if walk_len < MIN_WALK_LEN:
        raise ConfigError(
            f"walk length {walk_len} below configured minimum {MIN_WALK_LEN}")
    alphabet = []
    for g in range(1, fam.k + 1):
        alphabet.extend((g, -g))
    for i in range(count):
        letters = []
        for j in range(walk_len):
            r = _hash_int(seed, i * walk_len + j, "haar-w") % len(alphabet)
            l = alphabet[r]
            if letters and letters[-1] == -l:
                l = alphabet[(r + 1) % len(alphabet)]
            letters.append(l)
        yield fam.eval(idx, tuple(letters))
