"""Exact-rational pebble configurations, move application and sequence checking.

Every node carries a black value ``b`` and a white value ``w`` with
``0 <= b, w`` and ``b + w <= 1``.  Three kinds of move exist:

* ``DecreaseBlack(node, x)``: lower ``b(node)`` by ``x``;
* ``IncreaseWhite(node, x)``: raise ``w(node)`` by ``x``;
* ``Combined(node, white_dec, black_inc, child_dec)``: allowed only when every
  child of ``node`` has pebble value exactly 1; lowers ``w(node)``, raises
  ``b(node)`` and lowers the black values of the listed children, all at once.
  Black sliding is a ``Combined`` move.  White sliding does not exist.

All arithmetic uses :class:`fractions.Fraction`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .dag import Dag, tree_dag
from .tree import TreeShape

ZERO = Fraction(0)
ONE = Fraction(1)

Amount = Union[int, Fraction]


class IllegalMove(ValueError):
    def __init__(self, move, constraint: str, detail: str = ""):
        msg = f"{move}: {constraint}" + (f" ({detail})" if detail else "")
        super().__init__(msg)
        self.move = move
        self.constraint = constraint


class InvalidSequence(ValueError):
    def __init__(self, index: int | None, reason: str):
        where = "sequence" if index is None else f"move {index}"
        super().__init__(f"{where}: {reason}")
        self.index = index
        self.reason = reason


# --- games -----------------------------------------------------------------

@dataclass(frozen=True)
class Game:
    """Which pebbling game a sequence belongs to.

    ``kind`` is one of ``black``, ``bw``, ``fractional``, ``fracgrid`` (fractional
    moves with every amount a multiple of ``1/c``) or ``noslide`` (every move
    changes one value by exactly ``1/c`` and never touches the children).
    """

    kind: str
    c: int = 1

    KINDS = ("black", "bw", "fractional", "fracgrid", "noslide")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown game {self.kind!r}; expected one of {', '.join(self.KINDS)}")
        if self.c < 1:
            raise ValueError("c must be >= 1")
        if self.kind in ("black", "bw", "fractional") and self.c != 1:
            object.__setattr__(self, "c", 1)

    @property
    def integral(self) -> bool:
        return self.kind in ("black", "bw")

    @property
    def step(self) -> Fraction:
        """Granularity of pebble values in this game."""
        return Fraction(1, self.c)

    def __str__(self) -> str:
        return f"{self.kind}(c={self.c})" if self.kind in ("fracgrid", "noslide") else self.kind

    def to_json(self) -> dict:
        out = {"game": self.kind}
        if self.kind in ("fracgrid", "noslide"):
            out["c"] = self.c
        return out

    @classmethod
    def parse(cls, name: str, c: int = 1) -> "Game":
        aliases = {"blackwhite": "bw", "black-white": "bw", "frac": "fractional",
                   "fractionalgrid": "fracgrid", "grid": "fracgrid", "discretized": "noslide"}
        name = aliases.get(name.lower(), name.lower())
        return cls(name, c)


BLACK = Game("black")
BLACK_WHITE = Game("bw")
FRACTIONAL = Game("fractional")


def fractional_grid(c: int) -> Game:
    return Game("fracgrid", c)


def discretized_noslide(c: int) -> Game:
    return Game("noslide", c)


# --- values and configurations -----------------------------------------------

@dataclass(frozen=True)
class PebbleValue:
    black: Fraction = ZERO
    white: Fraction = ZERO

    @property
    def total(self) -> Fraction:
        return self.black + self.white

    def __bool__(self) -> bool:
        return bool(self.black or self.white)


EMPTY_VALUE = PebbleValue()


@dataclass(frozen=True)
class PebbleConfig:
    dag: Dag = field(repr=False, compare=False)
    # Sorted (node, value) pairs for nodes with nonzero value.
    items: tuple[tuple[int, PebbleValue], ...] = ()

    @classmethod
    def empty(cls, dag: Dag) -> "PebbleConfig":
        return cls(dag, ())

    @classmethod
    def from_mapping(cls, dag: Dag, values: Mapping[int, PebbleValue | tuple]) -> "PebbleConfig":
        known = set(dag.ids)
        items = []
        for u, v in values.items():
            if u not in known:
                raise ValueError(f"node {u} is not in the graph")
            if not isinstance(v, PebbleValue):
                v = PebbleValue(Fraction(v[0]), Fraction(v[1]))
            if v:
                items.append((u, v))
        return cls(dag, tuple(sorted(items)))

    @property
    def values(self) -> dict[int, PebbleValue]:
        return dict(self.items)

    def get(self, u: int) -> PebbleValue:
        for node, v in self.items:
            if node == u:
                return v
        return EMPTY_VALUE

    @property
    def total(self) -> Fraction:
        return sum((v.total for _, v in self.items), ZERO)

    @property
    def pebbled(self) -> frozenset[int]:
        return frozenset(u for u, _ in self.items)

    def is_empty(self) -> bool:
        return not self.items

    def to_json(self) -> dict:
        return {str(u): [_frac_json(v.black), _frac_json(v.white)] for u, v in self.items}


# --- moves ----------------------------------------------------------------------

@dataclass(frozen=True)
class DecreaseBlack:
    node: int
    amount: Fraction

    def __post_init__(self):
        object.__setattr__(self, "amount", Fraction(self.amount))


@dataclass(frozen=True)
class IncreaseWhite:
    node: int
    amount: Fraction

    def __post_init__(self):
        object.__setattr__(self, "amount", Fraction(self.amount))


@dataclass(frozen=True)
class Combined:
    node: int
    white_dec: Fraction = ZERO
    black_inc: Fraction = ZERO
    child_dec: tuple[tuple[int, Fraction], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "white_dec", Fraction(self.white_dec))
        object.__setattr__(self, "black_inc", Fraction(self.black_inc))
        cd = self.child_dec
        if isinstance(cd, Mapping):
            cd = cd.items()
        object.__setattr__(self, "child_dec", tuple(sorted((int(c), Fraction(a)) for c, a in cd)))

    @property
    def child_map(self) -> dict[int, Fraction]:
        return dict(self.child_dec)


PebbleMove = Union[DecreaseBlack, IncreaseWhite, Combined]


def place_black(node: int, slide_from: Iterable[int] = ()) -> Combined:
    """Whole black placement, optionally sliding from (removing) some children."""
    return Combined(node, ZERO, ONE, {c: ONE for c in slide_from})


def remove_black(node: int) -> DecreaseBlack:
    return DecreaseBlack(node, ONE)


def place_white(node: int) -> IncreaseWhite:
    return IncreaseWhite(node, ONE)


def remove_white(node: int) -> Combined:
    return Combined(node, ONE, ZERO)


def move_amounts(move: PebbleMove) -> list[Fraction]:
    if isinstance(move, Combined):
        return [move.white_dec, move.black_inc] + [a for _, a in move.child_dec]
    return [move.amount]


def apply_move(config: PebbleConfig, move: PebbleMove) -> PebbleConfig:
    """Return the configuration after ``move``; ``config`` is left unchanged."""
    dag = config.dag
    if move.node not in dag.info:
        raise IllegalMove(move, "unknown node", str(move.node))
    for a in move_amounts(move):
        if a < 0:
            raise IllegalMove(move, "negative amount", str(a))
    vals = config.values
    node = move.node
    cur = vals.get(node, EMPTY_VALUE)
    if isinstance(move, DecreaseBlack):
        new = PebbleValue(cur.black - move.amount, cur.white)
        updates = {node: new}
    elif isinstance(move, IncreaseWhite):
        new = PebbleValue(cur.black, cur.white + move.amount)
        updates = {node: new}
    else:
        kids = dag.children(node)
        for c in kids:
            if vals.get(c, EMPTY_VALUE).total != ONE:
                raise IllegalMove(move, "child pebble value must be 1",
                                  f"child {c} has {vals.get(c, EMPTY_VALUE).total}")
        updates = {node: PebbleValue(cur.black + move.black_inc, cur.white - move.white_dec)}
        for c, a in move.child_dec:
            if c not in kids:
                raise IllegalMove(move, "not a child", f"{c} is not a child of {node}")
            cv = vals.get(c, EMPTY_VALUE)
            updates[c] = PebbleValue(cv.black - a, cv.white)
    for u, v in updates.items():
        if v.black < 0 or v.white < 0:
            raise IllegalMove(move, "negativity", f"node {u} would have ({v.black}, {v.white})")
        if v.total > 1:
            raise IllegalMove(move, "sum>1", f"node {u} would have total {v.total}")
        vals[u] = v
    return PebbleConfig.from_mapping(dag, vals)


# --- sequences ------------------------------------------------------------------

@dataclass(frozen=True)
class PebbleSequence:
    moves: tuple[PebbleMove, ...]
    game: Game = FRACTIONAL

    def __len__(self) -> int:
        return len(self.moves)

    def to_json(self) -> dict:
        out = self.game.to_json()
        out["moves"] = [_move_json(m) for m in self.moves]
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "PebbleSequence":
        game = Game.parse(obj.get("game", "fractional"), int(obj.get("c", 1)))
        return cls(tuple(_move_from_json(m) for m in obj["moves"]), game)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _check_game_move(game: Game, move: PebbleMove) -> str | None:
    if game.kind in ("fracgrid", "noslide"):
        for a in move_amounts(move):
            if (a * game.c).denominator != 1:
                return f"amount {a} is not a multiple of 1/{game.c}"
    if game.kind == "noslide":
        unit = Fraction(1, game.c)
        if isinstance(move, Combined):
            if move.child_dec:
                return "sliding is not allowed in the no-slide game"
            if sorted((move.white_dec, move.black_inc)) != [ZERO, unit]:
                return f"a no-slide move changes exactly one value by 1/{game.c}"
        elif move.amount != unit:
            return f"a no-slide move changes a value by exactly 1/{game.c}"
    return None


def _check_game_config(game: Game, config: PebbleConfig) -> str | None:
    for u, v in config.items:
        if game.kind == "black" and v.white != 0:
            return f"white pebble on node {u} in the black game"
        if game.integral and (v.black not in (ZERO, ONE) or v.white not in (ZERO, ONE)):
            return f"node {u} has non-integral value ({v.black}, {v.white})"
    return None


def trace(seq: PebbleSequence, dag: Dag) -> list[PebbleConfig]:
    """All configurations, starting with the empty one.  Raises on an illegal move."""
    configs = [PebbleConfig.empty(dag)]
    for n, move in enumerate(seq.moves):
        problem = _check_game_move(seq.game, move)
        if problem:
            raise InvalidSequence(n, problem)
        try:
            nxt = apply_move(configs[-1], move)
        except IllegalMove as exc:
            raise InvalidSequence(n, f"illegal move: {exc}") from exc
        problem = _check_game_config(seq.game, nxt)
        if problem:
            raise InvalidSequence(n, problem)
        configs.append(nxt)
    return configs


def verify_sequence(seq: PebbleSequence, dag: Dag | TreeShape) -> Fraction:
    """Cost of a valid complete pebbling; raises :class:`InvalidSequence` otherwise."""
    if isinstance(dag, TreeShape):
        dag = tree_dag(dag)
    configs = trace(seq, dag)
    root = dag.root
    if not any(cfg.get(root).black == ONE for cfg in configs):
        raise InvalidSequence(None, "never roots: the root never has black value 1")
    if not configs[-1].is_empty():
        raise InvalidSequence(len(seq.moves) - 1 if seq.moves else None,
                              "not returning to empty: pebbles remain on "
                              f"{sorted(configs[-1].pebbled)}")
    return max(cfg.total for cfg in configs)


# --- built-in strategies -------------------------------------------------------------

def black_strategy(shape: TreeShape) -> PebbleSequence:
    """Standard recursive black pebbling of ``T_d^h``: cost ``(d-1)(h-1)+1``
    (``h`` for binary trees).  Children are pebbled left to right, each held
    while the next is pebbled, then all slide onto the parent."""
    moves: list[PebbleMove] = []

    def pebble(i: int) -> None:
        kids = shape.children(i)
        for c in kids:
            pebble(c)
        moves.append(place_black(i, kids))

    pebble(1)
    moves.append(remove_black(1))
    return PebbleSequence(tuple(moves), BLACK)


HALF = Fraction(1, 2)


def half_pebble_strategy() -> PebbleSequence:
    """The 2.5-pebble fractional pebbling of ``T^3``.

    Configurations after each move (the empty start is not counted):
    4; 4,5; 2:b½; 2:b½ 6; 2:b½ 6 7; 2:b½ 3; 2:(½,½) 3; 1 2:w½; 2:w½;
    2:w½ 4; 2:w½ 4 5; 4 5; 5; empty.
    """
    moves = (
        place_black(4),
        place_black(5),
        Combined(2, ZERO, HALF, {4: ONE, 5: ONE}),
        place_black(6),
        place_black(7),
        place_black(3, (6, 7)),
        IncreaseWhite(2, HALF),
        Combined(1, ZERO, ONE, {2: HALF, 3: ONE}),
        remove_black(1),
        place_black(4),
        place_black(5),
        Combined(2, HALF, ZERO),
        remove_black(4),
        remove_black(5),
    )
    return PebbleSequence(moves, FRACTIONAL)


# --- JSON helpers ----------------------------------------------------------------------

def _frac_json(x: Fraction) -> list[int]:
    x = Fraction(x)
    return [x.numerator, x.denominator]


def _frac(obj) -> Fraction:
    if isinstance(obj, (list, tuple)):
        return Fraction(int(obj[0]), int(obj[1]))
    return Fraction(obj)


def _move_json(m: PebbleMove) -> dict:
    if isinstance(m, DecreaseBlack):
        return {"kind": "dec_black", "node": m.node, "amount": _frac_json(m.amount)}
    if isinstance(m, IncreaseWhite):
        return {"kind": "inc_white", "node": m.node, "amount": _frac_json(m.amount)}
    return {"kind": "combined", "node": m.node, "white_dec": _frac_json(m.white_dec),
            "black_inc": _frac_json(m.black_inc),
            "child_dec": {str(c): _frac_json(a) for c, a in m.child_dec}}


def _move_from_json(obj: Mapping) -> PebbleMove:
    kind = obj["kind"]
    node = int(obj["node"])
    if kind == "dec_black":
        return DecreaseBlack(node, _frac(obj["amount"]))
    if kind == "inc_white":
        return IncreaseWhite(node, _frac(obj["amount"]))
    if kind == "combined":
        return Combined(node, _frac(obj.get("white_dec", 0)), _frac(obj.get("black_inc", 0)),
                        {int(c): _frac(a) for c, a in obj.get("child_dec", {}).items()})
    raise ValueError(f"unknown move kind {kind!r}")


def load_sequence(path) -> PebbleSequence:
    with open(path) as fh:
        return PebbleSequence.from_json(json.load(fh))


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"
