"""Alphabets, sequences and symbol-level probability vectors.

Sequences (sources and traces) are 1-D ``int64`` numpy arrays of alphabet
indices.  A symbol distribution is a 1-D float array of length ``|alphabet|``;
a belief table is an ``(N, |alphabet|)`` array with one distribution per row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ContractError, ZeroMassError

MASS_FLOOR = 1e-30
NORM_TOL = 1e-12


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...] = ("A", "C", "G", "T")

    def __post_init__(self):
        syms = tuple(self.symbols)
        object.__setattr__(self, "symbols", syms)
        if len(syms) < 2:
            raise ContractError("alphabet needs at least two symbols")
        if len(set(syms)) != len(syms):
            raise ContractError(f"alphabet symbols must be distinct: {syms}")
        if any(len(s) != 1 for s in syms):
            raise ContractError("alphabet symbols must be single characters")
        object.__setattr__(self, "_lookup", {s: i for i, s in enumerate(syms)})

    @classmethod
    def of_size(cls, size: int) -> "Alphabet":
        """First ``size`` symbols of ``ACGT`` (falls back to letters beyond 4)."""
        base = "ACGT" if size <= 4 else "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
        if size > len(base):
            raise ContractError(f"unsupported alphabet size {size}")
        return cls(tuple(base[:size]))

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self._lookup[symbol.upper()]
        except KeyError:
            raise ContractError(f"symbol {symbol!r} not in alphabet {''.join(self.symbols)}") from None

    def encode(self, text: str) -> np.ndarray:
        return np.array([self.index(c) for c in text.strip()], dtype=np.int64)

    def decode(self, seq: Iterable[int]) -> str:
        return "".join(self.symbols[int(i)] for i in seq)

    def is_valid(self, text: str) -> bool:
        return all(c.upper() in self._lookup for c in text)


DNA = Alphabet()


def as_sequence(seq, alphabet: Alphabet, *, allow_empty: bool = True) -> np.ndarray:
    """Coerce a string or integer iterable into a validated index array."""
    if isinstance(seq, str):
        arr = alphabet.encode(seq)
    else:
        arr = np.asarray(seq, dtype=np.int64).reshape(-1)
    if not allow_empty and arr.size == 0:
        raise ContractError("sequence must be non-empty")
    if arr.size and (arr.min() < 0 or arr.max() >= len(alphabet)):
        raise ContractError("sequence entries must be alphabet indices")
    return arr


@dataclass
class Cluster:
    """K noisy traces of one (possibly unknown) source sequence."""

    traces: list[np.ndarray]
    reference: Optional[np.ndarray] = None
    alphabet: Alphabet = field(default=DNA)

    def __post_init__(self):
        if len(self.traces) < 1:
            raise ContractError("a cluster needs at least one trace")
        self.traces = [as_sequence(t, self.alphabet) for t in self.traces]
        if self.reference is not None:
            self.reference = as_sequence(self.reference, self.alphabet, allow_empty=False)

    @property
    def K(self) -> int:
        return len(self.traces)

    def permuted(self, order: Sequence[int]) -> "Cluster":
        return Cluster([self.traces[i] for i in order], self.reference, self.alphabet)


def normalize(d) -> np.ndarray:
    """Scale a non-negative vector (or each row of a table) to unit sum."""
    d = np.asarray(d, dtype=np.float64)
    if np.isnan(d).any() or (d < 0).any():
        raise ContractError("distribution entries must be non-negative numbers")
    z = d.sum(axis=-1, keepdims=True)
    if (z <= 0).any():
        raise ZeroMassError("cannot normalize an all-zero distribution")
    return d / z


def is_normalized(d, tol: float = 1e-9) -> bool:
    d = np.asarray(d, dtype=np.float64)
    return bool((d >= 0).all() and np.all(np.abs(d.sum(axis=-1) - 1.0) <= tol))


def tv_distance(a, b) -> float:
    """Total-variation distance between two normalized distributions."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError(f"shape mismatch {a.shape} vs {b.shape}")
    if not (is_normalized(a) and is_normalized(b)):
        raise ContractError("tv_distance expects normalized inputs")
    return float(0.5 * np.abs(a - b).sum())


def row_tv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-row TV distance of two belief tables (no contract checks)."""
    return 0.5 * np.abs(a - b).sum(axis=-1)


def argmax_symbol(d) -> int:
    # np.argmax returns the first maximal index, i.e. ties go to the lowest symbol
    return int(np.argmax(np.asarray(d)))


def map_sequence(table: np.ndarray) -> np.ndarray:
    return np.argmax(table, axis=-1).astype(np.int64)


def floor_and_normalize(d: np.ndarray, floor: float = MASS_FLOOR) -> np.ndarray:
    """Apply the mass floor row-wise then renormalize.

    Rows whose mass is entirely at (or below) the floor carry no usable
    information and come back uniform.
    """
    d = np.maximum(np.asarray(d, dtype=np.float64), floor)
    return d / d.sum(axis=-1, keepdims=True)


def uniform_table(n: int, size: int) -> np.ndarray:
    return np.full((n, size), 1.0 / size)
