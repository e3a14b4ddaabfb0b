from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from gf2 import BinMatrix, DimensionError, SparseBinMatrix, inverse_permutation, systematic_form

WITH_OFFSET = "with-offset"
ZERO_OFFSET = "zero-offset"

CLASS_DM = "dm"
CLASS_SHAPING = "shaping"
CLASS_PARITY = "parity"
CLASS_PUNCTURED = "punctured"  # shaping positions that are never transmitted

# Rejection attempts per base-matrix cell before a 4-cycle is accepted
CYCLE_AVOID_TRIES = 64


class AlistFormatError(ValueError):
    pass


class AlistTruncatedError(AlistFormatError):
    def __init__(self, section: str):
        super().__init__(f"alist ends before the {section} section")
        self.section = section


class AlistHeaderError(AlistFormatError):
    pass


class AlistIndexError(AlistFormatError):
    pass


class AlistDegreeError(AlistFormatError):
    pass


class BaseMatrixFormatError(ValueError):
    pass


class PunctureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LdpcCode:
    h: SparseBinMatrix
    g_sys: BinMatrix
    perm: np.ndarray  # systematic-order column j is codeword position perm[j]
    puncture_set: FrozenSet[int] = frozenset()

    @property
    def n_c(self) -> int:
        return self.h.cols

    @property
    def k_c(self) -> int:
        return self.g_sys.rows

    @property
    def n_parity(self) -> int:
        return self.n_c - self.k_c

    @property
    def rate(self) -> float:
        return self.k_c / self.n_c

    @cached_property
    def inv_perm(self) -> np.ndarray:
        return inverse_permutation(self.perm)

    @cached_property
    def g_parity(self) -> np.ndarray:
        """Dense ``G_p`` (k_c x (n_c - k_c)), one column per generator-graph check."""
        return self.g_sys.to_dense()[:, self.k_c:]

    @property
    def transmitted_length(self) -> int:
        return self.n_c - len(self.puncture_set)

    def systematic_index(self, position: int) -> int:
        """Systematic-order index of a codeword position."""
        return int(self.inv_perm[position])

    def punctured_systematic(self) -> List[int]:
        """Systematic indices (< k_c) that are punctured, increasing."""
        idx = sorted(self.systematic_index(p) for p in self.puncture_set)
        return [i for i in idx if i < self.k_c]

    def to_codeword_order(self, c_sys: np.ndarray) -> np.ndarray:
        out = np.empty(self.n_c, dtype=np.uint8)
        out[self.perm] = c_sys
        return out

    def to_systematic_order(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c, dtype=np.uint8)[self.perm]


@dataclass(frozen=True)
class ShapingSpec:
    positions: Tuple[int, ...]
    target_p0: float
    offset_mode: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 < self.target_p0 < 1.0:
            raise ValueError(f"target_p0 must lie in (0, 1), got {self.target_p0}")
        if len(set(self.positions)) != len(self.positions):
            raise ValueError("shaping positions must be distinct")
        if not self.offset_mode:
            object.__setattr__(self, "offset_mode", (WITH_OFFSET,) * len(self.positions))
        if len(self.offset_mode) != len(self.positions):
            raise ValueError("offset_mode needs one entry per shaping position")
        bad = set(self.offset_mode) - {WITH_OFFSET, ZERO_OFFSET}
        if bad:
            raise ValueError(f"unknown offset mode(s): {sorted(bad)}")

    @property
    def ell(self) -> int:
        return len(self.positions)

    def message_positions(self, k_c: int) -> np.ndarray:
        taken = set(self.positions)
        return np.array([i for i in range(k_c) if i not in taken], dtype=np.int64)

    @classmethod
    def build(
        cls,
        code: LdpcCode,
        ell: int,
        target_p0: float,
        positions: Optional[Sequence[int]] = None,
        offset: str = "auto",
    ) -> "ShapingSpec":
        """Place ``ell`` shaping bits.

        Default placement fills punctured systematic positions first (low to
        high), then the trailing non-punctured systematic positions. With
        ``offset="auto"`` punctured shaping bits drop the decimation offset.
        """
        if ell < 0 or ell > code.k_c:
            raise ValueError(f"ell must lie in [0, {code.k_c}], got {ell}")
        punct = code.punctured_systematic()
        if positions is None:
            chosen = punct[:ell]
            punct_set = set(punct)
            rest = [i for i in range(code.k_c - 1, -1, -1) if i not in punct_set]
            chosen = chosen + sorted(rest[: ell - len(chosen)])
        else:
            chosen = [int(p) for p in positions]
            if len(chosen) != ell:
                raise ValueError(f"{len(chosen)} positions given for ell={ell}")
        if offset == "auto":
            punct_set = set(punct)
            modes = tuple(ZERO_OFFSET if p in punct_set else WITH_OFFSET for p in chosen)
        elif offset in ("with", WITH_OFFSET):
            modes = (WITH_OFFSET,) * len(chosen)
        elif offset in ("zero", ZERO_OFFSET):
            modes = (ZERO_OFFSET,) * len(chosen)
        else:
            raise ValueError(f"unknown offset setting {offset!r}")
        return cls(positions=tuple(chosen), target_p0=target_p0, offset_mode=modes)


@dataclass(frozen=True, eq=False)
class BaseMatrix:
    rows: int
    cols: int
    entries: np.ndarray
    lift_size: int

    def __post_init__(self) -> None:
        if self.lift_size < 1:
            raise BaseMatrixFormatError("lift size must be positive")
        if self.entries.shape != (self.rows, self.cols):
            raise BaseMatrixFormatError(f"entries have shape {self.entries.shape}, expected {(self.rows, self.cols)}")
        if np.any(self.entries < -1) or np.any(self.entries >= self.lift_size):
            raise BaseMatrixFormatError(f"shift values must lie in [-1, {self.lift_size})")


def _int_tokens(line: str, what: str, err=AlistHeaderError) -> List[int]:
    try:
        return [int(t) for t in line.split()]
    except ValueError:
        raise err(f"non-integer token in {what}: {line.strip()!r}") from None


def load_alist(text: str) -> SparseBinMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    pos = 0

    def take(section: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise AlistTruncatedError(section)
        pos += 1
        return lines[pos - 1]

    dims = _int_tokens(take("dimensions"), "dimensions")
    if len(dims) != 2 or dims[0] < 1 or dims[1] < 1:
        raise AlistHeaderError(f"dimension line must hold two positive integers, got {dims}")
    n, m = dims
    maxd = _int_tokens(take("maximum degrees"), "maximum degrees")
    if len(maxd) != 2:
        raise AlistHeaderError(f"maximum-degree line must hold two integers, got {maxd}")
    col_deg = _int_tokens(take("column degrees"), "column degrees")
    row_deg = _int_tokens(take("row degrees"), "row degrees")
    if len(col_deg) != n or len(row_deg) != m:
        raise AlistHeaderError(f"expected {n} column and {m} row degrees, got {len(col_deg)} and {len(row_deg)}")
    if max(col_deg) > maxd[0] or max(row_deg) > maxd[1]:
        raise AlistDegreeError("a degree exceeds the declared maximum")
    if sum(col_deg) != sum(row_deg):
        raise AlistDegreeError("column and row degrees sum to different totals")

    def adjacency(count: int, degrees: List[int], bound: int, section: str) -> List[List[int]]:
        out = []
        for i in range(count):
            idx = [t for t in _int_tokens(take(section), section, AlistIndexError) if t != 0]
            if any(t < 1 or t > bound for t in idx):
                raise AlistIndexError(f"{section} line {i + 1} has an index outside [1, {bound}]")
            if len(idx) != degrees[i] or len(set(idx)) != len(idx):
                raise AlistDegreeError(f"{section} line {i + 1} lists {len(idx)} entries, degree says {degrees[i]}")
            out.append(sorted(t - 1 for t in idx))
        return out

    cols = adjacency(n, col_deg, m, "column adjacency")
    rows = adjacency(m, row_deg, n, "row adjacency")
    mat = SparseBinMatrix.from_row_adj(m, n, rows)
    for c, idx in enumerate(cols):
        if list(mat.col_adj[c]) != idx:
            raise AlistDegreeError(f"column {c + 1} adjacency disagrees with the row lists")
    return mat


def to_alist(m: SparseBinMatrix) -> str:
    cw, rw = m.col_weights(), m.row_weights()
    out = [
        f"{m.cols} {m.rows}",
        f"{int(cw.max(initial=0))} {int(rw.max(initial=0))}",
        " ".join(str(int(w)) for w in cw),
        " ".join(str(int(w)) for w in rw),
    ]
    out += [" ".join(str(int(i) + 1) for i in idx) for idx in m.col_adj]
    out += [" ".join(str(int(i) + 1) for i in idx) for idx in m.row_adj]
    return "\n".join(out) + "\n"


def load_base_matrix(text: str) -> BaseMatrix:
    tokens = text.split()
    try:
        vals = [int(t) for t in tokens]
    except ValueError:
        raise BaseMatrixFormatError("base matrix files hold integers only") from None
    if len(vals) < 3:
        raise BaseMatrixFormatError("missing 'rows cols Z' header")
    rows, cols, z = vals[:3]
    if rows < 1 or cols < 1:
        raise BaseMatrixFormatError(f"bad base dimensions {rows}x{cols}")
    body = vals[3:]
    if len(body) != rows * cols:
        raise BaseMatrixFormatError(f"expected {rows * cols} shift values, found {len(body)}")
    return BaseMatrix(rows=rows, cols=cols, entries=np.array(body, dtype=np.int64).reshape(rows, cols), lift_size=z)


def dump_base_matrix(b: BaseMatrix) -> str:
    lines = [f"{b.rows} {b.cols} {b.lift_size}"]
    lines += [" ".join(str(int(e)) for e in row) for row in b.entries]
    return "\n".join(lines) + "\n"


def lift_base_matrix(b: BaseMatrix) -> SparseBinMatrix:
    z = b.lift_size
    row_adj: List[List[int]] = []
    for br in range(b.rows):
        for i in range(z):
            row_adj.append([bc * z + (i + int(e)) % z for bc, e in enumerate(b.entries[br]) if e >= 0])
    return SparseBinMatrix.from_row_adj(b.rows * z, b.cols * z, row_adj)


def _has_four_cycle(entries: np.ndarray, r: int, c: int, z: int) -> bool:
    s = entries[r, c]
    for r2 in range(entries.shape[0]):
        if r2 == r or entries[r2, c] < 0:
            continue
        for c2 in range(entries.shape[1]):
            if c2 == c or entries[r, c2] < 0 or entries[r2, c2] < 0:
                continue
            if (s - entries[r, c2] + entries[r2, c2] - entries[r2, c]) % z == 0:
                return True
    return False


def random_base_matrix(
    rows: int,
    cols: int,
    lift_size: int,
    rng: np.random.Generator,
    column_weight: Optional[int] = None,
) -> BaseMatrix:
    """Random QC base matrix; shifts are redrawn to avoid length-4 cycles when possible."""
    w = rows if column_weight is None else column_weight
    if not 1 <= w <= rows:
        raise ValueError(f"column weight must lie in [1, {rows}]")
    entries = -np.ones((rows, cols), dtype=np.int64)
    for c in range(cols):
        for r in sorted(rng.choice(rows, size=w, replace=False)):
            for _ in range(CYCLE_AVOID_TRIES):
                entries[r, c] = int(rng.integers(0, lift_size))
                if not _has_four_cycle(entries, r, c, lift_size):
                    break
    return BaseMatrix(rows=rows, cols=cols, entries=entries, lift_size=lift_size)


def build_code(h: SparseBinMatrix, puncture_set: Iterable[int] = ()) -> LdpcCode:
    punct = frozenset(int(p) for p in puncture_set)
    if any(p < 0 or p >= h.cols for p in punct):
        raise PunctureError(f"puncture positions must lie in [0, {h.cols})")
    perm, g_sys, _ = systematic_form(h)
    return LdpcCode(h=h, g_sys=g_sys, perm=perm, puncture_set=punct)


def load_code(path: Path, puncture_set: Iterable[int] = (), fmt: Optional[str] = None) -> LdpcCode:
    text = Path(path).read_text()
    if fmt in (None, "auto"):
        first = next((ln for ln in text.splitlines() if ln.strip()), "")
        fmt = "base" if len(first.split()) == 3 else "alist"
    if fmt == "alist":
        h = load_alist(text)
    elif fmt == "base":
        h = lift_base_matrix(load_base_matrix(text))
    else:
        raise ValueError(f"unknown code format {fmt!r}")
    return build_code(h, puncture_set)


def encode_systematic(code: LdpcCode, u: Sequence[int]) -> np.ndarray:
    bits = np.asarray(u, dtype=np.uint8).reshape(-1)
    if bits.size != code.k_c:
        raise DimensionError(f"message has {bits.size} bits, code dimension is {code.k_c}")
    return code.to_codeword_order(code.g_sys.vec_mul(bits))


def transmission_rate(n_c: int, k_c: int, ell: int, dm_rate: float) -> float:
    return dm_rate * (k_c - ell) / n_c


def overall_rate(code: LdpcCode, spec: ShapingSpec, dm_rate: float) -> float:
    return transmission_rate(code.n_c, code.k_c, spec.ell, dm_rate)


def position_classes(code: LdpcCode, spec: Optional[ShapingSpec] = None) -> np.ndarray:
    """Class label of every codeword position, original column order.

    Punctured shaping positions are labelled ``punctured``; every other
    punctured position keeps the class of the bit it carries.
    """
    labels = np.full(code.n_c, CLASS_PARITY, dtype=object)
    labels[: code.k_c] = CLASS_DM
    if spec is not None:
        labels[list(spec.positions)] = CLASS_SHAPING
    out = np.empty(code.n_c, dtype=object)
    out[code.perm] = labels
    for p in code.puncture_set:
        if out[p] == CLASS_SHAPING:
            out[p] = CLASS_PUNCTURED
    return out


def parse_index_list(text: str) -> Tuple[int, ...]:
    """Parse ``"0,1,5-7"`` into ``(0, 1, 5, 6, 7)``."""
    out: List[int] = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def format_index_list(indices: Iterable[int]) -> str:
    """Inverse of ``parse_index_list``; runs of two or more collapse to ``a-b``."""
    vals = sorted(set(int(i) for i in indices))
    parts: List[str] = []
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] != vals[i - 1] + 1:
            lo, hi = vals[start], vals[i - 1]
            parts.append(str(lo) if lo == hi else f"{lo}-{hi}")
            start = i
    return ",".join(parts)
