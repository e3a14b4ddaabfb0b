"""Shaping encoder: sequential decimation on the generator-matrix Tanner graph.

Each parity column of ``G_p`` is a check node (CN) joined to the systematic
variable nodes (VNs) in its support and to one degree-1 parity VN carrying the
prior ``L = log(p0 / (1 - p0))``. Message VNs are fixed by the input, shaping
VNs start undetermined, and every iteration fixes the shaping VN with the most
reliable a-posteriori value. In exact arithmetic every message is either a
fixed bit or an integer multiple of ``L``, so the encoder tracks integers only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from codes import WITH_OFFSET, LdpcCode, ShapingSpec, encode_systematic
from gf2 import DimensionError
from rates import h2

VN_MESSAGE = "message"
VN_SHAPING = "shaping"

LLPS_MAX_ELL = 20
LLPS_CHUNK = 1 << 12
# Stand-in for an infinite LLR in the floating-point reference
FLOAT_FIXED_LLR = 1e6
FLOAT_TIE_RTOL = 1e-9


class ShapingPositionError(ValueError):
    pass


class ShapingBudgetError(ValueError):
    pass


class LlpsLimitError(ValueError):
    pass


@dataclass(frozen=True)
class ShapeMsg:
    """A message in the exact alphabet: a fixed bit, or ``k * L``."""

    fixed: bool
    value: int

    @classmethod
    def fixed_bit(cls, bit: int) -> "ShapeMsg":
        return cls(fixed=True, value=int(bit) & 1)

    @classmethod
    def mult(cls, k: int) -> "ShapeMsg":
        return cls(fixed=False, value=int(k))

    def __repr__(self) -> str:
        return f"Fixed({self.value})" if self.fixed else f"Mult({self.value})"


def cn_update_exact(incoming: Sequence[ShapeMsg], parity_prior: ShapeMsg = ShapeMsg.mult(1)) -> List[ShapeMsg]:
    """Check-node rule on the exact alphabet.

    ``incoming`` holds the systematic VN -> CN messages (fixed bits, or
    ``Mult(0)`` from an undetermined shaping VN). Returns one message per
    systematic edge followed by the message toward the parity VN.
    """
    if parity_prior.fixed:
        raise ValueError("parity prior must be a multiple of L")
    for msg in incoming:
        if not msg.fixed and msg.value != 0:
            raise ValueError(f"systematic VNs send fixed bits or Mult(0), got {msg!r}")
    open_count = sum(1 for msg in incoming if not msg.fixed)
    ones = sum(msg.value for msg in incoming if msg.fixed)
    out: List[ShapeMsg] = []
    for msg in incoming:
        others_open = open_count - (0 if msg.fixed else 1)
        if others_open:
            out.append(ShapeMsg.mult(0))
            continue
        odd = (ones - (msg.value if msg.fixed else 0)) & 1
        out.append(ShapeMsg.mult(-parity_prior.value if odd else parity_prior.value))
    out.append(ShapeMsg.fixed_bit(ones & 1) if open_count == 0 else ShapeMsg.mult(0))
    return out


@dataclass(frozen=True, eq=False)
class GeneratorGraph:
    code: LdpcCode
    n_parity: int
    cn_adj: Tuple[np.ndarray, ...]  # systematic VN indices per CN
    vn_adj: Tuple[np.ndarray, ...]  # CN indices per systematic VN
    vn_class: np.ndarray
    shaping_positions: Tuple[int, ...]  # sorted
    offsets: Tuple[int, ...]  # per sorted shaping position, in units of L
    cn_shaping: Tuple[np.ndarray, ...]  # local shaping indices per CN
    message_positions: np.ndarray
    message_rows: np.ndarray  # G_p restricted to message VNs

    @property
    def ell(self) -> int:
        return len(self.shaping_positions)

    def cn_degree(self, j: int) -> int:
        """Systematic neighbours plus the parity VN."""
        return int(self.cn_adj[j].size) + 1


def build_shaping_graph(code: LdpcCode, spec: ShapingSpec) -> GeneratorGraph:
    bad = [p for p in spec.positions if not 0 <= p < code.k_c]
    if bad:
        raise ShapingPositionError(f"shaping positions {bad} outside the systematic part [0, {code.k_c})")
    gp = code.g_parity
    cn_adj = tuple(np.flatnonzero(gp[:, j]) for j in range(code.n_parity))
    vn_adj = tuple(np.flatnonzero(gp[i]) for i in range(code.k_c))

    order = sorted(range(spec.ell), key=lambda i: spec.positions[i])
    positions = tuple(int(spec.positions[i]) for i in order)
    offsets = tuple(1 if spec.offset_mode[i] == WITH_OFFSET else 0 for i in order)

    vn_class = np.full(code.k_c, VN_MESSAGE, dtype=object)
    vn_class[list(positions)] = VN_SHAPING
    local = np.full(code.k_c, -1, dtype=np.int64)
    local[list(positions)] = np.arange(len(positions))
    cn_shaping = tuple(local[adj][local[adj] >= 0] for adj in cn_adj)
    msg_pos = spec.message_positions(code.k_c)
    return GeneratorGraph(
        code=code,
        n_parity=code.n_parity,
        cn_adj=cn_adj,
        vn_adj=vn_adj,
        vn_class=vn_class,
        shaping_positions=positions,
        offsets=offsets,
        cn_shaping=cn_shaping,
        message_positions=msg_pos,
        message_rows=gp[msg_pos].astype(np.int64),
    )


@dataclass(frozen=True)
class DecisionStep:
    position: int
    tilde: float  # a-posteriori value plus offset, in units of L
    bit: int
    guess: bool


@dataclass(frozen=True, eq=False)
class ShapeResult:
    codeword: np.ndarray  # original column order
    u: np.ndarray  # systematic message including shaping bits
    shaping_bits: np.ndarray  # in ShapingSpec.positions order
    decision_trace: Tuple[DecisionStep, ...]


# select(positions, tilde) -> index into the candidate arrays
Selector = Callable[[np.ndarray, np.ndarray], int]


def select_most_reliable(positions: np.ndarray, tilde: np.ndarray) -> int:
    # candidates arrive sorted by position, so argmax keeps the lowest index on ties
    return int(np.argmax(np.abs(tilde)))


def _prior_llr(p0: float) -> float:
    return math.log(p0 / (1.0 - p0))


def _decide(tilde: float, llr_sign: float) -> int:
    return 0 if tilde * llr_sign >= 0 else 1


def _initial_parity(graph: GeneratorGraph, v: np.ndarray) -> np.ndarray:
    if graph.message_positions.size == 0:
        return np.zeros(graph.n_parity, dtype=np.int64)
    return (v.astype(np.int64) @ graph.message_rows) & 1


def _decimate_exact(graph: GeneratorGraph, v: np.ndarray, llr_sign: float, select: Selector):
    ell = graph.ell
    undet = np.array([s.size for s in graph.cn_shaping], dtype=np.int64)
    par = _initial_parity(graph, v)
    app = np.zeros(ell, dtype=np.int64)
    live = np.zeros(ell, dtype=np.int64)
    for j in np.flatnonzero(undet == 1):
        t = graph.cn_shaping[j][0]
        app[t] += -1 if par[j] else 1
        live[t] += 1

    offsets = np.array(graph.offsets, dtype=np.int64)
    fixed = np.zeros(ell, dtype=bool)
    bits = np.zeros(ell, dtype=np.uint8)
    positions = np.array(graph.shaping_positions, dtype=np.int64)
    trace: List[DecisionStep] = []
    for _ in range(ell):
        open_idx = np.flatnonzero(~fixed)
        tilde = app[open_idx] + offsets[open_idx]
        pick = open_idx[select(positions[open_idx], tilde)]
        t_val = int(app[pick] + offsets[pick])
        bit = _decide(t_val, llr_sign)
        guess = not np.any(live[open_idx])
        trace.append(DecisionStep(position=int(positions[pick]), tilde=float(t_val), bit=bit, guess=guess))
        fixed[pick] = True
        bits[pick] = bit
        for j in graph.vn_adj[positions[pick]]:
            undet[j] -= 1
            par[j] ^= bit
            if undet[j] == 1:
                rest = graph.cn_shaping[j]
                t = rest[~fixed[rest]][0]
                app[t] += -1 if par[j] else 1
                live[t] += 1
    return bits, trace


def _decimate_float(graph: GeneratorGraph, v: np.ndarray, llr: float, select: Selector):
    ell = graph.ell
    k_c = graph.code.k_c
    vn_msg = np.zeros(k_c)  # VN -> CN messages, identical on every edge of a systematic VN
    vn_msg[graph.message_positions] = np.where(v == 0, FLOAT_FIXED_LLR, -FLOAT_FIXED_LLR)
    positions = np.array(graph.shaping_positions, dtype=np.int64)
    offsets = np.array(graph.offsets, dtype=float) * llr
    fixed = np.zeros(ell, dtype=bool)
    bits = np.zeros(ell, dtype=np.uint8)
    tol = FLOAT_TIE_RTOL * max(1.0, abs(llr))
    parity_t = math.tanh(llr / 2.0)
    trace: List[DecisionStep] = []
    for _ in range(ell):
        app = np.zeros(ell)
        live = np.zeros(ell, dtype=bool)
        for j, adj in enumerate(graph.cn_adj):
            t = np.tanh(vn_msg[adj] / 2.0)
            for s in graph.cn_shaping[j]:
                if fixed[s]:
                    continue
                others = np.prod(t[adj != positions[s]]) * parity_t
                msg = 2.0 * math.atanh(min(max(others, -1.0 + 1e-15), 1.0 - 1e-15))
                app[s] += msg
                live[s] |= abs(msg) > tol
        open_idx = np.flatnonzero(~fixed)
        tilde = app[open_idx] + offsets[open_idx]
        mags = np.abs(tilde)
        first = int(np.flatnonzero(mags >= mags.max() - tol)[0])
        pick = open_idx[first if select is select_most_reliable else select(positions[open_idx], tilde)]
        t_val = float(app[pick] + offsets[pick])
        bit = 0 if t_val >= -tol else 1
        guess = not np.any(live[open_idx])
        trace.append(
            DecisionStep(position=int(positions[pick]), tilde=t_val / llr if llr else 0.0, bit=bit, guess=guess)
        )
        fixed[pick] = True
        bits[pick] = bit
        vn_msg[positions[pick]] = FLOAT_FIXED_LLR if bit == 0 else -FLOAT_FIXED_LLR
    return bits, trace


def shape_encode(
    graph: GeneratorGraph,
    v: Sequence[int],
    spec: ShapingSpec,
    select: Selector = select_most_reliable,
    arithmetic: str = "exact",
) -> ShapeResult:
    """Fix the ``ell`` shaping bits for message ``v`` and encode.

    ``arithmetic="float"`` runs the tanh check-node rule on real LLRs with
    fixed bits clamped to ``FLOAT_FIXED_LLR``; it is a slow reference for the
    integer path.
    """
    code = graph.code
    bits_v = np.asarray(v, dtype=np.uint8).reshape(-1)
    if bits_v.size != code.k_c - graph.ell:
        raise DimensionError(f"message has {bits_v.size} bits, expected {code.k_c - graph.ell}")
    if tuple(sorted(spec.positions)) != graph.shaping_positions:
        raise ShapingPositionError("shaping spec does not match the graph it was built for")

    llr = _prior_llr(spec.target_p0)
    if graph.ell == 0:
        sorted_bits, trace = np.zeros(0, dtype=np.uint8), []
    elif arithmetic == "exact":
        sorted_bits, trace = _decimate_exact(graph, bits_v, float(np.sign(llr)), select)
    elif arithmetic == "float":
        sorted_bits, trace = _decimate_float(graph, bits_v, llr, select)
    else:
        raise ValueError(f"unknown arithmetic {arithmetic!r}")

    u = np.zeros(code.k_c, dtype=np.uint8)
    u[graph.message_positions] = bits_v
    u[list(graph.shaping_positions)] = sorted_bits
    codeword = encode_systematic(code, u)
    return ShapeResult(
        codeword=codeword,
        u=u,
        shaping_bits=u[list(spec.positions)].copy(),
        decision_trace=tuple(trace),
    )


def parity_block(code: LdpcCode, codeword: np.ndarray) -> np.ndarray:
    """Parity part of a codeword (systematic order indices ``k_c..n_c-1``)."""
    return code.to_systematic_order(codeword)[code.k_c:]


def required_shaping_bits(m: int, p0: float, rounding: str = "nearest") -> int:
    """Shaping bits needed so that ``m`` parity bits can reach entropy ``H2(p0)``."""
    if not 0.0 < p0 < 1.0:
        raise ShapingBudgetError(f"p0={p0} needs an unbounded number of shaping bits")
    exact = m * (1.0 / h2(p0) - 1.0)
    if rounding == "nearest":
        return int(math.floor(exact + 0.5))
    if rounding == "floor":
        return int(math.floor(exact + 1e-9))
    if rounding == "ceil":
        return int(math.ceil(exact - 1e-9))
    raise ValueError(f"unknown rounding mode {rounding!r}")


def llps_exact(
    code: LdpcCode, v: Sequence[int], spec: ShapingSpec, cap: int = LLPS_MAX_ELL
) -> Tuple[np.ndarray, int]:
    """Minimum parity-weight shaping assignment by exhaustive search.

    Assignments are enumerated as integers whose most significant bit is the
    lowest shaping position; the first minimum wins. Bits are returned in
    ``spec.positions`` order.
    """
    if spec.ell > cap:
        raise LlpsLimitError(f"ell={spec.ell} exceeds the exhaustive-search cap of {cap}")
    bits_v = np.asarray(v, dtype=np.uint8).reshape(-1)
    if bits_v.size != code.k_c - spec.ell:
        raise DimensionError(f"message has {bits_v.size} bits, expected {code.k_c - spec.ell}")
    gp = code.g_parity.astype(np.int64)
    msg_pos = spec.message_positions(code.k_c)
    base = (bits_v.astype(np.int64) @ gp[msg_pos]) & 1 if msg_pos.size else np.zeros(code.n_parity, dtype=np.int64)
    sorted_pos = sorted(spec.positions)
    rows = gp[sorted_pos]

    ell = spec.ell
    best_val, best_w = 0, int(base.sum())
    shifts = np.arange(ell - 1, -1, -1, dtype=np.int64)
    for start in range(0, 1 << ell, LLPS_CHUNK):
        vals = np.arange(start, min(start + LLPS_CHUNK, 1 << ell), dtype=np.int64)
        assign = (vals[:, None] >> shifts) & 1
        weights = ((assign @ rows + base) & 1).sum(axis=1)
        i = int(np.argmin(weights))
        if start == 0 or weights[i] < best_w:
            best_val, best_w = int(vals[i]), int(weights[i])

    sorted_bits = (best_val >> shifts) & 1 if ell else np.zeros(0, dtype=np.int64)
    lookup = dict(zip(sorted_pos, sorted_bits))
    return np.array([lookup[p] for p in spec.positions], dtype=np.uint8), best_w


def reencode_check(
    code: LdpcCode, spec: ShapingSpec, decoded_u: Sequence[int], graph: Optional[GeneratorGraph] = None
) -> bool:
    """True iff re-encoding the decoded message part reproduces the decoded shaping bits."""
    u = np.asarray(decoded_u, dtype=np.uint8).reshape(-1)
    if u.size != code.k_c:
        raise DimensionError(f"decoded message has {u.size} bits, expected {code.k_c}")
    g = graph if graph is not None else build_shaping_graph(code, spec)
    res = shape_encode(g, u[g.message_positions], spec)
    return bool(np.array_equal(res.shaping_bits, u[list(spec.positions)]))
