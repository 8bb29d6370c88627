"""Line-oriented instruction trace format and the functional memory model.

A trace file starts with a version header, optionally followed by `#init`
lines seeding physical memory, then one record per line:

    #constable-trace v1
    #init <paddr-hex> <hex-bytes>
    I <seq> <pc-hex> L <dst> <src,src,...> <vaddr-hex> <paddr-hex> <size> <value-hex>
    I <seq> <pc-hex> S -    <src,...>      <vaddr-hex> <paddr-hex> <size> <value-hex>
    I <seq> <pc-hex> A <dst> <src,...>
    I <seq> <pc-hex> B -    <src,...>
    N <seq> <paddr-hex>
    X <seq>

`-` marks an absent destination or an empty source list.  Register ids are
decimal; 0..15 are the x86-64 GPRs (RSP=4, RBP=5) and 16 is RIP.  Trailing
`#expect key=value` comment lines carry scenario ground truth for test
harnesses and are ignored by the reader proper.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

TRACE_HEADER = "#constable-trace v1"

LINE_BYTES = 64
LINE_SHIFT = 6
ADDR_BITS = 48
ADDR_MASK = (1 << ADDR_BITS) - 1

RSP = 4
RBP = 5
RIP = 16
VALID_SIZES = (1, 2, 4, 8)

LOAD, STORE, ALU, BRANCH, OTHER = "L", "S", "A", "B", "O"
OP_CLASSES = (LOAD, STORE, ALU, BRANCH, OTHER)
MEM_OPS = (LOAD, STORE)


class TraceError(Exception):
    """Base class for trace format and consistency errors."""


class MalformedLine(TraceError):
    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


class UnsupportedVersion(TraceError):
    pass


class NonMonotonicSeqNo(TraceError):
    def __init__(self, line_no: int, prev_seq: int, seq: int):
        super().__init__(f"line {line_no}: seq {seq} not greater than {prev_seq}")
        self.line_no = line_no


class IoFailure(TraceError):
    pass


@dataclass(frozen=True, slots=True)
class TraceRecord:
    """One dynamic micro-op, snoop event, or context-switch directive."""

    kind: str  # "I" instruction, "N" snoop, "X" context switch
    seq_no: int
    pc: int = 0
    op: str = ALU
    dst: int | None = None
    srcs: tuple[int, ...] = ()
    vaddr: int = 0
    paddr: int = 0
    size: int = 0
    value: int = 0
    snoop_paddr: int = 0

    @property
    def is_mem(self) -> bool:
        return self.kind == "I" and self.op in MEM_OPS

    @property
    def line(self) -> int:
        return self.paddr >> LINE_SHIFT


def _parse_reg(tok: str, line_no: int) -> int:
    try:
        r = int(tok)
    except ValueError:
        raise MalformedLine(line_no, f"bad register id {tok!r}") from None
    if not 0 <= r <= RIP:
        raise MalformedLine(line_no, f"register id {r} out of range")
    return r


def _parse_hex(tok: str, line_no: int, what: str) -> int:
    try:
        v = int(tok, 16)
    except ValueError:
        raise MalformedLine(line_no, f"bad hex {what} {tok!r}") from None
    if v < 0:
        raise MalformedLine(line_no, f"negative {what}")
    return v


def _parse_srcs(tok: str, line_no: int) -> tuple[int, ...]:
    if tok == "-":
        return ()
    srcs = tuple(_parse_reg(t, line_no) for t in tok.split(","))
    if len(srcs) > 3:
        raise MalformedLine(line_no, "more than 3 source registers")
    if len(set(srcs)) != len(srcs):
        raise MalformedLine(line_no, "duplicate source register")
    return srcs


def _parse_instruction(parts: list[str], line_no: int) -> TraceRecord:
    if len(parts) < 6:
        raise MalformedLine(line_no, "short instruction record")
    seq = int(parts[1])
    pc = _parse_hex(parts[2], line_no, "pc") & ADDR_MASK
    op = parts[3]
    if op not in OP_CLASSES:
        raise MalformedLine(line_no, f"unknown op class {op!r}")
    dst = None if parts[4] == "-" else _parse_reg(parts[4], line_no)
    if dst == RIP:
        raise MalformedLine(line_no, "RIP is not a valid destination")
    srcs = _parse_srcs(parts[5], line_no)
    if op not in MEM_OPS:
        if len(parts) != 6:
            raise MalformedLine(line_no, "trailing fields on non-memory record")
        return TraceRecord("I", seq, pc=pc, op=op, dst=dst, srcs=srcs)
    if op == STORE and dst is not None:
        raise MalformedLine(line_no, "store with destination register")
    if len(parts) != 10:
        raise MalformedLine(line_no, "memory record needs vaddr paddr size value")
    vaddr = _parse_hex(parts[6], line_no, "vaddr") & ADDR_MASK
    paddr = _parse_hex(parts[7], line_no, "paddr") & ADDR_MASK
    try:
        size = int(parts[8])
    except ValueError:
        raise MalformedLine(line_no, f"bad size {parts[8]!r}") from None
    if size not in VALID_SIZES:
        raise MalformedLine(line_no, f"size {size} not in {VALID_SIZES}")
    if (paddr // LINE_BYTES) != ((paddr + size - 1) // LINE_BYTES):
        raise MalformedLine(line_no, "memory access crosses a cacheline boundary")
    value = _parse_hex(parts[9], line_no, "value")
    if value >> (8 * size):
        raise MalformedLine(line_no, f"value wider than {size} bytes")
    return TraceRecord("I", seq, pc=pc, op=op, dst=dst, srcs=srcs,
                       vaddr=vaddr, paddr=paddr, size=size, value=value)


def read_trace(path: str) -> Iterator[TraceRecord]:
    """Stream records from a trace file in seq_no order.

    Raises UnsupportedVersion, MalformedLine, or NonMonotonicSeqNo while
    iterating; header `#init` lines and `#` comments are skipped.
    """
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    with fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("#constable-trace"):
            raise UnsupportedVersion(f"missing trace header, got {header!r}")
        if header != TRACE_HEADER:
            raise UnsupportedVersion(f"unsupported trace version {header!r}")
        prev_seq = -1
        for line_no, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            kind = parts[0]
            try:
                if kind == "I":
                    rec = _parse_instruction(parts, line_no)
                elif kind == "N":
                    if len(parts) != 3:
                        raise MalformedLine(line_no, "snoop record needs seq and paddr")
                    paddr = _parse_hex(parts[2], line_no, "snoop paddr") & ADDR_MASK
                    if paddr % LINE_BYTES:
                        raise MalformedLine(line_no, "snoop paddr not cacheline aligned")
                    rec = TraceRecord("N", int(parts[1]), snoop_paddr=paddr)
                elif kind == "X":
                    if len(parts) != 2:
                        raise MalformedLine(line_no, "context-switch record needs only seq")
                    rec = TraceRecord("X", int(parts[1]))
                else:
                    raise MalformedLine(line_no, f"unknown record kind {kind!r}")
            except ValueError:
                raise MalformedLine(line_no, "bad integer field") from None
            if rec.seq_no <= prev_seq:
                raise NonMonotonicSeqNo(line_no, prev_seq, rec.seq_no)
            prev_seq = rec.seq_no
            yield rec


def read_inits(path: str) -> list[tuple[int, bytes]]:
    """Collect the `#init <paddr> <hex-bytes>` lines from the trace header."""
    inits = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    with fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line_no == 1:
                continue
            if not line.startswith("#init"):
                if line.startswith("#") or not line:
                    continue
                break  # init lines only appear before the first record
            parts = line.split()
            if len(parts) != 3:
                raise MalformedLine(line_no, "init line needs paddr and hex bytes")
            paddr = _parse_hex(parts[1], line_no, "init paddr")
            try:
                data = bytes.fromhex(parts[2])
            except ValueError:
                raise MalformedLine(line_no, "bad init hex bytes") from None
            inits.append((paddr, data))
    return inits


def read_expectations(path: str) -> dict[str, float]:
    """Parse trailing `#expect key=value` comment lines (scenario ground truth)."""
    out: dict[str, float] = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    with fh:
        for raw in fh:
            line = raw.strip()
            if not line.startswith("#expect "):
                continue
            for tok in line[len("#expect "):].split():
                key, _, val = tok.partition("=")
                num = float(val)
                out[key] = int(num) if num.is_integer() else num
    return out


def _format_record(rec: TraceRecord) -> str:
    if rec.kind == "N":
        return f"N {rec.seq_no} {rec.snoop_paddr:x}"
    if rec.kind == "X":
        return f"X {rec.seq_no}"
    dst = "-" if rec.dst is None else str(rec.dst)
    srcs = ",".join(str(r) for r in rec.srcs) if rec.srcs else "-"
    base = f"I {rec.seq_no} {rec.pc:x} {rec.op} {dst} {srcs}"
    if rec.op in MEM_OPS:
        return f"{base} {rec.vaddr:x} {rec.paddr:x} {rec.size} {rec.value:x}"
    return base


def write_trace(records: Iterable[TraceRecord], path: str,
                inits: Iterable[tuple[int, bytes]] = (),
                expectations: dict | None = None) -> None:
    """Write a trace file readable by read_trace; bit-identical for equal input."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(TRACE_HEADER + "\n")
            for paddr, data in inits:
                fh.write(f"#init {paddr:x} {data.hex()}\n")
            for rec in records:
                fh.write(_format_record(rec) + "\n")
            if expectations:
                pairs = " ".join(f"{k}={expectations[k]}" for k in sorted(expectations))
                fh.write(f"#expect {pairs}\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


class ByteImage:
    """Sparse byte-addressed physical memory, kept as per-line bytearrays."""

    __slots__ = ("_lines",)

    def __init__(self):
        self._lines: dict[int, bytearray] = {}

    def _line(self, line_no: int) -> bytearray:
        buf = self._lines.get(line_no)
        if buf is None:
            buf = bytearray(LINE_BYTES)
            self._lines[line_no] = buf
        return buf

    def read(self, paddr: int, size: int) -> int:
        buf = self._line(paddr >> LINE_SHIFT)
        off = paddr & (LINE_BYTES - 1)
        return int.from_bytes(buf[off:off + size], "little")

    def write(self, paddr: int, size: int, value: int) -> None:
        buf = self._line(paddr >> LINE_SHIFT)
        off = paddr & (LINE_BYTES - 1)
        buf[off:off + size] = value.to_bytes(size, "little")

    def write_bytes(self, paddr: int, data: bytes) -> None:
        for i, b in enumerate(data):
            a = paddr + i
            self._line(a >> LINE_SHIFT)[a & (LINE_BYTES - 1)] = b

    def copy(self) -> "ByteImage":
        out = ByteImage()
        out._lines = {k: bytearray(v) for k, v in self._lines.items()}
        return out


@dataclass
class FunctionalState:
    """Program-order memory image plus the expected (paddr, value) per load."""

    memory: ByteImage
    expected: dict[int, tuple[int, int]]  # seq_no -> (paddr, value)


def replay_functional(records: Iterable[TraceRecord],
                      inits: Iterable[tuple[int, bytes]] = ()) -> FunctionalState:
    """Apply every store in program order and record each load's expected value."""
    mem = ByteImage()
    for paddr, data in inits:
        mem.write_bytes(paddr, data)
    expected: dict[int, tuple[int, int]] = {}
    for rec in records:
        if rec.kind != "I":
            continue
        if rec.op == LOAD:
            expected[rec.seq_no] = (rec.paddr, mem.read(rec.paddr, rec.size))
        elif rec.op == STORE:
            mem.write(rec.paddr, rec.size, rec.value)
    return FunctionalState(mem, expected)


@dataclass
class SanityViolation:
    seq_no: int
    expected: int
    got: int


@dataclass
class SanityReport:
    violations: list[SanityViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class Trace:
    """A fully materialized trace: records, initial memory, and expectations."""

    records: list[TraceRecord]
    inits: list[tuple[int, bytes]] = field(default_factory=list)
    expectations: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str) -> "Trace":
        return cls(records=list(read_trace(path)),
                   inits=read_inits(path),
                   expectations=read_expectations(path))

    def save(self, path: str) -> None:
        write_trace(self.records, path, inits=self.inits,
                    expectations=self.expectations or None)

    def replay(self) -> FunctionalState:
        return replay_functional(self.records, self.inits)


def sanity_check(trace: Trace) -> SanityReport:
    """Flag every load whose recorded value disagrees with functional replay."""
    mem = ByteImage()
    for paddr, data in trace.inits:
        mem.write_bytes(paddr, data)
    report = SanityReport()
    for rec in trace.records:
        if rec.kind != "I":
            continue
        if rec.op == LOAD:
            want = mem.read(rec.paddr, rec.size)
            if want != rec.value:
                report.violations.append(SanityViolation(rec.seq_no, want, rec.value))
        elif rec.op == STORE:
            mem.write(rec.paddr, rec.size, rec.value)
    return report
