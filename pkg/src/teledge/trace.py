"""Session traces: one record per frame per endpoint, plus link statistics.

The on-disk format is line-oriented text. ``#`` lines carry the layout,
refresh rate, and link counters; every other line is one record::

    frame_index, endpoint_id, local_mask, remote_mask, stim_mask, tx_seq, rx_discards

Masks use the ``{...}`` notation. Records are interleaved frame by frame
(A then B), so two runs of the same configuration produce byte-identical
files.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .layout import TouchMask, format_mask, make_layout, parse_mask


class TraceFormatError(ValueError):
    """Trace text that does not parse."""


@dataclass(frozen=True)
class TraceRecord:
    frame_index: int
    endpoint_id: str
    local_mask: TouchMask
    remote_mask: TouchMask
    stim_mask: TouchMask
    tx_seq: int
    rx_discards: int

    def format(self) -> str:
        return (f"{self.frame_index}, {self.endpoint_id}, "
                f"{format_mask(self.local_mask)}, {format_mask(self.remote_mask)}, "
                f"{format_mask(self.stim_mask)}, {self.tx_seq}, {self.rx_discards}")


@dataclass
class SessionTrace:
    left_count: int
    right_count: int
    refresh_hz: int
    records: dict[str, list[TraceRecord]] = field(default_factory=lambda: {"A": [], "B": []})
    link_stats: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.left_count + self.right_count

    def frame_count(self) -> int:
        return len(self.records["A"])

    def stim_sequence(self, endpoint_id: str) -> list[TouchMask]:
        return [r.stim_mask for r in self.records[endpoint_id]]


_RECORD_RE = re.compile(
    r"^(\d+), ([AB]), (\{[\d,]*\}), (\{[\d,]*\}), (\{[\d,]*\}), (\d+), (\d+)$")


def format_trace(trace: SessionTrace) -> str:
    lines = [
        "# teledge-trace v1",
        f"# layout {trace.left_count},{trace.right_count}",
        f"# refresh_hz {trace.refresh_hz}",
    ]
    for direction in sorted(trace.link_stats):
        stats = trace.link_stats[direction]
        lines.append(f"# link {direction} sent={stats['sent']} "
                     f"delivered={stats['delivered']} dropped={stats['dropped']}")
    for frame in range(trace.frame_count()):
        for endpoint in ("A", "B"):
            lines.append(trace.records[endpoint][frame].format())
    return "\n".join(lines) + "\n"


def write_trace(trace: SessionTrace, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace(trace))


def parse_trace(text: str) -> SessionTrace:
    left, right, refresh = 21, 32, 60
    link_stats: dict[str, dict[str, int]] = {}
    records: dict[str, list[TraceRecord]] = {"A": [], "B": []}
    saw_layout = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("layout "):
                try:
                    left, right = (int(p) for p in body[len("layout "):].split(","))
                except ValueError as exc:
                    raise TraceFormatError(f"line {lineno}: bad layout header") from exc
                saw_layout = True
            elif body.startswith("refresh_hz "):
                refresh = int(body[len("refresh_hz "):])
            elif body.startswith("link "):
                fields = body.split()
                counters = dict(part.split("=") for part in fields[2:])
                link_stats[fields[1]] = {k: int(v) for k, v in counters.items()}
            continue
        match = _RECORD_RE.match(line)
        if match is None:
            raise TraceFormatError(f"line {lineno}: not a trace record: {raw!r}")
        if not saw_layout:
            raise TraceFormatError("records before the layout header")
        total = left + right
        record = TraceRecord(
            frame_index=int(match.group(1)),
            endpoint_id=match.group(2),
            local_mask=parse_mask(match.group(3), total),
            remote_mask=parse_mask(match.group(4), total),
            stim_mask=parse_mask(match.group(5), total),
            tx_seq=int(match.group(6)),
            rx_discards=int(match.group(7)),
        )
        records[record.endpoint_id].append(record)
    make_layout(left, right)  # validates the header counts
    if len(records["A"]) != len(records["B"]):
        raise TraceFormatError(
            f"unbalanced endpoints: {len(records['A'])} A records vs {len(records['B'])} B")
    return SessionTrace(left_count=left, right_count=right, refresh_hz=refresh,
                        records=records, link_stats=link_stats)


def read_trace(path: str) -> SessionTrace:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh.read())
