#!/usr/bin/env python3
"""Regenerate the checked-in binary test fixtures.

The PFM fixture is produced by a self-contained writer (struct only, no
imports from the package) so the package codec is tested against bytes it
did not itself produce. Values are chosen exact in float32 so tests can
compare bitwise. The file is big-endian (positive scale header) with a
non-unit scale of 2.0 to exercise both header fields; loaders must return
stored_value * 2.0.
"""

from __future__ import annotations

import struct
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# top row first, (x, y) = (0,0) (1,0) / (0,1) (1,1), RGB per pixel
SAMPLE_2X2_STORED = [
    [(0.0, 0.25, 0.5), (1.0, 2.0, 4.0)],
    [(8.0, 16.0, 0.125), (32.0, 64.0, 0.0625)],
]
SAMPLE_2X2_SCALE = 2.0


def write_pfm_big_endian(path: Path, rows, scale: float) -> bytes:
    height = len(rows)
    width = len(rows[0])
    header = f"PF\n{width} {height}\n{scale}\n".encode("ascii")
    body = b""
    for row in reversed(rows):  # PFM stores the bottom row first
        for px in row:
            for value in px:
                body += struct.pack(">f", value)
    payload = header + body
    path.write_bytes(payload)
    return payload


def hex_dump(payload: bytes) -> str:
    lines = []
    for off in range(0, len(payload), 16):
        chunk = payload[off : off + 16]
        lines.append(f"{off:04x}  {chunk.hex(' ')}")
    return "\n".join(lines)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    target = FIXTURES / "sample_2x2.pfm"
    payload = write_pfm_big_endian(target, SAMPLE_2X2_STORED, SAMPLE_2X2_SCALE)
    print(f"wrote {target} ({len(payload)} bytes)")
    print(hex_dump(payload))
    print("expected floats after load (stored * scale):")
    for row in SAMPLE_2X2_STORED:
        print("  ", [tuple(v * SAMPLE_2X2_SCALE for v in px) for px in row])


if __name__ == "__main__":
    main()
