"""Writer for the EMB1 embedding-table format.

Layout: magic ``EMB1``, little-endian u32 version (=1), u32 dim,
u32 count, then per entry a u16 id byte-length, the UTF-8 id bytes and
dim little-endian f32 components. Entries are written in sorted-id
order so identical tables produce identical bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"EMB1"
VERSION = 1


def write_emb1(entries: Mapping[str, np.ndarray], dim: int, path) -> None:
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, dim, len(entries)))
        for key in sorted(entries):
            vec = np.asarray(entries[key], dtype="<f4")
            if vec.shape != (dim,):
                raise ValueError(f"entry {key!r} has shape {vec.shape}, expected ({dim},)")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"entry {key!r} holds non-finite values")
            encoded = key.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"id too long: {key[:40]!r}...")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(vec.tobytes())
