"""Binary checkpoint container.

Layout (little-endian): magic "FTCK", version u16, entry count u32, then per
entry a manifest record (name length u16, utf-8 name, ndim u8, dims u32 each)
followed at the end by the f32 blobs in manifest order. Running batch-norm
statistics are stored alongside trainable parameters.
"""

import struct
from collections import OrderedDict

import numpy as np

from ..errors import CheckpointError

MAGIC = b"FTCK"
VERSION = 1


def save_checkpoint(path, named_arrays):
    """named_arrays: iterable of (name, array); saved as f32 in order."""
    entries = [(name, np.asarray(a, dtype="<f4")) for name, a in named_arrays]
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HI", VERSION, len(entries)))
        for name, a in entries:
            nb = name.encode("utf-8")
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<B", a.ndim))
            f.write(struct.pack(f"<{a.ndim}I", *a.shape))
        for _, a in entries:
            f.write(np.ascontiguousarray(a).tobytes())


def load_checkpoint(path):
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:4]!r}")
    off = 4
    version, count = struct.unpack_from("<HI", raw, off)
    off += 6
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    manifest = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off : off + nlen].decode("utf-8")
        off += nlen
        (ndim,) = struct.unpack_from("<B", raw, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        manifest.append((name, shape))
    out = OrderedDict()
    for name, shape in manifest:
        n = int(np.prod(shape)) if shape else 1
        nbytes = 4 * n
        if off + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated blob for {name}")
        out[name] = np.frombuffer(raw, dtype="<f4", count=n, offset=off).reshape(shape).copy()
        off += nbytes
    if off != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - off} trailing bytes")
    return out
