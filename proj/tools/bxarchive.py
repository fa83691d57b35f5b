"""Reader/writer for the birdxfer weight archive format."""
import json
import struct

import numpy as np

MAGIC = b"BXARCHV1"
FOOTER = b"BXEND\0\0\0"
VERSION = 1


def write_archive(path, arrays, metadata=None):
    meta = json.dumps(metadata or {}).encode()
    with open(path + ".tmp", "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQ", VERSION, len(meta)))
        f.write(meta)
        f.write(struct.pack("<I", len(arrays)))
        for name, value in arrays:
            value = np.ascontiguousarray(value, dtype="<f4")
            raw = name.encode()
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", value.ndim))
            f.write(struct.pack("<%dq" % value.ndim, *value.shape))
            f.write(value.tobytes())
        f.write(FOOTER)
    import os
    os.replace(path + ".tmp", path)


def read_archive(path):
    with open(path, "rb") as f:
        data = f.read()
    assert data[:8] == MAGIC, "bad magic"
    version, jlen = struct.unpack_from("<IQ", data, 8)
    assert version == VERSION
    pos = 20
    meta = json.loads(data[pos:pos + jlen])
    pos += jlen
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    arrays = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<I", data, pos)
        pos += 4
        name = data[pos:pos + nlen].decode()
        pos += nlen
        (ndim,) = struct.unpack_from("<I", data, pos)
        pos += 4
        shape = struct.unpack_from("<%dq" % ndim, data, pos)
        pos += 8 * ndim
        n = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(data, "<f4", n, pos).reshape(shape)
        pos += 4 * n
    assert data[pos:pos + 8] == FOOTER
    return arrays, meta
