"""Image dimensions from JPEG/PNG headers, no pixel decode.

JPEG dimensions come from the first SOF0/SOF1/SOF2 frame header; PNG from
the IHDR chunk. Annotation files omit sizes, so this is what backs the
dataset dimension resolution.
"""

from __future__ import annotations

import struct

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
JPEG_SOI = b"\xff\xd8"
_SOF_MARKERS = {0xC0, 0xC1, 0xC2}
# standalone markers with no length field
_NO_PAYLOAD = {0x01, 0xD0, 0xD1, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7}


class ImageHeaderError(ValueError):
    pass


def read_image_dims(data: bytes) -> tuple[int, int]:
    """(width, height) from the leading bytes of a JPEG or PNG stream."""
    if data.startswith(PNG_SIGNATURE):
        return _png_dims(data)
    if data.startswith(JPEG_SOI):
        return _jpeg_dims(data)
    raise ImageHeaderError(f"unknown magic bytes: {data[:8]!r}")


def _png_dims(data: bytes) -> tuple[int, int]:
    # signature(8) + length(4) + type(4) + IHDR payload
    if len(data) < 24:
        raise ImageHeaderError("truncated PNG header")
    if data[12:16] != b"IHDR":
        raise ImageHeaderError("first PNG chunk is not IHDR")
    width, height = struct.unpack(">II", data[16:24])
    if width <= 0 or height <= 0:
        raise ImageHeaderError(f"non-positive PNG dimensions {width}x{height}")
    return width, height


def _jpeg_dims(data: bytes) -> tuple[int, int]:
    pos = 2
    n = len(data)
    while pos < n:
        # markers may be preceded by fill bytes
        if data[pos] != 0xFF:
            raise ImageHeaderError(f"expected JPEG marker at offset {pos}")
        while pos < n and data[pos] == 0xFF:
            pos += 1
        if pos >= n:
            break
        marker = data[pos]
        pos += 1
        if marker in _NO_PAYLOAD:
            continue
        if marker == 0xD9:  # EOI
            break
        if pos + 2 > n:
            raise ImageHeaderError("truncated JPEG segment length")
        seg_len = struct.unpack(">H", data[pos:pos + 2])[0]
        if seg_len < 2:
            raise ImageHeaderError(f"bad JPEG segment length {seg_len}")
        if marker in _SOF_MARKERS:
            if pos + 7 > n:
                raise ImageHeaderError("truncated SOF header")
            height, width = struct.unpack(">HH", data[pos + 3:pos + 7])
            if width <= 0 or height <= 0:
                raise ImageHeaderError(f"non-positive JPEG dimensions {width}x{height}")
            return width, height
        if marker == 0xDA:  # start of scan without a prior SOF
            break
        pos += seg_len
    raise ImageHeaderError("no SOF frame header found before end of scan")
