import io
import struct

import numpy as np
import pytest
from PIL import Image

from detspace.imagesize import ImageHeaderError, read_image_dims
from detspace.widerface import (
    DimensionResolutionError,
    FaceBox,
    FaceDataset,
    GtParseError,
    ImageAnnotation,
    dataset_from_json,
    dataset_to_json,
    filter_faces,
    format_widerface_gt,
    parse_widerface_gt,
    read_sizes_csv,
    resolve_dimensions,
    write_sizes_csv,
)

SINGLE = "a.jpg\n1\n10 20 30 40 0 0 0 0 0 0\n"
ZERO = "b.jpg\n0\n0 0 0 0 0 0 0 0 0 0\n"
THREE = (
    "x/one.jpg\n2\n1 2 3 4 0 0 0 0 0 0\n5 6 7 8 1 0 1 0 1 0\n"
    "x/two.jpg\n0\n0 0 0 0 0 0 0 0 0 0\n"
    "x/three.jpg\n1\n9 9 9 9 0 0 0 0 0 0\n"
)


class TestParse:
    def test_single_record(self):
        ds = parse_widerface_gt(SINGLE)
        assert len(ds) == 1
        f = ds.images[0].faces[0]
        assert (f.x, f.y, f.w, f.h) == (10, 20, 30, 40)

    def test_zero_count_record(self):
        ds = parse_widerface_gt(ZERO)
        assert len(ds) == 1
        assert ds.images[0].faces == []

    def test_three_records_with_mixed_counts(self):
        # line arithmetic: (2+2) + (2+1) + (2+1) lines consumed
        assert len(THREE.splitlines()) == 10
        ds = parse_widerface_gt(THREE)
        assert [len(im.faces) for im in ds.images] == [2, 0, 1]
        assert ds.images[1].path == "x/two.jpg"
        assert ds.face_count == 3

    def test_face_count_matches_count_lines(self):
        ds = parse_widerface_gt(THREE)
        counts = [int(l) for i, l in enumerate(THREE.splitlines()) if l.strip().isdigit()
                  and len(l.split()) == 1]
        assert ds.face_count == sum(counts)

    def test_malformed_count_reports_line(self):
        with pytest.raises(GtParseError) as err:
            parse_widerface_gt("a.jpg\nnot_a_number\n")
        assert err.value.line_no == 2

    def test_truncated_record(self):
        with pytest.raises(GtParseError):
            parse_widerface_gt("a.jpg\n2\n1 2 3 4 0 0 0 0 0 0\n")

    def test_wrong_field_count_reports_line(self):
        with pytest.raises(GtParseError) as err:
            parse_widerface_gt("a.jpg\n1\n1 2 3\n")
        assert err.value.line_no == 3

    def test_duplicate_paths_rejected(self):
        with pytest.raises(GtParseError):
            parse_widerface_gt(SINGLE + SINGLE)

    def test_out_of_range_attribute_warns(self):
        with pytest.warns(UserWarning, match="outside documented ranges"):
            parse_widerface_gt("a.jpg\n1\n1 2 3 4 9 0 0 0 0 0\n")

    def test_round_trip(self):
        ds = parse_widerface_gt(THREE)
        text = format_widerface_gt(ds)
        again = parse_widerface_gt(text)
        assert again == ds
        assert format_widerface_gt(again) == text

    def test_json_round_trip(self):
        ds = parse_widerface_gt(THREE)
        again = dataset_from_json(dataset_to_json(ds))
        assert again == ds

    def test_filter_faces_policy(self):
        im = ImageAnnotation("p.jpg", faces=[
            FaceBox(0, 0, 10, 10), FaceBox(0, 0, 0, 5), FaceBox(0, 0, 5, 5, invalid=1)])
        assert len(filter_faces(im)) == 1
        assert len(filter_faces(im, include_invalid=True)) == 3


def png_bytes(width, height):
    ihdr = struct.pack(">II", width, height) + b"\x08\x02\x00\x00\x00"
    return (b"\x89PNG\r\n\x1a\n" + struct.pack(">I", 13) + b"IHDR" + ihdr
            + b"\x00\x00\x00\x00")


def jpeg_bytes(width, height):
    app0 = b"\xff\xe0" + struct.pack(">H", 16) + b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00"
    sof0 = b"\xff\xc0" + struct.pack(">HBHHB", 11, 8, height, width, 1) + b"\x01\x11\x00"
    return b"\xff\xd8" + app0 + sof0


class TestImageDims:
    def test_minimal_png(self):
        assert read_image_dims(png_bytes(640, 480)) == (640, 480)

    def test_minimal_jpeg_sof0(self):
        assert read_image_dims(jpeg_bytes(1024, 882)) == (1024, 882)

    def test_unknown_magic(self):
        with pytest.raises(ImageHeaderError, match="magic"):
            read_image_dims(b"GIF89a whatever")

    def test_truncated_png(self):
        with pytest.raises(ImageHeaderError):
            read_image_dims(png_bytes(10, 10)[:12])

    def test_jpeg_without_sof(self):
        data = b"\xff\xd8" + b"\xff\xe0" + struct.pack(">H", 4) + b"ab" + b"\xff\xd9"
        with pytest.raises(ImageHeaderError, match="SOF"):
            read_image_dims(data)

    @pytest.mark.parametrize("fmt", ["PNG", "JPEG"])
    def test_against_reference_decoder(self, fmt):
        rng = np.random.default_rng(0)
        for _ in range(10):
            w, h = int(rng.integers(8, 1200)), int(rng.integers(8, 900))
            img = Image.new("RGB", (w, h), (120, 30, 200))
            buf = io.BytesIO()
            img.save(buf, format=fmt)
            data = buf.getvalue()
            assert read_image_dims(data) == Image.open(io.BytesIO(data)).size == (w, h)

    def test_progressive_jpeg_sof2(self):
        img = Image.new("RGB", (321, 123))
        buf = io.BytesIO()
        img.save(buf, format="JPEG", progressive=True)
        assert read_image_dims(buf.getvalue()) == (321, 123)


class TestResolveDimensions:
    def test_csv_passthrough(self, tmp_path):
        csv = tmp_path / "sizes.csv"
        csv.write_text("path,width,height\n0--Parade/x.jpg,1024,768\n")
        ds = FaceDataset([ImageAnnotation("0--Parade/x.jpg")])
        out = resolve_dimensions(ds, sizes_csv=csv)
        assert (out.images[0].width, out.images[0].height) == (1024, 768)

    def test_missing_file_lists_path(self, tmp_path):
        ds = FaceDataset([ImageAnnotation("nowhere/gone.jpg")])
        with pytest.raises(DimensionResolutionError) as err:
            resolve_dimensions(ds, image_root=tmp_path)
        assert "nowhere/gone.jpg" in err.value.missing

    def test_csv_wins_over_probing_and_mix_resolves(self, tmp_path):
        (tmp_path / "imgs").mkdir()
        (tmp_path / "imgs" / "a.png").write_bytes(png_bytes(100, 50))
        (tmp_path / "imgs" / "b.png").write_bytes(png_bytes(30, 40))
        csv = tmp_path / "sizes.csv"
        csv.write_text("path,width,height\na.png,999,111\n")
        ds = FaceDataset([ImageAnnotation("a.png"), ImageAnnotation("b.png")])
        out = resolve_dimensions(ds, image_root=tmp_path / "imgs", sizes_csv=csv)
        assert (out.images[0].width, out.images[0].height) == (999, 111)  # CSV wins
        assert (out.images[1].width, out.images[1].height) == (30, 40)    # probed

    def test_cache_sidecar_written_and_reusable(self, tmp_path):
        (tmp_path / "c.png").write_bytes(png_bytes(64, 32))
        ds = FaceDataset([ImageAnnotation("c.png")])
        cache = tmp_path / "cache.csv"
        out = resolve_dimensions(ds, image_root=tmp_path, cache_csv=cache)
        assert read_sizes_csv(cache) == {"c.png": (64, 32)}
        # cached run needs no image root
        again = resolve_dimensions(FaceDataset([ImageAnnotation("c.png")]),
                                   sizes_csv=cache)
        assert again.images[0].width == 64

    def test_write_sizes_skips_unresolved(self, tmp_path):
        ds = FaceDataset([ImageAnnotation("u.jpg"), ImageAnnotation("v.jpg", 2, 3)])
        path = tmp_path / "s.csv"
        write_sizes_csv(ds, path)
        assert read_sizes_csv(path) == {"v.jpg": (2, 3)}
