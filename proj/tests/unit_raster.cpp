#include <doctest.h>

#include <fstream>

#include "fbp/raster.hpp"
#include "test_util.hpp"

using namespace fbp;
using testutil::TempDir;

TEST_CASE("image raster round-trips bit-exactly") {
    TempDir tmp("raster_img");
    Image img(3, 4);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) img.at(r, c) = float(r * 10 + c) * 0.25f;
    const auto path = tmp.path / "img.fbr";
    write_raster(path, img);
    CHECK(read_image(path) == img);

    // Same bytes when rewritten.
    const std::string first = testutil::read_bytes(path);
    write_raster(path, img);
    CHECK(testutil::read_bytes(path) == first);
}

TEST_CASE("sinogram raster preserves geometry exactly") {
    TempDir tmp("raster_sino");
    const Geometry g = make_geometry(7, 5);
    Sinogram s(g);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j) s.at(i, j) = float(i) - 0.5f * float(j);
    const auto path = tmp.path / "sino.fbr";
    write_raster(path, s);
    const Sinogram back = read_sinogram(path);
    CHECK(back == s);
    CHECK(back.geometry.angle_step == g.angle_step);  // %.17g round trip
    CHECK(back.geometry.detector_spacing == g.detector_spacing);
}

TEST_CASE("read_raster distinguishes image and sinogram payloads") {
    TempDir tmp("raster_variant");
    write_raster(tmp.path / "i.fbr", Image(4, 4, 1.0f));
    write_raster(tmp.path / "s.fbr", Sinogram(make_geometry(4, 4), 1.0f));
    CHECK(std::holds_alternative<Image>(read_raster(tmp.path / "i.fbr")));
    CHECK(std::holds_alternative<Sinogram>(read_raster(tmp.path / "s.fbr")));
    CHECK_THROWS_AS(read_sinogram(tmp.path / "i.fbr"), RasterError);
}

TEST_CASE("raster reader reports specific failure codes") {
    TempDir tmp("raster_err");
    const auto path = tmp.path / "bad.fbr";

    auto write_text = [&](const std::string& text) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << text;
    };

    SUBCASE("missing file") {
        try {
            read_raster(tmp.path / "nope.fbr");
            FAIL("expected RasterError");
        } catch (const RasterError& e) {
            CHECK(e.code() == RasterErrc::io_failure);
        }
    }
    SUBCASE("bad magic") {
        write_text("NOTRASTER\n");
        try {
            read_raster(path);
            FAIL("expected RasterError");
        } catch (const RasterError& e) {
            CHECK(e.code() == RasterErrc::bad_magic);
        }
    }
    SUBCASE("malformed header") {
        write_text("FBPRASTER 1\ndtype=f32\nh=4\nbogus\ndata:\n");
        try {
            read_raster(path);
            FAIL("expected RasterError");
        } catch (const RasterError& e) {
            CHECK(e.code() == RasterErrc::bad_header);
        }
    }
    SUBCASE("dimension overflow") {
        write_text("FBPRASTER 1\ndtype=f32\nh=100000\nw=100000\ndata:\n");
        try {
            read_raster(path);
            FAIL("expected RasterError");
        } catch (const RasterError& e) {
            CHECK(e.code() == RasterErrc::dimension_overflow);
        }
    }
    SUBCASE("truncated payload") {
        write_text("FBPRASTER 1\ndtype=f32\nh=4\nw=4\ndata:\nshort");
        try {
            read_raster(path);
            FAIL("expected RasterError");
        } catch (const RasterError& e) {
            CHECK(e.code() == RasterErrc::truncated_payload);
        }
    }
}

TEST_CASE("write_raster rejects non-finite values") {
    TempDir tmp("raster_nan");
    Image img(2, 2, 0.0f);
    img.at(0, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(write_raster(tmp.path / "nan.fbr", img),
                    std::invalid_argument);
}

TEST_CASE("PGM preview maps the window to 0..255") {
    TempDir tmp("raster_pgm");
    Image img(1, 3);
    img.at(0, 0) = 0.0f;
    img.at(0, 1) = 0.5f;
    img.at(0, 2) = 1.0f;
    const auto path = tmp.path / "p.pgm";
    write_preview(path, img, 0.0f, 1.0f);
    const std::string bytes = testutil::read_bytes(path);
    // header "P5\n3 1\n255\n" then three pixels 0, 128, 255
    REQUIRE(bytes.size() == 11 + 3);
    CHECK(bytes.substr(0, 3) == "P5\n");
    CHECK(static_cast<unsigned char>(bytes[11]) == 0);
    CHECK(static_cast<unsigned char>(bytes[12]) == 128);
    CHECK(static_cast<unsigned char>(bytes[13]) == 255);
}
