#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kneenet/dataset.hpp"
#include "kneenet/error.hpp"
#include "kneenet/npy.hpp"
#include "kneenet/rng.hpp"

using namespace kneenet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("kneenet_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

}  // namespace

TEST_CASE("npy header is padded to 64 bytes and parses back") {
    const auto h = npy::make_header(npy::Dtype::u8, {17, 256, 256});
    CHECK(h.size() % 64 == 0);
    CHECK(h.substr(0, 6) == "\x93NUMPY");
    CHECK(h.back() == '\n');
    CHECK(h.find("{'descr': '|u1', 'fortran_order': False, 'shape': (17, 256, 256), }") != std::string::npos);
    const auto parsed = npy::parse_header(h);
    CHECK(parsed.shape == std::vector<std::size_t>{17, 256, 256});
    CHECK(parsed.dtype == npy::Dtype::u8);
    CHECK(parsed.data_offset == h.size());
}

TEST_CASE("load_volume scales uint8 and clips floats") {
    TempDir dir("load");
    std::vector<std::uint8_t> zeros(17 * 256 * 256, 0);
    npy::write_u8(dir.path / "z.npy", {17, 256, 256}, zeros);
    auto v = load_volume(dir.path / "z.npy", "0001", Plane::axial);
    CHECK(v.slices == 17);
    CHECK(v.height == 256);
    CHECK(std::all_of(v.data.begin(), v.data.end(), [](double x) { return x == 0.0; }));

    zeros[12345] = 255;
    npy::write_u8(dir.path / "one.npy", {17, 256, 256}, zeros);
    v = load_volume(dir.path / "one.npy", "0001", Plane::axial);
    CHECK(v.data[12345] == 1.0);

    std::vector<std::uint8_t> big(61 * 4 * 4, 7);
    npy::write_u8(dir.path / "big.npy", {61, 4, 4}, big);
    CHECK(load_volume(dir.path / "big.npy", "x", Plane::coronal).slices == 61);

    const std::vector<float> f{-0.5f, 0.25f, 1.5f, 0.75f};
    npy::write_f32(dir.path / "f.npy", {1, 2, 2}, f);
    v = load_volume(dir.path / "f.npy", "x", Plane::sagittal);
    CHECK(v.data == std::vector<double>{0.0, 0.25, 1.0, 0.75});

    const std::vector<double> d{0.1, 2.0};
    npy::write_f64(dir.path / "d.npy", {2, 1, 1}, d);
    v = load_volume(dir.path / "d.npy", "x", Plane::sagittal);
    CHECK(v.data == std::vector<double>{0.1, 1.0});
}

TEST_CASE("load_volume error paths") {
    TempDir dir("errors");
    write_bytes(dir.path / "bad.npy", "NOTNUMPY................");
    CHECK_THROWS_AS(load_volume(dir.path / "bad.npy", "x", Plane::axial), FormatError);

    std::vector<std::uint8_t> d(16, 0);
    npy::write_u8(dir.path / "rank2.npy", {4, 4}, d);
    CHECK_THROWS_AS(load_volume(dir.path / "rank2.npy", "x", Plane::axial), ShapeError);

    std::string h = npy::make_header(npy::Dtype::u8, {1, 4, 4});
    auto pos = h.find("False");
    h.replace(pos, 5, "True ");
    write_bytes(dir.path / "fortran.npy", h + std::string(16, '\0'));
    CHECK_THROWS_AS(load_volume(dir.path / "fortran.npy", "x", Plane::axial), ShapeError);

    h = npy::make_header(npy::Dtype::u8, {1, 2, 2});
    pos = h.find("|u1");
    h.replace(pos, 3, "<i4");
    write_bytes(dir.path / "int.npy", h + std::string(16, '\0'));
    CHECK_THROWS_AS(load_volume(dir.path / "int.npy", "x", Plane::axial), DtypeError);
}

TEST_CASE("uint8 round trip is exact") {
    TempDir dir("roundtrip");
    Rng rng(5);
    MriVolume v("0007", Plane::coronal, 3, 5, 6);
    for (auto& x : v.data) x = static_cast<double>(rng.uniform_int(0, 255)) / 255.0;
    save_volume_u8(dir.path / "v.npy", v);
    const auto back = load_volume(dir.path / "v.npy", "0007", Plane::coronal);
    CHECK(back.data == v.data);
}

TEST_CASE("labels parsing") {
    auto t = parse_labels("0001,1\n0002,0\n", Task::acl);
    CHECK(t.size() == 2);
    CHECK(t.at("0001") == 1);
    CHECK(parse_labels("0001,1\r\n0002,0\r\n", Task::acl).size() == 2);
    CHECK_THROWS_AS(parse_labels("0003,2\n", Task::acl), ParseError);
    CHECK_THROWS_AS(parse_labels("0003\n", Task::acl), ParseError);
    CHECK_THROWS_AS(parse_labels("0003,1\n0003,0\n", Task::acl), IntegrityError);

    std::string big;
    for (int i = 0; i < 1370; ++i) big += std::to_string(10000 + i) + "," + std::to_string(i % 2) + "\n";
    CHECK(parse_labels(big, Task::abnormal).size() == 1370);
}

TEST_CASE("scan_dataset set logic and ordering") {
    TempDir dir("scan");
    CHECK_THROWS_AS(scan_dataset(dir.path), LayoutError);

    std::vector<std::uint8_t> d(2 * 2 * 2, 1);
    for (auto plane : kAllPlanes) fs::create_directories(plane_dir(dir.path, Split::train, plane));
    for (const std::string id : {"0002", "0001", "0003"})
        for (auto plane : kAllPlanes) {
            if (id == "0003" && plane == Plane::sagittal) continue;
            npy::write_u8(plane_dir(dir.path, Split::train, plane) / (id + ".npy"), {2, 2, 2}, d);
        }
    const auto m = scan_dataset(dir.path, Split::train);
    REQUIRE(m.cases.size() == 2);
    CHECK(m.cases[0].id == "0001");
    CHECK(m.cases[1].id == "0002");
    CHECK(m.cases[0].slice_counts[0] == 2);
    REQUIRE(m.exclusions.size() == 1);
    CHECK(m.exclusions[0].case_id == "0003");
    CHECK(m.exclusions[0].missing == std::vector<Plane>{Plane::sagittal});
    CHECK(m.find("0002") != nullptr);
    CHECK(m.find("0003") == nullptr);

    CHECK_THROWS_AS(scan_dataset(dir.path, Split::valid), LayoutError);
}
