#include "kneenet/npy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "kneenet/error.hpp"

namespace kneenet::npy {

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

std::string descr_of(Dtype d) {
    switch (d) {
        case Dtype::u8: return "|u1";
        case Dtype::f32: return "<f4";
        case Dtype::f64: return "<f8";
    }
    return "";
}

std::size_t item_size(Dtype d) {
    switch (d) {
        case Dtype::u8: return 1;
        case Dtype::f32: return 4;
        case Dtype::f64: return 8;
    }
    return 0;
}

// Value of `key` in the header dict, as raw text up to the next top-level comma or brace.
std::string dict_value(const std::string& dict, const std::string& key) {
    const std::string quoted1 = "'" + key + "'";
    const std::string quoted2 = "\"" + key + "\"";
    auto pos = dict.find(quoted1);
    std::size_t klen = quoted1.size();
    if (pos == std::string::npos) {
        pos = dict.find(quoted2);
        klen = quoted2.size();
    }
    if (pos == std::string::npos) throw FormatError("npy header: missing key '" + key + "'");
    pos = dict.find(':', pos + klen);
    if (pos == std::string::npos) throw FormatError("npy header: malformed entry '" + key + "'");
    ++pos;
    while (pos < dict.size() && dict[pos] == ' ') ++pos;
    std::size_t end = pos;
    if (end < dict.size() && dict[end] == '(') {
        end = dict.find(')', end);
        if (end == std::string::npos) throw FormatError("npy header: unterminated shape tuple");
        return dict.substr(pos, end - pos + 1);
    }
    while (end < dict.size() && dict[end] != ',' && dict[end] != '}') ++end;
    std::string v = dict.substr(pos, end - pos);
    while (!v.empty() && v.back() == ' ') v.pop_back();
    return v;
}

}  // namespace

Header parse_header(std::string_view bytes) {
    if (bytes.size() < 10 || bytes.substr(0, kMagicLen) != std::string_view(kMagic, kMagicLen))
        throw FormatError("npy: bad magic string");
    const auto major = static_cast<unsigned char>(bytes[6]);
    std::size_t header_len = 0;
    std::size_t prefix = 0;
    if (major == 1) {
        header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
        prefix = 10;
    } else if (major == 2 && bytes.size() >= 12) {
        for (int i = 0; i < 4; ++i)
            header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
        prefix = 12;
    } else {
        throw FormatError("npy: unsupported format version " + std::to_string(major));
    }
    if (bytes.size() < prefix + header_len) throw FormatError("npy: truncated header");
    const std::string dict(bytes.substr(prefix, header_len));
    if (dict.find('{') == std::string::npos || dict.find('}') == std::string::npos)
        throw FormatError("npy: header is not a dict literal");

    Header h;
    h.data_offset = prefix + header_len;

    std::string descr = dict_value(dict, "descr");
    if (descr.size() < 2 || (descr.front() != '\'' && descr.front() != '"'))
        throw FormatError("npy header: descr is not a string");
    descr = descr.substr(1, descr.size() - 2);
    if (descr == "|u1" || descr == "<u1" || descr == "u1") h.dtype = Dtype::u8;
    else if (descr == "<f4") h.dtype = Dtype::f32;
    else if (descr == "<f8") h.dtype = Dtype::f64;
    else throw DtypeError("npy: unsupported element type '" + descr + "'");

    const std::string fo = dict_value(dict, "fortran_order");
    if (fo == "False") h.fortran_order = false;
    else if (fo == "True") h.fortran_order = true;
    else throw FormatError("npy header: fortran_order must be True or False");

    const std::string shape = dict_value(dict, "shape");
    if (shape.empty() || shape.front() != '(') throw FormatError("npy header: shape is not a tuple");
    static const std::regex number(R"((\d+))");
    for (auto it = std::sregex_iterator(shape.begin(), shape.end(), number); it != std::sregex_iterator(); ++it)
        h.shape.push_back(static_cast<std::size_t>(std::stoull((*it)[1].str())));
    return h;
}

Header read_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string buf(12, '\0');
    in.read(buf.data(), 12);
    buf.resize(static_cast<std::size_t>(in.gcount()));
    if (buf.size() < 10 || buf.substr(0, kMagicLen) != std::string(kMagic, kMagicLen))
        throw FormatError("npy: bad magic string in " + path.string());
    std::size_t header_len = static_cast<unsigned char>(buf[8]) | (static_cast<unsigned char>(buf[9]) << 8);
    std::size_t prefix = 10;
    if (static_cast<unsigned char>(buf[6]) == 2 && buf.size() >= 12) {
        header_len = 0;
        for (int i = 0; i < 4; ++i)
            header_len |= static_cast<std::size_t>(static_cast<unsigned char>(buf[8 + i])) << (8 * i);
        prefix = 12;
    }
    std::string all(prefix + header_len, '\0');
    in.clear();
    in.seekg(0);
    in.read(all.data(), static_cast<std::streamsize>(all.size()));
    if (static_cast<std::size_t>(in.gcount()) != all.size()) throw FormatError("npy: truncated header in " + path.string());
    return parse_header(all);
}

std::string make_header(Dtype dtype, const std::vector<std::size_t>& shape) {
    std::ostringstream dict;
    dict << "{'descr': '" << descr_of(dtype) << "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        dict << shape[i];
        if (shape.size() == 1 || i + 1 < shape.size()) dict << ",";
        if (i + 1 < shape.size()) dict << " ";
    }
    dict << "), }";
    std::string d = dict.str();
    // magic(6) + version(2) + len(2) + dict + '\n' padded to a multiple of 64.
    const std::size_t unpadded = kMagicLen + 4 + d.size() + 1;
    const std::size_t padded = (unpadded + 63) / 64 * 64;
    d.append(padded - unpadded, ' ');
    d.push_back('\n');
    std::string out(kMagic, kMagicLen);
    out.push_back('\x01');
    out.push_back('\x00');
    out.push_back(static_cast<char>(d.size() & 0xff));
    out.push_back(static_cast<char>((d.size() >> 8) & 0xff));
    out += d;
    return out;
}

namespace {

template <class T>
void write_raw(const std::filesystem::path& path, Dtype dtype, const std::vector<std::size_t>& shape,
               std::span<const T> data) {
    std::size_t count = 1;
    for (auto s : shape) count *= s;
    if (count != data.size()) throw ShapeError("npy write: shape does not match data length");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    const std::string header = make_header(dtype, shape);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_u8(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
              std::span<const std::uint8_t> data) {
    write_raw(path, Dtype::u8, shape, data);
}
void write_f32(const std::filesystem::path& path, const std::vector<std::size_t>& shape, std::span<const float> data) {
    write_raw(path, Dtype::f32, shape, data);
}
void write_f64(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               std::span<const double> data) {
    write_raw(path, Dtype::f64, shape, data);
}

}  // namespace kneenet::npy

namespace kneenet {

MriVolume load_volume(const std::filesystem::path& path, std::string case_id, Plane plane) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const npy::Header h = npy::parse_header(bytes);
    if (h.fortran_order) throw ShapeError(path.string() + ": Fortran-ordered arrays are not supported");
    if (h.shape.size() != 3) throw ShapeError(path.string() + ": expected a 3-D array");

    MriVolume vol(std::move(case_id), plane, h.shape[0], h.shape[1], h.shape[2]);
    if (vol.slices < 1 || vol.height < 1 || vol.width < 1) throw ShapeError(path.string() + ": empty dimension");
    const std::size_t count = vol.data.size();
    const std::size_t need = count * npy::item_size(h.dtype);
    if (bytes.size() - h.data_offset < need) throw FormatError(path.string() + ": truncated data");
    const char* raw = bytes.data() + h.data_offset;

    auto clip = [](double v) { return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0); };
    switch (h.dtype) {
        case npy::Dtype::u8:
            for (std::size_t i = 0; i < count; ++i)
                vol.data[i] = static_cast<unsigned char>(raw[i]) / 255.0;
            break;
        case npy::Dtype::f32:
            for (std::size_t i = 0; i < count; ++i) {
                float f;
                std::memcpy(&f, raw + 4 * i, 4);
                vol.data[i] = clip(f);
            }
            break;
        case npy::Dtype::f64:
            for (std::size_t i = 0; i < count; ++i) {
                double d;
                std::memcpy(&d, raw + 8 * i, 8);
                vol.data[i] = clip(d);
            }
            break;
    }
    return vol;
}

void save_volume_u8(const std::filesystem::path& path, const MriVolume& vol) {
    std::vector<std::uint8_t> q(vol.data.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        q[i] = static_cast<std::uint8_t>(std::lround(std::clamp(vol.data[i], 0.0, 1.0) * 255.0));
    npy::write_u8(path, {vol.slices, vol.height, vol.width}, q);
}

}  // namespace kneenet
