#include "kneenet/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "kneenet/error.hpp"
#include "kneenet/npy.hpp"

namespace kneenet {

int LabelTable::at(const std::string& case_id) const {
    auto it = entries.find(case_id);
    if (it == entries.end())
        throw IntegrityError("no " + std::string(to_string(task)) + " label for case " + case_id);
    return it->second;
}

LabelTable parse_labels(std::string_view text, Task task) {
    LabelTable table;
    table.task = task;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
            throw ParseError("labels line " + std::to_string(line_no) + ": expected 'case_id,label'");
        std::string id(line.substr(0, comma));
        const std::string_view label = line.substr(comma + 1);
        if (id.empty()) throw ParseError("labels line " + std::to_string(line_no) + ": empty case id");
        if (label != "0" && label != "1")
            throw ParseError("labels line " + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                             std::string(label) + "'");
        if (!table.entries.emplace(id, label == "1" ? 1 : 0).second)
            throw IntegrityError("labels: duplicate case id " + id);
    }
    return table;
}

LabelTable load_labels(const std::filesystem::path& path, Task task) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_labels(ss.str(), task);
}

void save_labels(const std::filesystem::path& path, const LabelTable& table) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [id, label] : table.entries) out << id << ',' << label << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

const CaseEntry* DatasetManifest::find(const std::string& id) const {
    auto it = std::lower_bound(cases.begin(), cases.end(), id,
                               [](const CaseEntry& c, const std::string& v) { return c.id < v; });
    return (it != cases.end() && it->id == id) ? &*it : nullptr;
}

std::filesystem::path plane_dir(const std::filesystem::path& root, Split split, Plane plane) {
    return root / std::string(to_string(split)) / std::string(to_string(plane));
}

std::filesystem::path labels_path(const std::filesystem::path& root, Split split, Task task) {
    return root / (std::string(to_string(split)) + "-" + std::string(to_string(task)) + ".csv");
}

DatasetManifest scan_dataset(const std::filesystem::path& root, Split split) {
    namespace fs = std::filesystem;
    const fs::path split_dir = root / std::string(to_string(split));
    if (!fs::is_directory(split_dir)) throw LayoutError("missing split directory " + split_dir.string());

    std::array<std::set<std::string>, 3> present;
    for (auto plane : kAllPlanes) {
        const fs::path dir = plane_dir(root, split, plane);
        if (!fs::is_directory(dir)) continue;  // every case then lacks this plane
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".npy") continue;
            present[index_of(plane)].insert(entry.path().stem().string());
        }
    }

    std::set<std::string> all;
    for (const auto& s : present) all.insert(s.begin(), s.end());

    DatasetManifest m;
    m.root = root;
    m.split = split;
    for (const auto& id : all) {
        Exclusion ex{id, {}};
        for (auto plane : kAllPlanes)
            if (!present[index_of(plane)].count(id)) ex.missing.push_back(plane);
        if (!ex.missing.empty()) {
            m.exclusions.push_back(std::move(ex));
            continue;
        }
        CaseEntry c;
        c.id = id;
        for (auto plane : kAllPlanes) {
            c.files[index_of(plane)] = plane_dir(root, split, plane) / (id + ".npy");
            const auto h = npy::read_header(c.files[index_of(plane)]);
            if (h.shape.size() != 3) throw ShapeError(c.files[index_of(plane)].string() + ": expected a 3-D array");
            c.slice_counts[index_of(plane)] = h.shape[0];
        }
        m.cases.push_back(std::move(c));
    }
    return m;
}

std::array<DatasetManifest, 2> scan_dataset(const std::filesystem::path& root) {
    return {scan_dataset(root, Split::train), scan_dataset(root, Split::valid)};
}

}  // namespace kneenet
