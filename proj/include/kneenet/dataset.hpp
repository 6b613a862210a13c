#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kneenet/types.hpp"

namespace kneenet {

struct LabelTable {
    Task task = Task::acl;
    std::map<std::string, int> entries;

    int at(const std::string& case_id) const;
    bool contains(const std::string& case_id) const { return entries.count(case_id) != 0; }
    std::size_t size() const { return entries.size(); }
};

/// Parses `case_id,label` rows (LF or CRLF). Label must be exactly 0 or 1.
LabelTable load_labels(const std::filesystem::path& path, Task task);
LabelTable parse_labels(std::string_view text, Task task);
void save_labels(const std::filesystem::path& path, const LabelTable& table);

struct CaseEntry {
    std::string id;
    std::array<std::filesystem::path, 3> files;  // indexed by Plane
    std::array<std::size_t, 3> slice_counts{};
};

struct Exclusion {
    std::string case_id;
    std::vector<Plane> missing;
};

struct DatasetManifest {
    std::filesystem::path root;
    Split split = Split::train;
    std::vector<CaseEntry> cases;  // lexicographic by id
    std::vector<Exclusion> exclusions;

    const CaseEntry* find(const std::string& id) const;
};

/// Layout: <root>/<split>/<plane>/<case_id>.npy, labels at <root>/<split>-<task>.csv.
std::filesystem::path plane_dir(const std::filesystem::path& root, Split split, Plane plane);
std::filesystem::path labels_path(const std::filesystem::path& root, Split split, Task task);

/// Lists every case present in all three planes of one split. Throws
/// LayoutError when the split or a plane directory is missing.
DatasetManifest scan_dataset(const std::filesystem::path& root, Split split);

/// Both splits; fails if either is missing (an empty root fails).
std::array<DatasetManifest, 2> scan_dataset(const std::filesystem::path& root);

}  // namespace kneenet
