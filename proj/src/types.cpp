#include "kneenet/types.hpp"

namespace kneenet {

std::string_view to_string(Plane p) {
    switch (p) {
        case Plane::axial: return "axial";
        case Plane::coronal: return "coronal";
        case Plane::sagittal: return "sagittal";
    }
    return "?";
}

std::string_view to_string(Task t) {
    switch (t) {
        case Task::acl: return "acl";
        case Task::meniscus: return "meniscus";
        case Task::abnormal: return "abnormal";
    }
    return "?";
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "valid"; }

std::optional<Plane> parse_plane(std::string_view s) {
    for (auto p : kAllPlanes)
        if (to_string(p) == s) return p;
    return std::nullopt;
}

std::optional<Task> parse_task(std::string_view s) {
    for (auto t : kAllTasks)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
    for (auto x : kAllSplits)
        if (to_string(x) == s) return x;
    return std::nullopt;
}

}  // namespace kneenet
