#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace kneenet {

enum class Plane { axial, coronal, sagittal };
enum class Task { acl, meniscus, abnormal };
enum class Split { train, valid };

inline constexpr std::array<Plane, 3> kAllPlanes{Plane::axial, Plane::coronal, Plane::sagittal};
inline constexpr std::array<Task, 3> kAllTasks{Task::acl, Task::meniscus, Task::abnormal};
inline constexpr std::array<Split, 2> kAllSplits{Split::train, Split::valid};

std::string_view to_string(Plane p);
std::string_view to_string(Task t);
std::string_view to_string(Split s);

std::optional<Plane> parse_plane(std::string_view s);
std::optional<Task> parse_task(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

// Plane/task used as array indices.
constexpr std::size_t index_of(Plane p) { return static_cast<std::size_t>(p); }
constexpr std::size_t index_of(Task t) { return static_cast<std::size_t>(t); }
constexpr std::size_t index_of(Split s) { return static_cast<std::size_t>(s); }

}  // namespace kneenet
