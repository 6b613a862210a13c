#include "kneenet/volume.hpp"

#include <string>

#include "kneenet/error.hpp"

namespace kneenet {

void MriVolume::validate() const {
    if (slices < 1 || height < 1 || width < 1)
        throw ShapeError("volume " + case_id + ": every dimension must be >= 1");
    if (data.size() != slices * height * width)
        throw ShapeError("volume " + case_id + ": data length does not match s*h*w");
    for (double v : data)
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("volume " + case_id + ": intensity outside [0,1]");
}

}  // namespace kneenet
