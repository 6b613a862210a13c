#pragma once

#include <stdexcept>
#include <string>

namespace kneenet {

// Every failure the library reports derives from Error so callers can catch
// one type at the CLI boundary and still discriminate where it matters.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define KNEENET_DEFINE_ERROR(Name)            \
    class Name : public Error {               \
    public:                                   \
        using Error::Error;                   \
    }

KNEENET_DEFINE_ERROR(FormatError);      // malformed NPY magic/header
KNEENET_DEFINE_ERROR(ShapeError);       // wrong rank, Fortran order, tensor shape mismatch
KNEENET_DEFINE_ERROR(DtypeError);       // unsupported NPY element type
KNEENET_DEFINE_ERROR(ParseError);       // malformed CSV / JSON content
KNEENET_DEFINE_ERROR(IntegrityError);   // duplicate ids, inconsistent records
KNEENET_DEFINE_ERROR(LayoutError);      // dataset directory layout
KNEENET_DEFINE_ERROR(DomainError);      // argument outside its mathematical domain
KNEENET_DEFINE_ERROR(WindowError);      // middle window larger than the volume
KNEENET_DEFINE_ERROR(GeometryError);    // crop larger than slice
KNEENET_DEFINE_ERROR(UsageError);       // API misuse, e.g. backward on a stale cache
KNEENET_DEFINE_ERROR(OptimizerError);   // non-finite gradients
KNEENET_DEFINE_ERROR(ConfigError);      // invalid run/model configuration
KNEENET_DEFINE_ERROR(MetricError);      // undefined AUC, degenerate class weights
KNEENET_DEFINE_ERROR(IoError);          // filesystem failures
KNEENET_DEFINE_ERROR(SearchError);      // every grid-search cell failed

#undef KNEENET_DEFINE_ERROR

}  // namespace kneenet
