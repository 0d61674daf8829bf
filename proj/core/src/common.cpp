#include "posterlab/common.hpp"

#include "posterlab/rng.hpp"

namespace posterlab {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::GenerationFailure: return "generation-failure";
        case ErrorKind::LayoutTooSmall: return "layout-too-small";
        case ErrorKind::InvalidLayout: return "invalid-layout";
        case ErrorKind::NoAlternative: return "no-alternative";
        case ErrorKind::NoDistinctLayout: return "no-distinct-layout";
        case ErrorKind::CannotPerturb: return "cannot-perturb";
        case ErrorKind::PolicyViolation: return "policy-violation";
        case ErrorKind::DataIntegrity: return "data-integrity";
        case ErrorKind::UndefinedMetric: return "undefined-metric";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

uint64_t hash64(std::string_view bytes) {
    // FNV-1a, 64-bit.
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer.
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t root, std::string_view tag, uint64_t index) {
    uint64_t h = hash64(tag);
    return mix64(root ^ mix64(h + 0x632be59bd9b4e019ULL * index));
}

}  // namespace posterlab
