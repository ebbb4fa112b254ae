#include "stargraph/kernels.hpp"

#include "stargraph/errors.hpp"

namespace stargraph::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table& resolve(const std::string& name) {
    if (name == "scalar") return scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2") {
        if (!avx2_available())
            throw ConfigError("kernels", "avx2 kernels requested but CPU lacks AVX2/FMA");
        return avx2_table();
    }
#else
    if (name == "avx2")
        throw ConfigError("kernels", "avx2 kernels unavailable on this architecture");
#endif
    if (name == "auto") {
#if defined(__x86_64__) || defined(_M_X64)
        if (avx2_available()) return avx2_table();
#endif
        return scalar_table();
    }
    throw ConfigError("kernels", "unknown kernel table '" + name + "'");
}

namespace {
const Table* g_active = nullptr;
}

const Table& active() {
    if (!g_active) g_active = &resolve("auto");
    return *g_active;
}

void select(const std::string& name) { g_active = &resolve(name); }

}  // namespace stargraph::kernels
