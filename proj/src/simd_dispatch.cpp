#include "curvecluster/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace curvecluster::simd {

namespace {

const Kernels* lookup(const std::string& name) {
    if (name == "scalar") return &scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2" && avx2_available()) return &avx2_kernels();
#endif
#if defined(__aarch64__)
    if (name == "neon") return &neon_kernels();
#endif
    return nullptr;
}

const Kernels* pick_best() {
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_available()) return &avx2_kernels();
#endif
#if defined(__aarch64__)
    return &neon_kernels();
#endif
    return &scalar_kernels();
}

const Kernels* resolve_auto() {
    if (const char* env = std::getenv("CURVECLUSTER_SIMD")) {
        if (const Kernels* k = lookup(env)) return k;
        return &scalar_kernels();  // unknown or unavailable request: safe fallback
    }
    return pick_best();
}

std::atomic<const Kernels*> g_forced{nullptr};

}  // namespace

const Kernels& active_kernels() {
    if (const Kernels* k = g_forced.load(std::memory_order_acquire)) return *k;
    static const Kernels* auto_pick = resolve_auto();
    return *auto_pick;
}

std::string force_kernels(const char* name) {
    if (name == nullptr) {
        g_forced.store(nullptr, std::memory_order_release);
    } else {
        const Kernels* k = lookup(name);
        g_forced.store(k ? k : &scalar_kernels(), std::memory_order_release);
    }
    return active_kernels().name;
}

}  // namespace curvecluster::simd
