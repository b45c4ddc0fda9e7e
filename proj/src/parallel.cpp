#include "varint/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace varint {

namespace {

std::atomic<int> g_override{0};

int from_environment() {
    const char* env = std::getenv("VARINT_THREADS");
    if (!env) return 0;
    try {
        const int n = std::stoi(env);
        return n > 0 ? n : 0;
    } catch (...) {
        return 0;
    }
}

}  // namespace

int thread_count() {
    if (const int n = g_override.load()) return n;
    static const int env = from_environment();
    if (env) return env;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_thread_count(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace varint
