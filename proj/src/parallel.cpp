#include "axsym/parallel.hpp"

#include <cstdlib>
#include <string>

namespace axsym {

int default_workers() {
    if (const char* env = std::getenv("AXSYM_WORKERS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) return v;
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace axsym
