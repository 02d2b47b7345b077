#include "quiclens/log.hpp"

#include <cstdlib>
#include <cstring>

namespace quiclens {

int log_level() {
    static int level = [] {
        const char* env = std::getenv("QUICLENS_LOG");
        if (!env) return 0;
        if (std::strcmp(env, "debug") == 0) return 2;
        if (std::strcmp(env, "info") == 0) return 1;
        return 0;
    }();
    return level;
}

}  // namespace quiclens
