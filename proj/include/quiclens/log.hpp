#pragma once

#include <iostream>

namespace quiclens {

// Diagnostics level from the QUICLENS_LOG env var: "info" or "debug".
int log_level();

}  // namespace quiclens

#define QUICLENS_LOG_INFO(expr)                                   \
    do {                                                          \
        if (::quiclens::log_level() >= 1)                         \
            std::cerr << "[quiclens] " << expr << std::endl;      \
    } while (0)

#define QUICLENS_LOG_DEBUG(expr)                                  \
    do {                                                          \
        if (::quiclens::log_level() >= 2)                         \
            std::cerr << "[quiclens:debug] " << expr << std::endl; \
    } while (0)
