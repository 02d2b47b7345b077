#include "quiclens/params.hpp"

namespace quiclens {

std::vector<uint32_t> AckLengthWindow::snapshot() const {
    std::vector<uint32_t> out;
    out.reserve(count_);
    if (count_ < kCapacity) {
        for (size_t i = 0; i < count_; ++i) out.push_back(buf_[i]);
    } else {
        for (size_t i = 0; i < kCapacity; ++i)
            out.push_back(buf_[(next_ + i) % kCapacity]);
    }
    return out;
}

}  // namespace quiclens
