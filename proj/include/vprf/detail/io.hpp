#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

namespace vprf::detail {

// Writes through a temp file in the same directory, then renames into
// place, so readers never observe a partially written file.
inline void atomic_write(const std::string& path,
                         const std::function<void(std::ostream&)>& body,
                         bool binary = false) {
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        body(out);
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot move " + tmp.string() + " to " + path +
                                 ": " + ec.message());
    }
}

} // namespace vprf::detail
