#include "softq/metrics.hpp"

#include <stdexcept>

namespace softq {

JsonlWriter::JsonlWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("JsonlWriter: cannot write \"" + path + "\"");
}

void JsonlWriter::write(const nlohmann::ordered_json& object) {
    const std::string line = object.dump();
    std::lock_guard lock(mu_);
    out_ << line << '\n';
    out_.flush();
}

}  // namespace softq
