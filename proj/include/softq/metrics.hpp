#pragma once

#include <fstream>
#include <mutex>
#include <string>

#include <json.hpp>

namespace softq {

/// Line-atomic JSONL sink: every object becomes exactly one flushed line,
/// so the file stays valid JSONL even after an abrupt termination.
class JsonlWriter {
  public:
    explicit JsonlWriter(const std::string& path);

    void write(const nlohmann::ordered_json& object);
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::mutex mu_;
    std::ofstream out_;
};

}  // namespace softq
