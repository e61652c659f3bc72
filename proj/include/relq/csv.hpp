#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "relq/model_io.hpp"

namespace relq {

// Delimited-text writer. Floats go out with 9 significant digits.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : path_(path), out_(path) {
        if (!out_) throw IoError("cannot write " + path);
    }

    ~CsvWriter() { finish(); }

    CsvWriter& field(const std::string& s) {
        sep();
        out_ << s;
        return *this;
    }
    // without this, string literals would convert to bool
    CsvWriter& field(const char* s) { return field(std::string(s)); }
    CsvWriter& field(long long v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
    CsvWriter& field(long v) { return field(static_cast<long long>(v)); }
    CsvWriter& field(bool v) { return field(static_cast<long long>(v ? 1 : 0)); }
    CsvWriter& field(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.9g", v);
        sep();
        out_ << buf;
        return *this;
    }

    void endrow() {
        out_ << "\n";
        first_ = true;
    }

    void finish() {
        if (!done_) {
            out_.flush();
            if (!out_) throw IoError("write failed: " + path_);
            done_ = true;
        }
    }

  private:
    void sep() {
        if (!first_) out_ << ",";
        first_ = false;
    }

    std::string path_;
    std::ofstream out_;
    bool first_ = true;
    bool done_ = false;
};

}  // namespace relq
