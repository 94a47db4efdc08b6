#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "cad/error.hpp"
#include "cad/language_model.hpp"
#include "cad/remote_lm.hpp"
#include "cad/table_lm.hpp"

namespace cad {

// "table:<path>" loads a TableLM spec file; "remote:<url>" connects to a
// logit server. Relative table paths resolve against `base_dir`.
inline std::unique_ptr<LanguageModel> open_model(const std::string& uri, const std::filesystem::path& base_dir = {}) {
    constexpr std::string_view table = "table:";
    constexpr std::string_view remote = "remote:";
    if (uri.rfind(table, 0) == 0) {
        std::filesystem::path p = uri.substr(table.size());
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return std::make_unique<TableLM>(load_table_lm(p));
    }
    if (uri.rfind(remote, 0) == 0) return std::make_unique<RemoteLM>(uri.substr(remote.size()));
    throw InvalidInput("model must be 'table:<path>' or 'remote:<url>', got '" + uri + "'");
}

}  // namespace cad
