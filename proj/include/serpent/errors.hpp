#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace serpent
{
    enum class ErrorCode
    {
        limit_violation,
        index_out_of_grid,
        out_of_workspace,
        unconverged_cell,
        model_mismatch,
        fingerprint_mismatch,
        file_error,
        version_mismatch,
        config_error,
        invalid_argument,
    };

    constexpr std::string_view to_string(ErrorCode code)
    {
        switch (code)
        {
        case ErrorCode::limit_violation: return "limit_violation";
        case ErrorCode::index_out_of_grid: return "index_out_of_grid";
        case ErrorCode::out_of_workspace: return "out_of_workspace";
        case ErrorCode::unconverged_cell: return "unconverged_cell";
        case ErrorCode::model_mismatch: return "model_mismatch";
        case ErrorCode::fingerprint_mismatch: return "fingerprint_mismatch";
        case ErrorCode::file_error: return "file_error";
        case ErrorCode::version_mismatch: return "version_mismatch";
        case ErrorCode::config_error: return "config_error";
        case ErrorCode::invalid_argument: return "invalid_argument";
        }
        return "unknown";
    }

    /// Single exception type for the library; the code discriminates.
    /// `sample_index` is set by trajectory planning to name the offending sample.
    class Error : public std::runtime_error
    {
    public:
        Error(ErrorCode code, const std::string &detail, std::optional<std::size_t> sample_index = std::nullopt)
            : std::runtime_error(std::string(to_string(code)) + ": " + detail),
              code_(code), detail_(detail), sample_index_(sample_index)
        {
        }

        ErrorCode code() const noexcept { return code_; }
        const std::string &detail() const noexcept { return detail_; }
        std::optional<std::size_t> sample_index() const noexcept { return sample_index_; }

    private:
        ErrorCode code_;
        std::string detail_;
        std::optional<std::size_t> sample_index_;
    };
}
