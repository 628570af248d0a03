#pragma once

#include <stdexcept>
#include <string>

namespace trajae {

/// Failure categories. The CLI maps the configuration group to exit code 1
/// and everything else to exit code 2.
enum class Errc {
    dimension_mismatch,
    too_short,
    out_of_range,
    degenerate_segment,
    mode_mismatch,
    contract_violation,
    cannot_split,
    empty_input,
    format,
    io,
    infeasible_ratio,
    config,
};

inline const char* to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::too_short: return "too short";
    case Errc::out_of_range: return "out of range";
    case Errc::degenerate_segment: return "degenerate segment";
    case Errc::mode_mismatch: return "mode mismatch";
    case Errc::contract_violation: return "contract violation";
    case Errc::cannot_split: return "cannot split";
    case Errc::empty_input: return "empty input";
    case Errc::format: return "format error";
    case Errc::io: return "i/o error";
    case Errc::infeasible_ratio: return "infeasible ratio";
    case Errc::config: return "configuration error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    Errc code() const noexcept { return code_; }

    bool is_configuration() const noexcept
    {
        return code_ == Errc::config || code_ == Errc::infeasible_ratio;
    }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace trajae
