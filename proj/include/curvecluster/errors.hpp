#pragma once

#include <stdexcept>
#include <string>

namespace curvecluster {

// Failure taxonomy shared by the whole library.  The CLI maps these onto
// process exit codes, so every throw site picks the code that best describes
// *why* the operation cannot proceed, not where it happened.
enum class errc {
    // malformed or inconsistent input
    unbalanced_panel,
    out_of_support,
    too_few_series,
    duplicate_observation,
    bad_bandwidth,
    empty_grid,
    bad_group,
    bad_level,
    bad_reps,
    cluster_count_mismatch,
    malformed_dendrogram,
    bad_config,
    io_error,
    // data-driven numerical degeneracy
    insufficient_local_data,
    degenerate_density,
    degenerate_variance,
    all_points_degenerate,
    non_finite_distance,
    // internal numerical machinery gave up
    quadrature_failure,
    factorization_failure,
};

const char* errc_name(errc c);

class Error : public std::runtime_error {
  public:
    Error(errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    errc code() const noexcept { return code_; }

    // Coarse classification used for CLI exit codes.
    bool is_input_error() const noexcept;
    bool is_degeneracy() const noexcept;

  private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace curvecluster
