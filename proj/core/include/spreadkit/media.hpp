#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spreadkit/errors.hpp"
#include "spreadkit/fieldlang.hpp"

namespace spreadkit::media {

enum class ReactionTag { KPP, Monostable, Ignition, BistableHomogeneous, Unclassified };

std::string to_string(ReactionTag tag);

struct ReactionClass {
    ReactionTag tag = ReactionTag::Unclassified;
    std::optional<double> theta;
    double S = 1.0;
    std::optional<double> integral;  // int_0^1 f, bistable only
    std::optional<double> sigma;     // metadata only, never used numerically
    std::vector<std::string> notes;
};

struct CheckResult {
    std::string name;
    std::string hypothesis;
    double worst_residual = 0.0;
    double tol = 0.0;
    bool pass = true;
    std::vector<double> witness;
    std::string note;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool all_pass() const;
    const CheckResult* first_failure() const;
    nlohmann::json to_json() const;
};

struct ValidationOptions {
    double tol = 1e-8;
    double periodicity_tol = 1e-10;
    std::size_t grid_per_axis = 64;
    std::size_t u_points = 257;
    std::size_t n_random = 1000;
    std::uint64_t seed = 42;
};

// Textual description of one problem instance. A accepts one entry
// (isotropic a*I), N entries (diagonal) or N(N+1)/2 entries (packed upper
// triangle). An empty q means zero drift. f may be "builtin:<family>".
struct MediumConfig {
    std::size_t dim = 1;
    std::vector<std::string> A{"1"};
    std::vector<std::string> q;
    std::string f = "u*(1-u)";
    fieldlang::ParamTable params;
};

// Expression text of a builtin reaction family, with default parameters
// merged into `params` when missing. Families: logistic, bistable,
// ignition, periodic_logistic.
std::string builtin_reaction(std::string_view family, fieldlang::ParamTable& params);

class MediumSpec {
public:
    MediumSpec(fieldlang::CoefficientField A, fieldlang::CoefficientField q, fieldlang::CoefficientField f,
               fieldlang::ParamTable params, ReactionClass rc, ValidationReport report);

    std::size_t dim() const { return A_.dim(); }
    const fieldlang::CoefficientField& diffusion() const { return A_; }
    const fieldlang::CoefficientField& drift() const { return q_; }
    const fieldlang::CoefficientField& reaction() const { return f_; }
    const fieldlang::ParamTable& params() const { return params_; }
    const ReactionClass& reaction_class() const { return class_; }
    const ValidationReport& report() const { return report_; }

    // f(x, s), identically zero for s <= 0 and s >= 1.
    double reaction_at(std::span<const double> x, double s) const;
    // d_u f(x, 0); throws NotDifferentiable for min/max/abs reactions.
    double linearization_at(std::span<const double> x) const;
    bool has_linearization() const { return df_.has_value(); }
    const fieldlang::Expr& linearization() const;

    bool homogeneous() const;
    bool drift_free() const;
    // Stable 16-hex-digit hash of the canonical expression text.
    std::string hash() const;
    nlohmann::json describe() const;

private:
    fieldlang::CoefficientField A_;
    fieldlang::CoefficientField q_;
    fieldlang::CoefficientField f_;
    fieldlang::ParamTable params_;
    ReactionClass class_;
    ValidationReport report_;
    std::optional<fieldlang::Expr> df_;
};

class MediumValidationError : public ValidationError {
public:
    MediumValidationError(const std::string& what, ValidationReport report)
        : ValidationError(what), report_(std::move(report)) {}
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

// Sample points: a grid_per_axis^N lattice of the unit cell followed by
// n_random uniform points from a fixed-seed generator.
std::vector<std::vector<double>> sample_points(std::size_t dim, const ValidationOptions& opts);

// Throws MediumValidationError naming the violated hypothesis and witness.
// Unclassifiable reactions are recorded as ReactionTag::Unclassified.
MediumSpec build_medium(const MediumConfig& cfg, const ValidationOptions& opts = {});

// Most specific tag whose sampled conditions hold; throws Unclassifiable.
ReactionClass classify_reaction(const fieldlang::CoefficientField& f, const fieldlang::ParamTable& params,
                                const ValidationOptions& opts = {});

}  // namespace spreadkit::media
