#pragma once

#include "invar3/equivalence.hpp"
#include "invar3/expr.hpp"
#include "invar3/quantize.hpp"

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace invar3::cli {

inline constexpr const char* kEngineVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

enum ExitCode { kOk = 0, kNotEquivalent = 1, kInconclusive = 2, kInputError = 3 };

// Bad arguments, unreadable files, malformed specs or coefficients outside their domain.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainFailure {
    Point x{};
    std::string coefficient;
    std::string message;
};

struct Tolerances {
    double singular_eps = kDefaultSingularEps;
    double regularity_eps = 1e-9;
    double tol = 1e-6;
    double overlap = 0.5;
    double min_regular = 0.5;
    double jacobian_floor = 1e-6;
    double locate_tol = 1e-6;
};

struct OperatorSpec {
    std::string path;
    std::array<std::string, 10> text;
    Operator3<Expr> coefficients;
    bool bundle = false;
    DomainGrid grid;
    Tolerances tolerances;
};

// Parses an operator document; missing coefficients default to "0".
OperatorSpec parse_spec(const std::string& json_text, const std::string& path = "");
OperatorSpec load_spec(const std::string& path);

// Grid points where some coefficient cannot be evaluated or is not finite.
std::vector<DomainFailure> domain_failures(const OperatorSpec& spec);

// Runs one invocation; args exclude the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace invar3::cli
