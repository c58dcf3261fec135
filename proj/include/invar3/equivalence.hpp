#pragma once

#include "invar3/invariants.hpp"
#include "invar3/parallel.hpp"
#include "invar3/quantize.hpp"
#include "invar3/transform.hpp"

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace invar3 {

struct NormalizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeneralPositionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Rect {
    double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
};

// Union of rectangles, each sampled on an nx x ny lattice including the edges.
struct DomainGrid {
    std::vector<Rect> rects{Rect{}};
    int nx = 12;
    int ny = 12;

    // Equivalence needs at least 8 x 8 samples per rectangle; plain sampling needs 2.
    void validate(int min_resolution = 8) const;
    std::vector<Point> samples() const;
    std::size_t size() const { return rects.size() * static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    bool contains(Point p, double slack = 0.0) const;
};

enum class FieldMode { Scalar, Bundle };
std::string to_string(FieldMode m);

enum class Answer { Yes, No, Inconclusive };
std::string to_string(Answer a);

struct EquivalenceConfig {
    double tol = 1e-6;
    double overlap = 0.5;       // minimum located fraction
    double min_regular = 0.5;   // minimum usable fraction of each grid
    double jacobian_floor = 1e-6; // |dIa ^ dIb| relative to |dIa| |dIb| at each point
    int resample = 24;
    int seeds = 4;              // nearest-sample Newton seeds per located point
    double locate_tol = 1e-6;   // agreement of all four invariants, relative to max(|I|, median |I|)
    RegularityConfig regularity{};
    // Fixed order of invariant pairs (1-based indices into I1..I4).
    std::vector<std::array<int, 2>> pairs{{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}};
};

// Pointwise data of the natural model at one sample.
struct ModelSample {
    Point x{};
    bool regular = false;
    std::string reason;                 // irregularity condition when not regular
    std::array<double, 4> I{};          // Wagner-coframe symbol invariants
    std::array<std::array<double, 2>, 4> dI{}; // their gradients
    std::array<Jet2, 4> Ijets;          // order-3 invariant jets, for Taylor seeding
    std::array<double, 2> u{};          // natural coordinates for the chosen pair
    double jacobian = 0.0;
    bool usable = false;                // regular and Jacobian above the floor
    std::vector<double> fields;
    OneForm theta;                      // bundle connection form (bundle mode only)
    Operator3<Jet2> jets;               // order-4 coefficient jets
};

struct NaturalModel {
    FieldMode mode = FieldMode::Scalar;
    std::array<int, 2> pair{1, 2};
    DomainGrid grid;
    std::vector<ModelSample> samples;
    std::vector<std::array<std::size_t, 3>> triangles; // usable sample indices
    std::vector<std::string> field_names;
    double jacobian_floor = 0.0;
    double usable_fraction = 0.0;
    // Fields resampled on a regular (u1, u2) grid; NaN outside the image.
    std::array<double, 2> u_min{}, u_max{};
    int resample = 0;
    std::vector<std::vector<double>> resampled; // [field][i * resample + j], u1 index i
};

std::vector<std::string> field_names(FieldMode mode);

// Fields at a point for the given pair; the operator jets must have order >= 4.
struct PointFields {
    std::array<double, 4> I{};
    std::array<double, 2> u{};
    std::array<std::array<double, 2>, 2> jac{};
    std::vector<double> fields;
    OneForm theta;
};
PointFields point_fields(const Operator3<Jet2>& a, FieldMode mode, std::array<int, 2> pair,
                         const RegularityConfig& cfg = {});

// Samples A over the grid (order-4 jets). Pair selection happens separately.
std::vector<ModelSample> sample_operator(const OperatorField& a, const DomainGrid& grid, FieldMode mode,
                                         const RegularityConfig& cfg = {});

// First pair in the configured order that is usable on enough of every sample set; nullopt if none.
std::optional<std::array<int, 2>> select_pair(const std::vector<const std::vector<ModelSample>*>& sets,
                                              const EquivalenceConfig& cfg);

NaturalModel build_natural_model(const OperatorField& a, const DomainGrid& grid, FieldMode mode,
                                 const EquivalenceConfig& cfg = {},
                                 std::optional<std::array<int, 2>> pair = std::nullopt);

struct FieldDiagnostic {
    std::string name;
    double max_discrepancy = 0.0; // |a - b| / max(|a|, |b|, 1e-4 scale)
    double scale = 0.0;           // median |field| over both models
    bool flagged = false;
};

struct ObstructionReport {
    bool evaluated = false;
    bool closed = false;
    double curvature_residual = 0.0; // max |K~' - K~| relative to the K scale
    double loop_integral = 0.0;      // closed-loop integral of theta_diff
    int loop_points = 0;
};

struct Verdict {
    Answer answer = Answer::Inconclusive;
    std::string reason;
    double max_discrepancy = 0.0;
    double overlap = 0.0;            // max of the matched fractions
    std::array<double, 2> located{}; // usable points of A (of B) with a partner of equal invariants
    std::array<double, 2> matched{}; // ... whose partner also reproduces every field
    std::array<double, 2> usable{};  // usable grid fractions
    std::optional<std::array<int, 2>> pair;
    std::vector<FieldDiagnostic> fields;
    std::optional<ObstructionReport> obstruction;
    int branch = 0; // equation mode: +1 for B0, -1 for -B0
};

Verdict equivalent_scalar(const OperatorField& a, const DomainGrid& ga, const OperatorField& b, const DomainGrid& gb,
                          const EquivalenceConfig& cfg = {});
Verdict equivalent_bundle(const OperatorField& a, const DomainGrid& ga, const OperatorField& b, const DomainGrid& gb,
                          const EquivalenceConfig& cfg = {});

// lambda = -g_{-1/3}(sigma_3)(theta, theta) with theta from the conformal class; A0 = lambda^{-3/2} A.
Jet2 normalization_factor(const Operator3<Jet2>& a, const RegularityConfig& cfg = {});
// Needs a(p, order + 3).
Operator3<Jet2> normalize_at(const OperatorField& a, Point p, int order, const RegularityConfig& cfg = {});
OperatorField normalize(OperatorField a, RegularityConfig cfg = {});

Verdict equation_equivalent(const OperatorField& a, const DomainGrid& ga, const OperatorField& b,
                            const DomainGrid& gb, const EquivalenceConfig& cfg = {});

} // namespace invar3
