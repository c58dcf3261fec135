#include "invar3/cli.hpp"

#include "invar3/connection.hpp"
#include "invar3/invariants.hpp"
#include "invar3/parallel.hpp"
#include "invar3/transform.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace invar3::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr int kMaxResolution = 401;
constexpr std::size_t kMaxReportedFailures = 100;

double number(const json& v, const std::string& what)
{
    if (!v.is_number())
        throw InputError(what + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        throw InputError(what + " must be finite");
    return d;
}

std::array<double, 2> interval(const json& v, const std::string& what)
{
    if (!v.is_array() || v.size() != 2)
        throw InputError(what + " must be an array [lo, hi]");
    const double lo = number(v[0], what), hi = number(v[1], what);
    if (!(lo < hi))
        throw InputError(what + " must satisfy lo < hi");
    return {lo, hi};
}

int resolution(const json& v, const std::string& what)
{
    if (!v.is_number_integer())
        throw InputError(what + " must be an integer");
    const long n = v.get<long>();
    if (n < 2 || n > kMaxResolution)
        throw InputError(what + " must lie in [2, " + std::to_string(kMaxResolution) + "]");
    return static_cast<int>(n);
}

Rect rect_of(const json& v, const std::string& what)
{
    if (!v.is_object())
        throw InputError(what + " must be an object with x and y");
    for (const auto& [k, _] : v.items())
        if (k != "x" && k != "y")
            throw InputError(what + ": unknown key '" + k + "'");
    if (!v.contains("x") || !v.contains("y"))
        throw InputError(what + " needs both x and y");
    const auto x = interval(v["x"], what + ".x"), y = interval(v["y"], what + ".y");
    return {x[0], x[1], y[0], y[1]};
}

DomainGrid parse_domain(const json& d)
{
    if (!d.is_object())
        throw InputError("domain must be an object");
    static const std::set<std::string> keys = {"x", "y", "rects", "nx", "ny"};
    for (const auto& [k, _] : d.items())
        if (!keys.count(k))
            throw InputError("domain: unknown key '" + k + "'");
    DomainGrid g;
    if (d.contains("rects")) {
        if (d.contains("x") || d.contains("y"))
            throw InputError("domain: give either rects or x/y, not both");
        if (!d["rects"].is_array() || d["rects"].empty())
            throw InputError("domain.rects must be a non-empty array");
        g.rects.clear();
        for (std::size_t i = 0; i < d["rects"].size(); ++i)
            g.rects.push_back(rect_of(d["rects"][i], "domain.rects[" + std::to_string(i) + "]"));
    } else if (d.contains("x") || d.contains("y")) {
        json r;
        r["x"] = d.value("x", json::array({-1.0, 1.0}));
        r["y"] = d.value("y", json::array({-1.0, 1.0}));
        g.rects = {rect_of(r, "domain")};
    }
    if (d.contains("nx"))
        g.nx = resolution(d["nx"], "domain.nx");
    if (d.contains("ny"))
        g.ny = resolution(d["ny"], "domain.ny");
    return g;
}

Tolerances parse_tolerances(const json& t)
{
    if (!t.is_object())
        throw InputError("tolerances must be an object");
    Tolerances out;
    const std::map<std::string, double*> slots = {
        {"singular_eps", &out.singular_eps}, {"regularity_eps", &out.regularity_eps}, {"tol", &out.tol},
        {"overlap", &out.overlap},           {"min_regular", &out.min_regular},       {"jacobian_floor", &out.jacobian_floor},
        {"locate_tol", &out.locate_tol}};
    for (const auto& [k, v] : t.items()) {
        const auto it = slots.find(k);
        if (it == slots.end())
            throw InputError("tolerances: unknown key '" + k + "'");
        const double d = number(v, "tolerances." + k);
        if (!(d > 0.0))
            throw InputError("tolerances." + k + " must be positive");
        *it->second = d;
    }
    if (out.overlap > 1.0 || out.min_regular > 1.0)
        throw InputError("tolerances: overlap and min_regular are fractions in (0, 1]");
    return out;
}

std::string shortest(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json config_json(const Tolerances& t)
{
    const EquivalenceConfig defaults;
    json c;
    c["singular_eps"] = t.singular_eps;
    c["regularity_eps"] = t.regularity_eps;
    c["tol"] = t.tol;
    c["overlap"] = t.overlap;
    c["min_regular"] = t.min_regular;
    c["jacobian_floor"] = t.jacobian_floor;
    c["locate_tol"] = t.locate_tol;
    c["seeds"] = defaults.seeds;
    c["resample"] = defaults.resample;
    return c;
}

json grid_json(const DomainGrid& g)
{
    json rects = json::array();
    for (const Rect& r : g.rects)
        rects.push_back({{"x", {r.x0, r.x1}}, {"y", {r.y0, r.y1}}});
    return {{"rects", rects}, {"nx", g.nx}, {"ny", g.ny}, {"points", g.size()}};
}

json operator_json(const OperatorSpec& s)
{
    json c;
    for (std::size_t n = 0; n < 10; ++n)
        c[Operator3<Expr>::kNames[n]] = s.text[n];
    return {{"path", s.path}, {"coefficients", c}, {"bundle", s.bundle}, {"grid", grid_json(s.grid)}};
}

json document(const json& command)
{
    json d;
    d["schema"] = "invar3-result";
    d["schema_version"] = kSchemaVersion;
    d["engine_version"] = kEngineVersion;
    d["command"] = command;
    return d;
}

RegularityConfig regularity(const Tolerances& t) { return RegularityConfig{t.regularity_eps}; }

// Reason a pointwise pipeline failed, as a short tag.
std::string reason_of(const std::exception_ptr& e)
{
    try {
        std::rethrow_exception(e);
    } catch (const RegularityError& r) {
        return r.condition;
    } catch (const SingularSymbol&) {
        return "singular-symbol";
    } catch (const DomainError&) {
        return "domain";
    } catch (const NotInvertible&) {
        return "not-invertible";
    } catch (const std::exception& x) {
        return std::string("error: ") + x.what();
    } catch (...) {
        return "error";
    }
}

struct Row {
    Point x{};
    bool regular = true;
    std::string reason;
    json values = json::array();
};

struct GridResult {
    std::vector<std::string> fields;
    std::vector<Row> rows;
    bool masked = true; // rows carry regular / reason
};

std::size_t regular_count(const GridResult& g)
{
    std::size_t n = 0;
    for (const Row& r : g.rows)
        n += r.regular ? 1 : 0;
    return n;
}

json points_json(const GridResult& g)
{
    json pts = json::array();
    for (const Row& r : g.rows) {
        json p;
        p["x"] = r.x.x;
        p["y"] = r.x.y;
        if (g.masked) {
            p["regular"] = r.regular;
            p["reason"] = r.regular ? json(nullptr) : json(r.reason);
        }
        for (std::size_t f = 0; f < g.fields.size(); ++f)
            p[g.fields[f]] = r.values.size() > f ? r.values[f] : json(nullptr);
        pts.push_back(p);
    }
    return pts;
}

std::string csv_cell(const json& v)
{
    if (v.is_null())
        return "nan";
    if (v.is_boolean())
        return v.get<bool>() ? "1" : "0";
    if (v.is_number())
        return shortest(v.get<double>());
    if (v.is_string())
        return v.get<std::string>();
    return v.dump();
}

std::string grid_csv(const GridResult& g)
{
    std::ostringstream os;
    os << "x,y";
    if (g.masked)
        os << ",regular,reason";
    for (const auto& f : g.fields)
        os << ',' << f;
    os << '\n';
    for (const Row& r : g.rows) {
        os << shortest(r.x.x) << ',' << shortest(r.x.y);
        if (g.masked)
            os << ',' << (r.regular ? 1 : 0) << ',' << (r.regular ? "" : r.reason);
        for (std::size_t f = 0; f < g.fields.size(); ++f)
            os << ',' << csv_cell(r.values.size() > f ? r.values[f] : json(nullptr));
        os << '\n';
    }
    return os.str();
}

template <class F> GridResult evaluate_grid(const OperatorSpec& spec, std::vector<std::string> fields, F point)
{
    GridResult g;
    g.fields = std::move(fields);
    const std::vector<Point> pts = spec.grid.samples();
    const std::size_t nf = g.fields.size();
    g.rows = parallel_map<Row>(pts.size(), [&](std::size_t n) {
        Row r;
        r.x = pts[n];
        try {
            r.values = point(r.x);
            for (const auto& v : r.values)
                if (v.is_number() && !std::isfinite(v.get<double>()))
                    throw DomainError("non-finite");
            if (r.values.size() != nf)
                throw std::logic_error("field count mismatch");
        } catch (const std::logic_error&) {
            throw;
        } catch (const DomainError&) {
            r.regular = false;
            r.reason = "non-finite";
            r.values = json::array();
        } catch (...) {
            r.regular = false;
            r.reason = reason_of(std::current_exception());
            r.values = json::array();
        }
        return r;
    });
    return g;
}

double value_scale(const Symbol3<Jet2>& s)
{
    return std::max({std::abs(s.a1.value()), std::abs(s.a2.value()), std::abs(s.a3.value()), std::abs(s.a4.value())});
}

struct Output {
    std::string path;
    bool csv = false;
};

void emit(const std::string& text, const Output& o, std::ostream& out)
{
    if (o.path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(o.path, std::ios::binary);
    if (!f)
        throw InputError("cannot write " + o.path);
    f << text;
}

std::string render(const json& doc) { return doc.dump(2) + "\n"; }

struct Failure {
    std::string kind;
    std::string message;
    json points;
};

json error_document(const json& command, const Failure& f)
{
    json d = document(command);
    json e;
    e["kind"] = f.kind;
    e["message"] = f.message;
    if (!f.points.is_null())
        e["points"] = f.points;
    d["error"] = e;
    return d;
}

// Domain report for a spec, or nullopt when every coefficient evaluates on the grid.
std::optional<Failure> domain_check(const OperatorSpec& spec)
{
    const auto bad = domain_failures(spec);
    if (bad.empty())
        return std::nullopt;
    Failure f;
    f.kind = "domain";
    std::set<std::pair<double, double>> distinct;
    for (const auto& b : bad)
        distinct.insert({b.x.x, b.x.y});
    f.message = (spec.path.empty() ? std::string("operator") : spec.path) + ": coefficients undefined at " +
                std::to_string(distinct.size()) + " grid points";
    f.points = json::array();
    for (std::size_t i = 0; i < bad.size() && i < kMaxReportedFailures; ++i)
        f.points.push_back({{"x", bad[i].x.x}, {"y", bad[i].x.y}, {"coefficient", bad[i].coefficient},
                            {"message", bad[i].message}});
    return f;
}

GridResult classify_grid(const OperatorSpec& spec)
{
    GridResult g = evaluate_grid(spec, {"type", "delta", "normalized_delta"}, [&](Point p) {
        Symbol3<double> s{};
        for (int n = 0; n < 4; ++n)
            s.comp(n) = spec.coefficients[static_cast<std::size_t>(n)].eval(p);
        const Classification c = classify(s, spec.tolerances.singular_eps);
        return json::array({to_string(c.type), c.delta, c.normalized_delta});
    });
    g.masked = false;
    return g;
}

std::vector<std::string> check_fields() { return {"check_dnabla_sigma", "check_omega_plus_3theta", "check_wagner_curvature"}; }

// Audit residuals of the connection pipeline at one point.
json check_values(const OperatorSpec& spec, Point p)
{
    Symbol3<Jet2> s;
    for (int n = 0; n < 4; ++n)
        s.comp(n) = spec.coefficients[static_cast<std::size_t>(n)].eval_jet(p, 3);
    const double eps = spec.tolerances.singular_eps;
    const AffineConnection w = wagner_connection(s, eps);
    double dn = 0.0;
    for (const auto& r : covariant_derivative_sym3(w, s))
        dn = std::max(dn, std::abs(r.value()));
    dn /= std::max(value_scale(s), std::numeric_limits<double>::min());
    const ChernResult c = chern_connection(s, eps);
    const OneForm th = torsion_form(w);
    double om = 0.0;
    for (int l = 0; l < 2; ++l)
        om = std::max(om, std::abs(c.omega[l].value() + 3.0 * th[l].value()) / std::max(1.0, std::abs(c.omega[l].value())));
    double curv = 0.0;
    for (const auto& row : curvature(w))
        for (const auto& v : row)
            curv = std::max(curv, std::abs(v.value()));
    return json::array({dn, om, curv});
}

GridResult invariants_grid(const OperatorSpec& spec, const std::string& mode, bool check)
{
    const RegularityConfig cfg = regularity(spec.tolerances);
    const OperatorField a = operator_field(spec.coefficients);
    std::vector<std::string> names;
    if (mode == "symbol")
        names = {"I1", "I2", "I3", "I4"};
    else if (mode == "conformal")
        names = {"C1", "C2", "C3", "C4", "pivot"};
    else
        names = OperatorInvariants::names(mode == "bundle" ? OperatorMode::Bundle : OperatorMode::Scalar);
    const std::size_t main_fields = names.size();
    GridResult g = evaluate_grid(spec, names, [&](Point p) {
        json v = json::array();
        if (mode == "symbol") {
            for (const Jet2& i : basic_invariants(a(p, 2).principal(), cfg))
                v.push_back(i.value());
        } else if (mode == "conformal") {
            const ProjectiveClass c = conformal_invariants(a(p, 4).principal(), cfg);
            for (double r : c.ratios)
                v.push_back(r);
            v.push_back(c.pivot + 1);
        } else {
            const auto inv = operator_invariants(a(p, 4), mode == "bundle" ? OperatorMode::Bundle : OperatorMode::Scalar, cfg);
            for (const Jet2& i : inv.all())
                v.push_back(i.value());
        }
        return v;
    });
    if (check) {
        for (const auto& n : check_fields())
            g.fields.push_back(n);
        // the audit columns do not depend on regularity in the chosen mode
        const auto audit = parallel_map<json>(g.rows.size(), [&](std::size_t n) {
            try {
                return check_values(spec, g.rows[n].x);
            } catch (const std::runtime_error&) {
                return json::array({nullptr, nullptr, nullptr});
            }
        });
        for (std::size_t n = 0; n < g.rows.size(); ++n) {
            Row& r = g.rows[n];
            if (!r.regular)
                r.values = json::array();
            while (r.values.size() < main_fields)
                r.values.push_back(nullptr);
            for (const auto& v : audit[n])
                r.values.push_back(v.is_number() ? finite_or_null(v.get<double>()) : json(nullptr));
        }
    }
    return g;
}

GridResult split_grid(const OperatorSpec& spec, ConnectionChoice choice)
{
    const OperatorField a = operator_field(spec.coefficients);
    const double eps = spec.tolerances.singular_eps;
    std::vector<std::string> names = {"sigma3_1", "sigma3_2", "sigma3_3",  "sigma3_4", "sigma2_11", "sigma2_12",
                                      "sigma2_22", "sigma1_1", "sigma1_2", "sigma0",   "roundtrip_residual"};
    return evaluate_grid(spec, names, [&](Point p) {
        const Operator3<Jet2> op = a(p, 4);
        const SplitResult s = split(op, choice, std::nullopt, eps);
        const Operator3<Jet2> back = to_named(quantize_total(s.sigma, s.gamma));
        double scale = 1.0, res = 0.0;
        for (std::size_t n = 0; n < 10; ++n) {
            scale = std::max(scale, std::abs(op[n].value()));
            res = std::max(res, std::abs(back[n].value() - op[n].value()));
        }
        json v = json::array();
        for (int n = 0; n < 4; ++n)
            v.push_back(s.sigma.s3.comp(n).value());
        for (const Jet2& c : s.sigma.s2)
            v.push_back(c.value());
        for (const Jet2& c : s.sigma.s1)
            v.push_back(c.value());
        v.push_back(s.sigma.s0.value());
        v.push_back(res / scale);
        return v;
    });
}

json verdict_json(const Verdict& v, const std::string& mode)
{
    json out;
    out["answer"] = to_string(v.answer);
    out["reason"] = v.reason;
    out["max_discrepancy"] = finite_or_null(v.max_discrepancy);
    out["overlap"] = v.overlap;
    out["located"] = {v.located[0], v.located[1]};
    out["matched"] = {v.matched[0], v.matched[1]};
    out["usable"] = {v.usable[0], v.usable[1]};
    out["pair"] = v.pair ? json{(*v.pair)[0], (*v.pair)[1]} : json(nullptr);
    json fields = json::array();
    for (const auto& f : v.fields)
        fields.push_back({{"name", f.name},
                          {"max_discrepancy", finite_or_null(f.max_discrepancy)},
                          {"scale", f.scale},
                          {"flagged", f.flagged}});
    out["fields"] = fields;
    if (v.obstruction) {
        const auto& o = *v.obstruction;
        out["obstruction"] = {{"evaluated", o.evaluated},
                              {"closed", o.closed},
                              {"curvature_residual", finite_or_null(o.curvature_residual)},
                              {"loop_integral", finite_or_null(o.loop_integral)},
                              {"loop_points", o.loop_points}};
    } else {
        out["obstruction"] = nullptr;
    }
    if (mode == "equation")
        out["branch"] = v.branch;
    if (mode != "diffeo")
        out["bundle_topology"] = "trivialized over the chart; the Stiefel-Whitney condition holds vacuously";
    return out;
}

std::string verdict_csv(const Verdict& v)
{
    std::ostringstream os;
    os << "field,max_discrepancy,scale,flagged\n";
    for (const auto& f : v.fields)
        os << f.name << ',' << shortest(f.max_discrepancy) << ',' << shortest(f.scale) << ',' << (f.flagged ? 1 : 0)
           << '\n';
    return os.str();
}

} // namespace

OperatorSpec parse_spec(const std::string& json_text, const std::string& path)
{
    const std::string where = path.empty() ? std::string("operator") : path;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError(where + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object())
        throw InputError(where + ": top level must be an object");
    static const std::set<std::string> keys = {"coefficients", "bundle", "domain", "tolerances"};
    for (const auto& [k, _] : doc.items())
        if (!keys.count(k))
            throw InputError(where + ": unknown key '" + k + "'");
    if (!doc.contains("coefficients") || !doc["coefficients"].is_object())
        throw InputError(where + ": 'coefficients' object is required");
    OperatorSpec s;
    s.path = path;
    s.text.fill("0");
    const auto& names = Operator3<Expr>::kNames;
    for (const auto& [k, v] : doc["coefficients"].items()) {
        const auto it = std::find(names.begin(), names.end(), k);
        if (it == names.end())
            throw InputError(where + ": unknown coefficient '" + k + "'");
        const auto n = static_cast<std::size_t>(it - names.begin());
        if (v.is_string())
            s.text[n] = v.get<std::string>();
        else if (v.is_number())
            s.text[n] = shortest(number(v, k));
        else
            throw InputError(where + ": coefficient '" + k + "' must be a string or a number");
    }
    for (std::size_t n = 0; n < 10; ++n) {
        try {
            s.coefficients[n] = parse(s.text[n]);
        } catch (const std::exception& e) {
            throw InputError(where + ": coefficient '" + names[n] + "': " + e.what());
        }
    }
    if (doc.contains("bundle")) {
        if (!doc["bundle"].is_boolean())
            throw InputError(where + ": 'bundle' must be a boolean");
        s.bundle = doc["bundle"].get<bool>();
    }
    try {
        if (doc.contains("domain"))
            s.grid = parse_domain(doc["domain"]);
        if (doc.contains("tolerances"))
            s.tolerances = parse_tolerances(doc["tolerances"]);
    } catch (const InputError& e) {
        throw InputError(where + ": " + e.what());
    }
    return s;
}

OperatorSpec load_spec(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_spec(ss.str(), path);
}

std::vector<DomainFailure> domain_failures(const OperatorSpec& spec)
{
    std::vector<DomainFailure> out;
    for (const Point& p : spec.grid.samples())
        for (std::size_t n = 0; n < 10; ++n) {
            std::string msg;
            try {
                const double v = spec.coefficients[n].eval(p);
                if (!std::isfinite(v))
                    msg = "non-finite value";
            } catch (const DomainError& e) {
                msg = e.what();
            }
            if (!msg.empty())
                out.push_back({p, Operator3<Expr>::kNames[n], msg});
        }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Invariants and equivalence of third-order linear differential operators in the plane", "invar3"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kEngineVersion);

    std::string spec_a, spec_b, mode, connection = "chern";
    bool check = false;
    std::optional<double> tol;
    Output output;
    auto outputs = [&](CLI::App* sub) {
        sub->add_option("--out", output.path, "write the result to this file instead of stdout");
        sub->add_flag("--csv", output.csv, "flat CSV instead of JSON");
    };

    CLI::App* classify_cmd = app.add_subcommand("classify", "symbol type and discriminant on the grid");
    classify_cmd->add_option("spec", spec_a, "operator JSON")->required();
    outputs(classify_cmd);

    CLI::App* inv_cmd = app.add_subcommand("invariants", "invariant fields and regularity mask on the grid");
    inv_cmd->add_option("spec", spec_a, "operator JSON")->required();
    inv_cmd->add_option("--mode", mode, "symbol | conformal | operator | bundle")
        ->check(CLI::IsMember({"symbol", "conformal", "operator", "bundle"}));
    inv_cmd->add_flag("--check", check, "also emit connection residuals");
    outputs(inv_cmd);

    CLI::App* split_cmd = app.add_subcommand("split", "total symbol and quantization round trip on the grid");
    split_cmd->add_option("spec", spec_a, "operator JSON")->required();
    split_cmd->add_option("--connection", connection, "chern | wagner")->check(CLI::IsMember({"chern", "wagner"}));
    outputs(split_cmd);

    CLI::App* equiv_cmd = app.add_subcommand("equiv", "decide equivalence of two operators");
    equiv_cmd->add_option("a", spec_a, "first operator JSON")->required();
    equiv_cmd->add_option("b", spec_b, "second operator JSON")->required();
    equiv_cmd->add_option("--mode", mode, "diffeo | aut | equation")->check(CLI::IsMember({"diffeo", "aut", "equation"}));
    equiv_cmd->add_option("--tol", tol, "field agreement tolerance")->check(CLI::PositiveNumber);
    outputs(equiv_cmd);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return e.get_exit_code() == 0 ? kOk : kInputError;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    json command;
    command["name"] = name;
    command["inputs"] = spec_b.empty() ? json{spec_a} : json{spec_a, spec_b};
    json options = json::object();

    try {
        OperatorSpec a = load_spec(spec_a);
        if (name == "invariants" && mode.empty())
            mode = a.bundle ? "bundle" : "symbol";
        if (name == "invariants") {
            options["mode"] = mode;
            options["check"] = check;
        } else if (name == "split") {
            options["connection"] = connection;
        }
        std::optional<OperatorSpec> b;
        if (name == "equiv") {
            b = load_spec(spec_b);
            if (mode.empty())
                mode = a.bundle && b->bundle ? "aut" : "diffeo";
            if (tol)
                a.tolerances.tol = *tol;
            options["mode"] = mode;
            options["tol"] = a.tolerances.tol;
        }
        command["options"] = options;

        for (const OperatorSpec* s : {&a, b ? &*b : nullptr}) {
            if (!s)
                continue;
            if (auto f = domain_check(*s)) {
                err << "invar3: " << f->message << '\n';
                out << render(error_document(command, *f));
                return kInputError;
            }
        }

        json doc = document(command);
        doc["config"] = config_json(a.tolerances);

        if (name == "equiv") {
            EquivalenceConfig cfg;
            cfg.tol = a.tolerances.tol;
            cfg.overlap = a.tolerances.overlap;
            cfg.min_regular = a.tolerances.min_regular;
            cfg.jacobian_floor = a.tolerances.jacobian_floor;
            cfg.locate_tol = a.tolerances.locate_tol;
            cfg.regularity = regularity(a.tolerances);
            a.grid.validate();
            b->grid.validate();
            const OperatorField fa = operator_field(a.coefficients), fb = operator_field(b->coefficients);
            Verdict v;
            if (mode == "diffeo")
                v = equivalent_scalar(fa, a.grid, fb, b->grid, cfg);
            else if (mode == "aut")
                v = equivalent_bundle(fa, a.grid, fb, b->grid, cfg);
            else
                v = equation_equivalent(fa, a.grid, fb, b->grid, cfg);
            doc["operators"] = {operator_json(a), operator_json(*b)};
            doc["verdict"] = verdict_json(v, mode);
            emit(output.csv ? verdict_csv(v) : render(doc), output, out);
            if (v.answer != Answer::Yes)
                err << "invar3: " << to_string(v.answer) << ": " << v.reason << '\n';
            return v.answer == Answer::Yes ? kOk : v.answer == Answer::No ? kNotEquivalent : kInconclusive;
        }

        GridResult g;
        json summary;
        json diagnostics = json::array();
        int code = kOk;
        if (name == "classify") {
            g = classify_grid(a);
            std::map<std::string, std::size_t> counts{{"hyperbolic", 0}, {"ultrahyperbolic", 0}, {"singular", 0}};
            for (const Row& r : g.rows)
                ++counts[r.values[0].get<std::string>()];
            summary = {{"points", g.rows.size()}};
            for (const auto& [k, n] : counts)
                summary[k] = n;
        } else if (name == "invariants") {
            g = invariants_grid(a, mode, check);
            const std::size_t reg = regular_count(g);
            summary = {{"points", g.rows.size()}, {"regular", reg}};
            if (reg == 0) {
                diagnostics.push_back("not 1-regular anywhere");
                code = kInconclusive;
            }
        } else {
            g = split_grid(a, connection == "wagner" ? ConnectionChoice::Wagner : ConnectionChoice::Chern);
            const std::size_t reg = regular_count(g);
            double worst = 0.0;
            for (const Row& r : g.rows)
                if (r.regular)
                    worst = std::max(worst, r.values.back().get<double>());
            summary = {{"points", g.rows.size()}, {"split", reg}, {"max_roundtrip_residual", reg ? json(worst) : json(nullptr)}};
            if (reg == 0) {
                diagnostics.push_back("singular symbol everywhere: no total symbol");
                code = kInconclusive;
            }
        }
        doc["operator"] = operator_json(a);
        doc["fields"] = g.fields;
        doc["summary"] = summary;
        doc["diagnostics"] = diagnostics;
        doc["points"] = points_json(g);
        emit(output.csv ? grid_csv(g) : render(doc), output, out);
        for (const auto& d : diagnostics)
            err << "invar3: " << d.get<std::string>() << '\n';
        return code;
    } catch (const InputError& e) {
        err << "invar3: " << e.what() << '\n';
        command["options"] = options;
        out << render(error_document(command, Failure{"input", e.what(), nullptr}));
        return kInputError;
    } catch (const GridError& e) {
        err << "invar3: " << e.what() << '\n';
        command["options"] = options;
        out << render(error_document(command, Failure{"input", e.what(), nullptr}));
        return kInputError;
    }
}

} // namespace invar3::cli
