#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scr/aggregation.hpp"
#include "scr/allocation.hpp"
#include "scr/diagnostics.hpp"
#include "scr/risk_model.hpp"
#include "report.hpp"

namespace {

using nlohmann::json;
using scr::report::Format;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitComputation = 2;
constexpr int kExitIo = 3;

struct Options {
    std::string tree_path;
    std::string format = "table";
    int precision = 2;
    std::string principle;
    std::string principles;
    std::string at = "1";
    std::string drivers_path;
    std::string vars_path;
    std::uint64_t seed = 0;
    int trials = 100;
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

std::vector<std::string> resolve_cut(const scr::RiskTree& tree, const std::string& at) {
    if (!at.empty() && at.find_first_not_of("0123456789") == std::string::npos) {
        auto cut = scr::cut_at_depth(tree, std::stoi(at));
        if (cut.empty()) throw std::invalid_argument("no nodes at depth " + at);
        return cut;
    }
    if (!tree.contains(at)) throw std::invalid_argument("unknown cut node \"" + at + "\"");
    auto cut = scr::children_of(tree, at);
    if (cut.empty()) throw std::invalid_argument("cut node \"" + at + "\" has no children");
    return cut;
}

std::map<std::string, double> load_drivers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw scr::IoError("cannot open driver file: " + path);
    std::map<std::string, double> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        double value = 0.0;
        if (fields.size() != 2 || !parse_double(fields[1], value)) {
            if (first) {  // tolerate a header row
                first = false;
                continue;
            }
            throw scr::ParseError("driver file " + path + ": bad row \"" + line +
                                  "\" (expected node_id,driver)");
        }
        out[fields[0]] = value;
        first = false;
    }
    return out;
}

std::string format_ratio(const std::optional<double>& ratio, Format format, int precision) {
    if (!ratio) return format == Format::table ? "-" : "";
    if (format == Format::table) return scr::report::percent(*ratio, precision);
    return scr::report::full(*ratio);
}

// Allocates over `cut` under one principle; SFEP entries come straight from
// the tree-wide result, everything else goes through the comparison engine.
std::vector<double> allocate_cut(const scr::RiskTree& tree, const scr::AllocationResult& sfep,
                                 std::span<const std::string> cut,
                                 const scr::PrincipleSpec& spec) {
    std::vector<double> out;
    if (spec.principle == scr::Principle::sfep) {
        for (const auto& id : cut) out.push_back(sfep.at(id).allocated);
    } else {
        const scr::ComparisonReport report = scr::compare_principles(tree, {spec}, cut);
        for (const auto& row : report.rows) out.push_back(row.allocated[0]);
    }
    return out;
}

int cmd_aggregate(const Options& opt) {
    const scr::RiskTree tree = scr::parse_tree_file(opt.tree_path);
    const scr::AggregationResult agg = scr::aggregate_tree(tree);
    const Format format = scr::report::parse_format(opt.format);

    const auto ids = tree.depth_first_ids();
    if (format == Format::json) {
        json doc;
        doc["root"] = tree.root_id();
        doc["bscr"] = agg.bscr();
        doc["nodes"] = json::array();
        for (const auto& id : ids) {
            const auto& a = agg.at(id);
            doc["nodes"].push_back({{"id", id},
                                    {"name", tree.node(id).name},
                                    {"depth", tree.depth_of(id)},
                                    {"aggregated_scr", a.aggregated_scr},
                                    {"diversification_effect", a.diversification_effect}});
        }
        std::cout << doc.dump(2) << '\n';
        return kExitOk;
    }

    std::vector<std::vector<std::string>> rows;
    for (const auto& id : ids) {
        const auto& a = agg.at(id);
        const int depth = tree.depth_of(id);
        if (format == Format::table) {
            rows.push_back({std::string(2 * static_cast<std::size_t>(depth), ' ') + id,
                            tree.node(id).name, scr::report::money(a.aggregated_scr, opt.precision),
                            scr::report::money(a.diversification_effect, opt.precision)});
        } else {
            rows.push_back({id, tree.node(id).name, std::to_string(depth),
                            scr::report::full(a.aggregated_scr),
                            scr::report::full(a.diversification_effect)});
        }
    }
    if (format == Format::table)
        scr::report::print_table(std::cout, {"node", "name", "scr", "diversification"}, rows);
    else
        scr::report::print_csv(std::cout,
                               {"node_id", "name", "depth", "aggregated_scr",
                                "diversification_effect"},
                               rows);
    return kExitOk;
}

int cmd_allocate(const Options& opt) {
    const scr::RiskTree tree = scr::parse_tree_file(opt.tree_path);
    scr::PrincipleSpec spec;
    spec.principle = scr::parse_principle(opt.principle);
    if (!opt.drivers_path.empty()) spec.drivers = load_drivers(opt.drivers_path);

    const scr::AggregationResult agg = scr::aggregate_tree(tree);
    const scr::AllocationResult sfep = scr::euler_allocate_tree(tree, agg);
    const auto cut = resolve_cut(tree, opt.at);
    double total = 0.0;
    for (const auto& id : cut) total += sfep.at(id).allocated;
    const auto allocated = allocate_cut(tree, sfep, cut, spec);
    const Format format = scr::report::parse_format(opt.format);

    double standalone_sum = 0.0;
    for (const auto& id : cut) standalone_sum += agg.at(id).aggregated_scr;

    if (format == Format::json) {
        json doc;
        doc["principle"] = std::string(scr::to_string(spec.principle));
        doc["cut"] = cut;
        doc["total_allocated"] = total;
        doc["nodes"] = json::array();
        for (std::size_t i = 0; i < cut.size(); ++i) {
            json row{{"id", cut[i]},
                     {"name", tree.node(cut[i]).name},
                     {"standalone_scr", agg.at(cut[i]).aggregated_scr},
                     {"allocated", allocated[i]}};
            if (spec.principle == scr::Principle::sfep) {
                const auto& r = sfep.at(cut[i]).allocation_ratio;
                if (r) row["allocation_ratio"] = *r;
            }
            doc["nodes"].push_back(std::move(row));
        }
        std::cout << doc.dump(2) << '\n';
        return kExitOk;
    }

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < cut.size(); ++i) {
        const double standalone = agg.at(cut[i]).aggregated_scr;
        std::optional<double> ratio;
        if (spec.principle == scr::Principle::sfep) ratio = sfep.at(cut[i]).allocation_ratio;
        if (format == Format::table)
            rows.push_back({cut[i], tree.node(cut[i]).name,
                            scr::report::money(standalone, opt.precision),
                            scr::report::money(allocated[i], opt.precision),
                            format_ratio(ratio, format, opt.precision)});
        else
            rows.push_back({cut[i], tree.node(cut[i]).name, scr::report::full(standalone),
                            scr::report::full(allocated[i]), format_ratio(ratio, format, opt.precision)});
    }
    if (format == Format::table) {
        rows.push_back({"Total", "", scr::report::money(standalone_sum, opt.precision),
                        scr::report::money(total, opt.precision), ""});
        scr::report::print_table(std::cout, {"node", "name", "standalone", "allocated", "ratio"},
                                 rows);
    } else {
        scr::report::print_csv(std::cout, {"node_id", "name", "standalone_scr", "allocated",
                                           "allocation_ratio"},
                               rows);
    }
    return kExitOk;
}

int cmd_compare(const Options& opt) {
    const scr::RiskTree tree = scr::parse_tree_file(opt.tree_path);
    std::vector<scr::PrincipleSpec> specs;
    std::map<std::string, double> drivers;
    if (!opt.drivers_path.empty()) drivers = load_drivers(opt.drivers_path);
    for (const auto& name : split(opt.principles, ',')) {
        if (name.empty()) continue;
        scr::PrincipleSpec spec;
        spec.principle = scr::parse_principle(name);
        spec.drivers = drivers;
        specs.push_back(std::move(spec));
    }
    if (specs.empty()) throw std::invalid_argument("no principles given");

    const auto cut = resolve_cut(tree, opt.at);
    const scr::ComparisonReport report = scr::compare_principles(tree, specs, cut);
    const Format format = scr::report::parse_format(opt.format);

    std::vector<std::string> header{"node"};
    for (const auto& s : specs) header.emplace_back(scr::to_string(s.principle));
    for (const auto& s : specs)
        if (s.principle != scr::Principle::sfep)
            header.push_back(std::string(scr::to_string(s.principle)) +
                             (format == Format::table ? " vs sfep" : "_vs_sfep"));

    if (format == Format::json) {
        json doc;
        doc["cut"] = cut;
        doc["principles"] = json::array();
        for (const auto& s : specs) doc["principles"].push_back(std::string(scr::to_string(s.principle)));
        doc["rows"] = json::array();
        for (const auto& row : report.rows) {
            json jr{{"id", row.node_id}};
            for (std::size_t p = 0; p < specs.size(); ++p) {
                const std::string name(scr::to_string(specs[p].principle));
                jr["allocated"][name] = row.allocated[p];
                if (specs[p].principle != scr::Principle::sfep && row.deviation_vs_sfep[p])
                    jr["deviation_vs_sfep"][name] = *row.deviation_vs_sfep[p];
            }
            doc["rows"].push_back(std::move(jr));
        }
        for (std::size_t p = 0; p < specs.size(); ++p)
            doc["totals"][std::string(scr::to_string(specs[p].principle))] = report.totals[p];
        std::cout << doc.dump(2) << '\n';
        return kExitOk;
    }

    std::vector<std::vector<std::string>> rows;
    for (const auto& row : report.rows) {
        std::vector<std::string> cells{row.node_id};
        for (std::size_t p = 0; p < specs.size(); ++p)
            cells.push_back(format == Format::table
                                ? scr::report::money(row.allocated[p], opt.precision)
                                : scr::report::full(row.allocated[p]));
        for (std::size_t p = 0; p < specs.size(); ++p) {
            if (specs[p].principle == scr::Principle::sfep) continue;
            if (row.deviation_vs_sfep[p])
                cells.push_back(format == Format::table
                                    ? scr::report::percent(*row.deviation_vs_sfep[p], opt.precision)
                                    : scr::report::full(*row.deviation_vs_sfep[p]));
            else
                cells.push_back(format == Format::table ? "-" : "");
        }
        rows.push_back(std::move(cells));
    }
    std::vector<std::string> totals{"Total"};
    for (double t : report.totals)
        totals.push_back(format == Format::table ? scr::report::money(t, opt.precision)
                                                 : scr::report::full(t));
    rows.push_back(std::move(totals));
    if (format == Format::table)
        scr::report::print_table(std::cout, header, rows);
    else
        scr::report::print_csv(std::cout, header, rows);
    return kExitOk;
}

int cmd_calibrate(const Options& opt) {
    std::ifstream in(opt.vars_path);
    if (!in) throw scr::IoError("cannot open VaR file: " + opt.vars_path);
    const Format format = scr::report::parse_format(opt.format);

    std::vector<std::vector<std::string>> rows;
    json jrows = json::array();
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        double x = 0, y = 0, xy = 0;
        if (fields.size() != 3 || !parse_double(fields[0], x) || !parse_double(fields[1], y) ||
            !parse_double(fields[2], xy)) {
            if (first) {  // tolerate a header row
                first = false;
                continue;
            }
            throw scr::ParseError("VaR file " + opt.vars_path + ": bad row \"" + line +
                                  "\" (expected var_x,var_y,var_xy)");
        }
        first = false;
        const scr::CalibratedRho cal = scr::calibrate_rho(x, y, xy);
        if (format == Format::table) {
            char rho[32];
            std::snprintf(rho, sizeof(rho), "%.*f", std::max(opt.precision, 1), cal.rho);
            rows.push_back({scr::report::money(x, opt.precision), scr::report::money(y, opt.precision),
                            scr::report::money(xy, opt.precision), rho, cal.clamped ? "yes" : "no"});
        } else {
            rows.push_back({scr::report::full(x), scr::report::full(y), scr::report::full(xy),
                            scr::report::full(cal.rho), cal.clamped ? "true" : "false"});
        }
        jrows.push_back({{"var_x", x}, {"var_y", y}, {"var_xy", xy}, {"rho", cal.rho},
                         {"clamped", cal.clamped}});
    }
    if (format == Format::json) {
        std::cout << json{{"rows", jrows}}.dump(2) << '\n';
        return kExitOk;
    }
    if (format == Format::table)
        scr::report::print_table(std::cout, {"var_x", "var_y", "var_xy", "rho", "clamped"}, rows);
    else
        scr::report::print_csv(std::cout, {"var_x", "var_y", "var_xy", "rho", "clamped"}, rows);
    return kExitOk;
}

int cmd_check(const Options& opt) {
    const std::string text = [&] {
        std::ifstream in(opt.tree_path);
        if (!in) throw scr::IoError("cannot open tree document: " + opt.tree_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }();

    // Invariant violations are reported as findings rather than thrown, so the
    // command can list them all; the suite is not run on an invalid tree.
    const scr::RiskTree tree = scr::parse_tree_unvalidated(text);
    const auto findings = scr::validate_tree(tree);
    for (const auto& f : findings)
        std::cout << (f.severity == scr::Severity::error ? "error: " : "warning: ") << f.message
                  << '\n';
    if (scr::has_errors(findings)) {
        std::cout << "tree is invalid; property suite not run\n";
        return kExitValidation;
    }

    const auto properties = scr::run_property_suite(tree, opt.seed, opt.trials);
    const Format format = scr::report::parse_format(opt.format);
    if (format == Format::json) {
        json doc;
        doc["seed"] = opt.seed;
        doc["trials"] = opt.trials;
        doc["properties"] = json::array();
        for (const auto& p : properties)
            doc["properties"].push_back({{"property", p.property}, {"passed", p.passed},
                                         {"detail", p.detail}});
        doc["all_passed"] = scr::all_passed(properties);
        std::cout << doc.dump(2) << '\n';
    } else if (format == Format::csv) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& p : properties)
            rows.push_back({p.property, p.passed ? "true" : "false", p.detail});
        scr::report::print_csv(std::cout, {"property", "passed", "detail"}, rows);
    } else {
        for (const auto& p : properties) {
            std::cout << (p.passed ? "pass  " : "FAIL  ") << p.property;
            if (!p.detail.empty()) std::cout << "  (" << p.detail << ")";
            std::cout << '\n';
        }
        if (scr::all_passed(properties))
            std::cout << "all properties passed\n";
        else
            std::cout << "some properties failed\n";
    }
    return scr::all_passed(properties) ? kExitOk : kExitComputation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solvency II standard-formula aggregation and capital allocation"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* cmd, bool needs_tree) {
        if (needs_tree)
            cmd->add_option("--tree", opt.tree_path, "tree document (JSON)")->required();
        cmd->add_option("--format", opt.format, "output format: table|csv|json");
        cmd->add_option("--precision", opt.precision, "decimal places in table output");
    };

    CLI::App* aggregate = app.add_subcommand("aggregate", "aggregate SCRs through the tree");
    add_common(aggregate, true);

    CLI::App* allocate = app.add_subcommand("allocate", "allocate the top-level capital down the tree");
    add_common(allocate, true);
    allocate->add_option("--principle", opt.principle,
                         "sfep|haircut|marginal|covariance|market")->required();
    allocate->add_option("--at", opt.at, "cut: internal node id (its children) or depth");
    allocate->add_option("--drivers", opt.drivers_path, "csv node_id,driver (market principle)");

    CLI::App* compare = app.add_subcommand("compare", "compare allocation principles");
    add_common(compare, true);
    compare->add_option("--principles", opt.principles, "comma-separated principle list")->required();
    compare->add_option("--at", opt.at, "cut: internal node id (its children) or depth");
    compare->add_option("--drivers", opt.drivers_path, "csv node_id,driver (market principle)");

    CLI::App* calibrate = app.add_subcommand("calibrate", "calibrate pairwise correlations from VaR triplets");
    add_common(calibrate, false);
    calibrate->add_option("--vars", opt.vars_path, "csv var_x,var_y,var_xy")->required();

    CLI::App* check = app.add_subcommand("check", "validate a tree and run the property suite");
    add_common(check, true);
    check->add_option("--seed", opt.seed, "random seed");
    check->add_option("--trials", opt.trials, "number of randomized trials");

    CLI11_PARSE(app, argc, argv);

    try {
        if (aggregate->parsed()) return cmd_aggregate(opt);
        if (allocate->parsed()) return cmd_allocate(opt);
        if (compare->parsed()) return cmd_compare(opt);
        if (calibrate->parsed()) return cmd_calibrate(opt);
        if (check->parsed()) return cmd_check(opt);
    } catch (const scr::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const scr::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const scr::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const scr::ComputationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputation;
    }
    return kExitOk;
}
