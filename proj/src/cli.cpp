#include "dglm/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>

#include "dglm/driver.hpp"
#include "dglm/error.hpp"
#include "dglm/libsvm.hpp"
#include "dglm/metrics.hpp"
#include "dglm/partition.hpp"
#include "dglm/shard_io.hpp"
#include "dglm/spmd.hpp"
#include "dglm/tcp_transport.hpp"
#include "dglm/text_format.hpp"

namespace fs = std::filesystem;

namespace dglm {

void write_weights(const fs::path& path, const std::vector<double>& weights)
{
    std::ofstream out(path);
    if (!out) throw LoadError("cannot write " + path.string());
    for (std::size_t j = 0; j < weights.size(); ++j) out << j << ' ' << format_double(weights[j]) << '\n';
    if (!out) throw LoadError("write failed: " + path.string());
}

std::vector<double> read_weights(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    std::vector<double> w;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id_tok, val_tok, extra;
        ss >> id_tok >> val_tok;
        const auto id = parse_u64(id_tok);
        const auto val = parse_double(val_tok);
        if (!id || !val || (ss >> extra) || *id != w.size()) {
            throw LoadError(path.string() + ": malformed weights line " + std::to_string(line_no));
        }
        w.push_back(*val);
    }
    return w;
}

namespace {

struct TrainArgs {
    std::string data;
    std::string loss = "logistic";
    double l1 = 0.0;
    double l2 = 0.0;
    int nodes = 0;
    std::string mode = "bsp";
    double kappa = 0.75;
    double nu = 1e-6;
    std::string mu_adaptive = "on";
    std::size_t max_outer = 100;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    std::string transport = "inproc";
    int rank = 0;
    std::string peers;
    std::string metrics_out;
    std::string weights_out;
};

struct RankOutput {
    std::vector<double> weights;
    std::vector<IterationStats> history;
    bool converged = false;
};

RankOutput train_rank(const FeatureShard& shard, const SolverConfig& config, Transport& transport)
{
    FitResult r = fit(shard, config, transport);
    std::vector<double> w(shard.p, 0.0);
    for (std::size_t k = 0; k < shard.columns.size(); ++k) w[shard.columns[k].feature_id] = r.beta_m[k];
    transport.allreduce_sum(w, Collective::gather_sum);
    return {std::move(w), std::move(r.history), r.converged};
}

SolverConfig make_config(const TrainArgs& a)
{
    SolverConfig c;
    c.loss = parse_loss_kind(a.loss);
    c.lambda1 = a.l1;
    c.lambda2 = a.l2;
    c.nu = a.nu;
    c.kappa = a.kappa;
    c.mode = a.mode == "alb" ? SolveMode::alb : SolveMode::bsp;
    c.mu_adaptive = a.mu_adaptive == "on";
    c.max_outer = a.max_outer;
    c.tol = a.tol;
    c.validate();
    return c;
}

struct Problem {
    std::vector<FeatureShard> shards;  // indexed by node; empty entries when not loaded
    std::vector<std::uint64_t> raw_ids;
    int nodes = 1;
};

// Either a directory produced by `repartition` or a LIBSVM file split in memory.
Problem load_problem(const TrainArgs& a, std::optional<int> only_rank)
{
    Problem prob;
    const fs::path data(a.data);
    if (fs::is_directory(data)) {
        const FeatureShard first = load_shard(shard_path(data, 0));
        prob.nodes = first.world_size;
        if (a.nodes != 0 && a.nodes != prob.nodes) {
            throw std::invalid_argument("--nodes " + std::to_string(a.nodes) + " does not match the " +
                                        std::to_string(prob.nodes) + " shards in " + a.data);
        }
        prob.shards.resize(static_cast<std::size_t>(prob.nodes));
        for (int m = 0; m < prob.nodes; ++m) {
            if (only_rank && *only_rank != m) continue;
            prob.shards[static_cast<std::size_t>(m)] = m == 0 ? first : load_shard(shard_path(data, m));
        }
        prob.raw_ids = read_idmap(idmap_path(data));
        return prob;
    }
    std::ifstream in(data);
    if (!in) throw LoadError("cannot open " + a.data);
    const Dataset ds = read_libsvm(in);
    prob.nodes = a.nodes == 0 ? 1 : a.nodes;
    prob.shards = build_shards(ds, partition_features(prob.nodes, a.seed));
    prob.raw_ids = ds.raw_ids;
    return prob;
}

int run_train(const TrainArgs& a, std::ostream& out)
{
    const SolverConfig config = make_config(a);
    if (a.transport != "inproc" && a.transport != "tcp") throw std::invalid_argument("--transport must be inproc or tcp");

    RankOutput result;
    int rank = 0;
    Problem prob;
    if (a.transport == "inproc") {
        prob = load_problem(a, std::nullopt);
        auto outputs = spawn_spmd(
            prob.nodes,
            [&](Transport& t) { return train_rank(prob.shards[static_cast<std::size_t>(t.rank())], config, t); },
            config.kappa);
        result = std::move(outputs.front());
    } else {
        if (a.nodes < 1) throw std::invalid_argument("--nodes is required with --transport tcp");
        if (a.rank < 0 || a.rank >= a.nodes) throw std::invalid_argument("--rank out of range");
        if (a.peers.empty()) throw std::invalid_argument("--peers host:port is required with --transport tcp");
        rank = a.rank;
        prob = load_problem(a, rank);
        if (prob.nodes != a.nodes) throw std::invalid_argument("--nodes does not match the data");
        const std::string root = a.peers.substr(0, a.peers.find(','));
        auto transport = make_tcp_transport(rank, a.nodes, Endpoint::parse(root), config.kappa);
        result = train_rank(prob.shards[static_cast<std::size_t>(rank)], config, *transport);
    }
    if (rank != 0) return exit_ok;

    if (!a.weights_out.empty()) {
        write_weights(a.weights_out, result.weights);
        write_idmap(a.weights_out + ".idmap", prob.raw_ids);
    }
    if (!a.metrics_out.empty()) {
        std::ofstream csv(a.metrics_out);
        if (!csv) throw LoadError("cannot write " + a.metrics_out);
        write_history_csv(csv, result.history);
    }
    const double f = result.history.empty() ? std::nan("") : result.history.back().objective;
    out << "objective " << format_double(f) << " iterations " << result.history.size() << " nnz "
        << count_nonzero(result.weights) << " converged " << (result.converged ? "yes" : "no") << '\n';
    return exit_ok;
}

int run_repartition(const std::string& input, const std::string& out_dir, int nodes, std::uint64_t seed,
                    std::ostream& out)
{
    std::ifstream in(input);
    if (!in) throw LoadError("cannot open " + input);
    fs::create_directories(out_dir);
    const RepartitionSummary s = repartition(in, partition_features(nodes, seed), out_dir);
    out << "examples " << s.examples << " features " << s.features << " columns";
    for (std::size_t c : s.columns_per_node) out << ' ' << c;
    out << '\n';
    return exit_ok;
}

int run_predict(const std::string& data, const std::string& weights_file, std::string idmap_file,
                const std::string& out_file, std::ostream& out)
{
    const std::vector<double> w = read_weights(weights_file);
    if (idmap_file.empty()) idmap_file = weights_file + ".idmap";
    const std::vector<std::uint64_t> raw = read_idmap(idmap_file);
    if (raw.size() != w.size()) throw LoadError("weights and id map have different lengths");
    std::unordered_map<std::uint64_t, std::size_t> internal;
    for (std::size_t j = 0; j < raw.size(); ++j) internal.emplace(raw[j], j);

    std::ifstream in(data);
    if (!in) throw LoadError("cannot open " + data);
    std::ofstream file;
    if (!out_file.empty()) {
        file.open(out_file);
        if (!file) throw LoadError("cannot write " + out_file);
    }
    std::ostream& dst = out_file.empty() ? out : file;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const LibsvmRecord rec = parse_libsvm_line(line, line_no);
        double margin = 0.0;
        for (const LibsvmEntry& e : rec.entries) {
            const auto it = internal.find(e.id);
            if (it != internal.end()) margin += w[it->second] * e.value;
        }
        dst << format_double(margin) << '\n';
    }
    return exit_ok;
}

// First whitespace-separated token of every non-blank line; accepts plain
// label files, score files and LIBSVM files alike.
std::vector<double> read_first_column(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path);
    std::vector<double> v;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tok;
        if (!(ss >> tok)) continue;
        const auto x = parse_double(tok);
        if (!x) throw ParseError(line_no, path + ": not a number: " + tok);
        v.push_back(*x);
    }
    return v;
}

int run_eval(const std::string& scores_file, const std::string& labels_file, std::optional<double> f,
             std::optional<double> f_star, std::ostream& out)
{
    const auto scores = read_first_column(scores_file);
    const auto labels = read_first_column(labels_file);
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("eval: " + std::to_string(scores.size()) + " scores but " +
                                    std::to_string(labels.size()) + " labels");
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", auprc(scores, labels));
    out << "auprc " << buf << '\n';
    if (f && f_star) {
        const double rs = relative_suboptimality(*f, *f_star);
        out << "relative_suboptimality " << format_double(rs) << (rs < 0.0 ? " below-reference" : "") << '\n';
    }
    return exit_ok;
}

int classify(std::exception_ptr ep, std::ostream& err)
{
    try {
        std::rethrow_exception(ep);
    } catch (const SpmdError& e) {
        return classify(e.cause(), err);
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        // load, parse, filesystem and transport failures
        err << "i/o error: " << e.what() << '\n';
        return exit_io;
    }
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Distributed elastic-net GLM solver"};
    app.require_subcommand(1);

    std::string rp_in, rp_out;
    int rp_nodes = 1;
    std::uint64_t rp_seed = 0;
    auto* rp = app.add_subcommand("repartition", "Split a LIBSVM file into per-node feature shards");
    rp->add_option("--data", rp_in, "LIBSVM input file")->required();
    rp->add_option("--out", rp_out, "Output directory")->required();
    rp->add_option("--nodes", rp_nodes, "Number of nodes")->check(CLI::PositiveNumber);
    rp->add_option("--seed", rp_seed, "Partition seed");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Fit a model");
    tr->add_option("--data", ta.data, "Shard directory or LIBSVM file")->required();
    tr->add_option("--loss", ta.loss)->check(CLI::IsMember({"squared", "logistic", "probit"}));
    tr->add_option("--l1", ta.l1)->check(CLI::NonNegativeNumber);
    tr->add_option("--l2", ta.l2)->check(CLI::NonNegativeNumber);
    tr->add_option("--nodes", ta.nodes, "Worker count (default: from the shards, or 1)")->check(CLI::NonNegativeNumber);
    tr->add_option("--mode", ta.mode)->check(CLI::IsMember({"bsp", "alb"}));
    tr->add_option("--kappa", ta.kappa);
    tr->add_option("--nu", ta.nu);
    tr->add_option("--mu-adaptive", ta.mu_adaptive)->check(CLI::IsMember({"on", "off"}));
    tr->add_option("--max-outer", ta.max_outer);
    tr->add_option("--tol", ta.tol);
    tr->add_option("--seed", ta.seed, "Partition seed for LIBSVM input");
    tr->add_option("--transport", ta.transport)->check(CLI::IsMember({"inproc", "tcp"}));
    tr->add_option("--rank", ta.rank, "This process's rank (tcp)");
    tr->add_option("--peers", ta.peers, "host:port of rank 0 (tcp)");
    tr->add_option("--metrics-out", ta.metrics_out, "Per-iteration history CSV");
    tr->add_option("--weights-out", ta.weights_out, "Weights file");

    std::string pr_data, pr_weights, pr_idmap, pr_out;
    auto* pr = app.add_subcommand("predict", "Compute margins for a LIBSVM file");
    pr->add_option("--data", pr_data)->required();
    pr->add_option("--weights", pr_weights)->required();
    pr->add_option("--idmap", pr_idmap, "Id map (default: <weights>.idmap)");
    pr->add_option("--out", pr_out, "Scores file (default: stdout)");

    std::string ev_scores, ev_labels;
    std::optional<double> ev_f, ev_fstar;
    auto* ev = app.add_subcommand("eval", "Area under the precision-recall curve");
    ev->add_option("--scores", ev_scores)->required();
    ev->add_option("--labels", ev_labels, "Labels, one per line (LIBSVM files accepted)")->required();
    ev->add_option("--objective", ev_f, "Objective value to compare");
    ev->add_option("--f-star", ev_fstar, "Reference optimum");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        err << "run with --help for usage\n";
        return exit_usage;
    }

    try {
        if (*rp) return run_repartition(rp_in, rp_out, rp_nodes, rp_seed, out);
        if (*tr) return run_train(ta, out);
        if (*pr) return run_predict(pr_data, pr_weights, pr_idmap, pr_out, out);
        return run_eval(ev_scores, ev_labels, ev_f, ev_fstar, out);
    } catch (...) {
        return classify(std::current_exception(), err);
    }
}

int cli_main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

} // namespace dglm
