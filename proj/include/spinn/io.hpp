#ifndef SPINN_IO_HPP
#define SPINN_IO_HPP

/** \file io.hpp
 *  File formats: trace / loss-history / solution CSVs, parameter
 *  checkpoints, and run-summary JSON. All floating-point output is printed
 *  with enough digits to round-trip, so identical runs produce identical
 *  bytes (the per-solve wall-time column is the one intentional exception).
 */

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinn/network.hpp"
#include "spinn/pinn.hpp"
#include "spinn/schwarz.hpp"

namespace spinn {

using json = nlohmann::ordered_json;

/** Shortest representation that parses back to the same double. */
inline std::string format_double(double v) {
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

inline void write_trace_csv(const SchwarzTrace& trace, const std::string& path) {
    auto out = open_out(path);
    out << "iter,subdomain,schwarz_err,l2_err,g_left,g_right,seconds\n";
    for (const auto& r : trace.rows)
        out << r.iter << ',' << r.subdomain << ',' << format_double(r.schwarz_err)
            << ',' << format_double(r.l2_err) << ',' << format_double(r.g_left) << ','
            << format_double(r.g_right) << ',' << format_double(r.seconds) << '\n';
}

inline void write_loss_history_csv(const std::vector<EpochLoss>& history,
                                   const std::string& path) {
    auto out = open_out(path);
    out << "schwarz_iter,epoch,loss_total,loss_r,loss_b,loss_d\n";
    for (const auto& e : history)
        out << e.schwarz_iter << ',' << e.epoch << ',' << format_double(e.total) << ','
            << format_double(e.residual) << ',' << format_double(e.boundary) << ','
            << format_double(e.data) << '\n';
}

// ------------------------------------------------------------- checkpoints

inline void save_checkpoint(const MlpParams& params, const std::string& path) {
    json doc;
    doc["layer_sizes"] = params.layer_sizes;
    doc["seed"] = params.seed;
    doc["theta"] = params.theta;
    auto out = open_out(path);
    out << doc.dump(1, '\t') << '\n';
}

inline MlpParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    json doc = json::parse(in);
    MlpParams p;
    p.layer_sizes = doc.at("layer_sizes").get<std::vector<int>>();
    p.seed = doc.at("seed").get<std::uint64_t>();
    p.theta = doc.at("theta").get<std::vector<double>>();
    if (p.theta.size() != theta_count(p.layer_sizes))
        throw std::runtime_error("checkpoint theta length does not match layer sizes");
    return p;
}

// ----------------------------------------------------------- run summaries

inline json trace_summary(const SchwarzTrace& trace) {
    json s;
    s["status"] = to_string(trace.status);
    s["iterations"] = trace.iterations;
    if (!trace.rows.empty()) {
        s["final_max_schwarz_err"] =
            trace.max_over_sweep(trace.iterations, &IterRecord::schwarz_err);
        s["final_max_l2_err"] = trace.max_over_sweep(trace.iterations, &IterRecord::l2_err);
        double sum = 0.0;
        int n = 0;
        for (const auto& r : trace.rows)
            if (r.iter == trace.iterations) {
                sum += r.l2_err;
                ++n;
            }
        s["final_avg_l2_err"] = n ? sum / n : 0.0;
    }
    return s;
}

}  // namespace spinn

#endif  // SPINN_IO_HPP
