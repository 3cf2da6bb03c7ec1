#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "krvi/harness.hpp"

namespace krvi::harness {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

void write_trace_csv(const RegretTrace& trace, std::ostream& out) {
    out << "agent,seed,t,s1,realized_return,v_star,v_pi,inst_regret,cum_regret";
    for (int h = 1; h <= trace.horizon; ++h) out << ",leaves_h" << h;
    for (int h = 1; h <= trace.horizon; ++h) out << ",ever_h" << h;
    for (int h = 1; h <= trace.horizon; ++h) out << ",max_depth_h" << h;
    out << ",wall_ms\n";
    for (const auto& row : trace.rows) {
        out << trace.agent_label << ',' << trace.seed << ',' << row.t << ',' << row.s1 << ','
            << format_double(row.realized_return) << ',' << format_double(row.v_star) << ','
            << format_double(row.v_pi) << ',' << format_double(row.inst_regret) << ','
            << format_double(row.cum_regret);
        for (int h = 0; h < trace.horizon; ++h) {
            out << ',' << (h < static_cast<int>(row.leaf_counts.size()) ? row.leaf_counts[h] : 0);
        }
        for (int h = 0; h < trace.horizon; ++h) {
            out << ','
                << (h < static_cast<int>(row.ever_created.size()) ? row.ever_created[h] : 0);
        }
        for (int h = 0; h < trace.horizon; ++h) {
            out << ',' << (h < static_cast<int>(row.max_depths.size()) ? row.max_depths[h] : 0);
        }
        out << ',' << format_double(row.wall_ms) << '\n';
    }
}

RegretTrace read_trace_csv(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw IoError("read_trace_csv: empty stream");
    const auto columns = split_csv_line(header);
    if (columns.size() < 10 || columns[0] != "agent" || columns[2] != "t") {
        throw IoError("read_trace_csv: unrecognized header");
    }
    int horizon = 0;
    for (const auto& c : columns) {
        if (c.rfind("leaves_h", 0) == 0) ++horizon;
    }
    RegretTrace trace;
    trace.horizon = horizon;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != columns.size()) throw IoError("read_trace_csv: ragged row");
        trace.agent_label = f[0];
        trace.seed = std::stoull(f[1]);
        EpisodeRow row;
        row.t = std::stoll(f[2]);
        row.s1 = std::stoi(f[3]);
        row.realized_return = std::stod(f[4]);
        row.v_star = std::stod(f[5]);
        row.v_pi = std::stod(f[6]);
        row.inst_regret = std::stod(f[7]);
        row.cum_regret = std::stod(f[8]);
        std::size_t at = 9;
        for (int h = 0; h < horizon; ++h) row.leaf_counts.push_back(std::stoi(f[at++]));
        for (int h = 0; h < horizon; ++h) row.ever_created.push_back(std::stoll(f[at++]));
        for (int h = 0; h < horizon; ++h) row.max_depths.push_back(std::stoi(f[at++]));
        row.wall_ms = std::stod(f[at]);
        trace.rows.push_back(std::move(row));
    }
    trace.T = static_cast<long long>(trace.rows.size());
    return trace;
}

void write_partition_csv(const RegretTrace& trace, std::ostream& out) {
    out << "episode,h,leaf_count,ever_created,max_depth\n";
    for (const auto& row : trace.rows) {
        for (int h = 1; h <= static_cast<int>(row.leaf_counts.size()); ++h) {
            out << row.t << ',' << h << ',' << row.leaf_counts[static_cast<std::size_t>(h - 1)]
                << ',' << row.ever_created[static_cast<std::size_t>(h - 1)] << ','
                << row.max_depths[static_cast<std::size_t>(h - 1)] << '\n';
        }
    }
}

void emit_plot_data(const std::vector<RegretTrace>& traces, const std::string& out_dir,
                    double burn_in) {
    if (traces.empty()) throw InvalidInput("emit_plot_data: no traces");
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream out(out_dir + "/long.csv");
        if (!out) throw IoError("emit_plot_data: cannot write long.csv");
        out << "agent,seed,t,cumulative_regret,leaf_total\n";
        for (const auto& trace : traces) {
            for (const auto& row : trace.rows) {
                long long leaf_total = 0;
                for (const int c : row.leaf_counts) leaf_total += c;
                out << trace.agent_label << ',' << trace.seed << ',' << row.t << ','
                    << format_double(row.cum_regret) << ',' << leaf_total << '\n';
            }
        }
    }

    std::map<std::string, std::vector<const RegretTrace*>> by_agent;
    for (const auto& trace : traces) by_agent[trace.agent_label].push_back(&trace);

    std::ofstream out(out_dir + "/summary.csv");
    if (!out) throw IoError("emit_plot_data: cannot write summary.csv");
    out << "agent,num_seeds,mean_final_regret,mean_slope,slope_lo,slope_hi\n";
    for (const auto& [label, group] : by_agent) {
        double final_sum = 0.0;
        std::vector<double> slopes;
        for (const RegretTrace* trace : group) {
            final_sum += trace->final_cumulative_regret();
            try {
                slopes.push_back(fit_regret_exponent(trace->cumulative(), burn_in).slope);
            } catch (const InsufficientData&) {
                // short or flat traces contribute no slope sample
            }
        }
        double mean_slope = std::numeric_limits<double>::quiet_NaN();
        double lo = mean_slope;
        double hi = mean_slope;
        if (!slopes.empty()) {
            double s = 0.0;
            for (const double v : slopes) s += v;
            mean_slope = s / static_cast<double>(slopes.size());
            double var = 0.0;
            for (const double v : slopes) var += (v - mean_slope) * (v - mean_slope);
            const double sd = slopes.size() > 1
                                  ? std::sqrt(var / static_cast<double>(slopes.size() - 1))
                                  : 0.0;
            const double half =
                1.96 * sd / std::sqrt(static_cast<double>(std::max<std::size_t>(slopes.size(), 1)));
            lo = mean_slope - half;
            hi = mean_slope + half;
        }
        out << label << ',' << group.size() << ','
            << format_double(final_sum / static_cast<double>(group.size())) << ','
            << format_double(mean_slope) << ',' << format_double(lo) << ','
            << format_double(hi) << '\n';
    }
}

}  // namespace krvi::harness
