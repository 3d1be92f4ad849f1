#include "cfd/harness.hpp"

#include "cfd/error.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace cfd {

using nlohmann::json;

namespace {

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

json row_json(const LedgerRow& r) {
    return json{{"round", r.round},
                {"accuracy", r.accuracy},
                {"up_bytes", r.up_bytes},
                {"down_bytes", r.down_bytes},
                {"up_entropy_bits", r.up_entropy_bits},
                {"down_entropy_bits", r.down_entropy_bits},
                {"up_eta", r.up_eta},
                {"cumulative_up_bytes", r.cumulative_up_bytes},
                {"cumulative_down_bytes", r.cumulative_down_bytes},
                {"participants", r.participants},
                {"up_label_entropy_bits", r.up_label_entropy_bits}};
}

}  // namespace

void write_csv(std::ostream& out, const RunReport& report) {
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : report.rows) {
        out << r.round << ',' << exact(r.accuracy) << ',' << r.up_bytes << ',' << r.down_bytes << ','
            << exact(r.up_entropy_bits) << ',' << exact(r.down_entropy_bits) << ',' << exact(r.up_eta) << ','
            << r.cumulative_up_bytes << ',' << r.cumulative_down_bytes << ',' << r.participants << ','
            << exact(r.up_label_entropy_bits) << '\n';
    }
}

std::vector<LedgerRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("results csv is empty");
    if (split_csv(line) != csv_columns()) throw IoError("unexpected results csv header: " + line);
    std::vector<LedgerRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != csv_columns().size()) {
            throw IoError("results csv line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                          " fields");
        }
        try {
            LedgerRow r;
            r.round = static_cast<std::uint32_t>(std::stoul(cells[0]));
            r.accuracy = std::stod(cells[1]);
            r.up_bytes = std::stoull(cells[2]);
            r.down_bytes = std::stoull(cells[3]);
            r.up_entropy_bits = std::stod(cells[4]);
            r.down_entropy_bits = std::stod(cells[5]);
            r.up_eta = std::stod(cells[6]);
            r.cumulative_up_bytes = std::stoull(cells[7]);
            r.cumulative_down_bytes = std::stoull(cells[8]);
            r.participants = std::stoull(cells[9]);
            r.up_label_entropy_bits = std::stod(cells[10]);
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw IoError("results csv line " + std::to_string(line_no) + " is not numeric");
        }
    }
    return rows;
}

json report_json(const RunReport& report, const std::vector<double>& targets) {
    json rounds = json::array();
    for (const auto& r : report.rows) rounds.push_back(row_json(r));
    json table = json::array();
    for (double t : targets) {
        const auto b = bits_to_target(report, t);
        if (!b) {
            table.push_back({{"target", t}, {"reached", false}, {"up_mb", "n.a."}, {"down_mb", "n.a."}});
            continue;
        }
        table.push_back({{"target", t},
                         {"reached", true},
                         {"round", b->round},
                         {"up_mb", b->up_mb},
                         {"down_mb", b->down_mb},
                         {"up_total_mb", b->up_total_mb},
                         {"down_total_mb", b->down_total_mb}});
    }
    return json{{"config", report.config}, {"rounds", rounds}, {"bits_to_target", table}};
}

void write_plot_data(std::ostream& out, const RunReport& report) {
    out << "round,direction,bytes,cumulative_bytes,entropy_bits,accuracy\n";
    for (const auto& r : report.rows) {
        out << r.round << ",up," << r.up_bytes << ',' << r.cumulative_up_bytes << ',' << exact(r.up_entropy_bits)
            << ',' << exact(r.accuracy) << '\n';
        out << r.round << ",down," << r.down_bytes << ',' << r.cumulative_down_bytes << ','
            << exact(r.down_entropy_bits) << ',' << exact(r.accuracy) << '\n';
    }
}

void emit_results(const RunReport& report, const std::vector<double>& targets, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    {
        auto out = open_out(dir / "results.csv");
        write_csv(out, report);
    }
    {
        auto out = open_out(dir / "results.json");
        out << report_json(report, targets).dump(2) << '\n';
    }
    {
        auto out = open_out(dir / "plot_data.csv");
        write_plot_data(out, report);
    }
}

void print_targets(std::ostream& out, const RunReport& report, const std::vector<double>& targets) {
    out << std::left << std::setw(8) << "target" << std::setw(7) << "round" << std::setw(12) << "up_MB"
        << std::setw(12) << "down_MB" << std::setw(14) << "up_total_MB" << "down_total_MB\n";
    out << std::fixed << std::setprecision(2);
    for (double t : targets) {
        const auto b = bits_to_target(report, t);
        out << std::setprecision(2) << std::setw(8) << t << std::setprecision(4);
        if (!b) {
            out << std::setw(7) << "-" << std::setw(12) << "n.a." << std::setw(12) << "n.a." << std::setw(14) << "n.a."
                << "n.a.\n";
            continue;
        }
        out << std::setw(7) << b->round << std::setw(12) << b->up_mb << std::setw(12) << b->down_mb << std::setw(14)
            << b->up_total_mb << b->down_total_mb << '\n';
    }
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
}

}  // namespace cfd
