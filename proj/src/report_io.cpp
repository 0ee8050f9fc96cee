#include "hybridlab/report_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hybridlab/error.hpp"

namespace hybridlab {

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) raise(ErrorCode::Internal, "number formatting failed");
    return std::string(buf, ptr);
}

std::string trajectory_header(int nodes) {
    std::string h = "t,site_event,from,to";
    for (int j = 1; j <= nodes; ++j) h += ",x_" + std::to_string(j);
    return h;
}

CsvWriter::CsvWriter(std::ostream& out, std::string_view header, std::string_view expected)
    : out_(out), columns_(1) {
    if (header != expected)
        raise(ErrorCode::Internal, "CSV schema check failed: header '" + std::string(header) + "' != '" +
                                       std::string(expected) + "'");
    for (char c : header)
        if (c == ',') ++columns_;
    out_ << header << '\n';
}

void CsvWriter::separator() {
    if (filled_ > 0) row_ += ',';
    ++filled_;
}

CsvWriter& CsvWriter::field(double v) {
    separator();
    row_ += format_number(v);
    return *this;
}

CsvWriter& CsvWriter::field(long v) {
    separator();
    row_ += std::to_string(v);
    return *this;
}

CsvWriter& CsvWriter::field(std::string_view v) {
    separator();
    row_ += v;
    return *this;
}

CsvWriter& CsvWriter::empty() {
    separator();
    return *this;
}

void CsvWriter::end_row() {
    if (filled_ != columns_)
        raise(ErrorCode::Internal, "CSV row has " + std::to_string(filled_) + " fields, header has " +
                                       std::to_string(columns_));
    out_ << row_ << '\n';
    if (!out_) raise(ErrorCode::Io, "write failed");
    row_.clear();
    filled_ = 0;
}

TrajectoryCsvSink::TrajectoryCsvSink(std::ostream& out, const ChannelModel& model, int nodes, int stride,
                                     long final_index)
    : model_(model),
      writer_(out, trajectory_header(nodes), trajectory_header(nodes)),
      stride_(stride),
      final_index_(final_index) {
    require(stride >= 1, "stride must be >= 1");
}

void TrajectoryCsvSink::operator()(const SnapshotView& s) {
    if (!s.jump && s.lattice_index % stride_ != 0 && s.lattice_index != final_index_) return;
    writer_.field(s.time);
    if (s.jump) {
        writer_.field(static_cast<long>(s.jump->site))
            .field(model_.state_name(s.jump->from))
            .field(model_.state_name(s.jump->to));
    } else {
        writer_.empty().empty().empty();
    }
    for (double v : s.x) writer_.field(v);
    writer_.end_row();
}

void write_trajectory_csv(std::ostream& out, const ChannelModel& model, const HybridTrajectory& traj, int stride) {
    const long final_index = traj.lattice_index.empty() ? 0 : traj.lattice_index.back();
    TrajectoryCsvSink sink(out, model, traj.path.grid.size(), stride, final_index);
    for (std::size_t k = 0; k < traj.path.times.size(); ++k) {
        const JumpEvent* jump = traj.event[k] >= 0 ? &traj.jumps[static_cast<std::size_t>(traj.event[k])] : nullptr;
        sink(SnapshotView{traj.path.times[k], traj.path.x[k].values(), traj.y[k], jump, traj.lattice_index[k]});
    }
}

void write_deterministic_csv(std::ostream& out, const DeterministicTrajectory& traj, int stride) {
    require(stride >= 1, "stride must be >= 1");
    const int nodes = traj.path.grid.size();
    CsvWriter w(out, trajectory_header(nodes), trajectory_header(nodes));
    const std::size_t last = traj.path.times.size() - 1;
    for (std::size_t k = 0; k <= last; ++k) {
        if (k % static_cast<std::size_t>(stride) != 0 && k != last) continue;
        w.field(traj.path.times[k]).empty().empty().empty();
        for (double v : traj.path.x[k].values()) w.field(v);
        w.end_row();
    }
}

void write_errors_csv(std::ostream& out, const ErrorReport& report) {
    CsvWriter w(out, "eps,N,rep,sup_err2", kErrorsHeader);
    for (const auto& p : report.pairs)
        for (std::size_t r = 0; r < p.sup_err2.size(); ++r)
            w.field(p.epsilon).field(static_cast<long>(p.population)).field(static_cast<long>(r)).field(p.sup_err2[r]).end_row();
}

void write_summary_csv(std::ostream& out, const ErrorReport& report) {
    CsvWriter w(out, "eps,N,q10,q50,q90", kSummaryHeader);
    for (const auto& p : report.pairs)
        w.field(p.epsilon).field(static_cast<long>(p.population)).field(p.q10).field(p.q50).field(p.q90).end_row();
}

void write_tail_csv(std::ostream& out, const ErrorReport& report) {
    CsvWriter w(out, "eps,N,delta,freq,ci_half", kTailHeader);
    for (const auto& p : report.pairs)
        for (const auto& t : p.tail)
            w.field(p.epsilon).field(static_cast<long>(p.population)).field(t.delta).field(t.freq).field(t.ci_half).end_row();
}

void write_scaling_csv(std::ostream& out, const ScalingReport& report) {
    CsvWriter w(out, "N,sup_f,sup_bracket,sup_fx_fd,sup_ft_fd", kScalingHeader);
    for (const auto& r : report.rows)
        w.field(static_cast<long>(r.population)).field(r.sup_f).field(r.sup_bracket).field(r.sup_fx).field(r.sup_ft).end_row();
}

void write_scaling_metadata(std::ostream& out, const ScalingReport& report, const std::vector<int>& populations) {
    const auto& o = report.options;
    nlohmann::ordered_json meta;
    meta["record"] = "sampling";
    meta["N"] = populations;
    meta["seed"] = report.seed;
    meta["samples"] = o.samples;
    meta["time_points"] = o.time_points;
    meta["directions"] = o.directions;
    meta["fd_step"] = o.fd_step;
    meta["sine_modes"] = o.sine_modes;
    meta["T"] = o.horizon;
    meta["dt"] = o.dt;
    meta["x0_amplitude"] = o.x0_amplitude;
    meta["bootstrap"] = o.bootstrap;
    meta["grid_factor"] = o.grid_factor;
    out << meta.dump() << '\n';

    auto slope = [](const SlopeEstimate& s) {
        nlohmann::ordered_json j;
        if (s.degenerate) {
            j["degenerate"] = true;
        } else {
            j["slope"] = s.slope;
            j["ci90"] = {s.lo, s.hi};
        }
        return j;
    };
    nlohmann::ordered_json fit;
    fit["record"] = "fit";
    fit["sup_f"] = slope(report.alpha);
    fit["sup_bracket"] = slope(report.rho);
    fit["sup_fx_fd"] = slope(report.beta);
    fit["sup_ft_fd"] = slope(report.gamma);
    fit["consistent"] = report.consistent();
    out << fit.dump() << '\n';
}

void write_psi_table(std::ostream& out, double max, int points) {
    require(std::isfinite(max) && max >= 0.0, "psi table needs max >= 0");
    require(points >= 2, "psi table needs at least 2 points");
    CsvWriter w(out, "x,psi", kPsiHeader);
    for (int k = 0; k < points; ++k) {
        const double x = k == points - 1 ? max : max * k / (points - 1);
        w.field(x).field(psi(x)).end_row();
    }
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) raise(ErrorCode::Io, path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::Io, path.string() + ": cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) raise(ErrorCode::Io, path.string() + ": write failed");
}

}  // namespace hybridlab
