#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hybridlab/averaged.hpp"
#include "hybridlab/convergence.hpp"
#include "hybridlab/poisson.hpp"
#include "hybridlab/simulator.hpp"

namespace hybridlab {

inline constexpr std::string_view kErrorsHeader = "eps,N,rep,sup_err2";
inline constexpr std::string_view kSummaryHeader = "eps,N,q10,q50,q90";
inline constexpr std::string_view kTailHeader = "eps,N,delta,freq,ci_half";
inline constexpr std::string_view kScalingHeader = "N,sup_f,sup_bracket,sup_fx_fd,sup_ft_fd";
inline constexpr std::string_view kPsiHeader = "x,psi";

/// Shortest round-trip decimal form.
std::string format_number(double v);

/// `t,site_event,from,to,x_1,...,x_M`
std::string trajectory_header(int nodes);

/// Minimal CSV emitter: the header is checked against the documented schema
/// before anything is written, and every row must match its column count.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::string_view header, std::string_view expected);

    CsvWriter& field(double v);
    CsvWriter& field(long v);
    CsvWriter& field(std::string_view v);
    CsvWriter& empty();
    void end_row();

private:
    void separator();

    std::ostream& out_;
    std::size_t columns_;
    std::size_t filled_ = 0;
    std::string row_;
};

/// Snapshot sink writing trajectory rows. Jump rows are always written; lattice
/// row k is written when k % stride == 0 or k is the final lattice index.
class TrajectoryCsvSink {
public:
    TrajectoryCsvSink(std::ostream& out, const ChannelModel& model, int nodes, int stride, long final_index);

    void operator()(const SnapshotView& snapshot);

private:
    const ChannelModel& model_;
    CsvWriter writer_;
    int stride_;
    long final_index_;
};

void write_trajectory_csv(std::ostream& out, const ChannelModel& model, const HybridTrajectory& traj, int stride);
void write_deterministic_csv(std::ostream& out, const DeterministicTrajectory& traj, int stride);

void write_errors_csv(std::ostream& out, const ErrorReport& report);
void write_summary_csv(std::ostream& out, const ErrorReport& report);
void write_tail_csv(std::ostream& out, const ErrorReport& report);
void write_scaling_csv(std::ostream& out, const ScalingReport& report);
/// One JSON object per line: sampling configuration, then fitted slopes.
void write_scaling_metadata(std::ostream& out, const ScalingReport& report, const std::vector<int>& populations);
/// x_k = max * k / (points - 1), k = 0..points-1.
void write_psi_table(std::ostream& out, double max, int points);

/// Writes content to path (creating parent directories); io error on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace hybridlab
