#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace spm {

struct ConnRecord {
    double ts = 0.0;
    std::string src_ip;
    std::string dst_ip;
    int dst_port = 0;
};

enum class LogFormat { ZeekTsv, CsvMinimal };

LogFormat parse_log_format(std::string_view name);

struct ParseOptions {
    LogFormat format = LogFormat::ZeekTsv;
    /// Strict: the first bad row throws ParseError. Lenient: bad rows are counted and skipped.
    bool strict = false;
};

struct ParsedLog {
    std::vector<ConnRecord> records;  ///< sorted by ts (stable)
    std::size_t skipped = 0;
};

/// Zeek conn.log TSV (columns located through the `#fields` header) or a CSV with
/// header `ts,src_ip,dst_ip,dst_port`.
ParsedLog parse_log(std::istream& in, const ParseOptions& options);
ParsedLog parse_log(const std::string& path, const ParseOptions& options);

/// IPv4 CIDR block.
class Ipv4Prefix {
public:
    static Ipv4Prefix parse(std::string_view cidr);
    bool contains(std::uint32_t address) const noexcept { return (address & mask_) == network_; }
    bool contains(std::string_view address) const;
    std::string to_string() const;

private:
    std::uint32_t network_ = 0;
    std::uint32_t mask_ = 0;
    int length_ = 0;
};

/// Dotted-quad to host-order integer; nullopt if malformed.
std::optional<std::uint32_t> parse_ipv4(std::string_view text);

/// 10/8, 172.16/12, 192.168/16.
std::vector<Ipv4Prefix> default_internal_prefixes();

struct InfectionEvent {
    double t = 0.0;
    std::string ip;
};

struct CurvePoint {
    double t = 0.0;
    std::size_t infected = 0;
};

struct EpidemicTrace {
    std::vector<InfectionEvent> events;
    std::vector<CurvePoint> curve;
    double t0 = 0.0;
    double t_end = 0.0;
    std::size_t contacted_ips = 0;
    std::size_t infected_ips = 0;

    double duration() const noexcept { return t_end - t0; }
    double last_infection() const { return curve.back().t; }
    double infected_fraction() const;
};

struct ReconstructOptions {
    int malicious_port = 445;
    std::vector<Ipv4Prefix> internal = default_internal_prefixes();
};

/// Keeps internal-to-internal records; a source is infected at its first attempt on
/// the malicious port. Throws EmptyEpidemic when no such attempt exists.
EpidemicTrace reconstruct(const std::vector<ConnRecord>& records, const ReconstructOptions& options = {});

/// Cuts the trace at its last new infection.
EpidemicTrace truncate_plateau(const EpidemicTrace& trace);

struct DeltaStats {
    std::vector<double> consecutive_gaps;  ///< pooled over sources
    std::vector<double> tail_gaps;         ///< last attempt to t_end, one per source
    std::optional<double> qcod;  ///< unset with fewer than 4 gaps
    double qcod_exponential_ref = 0.0;
};

/// (Q3 - Q1) / (Q3 + Q1) with linear-interpolation quartiles; needs at least 4 values.
double qcod(std::vector<double> sample);

/// QCoD of an exponential distribution: (ln 4 - ln 4/3) / (ln 4 + ln 4/3), for any mean.
double qcod_exponential_reference();

/// Gaps between successive malicious attempts of each infected source, using the
/// same filters as `reconstruct`.
DeltaStats delta_stats(const std::vector<ConnRecord>& records, const EpidemicTrace& trace,
                       const ReconstructOptions& options = {});

/// (t_end - t0) / T.
double compute_dt(const EpidemicTrace& trace, int T);

/// New infections per 100 s between t0 and the last infection.
double propagation_speed(const EpidemicTrace& trace);

/// Cumulative infected at t0 + k dt for k = 1..T, last value carried forward.
std::vector<double> resample_cumulative(const EpidemicTrace& trace, double dt, int T);
std::vector<double> resample_cumulative(const std::vector<CurvePoint>& curve, double t0, double dt, int T);

/// `t,cumulative_infected`; a final row at t_end repeats the last count when the
/// trace extends past its last infection.
void write_trace_csv(std::ostream& out, const EpidemicTrace& trace);
/// Reads `t,cumulative_infected` back; t0 is the first time, t_end the last.
/// Contacted and infected counts are both set to the final count.
EpidemicTrace read_trace_csv(std::istream& in);
EpidemicTrace read_trace_csv(const std::string& path);

/// t0, t_end, counts, dt (if T > 0), speed and QCoD where computable.
nlohmann::ordered_json trace_summary_json(const EpidemicTrace& trace, const DeltaStats* deltas, int T);

}  // namespace spm
