#include "spm/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "spm/errors.hpp"
#include "spm/statistics.hpp"

namespace spm {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    text = trim(text);
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc() && ptr == end;
}

struct Columns {
    std::size_t ts, src, dst, port;
    std::size_t needed() const { return std::max({ts, src, dst, port}) + 1; }
};

Columns locate(const std::vector<std::string_view>& names, const char* ts, const char* src, const char* dst,
               const char* port) {
    auto find = [&](const char* want) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (trim(names[i]) == want) return i;
        }
        throw SchemaError(std::string("missing required column '") + want + "'");
    };
    return {find(ts), find(src), find(dst), find(port)};
}

// Returns false for a malformed row.
bool parse_row(const std::vector<std::string_view>& cells, const Columns& c, ConnRecord& rec) {
    if (cells.size() < c.needed()) return false;
    if (!parse_number(cells[c.ts], rec.ts) || !std::isfinite(rec.ts)) return false;
    if (!parse_number(cells[c.port], rec.dst_port) || rec.dst_port < 0 || rec.dst_port > 65535) return false;
    const auto src = trim(cells[c.src]);
    const auto dst = trim(cells[c.dst]);
    if (src.empty() || dst.empty() || src == "-" || dst == "-") return false;
    rec.src_ip.assign(src);
    rec.dst_ip.assign(dst);
    return true;
}

// Total order so reconstruction does not depend on input row order.
bool record_less(const ConnRecord& a, const ConnRecord& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.src_ip != b.src_ip) return a.src_ip < b.src_ip;
    if (a.dst_ip != b.dst_ip) return a.dst_ip < b.dst_ip;
    return a.dst_port < b.dst_port;
}

bool is_internal(const std::string& ip, const std::vector<Ipv4Prefix>& prefixes) {
    const auto address = parse_ipv4(ip);
    if (!address) return false;
    return std::any_of(prefixes.begin(), prefixes.end(), [&](const Ipv4Prefix& p) { return p.contains(*address); });
}

std::vector<ConnRecord> internal_sorted(const std::vector<ConnRecord>& records,
                                        const std::vector<Ipv4Prefix>& prefixes) {
    std::vector<ConnRecord> kept;
    kept.reserve(records.size());
    for (const auto& r : records) {
        if (is_internal(r.src_ip, prefixes) && is_internal(r.dst_ip, prefixes)) kept.push_back(r);
    }
    std::sort(kept.begin(), kept.end(), record_less);
    return kept;
}

}  // namespace

LogFormat parse_log_format(std::string_view name) {
    if (name == "zeek" || name == "tsv" || name == "tsv_zeek" || name == "zeek_tsv") return LogFormat::ZeekTsv;
    if (name == "csv" || name == "csv_minimal") return LogFormat::CsvMinimal;
    throw InvalidInput("unknown log format '" + std::string(name) + "'");
}

ParsedLog parse_log(std::istream& in, const ParseOptions& options) {
    ParsedLog out;
    std::optional<Columns> columns;
    char sep = options.format == LogFormat::ZeekTsv ? '\t' : ',';
    std::string line;
    std::size_t line_no = 0;
    auto bad_row = [&](const std::string& why) {
        if (options.strict) throw ParseError(why, line_no);
        ++out.skipped;
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        if (trim(view).empty()) continue;
        if (options.format == LogFormat::ZeekTsv) {
            if (view.front() == '#') {
                if (view.starts_with("#fields")) {
                    auto names = split(view, sep);
                    names.erase(names.begin());
                    columns = locate(names, "ts", "id.orig_h", "id.resp_h", "id.resp_p");
                }
                continue;
            }
        } else if (!columns) {
            columns = locate(split(view, sep), "ts", "src_ip", "dst_ip", "dst_port");
            continue;
        }
        if (!columns) throw SchemaError("data row before #fields header");
        ConnRecord rec;
        if (!parse_row(split(view, sep), *columns, rec)) {
            bad_row("unparsable row");
            continue;
        }
        out.records.push_back(std::move(rec));
    }
    if (!columns) throw SchemaError("no header found");
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const ConnRecord& a, const ConnRecord& b) { return a.ts < b.ts; });
    return out;
}

ParsedLog parse_log(const std::string& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open log '" + path + "'");
    return parse_log(in, options);
}

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
    const auto parts = split(text, '.');
    if (parts.size() != 4) return std::nullopt;
    std::uint32_t value = 0;
    for (auto part : parts) {
        unsigned octet = 0;
        if (part.empty() || part.size() > 3 || !parse_number(part, octet) || octet > 255) return std::nullopt;
        value = (value << 8) | octet;
    }
    return value;
}

Ipv4Prefix Ipv4Prefix::parse(std::string_view cidr) {
    const auto slash = cidr.find('/');
    Ipv4Prefix p;
    const auto address = parse_ipv4(trim(cidr.substr(0, slash)));
    int length = 32;
    if (slash != std::string_view::npos && !parse_number(cidr.substr(slash + 1), length)) length = -1;
    if (!address || length < 0 || length > 32) throw InvalidInput("bad CIDR prefix '" + std::string(cidr) + "'");
    p.length_ = length;
    p.mask_ = length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
    p.network_ = *address & p.mask_;
    return p;
}

bool Ipv4Prefix::contains(std::string_view address) const {
    const auto a = parse_ipv4(address);
    return a && contains(*a);
}

std::string Ipv4Prefix::to_string() const {
    std::ostringstream os;
    os << (network_ >> 24) << '.' << ((network_ >> 16) & 255) << '.' << ((network_ >> 8) & 255) << '.'
       << (network_ & 255) << '/' << length_;
    return os.str();
}

std::vector<Ipv4Prefix> default_internal_prefixes() {
    return {Ipv4Prefix::parse("10.0.0.0/8"), Ipv4Prefix::parse("172.16.0.0/12"),
            Ipv4Prefix::parse("192.168.0.0/16")};
}

double EpidemicTrace::infected_fraction() const {
    return contacted_ips == 0 ? 0.0 : static_cast<double>(infected_ips) / static_cast<double>(contacted_ips);
}

EpidemicTrace reconstruct(const std::vector<ConnRecord>& records, const ReconstructOptions& options) {
    if (records.empty()) throw EmptyEpidemic("no connection records");
    const auto kept = internal_sorted(records, options.internal);
    EpidemicTrace trace;
    std::unordered_set<std::string> contacted;
    std::unordered_set<std::string> infected;
    bool started = false;
    for (const auto& r : kept) {
        contacted.insert(r.src_ip);
        contacted.insert(r.dst_ip);
        trace.t_end = r.ts;
        if (r.dst_port != options.malicious_port) continue;
        if (!started) {
            trace.t0 = r.ts;
            started = true;
        }
        if (infected.insert(r.src_ip).second) {
            trace.events.push_back({r.ts, r.src_ip});
            trace.curve.push_back({r.ts, infected.size()});
        }
    }
    if (!started) throw EmptyEpidemic("no internal attempts on port " + std::to_string(options.malicious_port));
    trace.contacted_ips = contacted.size();
    trace.infected_ips = infected.size();
    return trace;
}

EpidemicTrace truncate_plateau(const EpidemicTrace& trace) {
    if (trace.curve.empty()) throw EmptyEpidemic("trace has no infections");
    EpidemicTrace out = trace;
    out.t_end = trace.curve.back().t;
    return out;
}

double qcod(std::vector<double> sample) {
    if (sample.size() < 4) throw InsufficientData("QCoD needs at least 4 gaps");
    std::sort(sample.begin(), sample.end());
    const double q1 = quantile_sorted(sample, 0.25);
    const double q3 = quantile_sorted(sample, 0.75);
    if (q1 + q3 == 0.0) return 0.0;
    return (q3 - q1) / (q3 + q1);
}

double qcod_exponential_reference() {
    const double q1 = std::log(4.0 / 3.0);
    const double q3 = std::log(4.0);
    return (q3 - q1) / (q3 + q1);
}

DeltaStats delta_stats(const std::vector<ConnRecord>& records, const EpidemicTrace& trace,
                       const ReconstructOptions& options) {
    std::map<std::string, std::vector<double>> attempts;
    for (const auto& r : internal_sorted(records, options.internal)) {
        if (r.dst_port == options.malicious_port) attempts[r.src_ip].push_back(r.ts);
    }
    DeltaStats d;
    for (const auto& [ip, times] : attempts) {
        for (std::size_t k = 1; k < times.size(); ++k) d.consecutive_gaps.push_back(times[k] - times[k - 1]);
        d.tail_gaps.push_back(std::max(0.0, trace.t_end - times.back()));
    }
    if (d.consecutive_gaps.size() >= 4) d.qcod = qcod(d.consecutive_gaps);
    d.qcod_exponential_ref = qcod_exponential_reference();
    return d;
}

double compute_dt(const EpidemicTrace& trace, int T) {
    if (T < 1) throw InvalidInput("T must be >= 1");
    return (trace.t_end - trace.t0) / static_cast<double>(T);
}

double propagation_speed(const EpidemicTrace& trace) {
    if (trace.curve.empty()) throw EmptyEpidemic("trace has no infections");
    const double duration = trace.last_infection() - trace.t0;
    if (!(duration > 0.0)) throw InvalidInput("propagation speed needs a positive infection window");
    return static_cast<double>(trace.infected_ips) * 100.0 / duration;
}

std::vector<double> resample_cumulative(const std::vector<CurvePoint>& curve, double t0, double dt, int T) {
    if (T < 1) throw InvalidInput("T must be >= 1");
    if (!(dt > 0.0)) throw InvalidInput("dt must be > 0");
    std::vector<double> out(static_cast<std::size_t>(T));
    // Slack keeps an event exactly at t0 + k dt on the right side of rounding.
    const double slack = 1e-9 * dt;
    std::size_t next = 0;
    std::size_t count = 0;
    for (int k = 1; k <= T; ++k) {
        const double t = t0 + static_cast<double>(k) * dt + slack;
        while (next < curve.size() && curve[next].t <= t) count = curve[next++].infected;
        out[static_cast<std::size_t>(k - 1)] = static_cast<double>(count);
    }
    return out;
}

std::vector<double> resample_cumulative(const EpidemicTrace& trace, double dt, int T) {
    return resample_cumulative(trace.curve, trace.t0, dt, T);
}

void write_trace_csv(std::ostream& out, const EpidemicTrace& trace) {
    const auto precision = out.precision(15);
    out << "t,cumulative_infected\n";
    for (const auto& p : trace.curve) out << p.t << ',' << p.infected << '\n';
    if (!trace.curve.empty() && trace.t_end > trace.curve.back().t) {
        out << trace.t_end << ',' << trace.curve.back().infected << '\n';
    }
    out.precision(precision);
}

EpidemicTrace read_trace_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    EpidemicTrace trace;
    bool header = false;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        if (!header) {
            const auto names = split(view, ',');
            if (names.size() < 2 || trim(names[0]) != "t" || trim(names[1]) != "cumulative_infected") {
                throw SchemaError("expected header 't,cumulative_infected'");
            }
            header = true;
            continue;
        }
        const auto cells = split(view, ',');
        double t = 0.0;
        double count = 0.0;
        if (cells.size() < 2 || !parse_number(cells[0], t) || !parse_number(cells[1], count) || !std::isfinite(t) ||
            count < 0.0 || count != std::floor(count)) {
            throw ParseError("bad trace row", line_no);
        }
        if (first) {
            trace.t0 = t;
            first = false;
        }
        if (t < trace.t_end) throw ParseError("trace times must be nondecreasing", line_no);
        trace.t_end = t;
        const auto c = static_cast<std::size_t>(count);
        const std::size_t last = trace.curve.empty() ? 0 : trace.curve.back().infected;
        if (c < last) throw ParseError("cumulative count decreased", line_no);
        if (c > last) trace.curve.push_back({t, c});
    }
    if (!header) throw SchemaError("empty trace file");
    if (trace.curve.empty()) throw EmptyEpidemic("trace has no infections");
    trace.infected_ips = trace.contacted_ips = trace.curve.back().infected;
    return trace;
}

EpidemicTrace read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open trace '" + path + "'");
    return read_trace_csv(in);
}

nlohmann::ordered_json trace_summary_json(const EpidemicTrace& trace, const DeltaStats* deltas, int T) {
    nlohmann::ordered_json j;
    j["t0"] = trace.t0;
    j["t_end"] = trace.t_end;
    j["duration"] = trace.duration();
    j["last_infection"] = trace.curve.empty() ? trace.t0 : trace.last_infection();
    j["contacted_ips"] = trace.contacted_ips;
    j["infected_ips"] = trace.infected_ips;
    j["infected_fraction"] = trace.infected_fraction();
    if (T > 0) {
        j["T"] = T;
        j["dt"] = compute_dt(trace, T);
    }
    try {
        j["speed_per_100s"] = propagation_speed(trace);
    } catch (const Error&) {
        j["speed_per_100s"] = nullptr;
    }
    if (deltas) {
        j["gap_count"] = deltas->consecutive_gaps.size();
        j["qcod"] = deltas->qcod ? nlohmann::ordered_json(*deltas->qcod) : nlohmann::ordered_json(nullptr);
        j["qcod_exponential_ref"] = deltas->qcod_exponential_ref;
    }
    return j;
}

}  // namespace spm
