#include "gmswarm/verify.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "gmswarm/error.hpp"
#include "gmswarm/text.hpp"

namespace gmswarm {

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = static_cast<unsigned char>(s.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_';
  });
}

struct Token {
  std::size_t begin;  // index of "{{"
  std::size_t end;    // one past "}}"
  std::string name;
};

std::vector<Token> scan_placeholders(const std::string& text) {
  std::vector<Token> out;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string::npos) {
    const auto close = text.find("}}", pos + 2);
    if (close == std::string::npos) {
      throw Error(Errc::unknown_placeholder, "unterminated '{{' at offset " + std::to_string(pos));
    }
    std::string name = text.substr(pos + 2, close - pos - 2);
    if (!is_identifier(name)) {
      throw Error(Errc::unknown_placeholder, "malformed placeholder '{{" + name + "}}'");
    }
    out.push_back({pos, close + 2, std::move(name)});
    pos = close + 2;
  }
  return out;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::string tail_lines(const std::filesystem::path& path, std::size_t count) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    return {};
  }
  auto lines = split_lines(text);
  const std::size_t start = lines.size() > count ? lines.size() - count : 0;
  std::string out;
  for (std::size_t i = start; i < lines.size(); ++i) {
    out += lines[i];
    out += '\n';
  }
  return out;
}

std::vector<std::vector<double>> sorted_by_first(const RawTable& t) {
  auto rows = t.rows;
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return rows;
}

void require_columns(const RawTable& t, std::size_t n, Testbench tb) {
  if (t.rows.empty()) {
    throw Error(Errc::output_parse_error, std::string(testbench_name(tb)) + " has no data rows");
  }
  for (const auto& r : t.rows) {
    if (r.size() < n) {
      throw Error(Errc::output_parse_error, std::string(testbench_name(tb)) + " needs " +
                                                std::to_string(n) + " columns");
    }
  }
}

std::atomic<unsigned long> g_job_counter{0};

}  // namespace

std::string_view testbench_name(Testbench tb) noexcept {
  switch (tb) {
    case Testbench::diff_ac: return "diff_ac";
    case Testbench::cm_ac: return "cm_ac";
    case Testbench::psrr_ac: return "psrr_ac";
    case Testbench::tran_step: return "tran_step";
    case Testbench::op: return "op";
  }
  return "unknown";
}

NetlistTemplate::NetlistTemplate(std::string text, std::vector<std::string> manifest)
    : text_(std::move(text)), manifest_(std::move(manifest)) {
  const auto names = placeholders();
  for (const auto& m : manifest_) {
    if (std::find(names.begin(), names.end(), m) == names.end()) {
      throw Error(Errc::missing_placeholder_value,
                  "manifest entry '" + m + "' does not occur in the template");
    }
  }
}

NetlistTemplate NetlistTemplate::from_file(const std::filesystem::path& path,
                                           std::vector<std::string> manifest) {
  return NetlistTemplate(read_file(path), std::move(manifest));
}

std::vector<std::string> NetlistTemplate::placeholders() const {
  std::vector<std::string> names;
  for (auto& tok : scan_placeholders(text_)) {
    if (std::find(names.begin(), names.end(), tok.name) == names.end()) {
      names.push_back(std::move(tok.name));
    }
  }
  return names;
}

std::vector<std::string> standard_manifest(const TopologySpec& topo) {
  std::vector<std::string> m;
  for (const char* prefix : {"W", "L", "VB", "ID"}) {
    for (std::size_t i = 1; i <= topo.group_count(); ++i) m.push_back(prefix + std::to_string(i));
  }
  for (const char* name : {"IT", "IDD", "VDD", "CL", "CLSE"}) m.emplace_back(name);
  return m;
}

PlaceholderValues placeholder_values(const SizingSolution& s, const TopologySpec& topo) {
  PlaceholderValues v;
  for (std::size_t i = 0; i < s.groups.size(); ++i) {
    const auto idx = std::to_string(i + 1);
    const GroupSizing& g = s.groups[i];
    v["W" + idx] = fixed(g.width_um, 4);
    v["L" + idx] = fixed(g.length_um, 4);
    v["VB" + idx] = fixed(g.vgs_v, 6);
    v["ID" + idx] = sci(g.drain_current_ua * 1e-6);
  }
  v["IT"] = sci(s.tail_current_ua * 1e-6);
  v["IDD"] = sci(s.idd_ua * 1e-6);
  v["VDD"] = fixed(topo.supply_voltage_v, 6);
  v["CL"] = sci(topo.load_capacitance_pf * 1e-12);
  v["CLSE"] = sci(topo.single_ended_load_pf() * 1e-12);
  return v;
}

std::string render_netlist(const NetlistTemplate& tpl, const PlaceholderValues& values) {
  const std::string& text = tpl.text();
  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  for (const auto& tok : scan_placeholders(text)) {
    out.append(text, cursor, tok.begin - cursor);
    auto it = values.find(tok.name);
    if (it == values.end()) {
      const auto& m = tpl.manifest();
      if (std::find(m.begin(), m.end(), tok.name) != m.end()) {
        throw Error(Errc::missing_placeholder_value, "no value for '" + tok.name + "'");
      }
      throw Error(Errc::unknown_placeholder, "'" + tok.name + "' is not a known placeholder");
    }
    out += it->second;
    cursor = tok.end;
  }
  out.append(text, cursor, std::string::npos);
  return out;
}

std::string render_netlist(const NetlistTemplate& tpl, const SizingSolution& s,
                           const TopologySpec& topo, const PlaceholderValues& extra) {
  auto values = placeholder_values(s, topo);
  for (const auto& [k, v] : extra) values.insert_or_assign(k, v);
  return render_netlist(tpl, values);
}

RawTable parse_raw_table(std::string_view text) {
  RawTable t;
  bool first = true;
  for (auto line : split_lines(text)) {
    auto tokens = split_whitespace(line);
    if (tokens.empty()) continue;
    std::vector<double> row;
    row.reserve(tokens.size());
    bool numeric = true;
    for (auto tok : tokens) {
      auto v = parse_double(tok);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      // A single vector-name header line is tolerated.
      if (first) {
        first = false;
        continue;
      }
      throw Error(Errc::output_parse_error, "non-numeric data line: " + std::string(line));
    }
    first = false;
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw Error(Errc::output_parse_error, "no data rows");
  return t;
}

std::optional<std::filesystem::path> resolve_executable(const std::filesystem::path& simulator) {
  namespace fs = std::filesystem;
  auto executable = [](const fs::path& p) {
    std::error_code ec;
    return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
  };
  if (simulator.empty()) return std::nullopt;
  if (simulator.has_parent_path()) {
    if (executable(simulator)) return fs::absolute(simulator);
    return std::nullopt;
  }
  const char* path_env = std::getenv("PATH");
  if (path_env == nullptr) return std::nullopt;
  for (auto dir : split(path_env, ':')) {
    if (dir.empty()) continue;
    fs::path candidate = fs::path(std::string(dir)) / simulator;
    if (executable(candidate)) return candidate;
  }
  return std::nullopt;
}

RawTable run_simulation(const SimulatorJob& job, const std::filesystem::path& simulator) {
  namespace fs = std::filesystem;
  const auto exe = resolve_executable(simulator);
  if (!exe) throw Error(Errc::simulator_not_found, simulator.string());

  fs::create_directories(job.workdir);
  const std::string tb(testbench_name(job.testbench));
  const fs::path netlist = job.workdir / (tb + ".cir");
  const fs::path log = job.workdir / (tb + ".log");
  const fs::path errfile = job.workdir / (tb + ".stderr");
  write_file(netlist, job.netlist);

  const std::string exe_s = exe->string();
  const std::string log_s = log.filename().string();
  const std::string net_s = netlist.filename().string();
  const std::string err_s = errfile.string();
  const std::string dir_s = job.workdir.string();

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::non_zero_exit, "fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(dir_s.c_str()) != 0) ::_exit(126);
    const int fd = ::open(err_s.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::execl(exe_s.c_str(), exe_s.c_str(), "-b", "-o", log_s.c_str(), net_s.c_str(),
            static_cast<char*>(nullptr));
    ::_exit(127);
  }

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(job.timeout_s);
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw Error(Errc::non_zero_exit, "waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw Error(Errc::timeout, tb + " exceeded " + fixed(job.timeout_s, 1) + " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    std::string detail = WIFEXITED(status) ? "exit code " + std::to_string(WEXITSTATUS(status))
                                           : "killed by signal";
    std::string tail = tail_lines(errfile, 10) + tail_lines(log, 10);
    throw Error(Errc::non_zero_exit, tb + ": " + detail + "\n" + tail);
  }

  const fs::path data = job.workdir / job.data_file;
  std::string text;
  try {
    text = read_file(data);
  } catch (const Error&) {
    throw Error(Errc::output_parse_error, "simulator wrote no data file " + data.string());
  }
  return parse_raw_table(text);
}

double interpolate_log_frequency(const RawTable& ac, std::size_t column, double freq_hz) {
  const auto rows = sorted_by_first(ac);
  if (freq_hz <= rows.front()[0]) return rows.front()[column];
  if (freq_hz >= rows.back()[0]) return rows.back()[column];
  const double lf = std::log10(freq_hz);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double f0 = rows[i][0];
    const double f1 = rows[i + 1][0];
    if (freq_hz >= f0 && freq_hz <= f1) {
      if (f0 == f1) return rows[i][column];
      const double t = (lf - std::log10(f0)) / (std::log10(f1) - std::log10(f0));
      return rows[i][column] + t * (rows[i + 1][column] - rows[i][column]);
    }
  }
  return rows.back()[column];
}

PerfMetrics extract_metrics(const RawResults& raw, const TopologySpec& topo) {
  auto find = [&](Testbench tb) -> const RawTable* {
    auto it = raw.find(tb);
    return it == raw.end() ? nullptr : &it->second;
  };
  const RawTable* diff = find(Testbench::diff_ac);
  const RawTable* op = find(Testbench::op);
  if (diff == nullptr) throw Error(Errc::missing_testbench, "diff_ac");
  if (op == nullptr) throw Error(Errc::missing_testbench, "op");
  require_columns(*diff, 3, Testbench::diff_ac);
  require_columns(*op, 1, Testbench::op);

  PerfMetrics m;
  const auto rows = sorted_by_first(*diff);
  m.av0_db = rows.front()[1];

  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double m0 = rows[i][1];
    const double m1 = rows[i + 1][1];
    if (m0 >= 0.0 && m1 < 0.0) {
      const double lf0 = std::log10(rows[i][0]);
      const double lf1 = std::log10(rows[i + 1][0]);
      const double t = m0 / (m0 - m1);
      m.gbw_hz = std::pow(10.0, lf0 + t * (lf1 - lf0));
      const double phase = rows[i][2] + t * (rows[i + 1][2] - rows[i][2]);
      m.pm_deg = 180.0 + phase;
      break;
    }
  }

  constexpr double kRejectionFreq = 1e3;
  if (const RawTable* cm = find(Testbench::cm_ac)) {
    require_columns(*cm, 2, Testbench::cm_ac);
    m.cmrr_db = interpolate_log_frequency(*diff, 1, kRejectionFreq) -
                interpolate_log_frequency(*cm, 1, kRejectionFreq);
  }
  if (const RawTable* ps = find(Testbench::psrr_ac)) {
    require_columns(*ps, 2, Testbench::psrr_ac);
    m.psrr_db = interpolate_log_frequency(*diff, 1, kRejectionFreq) -
                interpolate_log_frequency(*ps, 1, kRejectionFreq);
  }
  if (const RawTable* tran = find(Testbench::tran_step)) {
    require_columns(*tran, 2, Testbench::tran_step);
    const auto tr = sorted_by_first(*tran);
    double rise = 0.0;
    double fall = 0.0;
    for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
      const double dt = tr[i + 1][0] - tr[i][0];
      if (!(dt > 0.0)) continue;
      const double slope = (tr[i + 1][1] - tr[i][1]) / dt;
      rise = std::max(rise, slope);
      fall = std::max(fall, -slope);
    }
    m.sr_v_per_us = rise * 1e-6;
    m.sr_fall_v_per_us = fall * 1e-6;
  }
  const double idd_a = std::abs(op->rows.front().back());
  m.power_uw = topo.supply_voltage_v * idd_a * 1e6;
  return m;
}

PerfMetrics surrogate_evaluate(const SizingSolution& s, const TopologySpec& topo) {
  PerfMetrics m = analytic_metrics(s, topo);
  const double a0 = std::pow(10.0, *m.av0_db / 20.0);
  const double f_dominant = *m.gbw_hz / a0;
  constexpr double kRejectionFreq = 1e3;
  const double rolloff = std::sqrt(1.0 + std::pow(kRejectionFreq / f_dominant, 2.0));
  const double diff_gain = a0 / rolloff;

  const GroupSizing& in = s.groups.at(topo.input_group);
  if (topo.tail_group) {
    const GroupSizing& tail = s.groups.at(*topo.tail_group);
    const double cm_gain = tail.gds_us / (2.0 * in.gm_us);
    m.cmrr_db = 20.0 * std::log10(diff_gain / cm_gain);
  }

  // Supply ripple enters through the first stack's load and shares the
  // dominant pole with the differential path.
  const OutputStack& stack = topo.stacks.front();
  double supply_gain = s.groups.at(stack.load).gds_us / in.gm_us * a0;
  if (stack.cascode) {
    const GroupSizing& c = s.groups.at(*stack.cascode);
    supply_gain /= c.gm_us / c.gds_us;
  }
  m.psrr_db = 20.0 * std::log10(diff_gain / (supply_gain / rolloff));
  return m;
}

PerfMetrics SurrogateBackend::evaluate(const SizingSolution& s, const TopologySpec& topo) const {
  return surrogate_evaluate(s, topo);
}

SimulatorBackend::SimulatorBackend(SimulatorOptions options) : options_(std::move(options)) {
  for (Testbench tb : kAllTestbenches) {
    const auto path = options_.template_dir / (std::string(testbench_name(tb)) + ".cir");
    if (std::filesystem::exists(path)) templates_.emplace(tb, NetlistTemplate::from_file(path));
  }
  if (!templates_.count(Testbench::diff_ac)) {
    throw Error(Errc::missing_testbench,
                "no diff_ac.cir in " + options_.template_dir.string());
  }
  if (!templates_.count(Testbench::op)) {
    throw Error(Errc::missing_testbench, "no op.cir in " + options_.template_dir.string());
  }
}

VerificationBackend::Capabilities SimulatorBackend::capabilities() const {
  return {templates_.count(Testbench::cm_ac) != 0, templates_.count(Testbench::psrr_ac) != 0,
          templates_.count(Testbench::tran_step) != 0};
}

PerfMetrics SimulatorBackend::evaluate(const SizingSolution& s, const TopologySpec& topo) const {
  namespace fs = std::filesystem;
  const fs::path root =
      options_.work_root.empty() ? fs::temp_directory_path() / "gmswarm" : options_.work_root;
  const auto id = g_job_counter.fetch_add(1);
  const fs::path eval_dir =
      root / ("eval-" + std::to_string(::getpid()) + "-" + std::to_string(id));

  RawResults raw;
  try {
    for (const auto& [tb, tpl] : templates_) {
      SimulatorJob job;
      job.testbench = tb;
      job.netlist = render_netlist(tpl, s, topo, options_.extra_values);
      job.workdir = eval_dir / std::string(testbench_name(tb));
      job.timeout_s = options_.timeout_s;
      job.data_file = std::string(testbench_name(tb)) + ".dat";
      raw.emplace(tb, run_simulation(job, options_.simulator));
    }
  } catch (...) {
    if (!options_.keep_jobs) {
      std::error_code ec;
      fs::remove_all(eval_dir, ec);
    }
    throw;
  }
  if (!options_.keep_jobs) {
    std::error_code ec;
    fs::remove_all(eval_dir, ec);
  }
  PerfMetrics m = extract_metrics(raw, topo);
  m.gate_area_um2 = gate_area(s, topo);
  return m;
}

}  // namespace gmswarm
