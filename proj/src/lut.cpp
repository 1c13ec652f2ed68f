#include "gmswarm/lut.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gmswarm/error.hpp"
#include "gmswarm/text.hpp"

namespace gmswarm {

namespace {

constexpr std::array<std::string_view, kLutColumnCount> kHeaderNames = {
    "jd_uA_per_um", "gm_gds", "gm_cgg_hz", "vgs_v", "vdssat_v"};

constexpr std::array<std::string_view, kLutColumnCount> kEnumNames = {
    "current_density", "intrinsic_gain", "transit_figure", "gate_source_voltage",
    "saturation_voltage"};

// Shortest text that parses back to the same double.
std::string fmt_num(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? end : buf);
}

void validate_slice(const LutSlice& s) {
  if (!(s.length_um > 0.0) || !std::isfinite(s.length_um)) {
    throw Error(Errc::invalid_range, "channel length must be positive, got " + fmt_num(s.length_um));
  }
  if (s.gmid.size() < 2) {
    throw Error(Errc::empty_length,
                "length " + fmt_num(s.length_um) + " has fewer than 2 gm/ID samples");
  }
  for (const auto& col : s.columns) {
    if (col.size() != s.gmid.size()) {
      throw Error(Errc::missing_column, "column size mismatch at length " + fmt_num(s.length_um));
    }
  }
  for (std::size_t k = 0; k < s.gmid.size(); ++k) {
    if (!(s.gmid[k] > 0.0)) {
      throw Error(Errc::non_monotonic_axis, "gm/ID samples must be positive");
    }
    if (k > 0 && !(s.gmid[k] > s.gmid[k - 1])) {
      throw Error(Errc::non_monotonic_axis, "gm/ID axis not strictly increasing at L=" +
                                                fmt_num(s.length_um) + ", gm/ID=" +
                                                fmt_num(s.gmid[k]));
    }
    if (!(s.column(LutColumn::current_density)[k] > 0.0)) {
      throw Error(Errc::invalid_range, "current density must be positive");
    }
    if (!(s.column(LutColumn::intrinsic_gain)[k] > 0.0)) {
      throw Error(Errc::invalid_range, "intrinsic gain must be positive");
    }
  }
}

}  // namespace

std::string_view to_string(DeviceKind kind) noexcept {
  return kind == DeviceKind::n_type ? "n_type" : "p_type";
}

std::optional<DeviceKind> parse_device_kind(std::string_view text) noexcept {
  if (text == "n_type") return DeviceKind::n_type;
  if (text == "p_type") return DeviceKind::p_type;
  return std::nullopt;
}

std::string_view column_name(LutColumn column) noexcept {
  return kEnumNames[static_cast<std::size_t>(column)];
}

LutColumn parse_column(std::string_view name) {
  for (std::size_t c = 0; c < kLutColumnCount; ++c) {
    if (name == kEnumNames[c] || name == kHeaderNames[c]) return static_cast<LutColumn>(c);
  }
  throw Error(Errc::unknown_column, std::string(name));
}

DeviceLut::DeviceLut(DeviceKind kind, std::vector<LutSlice> slices)
    : kind_(kind), slices_(std::move(slices)) {
  if (slices_.empty()) throw Error(Errc::empty_length, "table has no channel lengths");
  for (std::size_t i = 0; i < slices_.size(); ++i) {
    validate_slice(slices_[i]);
    if (i > 0 && !(slices_[i].length_um > slices_[i - 1].length_um)) {
      throw Error(Errc::non_monotonic_axis, "lengths must be strictly increasing");
    }
  }
}

std::vector<double> DeviceLut::lengths() const {
  std::vector<double> out;
  out.reserve(slices_.size());
  for (const auto& s : slices_) out.push_back(s.length_um);
  return out;
}

bool DeviceLut::has_length(double length_um) const noexcept {
  return std::any_of(slices_.begin(), slices_.end(),
                     [&](const LutSlice& s) { return s.length_um == length_um; });
}

const LutSlice& DeviceLut::slice(double length_um) const {
  auto it = std::lower_bound(slices_.begin(), slices_.end(), length_um,
                             [](const LutSlice& s, double l) { return s.length_um < l; });
  if (it == slices_.end() || it->length_um != length_um) {
    throw Error(Errc::length_not_in_grid, "L=" + fmt_num(length_um) + " um is not a tabulated length");
  }
  return *it;
}

double DeviceLut::lookup(LutColumn column, double gmid, double length_um) const {
  const LutSlice& s = slice(length_um);
  const auto& axis = s.gmid;
  if (!(gmid >= axis.front() && gmid <= axis.back())) {
    throw Error(Errc::gmid_out_of_range, "gm/ID=" + fmt_num(gmid) + " outside [" +
                                             fmt_num(axis.front()) + ", " + fmt_num(axis.back()) +
                                             "] at L=" + fmt_num(length_um));
  }
  const auto& values = s.column(column);
  auto hi = std::lower_bound(axis.begin(), axis.end(), gmid);
  auto k = static_cast<std::size_t>(hi - axis.begin());
  if (axis[k] == gmid) return values[k];
  const double t = (gmid - axis[k - 1]) / (axis[k] - axis[k - 1]);
  return values[k - 1] + t * (values[k] - values[k - 1]);
}

double DeviceLut::lookup(std::string_view column, double gmid, double length_um) const {
  return lookup(parse_column(column), gmid, length_um);
}

double DeviceLut::width_for_current(double gmid, double length_um, double drain_current_ua) const {
  if (!(drain_current_ua > 0.0)) {
    throw Error(Errc::non_positive_current, "drain current must be > 0, got " + fmt_num(drain_current_ua));
  }
  return drain_current_ua / lookup(LutColumn::current_density, gmid, length_um);
}

std::optional<double> DeviceLut::gmid_for_current_density(double length_um,
                                                          double jd_ua_per_um) const {
  const LutSlice& s = slice(length_um);
  const auto& jd = s.column(LutColumn::current_density);
  for (std::size_t k = 0; k + 1 < jd.size(); ++k) {
    const double a = jd[k];
    const double b = jd[k + 1];
    if (a == jd_ua_per_um) return s.gmid[k];
    if ((jd_ua_per_um - a) * (jd_ua_per_um - b) < 0.0) {
      const double t = (jd_ua_per_um - a) / (b - a);
      return s.gmid[k] + t * (s.gmid[k + 1] - s.gmid[k]);
    }
  }
  if (jd.back() == jd_ua_per_um) return s.gmid.back();
  return std::nullopt;
}

DeviceLut parse_lut(std::string_view csv_text, DeviceKind fallback_kind) {
  DeviceKind kind = fallback_kind;
  std::vector<std::string> header;
  std::array<std::size_t, 2 + kLutColumnCount> index{};
  std::map<double, std::vector<std::array<double, 1 + kLutColumnCount>>> rows;

  std::size_t line_no = 0;
  for (std::string_view line : split_lines(csv_text)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = trim(line.substr(1));
      if (body.starts_with("device_kind=")) {
        auto parsed = parse_device_kind(trim(body.substr(12)));
        if (!parsed) throw Error(Errc::parse_error, "bad device_kind comment on line " + std::to_string(line_no));
        kind = *parsed;
      }
      continue;
    }
    auto fields = split(line, ',');
    if (header.empty()) {
      for (auto f : fields) header.emplace_back(trim(f));
      auto find = [&](std::string_view name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(Errc::missing_column, std::string(name));
        return static_cast<std::size_t>(it - header.begin());
      };
      index[0] = find("L_um");
      index[1] = find("gmid");
      for (std::size_t c = 0; c < kLutColumnCount; ++c) index[2 + c] = find(kHeaderNames[c]);
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(header.size()) + " fields");
    }
    std::array<double, 2 + kLutColumnCount> v{};
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto parsed = parse_double(trim(fields[index[i]]));
      if (!parsed) {
        throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": bad number '" +
                                           std::string(trim(fields[index[i]])) + "'");
      }
      v[i] = *parsed;
    }
    std::array<double, 1 + kLutColumnCount> rest{};
    std::copy(v.begin() + 1, v.end(), rest.begin());
    rows[v[0]].push_back(rest);
  }
  if (header.empty()) throw Error(Errc::missing_column, "no header line");

  std::vector<LutSlice> slices;
  for (auto& [length, samples] : rows) {
    std::sort(samples.begin(), samples.end(),
              [](const auto& a, const auto& b) { return a[0] < b[0]; });
    LutSlice s;
    s.length_um = length;
    for (const auto& r : samples) {
      s.gmid.push_back(r[0]);
      for (std::size_t c = 0; c < kLutColumnCount; ++c) s.columns[c].push_back(r[1 + c]);
    }
    slices.push_back(std::move(s));
  }
  return DeviceLut(kind, std::move(slices));
}

DeviceLut load_lut(const std::filesystem::path& path, DeviceKind fallback_kind) {
  return parse_lut(read_file(path), fallback_kind);
}

std::string format_lut(const DeviceLut& lut) {
  std::ostringstream os;
  os << "# device_kind=" << to_string(lut.kind()) << '\n';
  os << "L_um,gmid";
  for (auto h : kHeaderNames) os << ',' << h;
  os << '\n';
  for (const auto& s : lut.slices()) {
    for (std::size_t k = 0; k < s.gmid.size(); ++k) {
      os << fmt_num(s.length_um) << ',' << fmt_num(s.gmid[k]);
      for (const auto& col : s.columns) os << ',' << fmt_num(col[k]);
      os << '\n';
    }
  }
  return os.str();
}

void write_lut(const DeviceLut& lut, const std::filesystem::path& path) {
  write_file(path, format_lut(lut));
}

double SyntheticModel::current_density(double gmid, double length_um) const {
  return j0_ua_per_um * (l0_um / length_um) * std::exp(-gmid / g0);
}

double SyntheticModel::intrinsic_gain(double gmid, double length_um) const {
  return a0 * length_um / l0_um * (gain_knee - gmid);
}

double SyntheticModel::transit_figure(double gmid, double length_um) const {
  const double r = l0_um / length_um;
  return f0_hz * r * r * std::exp(-gmid / g1);
}

double SyntheticModel::gate_source_voltage(double gmid) const { return 1.0 - 0.035 * gmid; }

double SyntheticModel::saturation_voltage(double gmid) const { return 2.0 / gmid; }

DeviceLut generate_synthetic_lut(DeviceKind kind, const std::vector<double>& lengths_um,
                                 GmidRange range, std::size_t sample_count,
                                 const SyntheticModel& model) {
  if (sample_count < 2) throw Error(Errc::invalid_range, "sample_count must be >= 2");
  if (!(range.lo > 0.0) || !(range.hi > range.lo)) {
    throw Error(Errc::invalid_range, "gm/ID range must be positive and increasing");
  }
  if (!(range.hi < model.gain_knee)) {
    throw Error(Errc::invalid_range, "gm/ID range must stay below the intrinsic-gain knee");
  }
  std::vector<double> lengths = lengths_um;
  std::sort(lengths.begin(), lengths.end());
  std::vector<LutSlice> slices;
  for (double length : lengths) {
    LutSlice s;
    s.length_um = length;
    for (std::size_t k = 0; k < sample_count; ++k) {
      const double g = range.lo + (range.hi - range.lo) * static_cast<double>(k) /
                                      static_cast<double>(sample_count - 1);
      s.gmid.push_back(g);
      s.column(LutColumn::current_density).push_back(model.current_density(g, length));
      s.column(LutColumn::intrinsic_gain).push_back(model.intrinsic_gain(g, length));
      s.column(LutColumn::transit_figure).push_back(model.transit_figure(g, length));
      s.column(LutColumn::gate_source_voltage).push_back(model.gate_source_voltage(g));
      s.column(LutColumn::saturation_voltage).push_back(model.saturation_voltage(g));
    }
    slices.push_back(std::move(s));
  }
  return DeviceLut(kind, std::move(slices));
}

}  // namespace gmswarm
