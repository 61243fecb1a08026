#include "smartrel/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "smartrel/common.hpp"

namespace smartrel {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const CsvTable& table, std::size_t row, int col) {
  const std::string& text = table.rows[row][col];
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw ValidationError(ErrorCode::MalformedRow,
                          table.path + ":" + std::to_string(table.line_numbers[row]) +
                              " field '" + text + "' is not a finite number");
  }
  return v;
}

void require_header(const CsvTable& table, const std::vector<std::string>& expected) {
  if (table.header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw ValidationError(ErrorCode::MalformedRow,
                          table.path + ":1 header mismatch, expected '" + want + "'");
  }
  if (table.rows.empty()) {
    throw ValidationError(ErrorCode::EmptyDataset, table.path + " has no data rows");
  }
}

[[noreturn]] void invariant_error(const CsvTable& table, std::size_t row,
                                  const std::string& what) {
  throw ValidationError(ErrorCode::InvariantViolation,
                        table.path + ":" + std::to_string(table.line_numbers[row]) +
                            " " + what);
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(ErrorCode::MalformedRow, "cannot open " + path);
  }
  CsvTable table;
  table.path = path;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (table.header.empty()) {
      table.header = split_line(line);
      continue;
    }
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw ValidationError(ErrorCode::MalformedRow,
                            path + ":" + std::to_string(line_no) + " expected " +
                                std::to_string(table.header.size()) + " fields, got " +
                                std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) {
    throw ValidationError(ErrorCode::EmptyDataset, path + " is empty");
  }
  return table;
}

std::string format_double(double v) {
  char buf[40];
  // Exact small integers print as integers, everything else as the shortest
  // representation that round-trips.
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double parsed = std::strtod(buf, nullptr);
  if (parsed == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char probe[40];
      std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
      if (std::strtod(probe, nullptr) == v) return probe;
    }
  }
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError(ErrorCode::MalformedRow, "cannot write " + path);
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format_double(row[i]);
    }
    out << "\n";
  }
}

std::vector<LifetimeRecord> load_lifetime_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  require_header(table, {"unit_id", "time", "status"});
  std::vector<LifetimeRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    LifetimeRecord rec;
    rec.unit_id = table.rows[r][0];
    rec.time = parse_double(table, r, 1);
    const double status = parse_double(table, r, 2);
    if (status != 0.0 && status != 1.0) {
      invariant_error(table, r, "status must be 0 or 1");
    }
    rec.status = static_cast<int>(status);
    if (rec.time <= 0.0) invariant_error(table, r, "time must be positive");
    records.push_back(std::move(rec));
  }
  return records;
}

void write_lifetime_csv(const std::string& path, const std::vector<LifetimeRecord>& records) {
  std::ofstream out(path);
  out << "unit_id,time,status\n";
  for (const auto& rec : records) {
    out << rec.unit_id << "," << format_double(rec.time) << "," << rec.status << "\n";
  }
}

std::vector<ExposureStep> load_exposure_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  require_header(table, {"unit_id", "start", "end", "rate"});
  std::vector<ExposureStep> steps;
  steps.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ExposureStep step;
    step.unit_id = table.rows[r][0];
    step.start = parse_double(table, r, 1);
    step.end = parse_double(table, r, 2);
    step.rate = parse_double(table, r, 3);
    if (step.start < 0.0) invariant_error(table, r, "start must be nonnegative");
    if (step.end <= step.start) invariant_error(table, r, "end must exceed start");
    if (step.rate < 0.0) invariant_error(table, r, "rate must be nonnegative");
    steps.push_back(std::move(step));
  }
  // Per-unit steps must be non-overlapping; report against the file.
  auto by_unit = exposure_by_unit(steps);
  for (const auto& [unit, unit_steps] : by_unit) {
    for (std::size_t i = 1; i < unit_steps.size(); ++i) {
      if (unit_steps[i].start < unit_steps[i - 1].end) {
        throw ValidationError(ErrorCode::InvariantViolation,
                              path + " unit " + unit + " has overlapping exposure steps");
      }
    }
  }
  return steps;
}

void write_exposure_csv(const std::string& path, const std::vector<ExposureStep>& steps) {
  std::ofstream out(path);
  out << "unit_id,start,end,rate\n";
  for (const auto& s : steps) {
    out << s.unit_id << "," << format_double(s.start) << "," << format_double(s.end)
        << "," << format_double(s.rate) << "\n";
  }
}

std::vector<EventRow> load_events_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  require_header(table, {"unit_id", "event_time"});
  std::vector<EventRow> events;
  events.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    EventRow row;
    row.unit_id = table.rows[r][0];
    row.event_time = parse_double(table, r, 1);
    if (row.event_time <= 0.0) invariant_error(table, r, "event_time must be positive");
    events.push_back(std::move(row));
  }
  return events;
}

void write_events_csv(const std::string& path, const std::vector<EventRow>& events) {
  std::ofstream out(path);
  out << "unit_id,event_time\n";
  for (const auto& e : events) {
    out << e.unit_id << "," << format_double(e.event_time) << "\n";
  }
}

std::vector<FollowupRow> load_followup_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  require_header(table, {"unit_id", "follow_up_end"});
  std::vector<FollowupRow> rows;
  rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    FollowupRow row;
    row.unit_id = table.rows[r][0];
    row.follow_up_end = parse_double(table, r, 1);
    if (row.follow_up_end <= 0.0) {
      invariant_error(table, r, "follow_up_end must be positive");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_followup_csv(const std::string& path, const std::vector<FollowupRow>& rows) {
  std::ofstream out(path);
  out << "unit_id,follow_up_end\n";
  for (const auto& r : rows) {
    out << r.unit_id << "," << format_double(r.follow_up_end) << "\n";
  }
}

std::vector<DegradationPath> load_degradation_csv(const std::string& path, double threshold) {
  CsvTable table = read_csv(path);
  require_header(table, {"unit_id", "time", "value"});
  std::map<std::string, DegradationPath> by_unit;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& unit = table.rows[r][0];
    const double time = parse_double(table, r, 1);
    const double value = parse_double(table, r, 2);
    if (time < 0.0) invariant_error(table, r, "time must be nonnegative");
    auto [it, inserted] = by_unit.try_emplace(unit);
    if (inserted) {
      it->second.unit_id = unit;
      it->second.threshold = threshold;
      order.push_back(unit);
    }
    if (!it->second.times.empty() && time <= it->second.times.back()) {
      invariant_error(table, r, "times must be strictly increasing within a unit");
    }
    it->second.times.push_back(time);
    it->second.values.push_back(value);
  }
  std::vector<DegradationPath> paths;
  paths.reserve(order.size());
  for (const auto& unit : order) paths.push_back(std::move(by_unit[unit]));
  return paths;
}

void write_degradation_csv(const std::string& path, const std::vector<DegradationPath>& paths) {
  std::ofstream out(path);
  out << "unit_id,time,value\n";
  for (const auto& p : paths) {
    for (std::size_t i = 0; i < p.times.size(); ++i) {
      out << p.unit_id << "," << format_double(p.times[i]) << ","
          << format_double(p.values[i]) << "\n";
    }
  }
}

std::map<std::string, std::vector<ExposureStep>> exposure_by_unit(
    const std::vector<ExposureStep>& steps) {
  std::map<std::string, std::vector<ExposureStep>> by_unit;
  for (const auto& s : steps) by_unit[s.unit_id].push_back(s);
  for (auto& [unit, unit_steps] : by_unit) {
    std::sort(unit_steps.begin(), unit_steps.end(),
              [](const ExposureStep& a, const ExposureStep& b) { return a.start < b.start; });
  }
  return by_unit;
}

std::vector<RecurrentHistory> build_histories(
    const std::vector<EventRow>& events, const std::vector<FollowupRow>& followups,
    const std::vector<ExposureStep>* exposure) {
  if (followups.empty()) {
    throw ValidationError(ErrorCode::EmptyDataset, "no follow-up rows");
  }
  std::map<std::string, RecurrentHistory> by_unit;
  std::vector<std::string> order;
  for (const auto& f : followups) {
    if (by_unit.count(f.unit_id)) {
      throw ValidationError(ErrorCode::InvariantViolation,
                            "duplicate follow-up row for unit " + f.unit_id);
    }
    RecurrentHistory h;
    h.unit_id = f.unit_id;
    h.follow_up_end = f.follow_up_end;
    by_unit.emplace(f.unit_id, std::move(h));
    order.push_back(f.unit_id);
  }
  for (const auto& e : events) {
    auto it = by_unit.find(e.unit_id);
    if (it == by_unit.end()) {
      throw ValidationError(ErrorCode::InvariantViolation,
                            "event for unknown unit " + e.unit_id);
    }
    it->second.event_times.push_back(e.event_time);
  }

  std::map<std::string, std::vector<ExposureStep>> steps;
  if (exposure) steps = exposure_by_unit(*exposure);

  std::vector<RecurrentHistory> histories;
  histories.reserve(order.size());
  for (const auto& unit : order) {
    RecurrentHistory& h = by_unit[unit];
    std::sort(h.event_times.begin(), h.event_times.end());
    for (std::size_t i = 0; i < h.event_times.size(); ++i) {
      const double t = h.event_times[i];
      // Simultaneous events within one unit are rejected, not merged.
      if (i > 0 && t == h.event_times[i - 1]) {
        throw ValidationError(ErrorCode::InvariantViolation,
                              "unit " + unit + " has duplicate event time " +
                                  format_double(t));
      }
      if (t >= h.follow_up_end) {
        throw ValidationError(ErrorCode::InvariantViolation,
                              "unit " + unit + " has event at or after follow_up_end");
      }
      if (exposure) {
        const auto it = steps.find(unit);
        bool covered = false;
        if (it != steps.end()) {
          for (const auto& s : it->second) {
            if (t > s.start && t <= s.end && s.rate > 0.0) {
              covered = true;
              break;
            }
          }
        }
        if (!covered) {
          throw ValidationError(ErrorCode::InvariantViolation,
                                "unit " + unit + " event at " + format_double(t) +
                                    " outside positive-rate exposure");
        }
      }
    }
    if (exposure) {
      // Exposure must tile the follow-up window; gaps are an error, not an
      // implied zero rate.
      const auto it = steps.find(unit);
      const double tau = h.follow_up_end;
      const double slack = 1e-9 * (1.0 + tau);
      double covered_to = 0.0;
      if (it != steps.end()) {
        for (const auto& s : it->second) {
          if (s.start > covered_to + slack) break;
          covered_to = std::max(covered_to, s.end);
          if (covered_to >= tau - slack) break;
        }
      }
      if (covered_to < tau - slack) {
        throw ValidationError(ErrorCode::InvariantViolation,
                              "unit " + unit + " exposure does not cover (0, " +
                                  format_double(tau) + "]");
      }
    }
    histories.push_back(std::move(h));
  }
  return histories;
}

}  // namespace smartrel
