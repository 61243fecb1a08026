#ifndef SMARTREL_DATASET_HPP
#define SMARTREL_DATASET_HPP

#include <map>
#include <string>
#include <vector>

#include "smartrel/types.hpp"

namespace smartrel {

// Minimal CSV table: header row required, comma separated, UTF-8, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number per row for error reporting.
  std::vector<int> line_numbers;
  std::string path;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Formats a double so that reading it back reproduces the value exactly.
std::string format_double(double v);

// lifetime.csv: unit_id,time,status
std::vector<LifetimeRecord> load_lifetime_csv(const std::string& path);
void write_lifetime_csv(const std::string& path, const std::vector<LifetimeRecord>& records);

// exposure.csv: unit_id,start,end,rate. Validates per-unit ordering.
std::vector<ExposureStep> load_exposure_csv(const std::string& path);
void write_exposure_csv(const std::string& path, const std::vector<ExposureStep>& steps);

struct EventRow {
  std::string unit_id;
  double event_time = 0.0;
};

struct FollowupRow {
  std::string unit_id;
  double follow_up_end = 0.0;
};

// events.csv: unit_id,event_time
std::vector<EventRow> load_events_csv(const std::string& path);
void write_events_csv(const std::string& path, const std::vector<EventRow>& events);

// followup.csv: unit_id,follow_up_end
std::vector<FollowupRow> load_followup_csv(const std::string& path);
void write_followup_csv(const std::string& path, const std::vector<FollowupRow>& rows);

// degradation.csv: unit_id,time,value; the failure threshold comes from config.
std::vector<DegradationPath> load_degradation_csv(const std::string& path, double threshold);
void write_degradation_csv(const std::string& path, const std::vector<DegradationPath>& paths);

// Joins events and follow-up windows into validated histories. Every unit in
// followup appears in the result (possibly with zero events). When exposure
// is given, every event must fall inside a step with positive rate.
std::vector<RecurrentHistory> build_histories(
    const std::vector<EventRow>& events, const std::vector<FollowupRow>& followups,
    const std::vector<ExposureStep>* exposure = nullptr);

// Exposure steps of one unit, ordered.
std::map<std::string, std::vector<ExposureStep>> exposure_by_unit(
    const std::vector<ExposureStep>& steps);

}  // namespace smartrel

#endif  // SMARTREL_DATASET_HPP
