// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License

#ifndef HOTSTREAK_IO_HPP
#define HOTSTREAK_IO_HPP

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "hotstreak/classify.hpp"
#include "hotstreak/common.hpp"
#include "hotstreak/followers.hpp"
#include "hotstreak/model.hpp"
#include "hotstreak/synth.hpp"

namespace hotstreak::io {

using Json = nlohmann::json;

struct LineError {
  std::size_t line = 0;
  std::string reason;
};

// ---- careers (JSONL) ----

inline Json career_to_json(const Career& c) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["user_id"] = c.user_id();
  Json tweets = Json::array();
  for (const auto& t : c.tweets()) {
    Json o;
    o["ts"] = t.timestamp;
    o["rt"] = t.retweet_count;
    if (t.flags) {
      const auto& f = *t.flags;
      o["flags"] = {{"retweet", f.is_retweet}, {"reply", f.is_reply},   {"mention", f.has_mention},
                    {"hashtag", f.has_hashtag}, {"url", f.has_url}, {"media", f.has_media}};
    }
    if (t.text_length) o["len"] = *t.text_length;
    if (t.tokens) o["tokens"] = *t.tokens;
    if (t.topic_dist) o["topics"] = *t.topic_dist;
    if (t.sentiment) o["sent"] = *t.sentiment;
    if (t.retweeters) {
      Json rts = Json::array();
      for (const auto& r : *t.retweeters) rts.push_back({{"uid", r.user}, {"ts", r.timestamp}});
      o["rts"] = std::move(rts);
    }
    tweets.push_back(std::move(o));
  }
  j["tweets"] = std::move(tweets);
  if (c.activity()) {
    Json a = Json::array();
    for (const auto& e : *c.activity()) a.push_back({{"ts", e.timestamp}, {"kind", e.kind}});
    j["activity"] = std::move(a);
  }
  return j;
}

namespace detail {

inline std::int64_t get_int(const Json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ParseError(std::string("'") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

inline double get_real(const Json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ParseError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace detail

inline Career career_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("career record must be a JSON object");
  if (j.contains("format_version") && detail::get_int(j, "format_version") != kFormatVersion)
    throw ParseError("unsupported format_version");
  if (!j.contains("user_id") || !j["user_id"].is_string()) throw ParseError("missing string 'user_id'");
  if (!j.contains("tweets") || !j["tweets"].is_array()) throw ParseError("missing array 'tweets'");
  std::vector<TweetRecord> tweets;
  tweets.reserve(j["tweets"].size());
  for (const auto& o : j["tweets"]) {
    if (!o.is_object()) throw ParseError("tweet must be an object");
    TweetRecord t;
    t.timestamp = detail::get_int(o, "ts");
    t.retweet_count = detail::get_int(o, "rt");
    if (o.contains("flags")) {
      const auto& f = o["flags"];
      if (!f.is_object()) throw ParseError("'flags' must be an object");
      auto flag = [&](const char* k) { return f.contains(k) && f[k].get<bool>(); };
      t.flags = TweetFlags{flag("retweet"), flag("reply"), flag("mention"), flag("hashtag"), flag("url"), flag("media")};
    }
    if (o.contains("len")) t.text_length = detail::get_int(o, "len");
    if (o.contains("tokens")) t.tokens = o["tokens"].get<TokenCounts>();
    if (o.contains("topics")) t.topic_dist = o["topics"].get<std::vector<double>>();
    if (o.contains("sent")) t.sentiment = detail::get_real(o, "sent");
    if (o.contains("rts")) {
      std::vector<Retweet> rts;
      for (const auto& r : o["rts"]) rts.push_back({r.at("uid").get<std::string>(), detail::get_int(r, "ts")});
      t.retweeters = std::move(rts);
    }
    tweets.push_back(std::move(t));
  }
  std::optional<std::vector<ActivityEvent>> activity;
  if (j.contains("activity")) {
    std::vector<ActivityEvent> a;
    for (const auto& e : j["activity"]) a.push_back({detail::get_int(e, "ts"), e.at("kind").get<std::string>()});
    activity = std::move(a);
  }
  return Career(j["user_id"].get<std::string>(), std::move(tweets), std::move(activity));
}

// Streams one career per line; malformed lines are skipped and logged.
class CareerReader {
 public:
  explicit CareerReader(const std::string& path) : in_(path) {
    if (!in_) throw Error("cannot open '" + path + "' for reading");
  }

  std::optional<Career> next() {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      if (!text.empty() && text.back() == '\r') text.pop_back();
      if (text.find_first_not_of(" \t") == std::string::npos) continue;
      try {
        return career_from_json(Json::parse(text));
      } catch (const std::exception& e) {
        errors_.push_back({line_, e.what()});
      }
    }
    return std::nullopt;
  }

  const std::vector<LineError>& errors() const { return errors_; }

 private:
  std::ifstream in_;
  std::size_t line_ = 0;
  std::vector<LineError> errors_;
};

struct CareerFile {
  std::vector<Career> careers;
  std::vector<LineError> errors;
};

inline CareerFile read_careers(const std::string& path) {
  CareerReader reader(path);
  CareerFile out;
  while (auto c = reader.next()) out.careers.push_back(std::move(*c));
  out.errors = reader.errors();
  return out;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

inline void write_careers(std::span<const Career> careers, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& c : careers) out << career_to_json(c).dump() << '\n';
  if (!out) throw Error("write to '" + path + "' failed");
}

// ---- follower snapshots (CSV) ----

inline constexpr const char* kSnapshotHeader = "user_id,ts,followers";

struct SnapshotFile {
  std::map<std::string, FollowerSnapshots> users;
  std::vector<LineError> errors;
};

inline SnapshotFile read_snapshots(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  SnapshotFile out;
  std::string text;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text[0] == '#') continue;
    if (!header) {
      if (text != kSnapshotHeader) throw ParseError("snapshot file must start with header '" + std::string(kSnapshotHeader) + "'");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    try {
      if (cells.size() != 3 || cells[0].empty()) throw ParseError("expected 3 fields");
      std::size_t used = 0;
      const std::int64_t ts = std::stoll(cells[1], &used);
      if (used != cells[1].size()) throw ParseError("bad timestamp");
      const std::int64_t n = std::stoll(cells[2], &used);
      if (used != cells[2].size() || n < 0) throw ParseError("followers must be a nonnegative integer");
      auto& snaps = out.users[cells[0]];
      snaps.user_id = cells[0];
      if (!snaps.points.empty() && ts <= snaps.points.back().timestamp)
        throw ParseError("timestamps must ascend within a user");
      snaps.points.push_back({ts, n});
    } catch (const std::logic_error&) {
      out.errors.push_back({line, "unparseable number"});
    } catch (const ParseError& e) {
      out.errors.push_back({line, e.what()});
    }
  }
  return out;
}

inline void write_snapshots(std::span<const FollowerSnapshots> users, const std::string& path) {
  auto out = open_for_write(path);
  out << "# format_version=" << kFormatVersion << '\n' << kSnapshotHeader << '\n';
  for (const auto& u : users)
    for (const auto& p : u.points) out << u.user_id << ',' << p.timestamp << ',' << p.count << '\n';
}

// ---- ground truth (JSONL) ----

inline void write_truth(std::span<const synth::SynthCareer> careers, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& s : careers) {
    Json ranges = Json::array();
    for (const auto& r : s.truth) ranges.push_back({r.start_index, r.end_index});
    Json j = {{"format_version", kFormatVersion}, {"user_id", s.career.user_id()}, {"streaks", ranges}};
    out << j.dump() << '\n';
  }
}

inline std::map<std::string, std::vector<synth::TruthRange>> read_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::map<std::string, std::vector<synth::TruthRange>> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    try {
      const auto j = Json::parse(text);
      auto& v = out[j.at("user_id").get<std::string>()];
      for (const auto& r : j.at("streaks")) v.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()});
    } catch (const std::exception& e) {
      throw ParseError("truth file line " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

// ---- classifier model (JSON) ----

inline Json model_to_json(const classify::LogisticModel& m) {
  return {{"format_version", kFormatVersion},
          {"kind", "logistic_regression"},
          {"feature_names", m.feature_names},
          {"means", m.means},
          {"scales", m.scales},
          {"weights", m.weights},
          {"bias", m.bias},
          {"l2", m.options.l2},
          {"lr", m.options.lr},
          {"epochs", m.options.epochs}};
}

inline classify::LogisticModel model_from_json(const Json& j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion || j.at("kind") != "logistic_regression")
      throw ParseError("unsupported model document");
    classify::LogisticModel m;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.means = j.at("means").get<std::vector<double>>();
    m.scales = j.at("scales").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.options = {j.at("l2").get<double>(), j.at("lr").get<double>(), j.at("epochs").get<std::size_t>()};
    const auto d = m.feature_names.size();
    if (m.means.size() != d || m.scales.size() != d || m.weights.size() != d)
      throw ParseError("model vectors disagree in length");
    for (const auto& n : m.feature_names) classify::feature_index(n);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model document: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
}

// ---- reports ----

using Cell = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw ArgumentError("row width does not match the table");
    rows.push_back(std::move(row));
  }
};

struct Report {
  std::string command;
  Json config = Json::object();
  std::map<std::string, Table> tables;
};

inline double round_significant(double v, int digits = 9) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline Json cell_to_json(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return nullptr;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return format_real(*d);
    return round_significant(*d);
  }
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return std::get<bool>(c);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string cell_to_csv(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return "";
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  if (const auto* s = std::get_if<std::string>(&c)) return csv_escape(*s);
  return std::get<bool>(c) ? "true" : "false";
}

inline Json report_to_json(const Report& r) {
  Json tables = Json::object();
  for (const auto& [name, t] : r.tables) {
    Json rows = Json::array();
    for (const auto& row : t.rows) {
      Json o = Json::object();
      for (std::size_t c = 0; c < t.columns.size(); ++c) o[t.columns[c]] = cell_to_json(row[c]);
      rows.push_back(std::move(o));
    }
    tables[name] = std::move(rows);
  }
  return {{"tool", kToolName},   {"version", kVersion}, {"format_version", kFormatVersion},
          {"command", r.command}, {"config", r.config}, {"tables", tables}};
}

inline std::string report_to_csv(const Report& r) {
  std::ostringstream out;
  out << "# tool=" << kToolName << " version=" << kVersion << " format_version=" << kFormatVersion << '\n';
  out << "# command=" << r.command << '\n';
  out << "# config=" << r.config.dump() << '\n';
  for (const auto& [name, t] : r.tables) {
    out << "\n# table=" << name << '\n';
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << csv_escape(t.columns[c]);
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_to_csv(row[c]);
      out << '\n';
    }
  }
  return out.str();
}

enum class Format { kJson, kCsv };

inline Format parse_format(const std::string& s) {
  if (s == "json") return Format::kJson;
  if (s == "csv") return Format::kCsv;
  throw ArgumentError("format must be json or csv");
}

inline std::string render_report(const Report& r, Format f) {
  return f == Format::kJson ? report_to_json(r).dump(2) + "\n" : report_to_csv(r);
}

inline void write_text(const std::string& text, const std::string& path) {
  auto out = open_for_write(path);
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

inline void write_report(const Report& r, const std::string& path, Format f) { write_text(render_report(r, f), path); }

// ---- plot data ----

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
};

struct PlotSeries {
  std::string name;
  std::vector<PlotPoint> points;
};

inline std::string plotdata_csv(std::span<const PlotSeries> series) {
  std::ostringstream out;
  out << "# format_version=" << kFormatVersion << '\n' << "series,x,y,ci_lo,ci_hi\n";
  for (const auto& s : series)
    for (const auto& p : s.points)
      out << csv_escape(s.name) << ',' << format_real(p.x) << ',' << format_real(p.y) << ','
          << (p.ci_lo ? format_real(*p.ci_lo) : "") << ',' << (p.ci_hi ? format_real(*p.ci_hi) : "") << '\n';
  return out.str();
}

inline void export_plotdata(std::span<const PlotSeries> series, const std::string& path) {
  write_text(plotdata_csv(series), path);
}

}  // namespace hotstreak::io

#endif  // HOTSTREAK_IO_HPP
