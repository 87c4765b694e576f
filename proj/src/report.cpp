#include "thermo/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "thermo/errors.hpp"
#include "thermo/models.hpp"
#include "thermo/text.hpp"

namespace thermo::report {

std::string_view to_string(Protocol p) {
  return p == Protocol::Specialised ? "specialised" : "generalised";
}

Protocol parse_protocol(std::string_view text) {
  if (text == "specialised" || text == "specialized") return Protocol::Specialised;
  if (text == "generalised" || text == "generalized") return Protocol::Generalised;
  fail(ErrorKind::UsageError, "protocol must be 'specialised' or 'generalised', got '" + std::string(text) + "'");
}

std::string format_cell(double mse_mean, double mse_std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", mse_mean / kScale, mse_std / kScale);
  return buf;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, std::string_view expected_header) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != expected_header) {
    fail(ErrorKind::MalformedCsv, path.string() + ":1: expected header '" + std::string(expected_header) + "'");
  }
  const auto width = text::split(expected_header, ',').size();
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    std::vector<std::string> fields;
    for (auto f : text::split(text::trim(line), ',')) fields.emplace_back(text::trim(f));
    if (fields.size() != width) {
      fail(ErrorKind::MalformedCsv, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

double number_field(const std::string& s, const std::filesystem::path& path, std::size_t row) {
  auto v = text::parse_double(s);
  if (!v) fail(ErrorKind::MalformedCsv, path.string() + ": row " + std::to_string(row) + ": bad number '" + s + "'");
  return *v;
}

std::size_t count_field(const std::string& s, const std::filesystem::path& path, std::size_t row) {
  auto v = text::parse_int(s);
  if (!v || *v < 0) fail(ErrorKind::MalformedCsv, path.string() + ": row " + std::to_string(row) + ": bad count '" + s + "'");
  return static_cast<std::size_t>(*v);
}

constexpr std::string_view kMetricsHeader =
    "protocol,quantity,run_id,model,mse_mean,mse_std,retained_mse_mean,retained_mse_std,n_repeats,wall_time,seeds";
constexpr std::string_view kBestHeader =
    "dataset,target,model,learning_rate,weight_decay,dropout,hidden_units,layers,att_heads";

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) fail(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

std::size_t model_rank(const std::string& model) {
  for (std::size_t i = 0; i < models::kAllArchitectures.size(); ++i) {
    if (models::to_string(models::kAllArchitectures[i]) == model) return i;
  }
  return models::kAllArchitectures.size();
}

}  // namespace

void write_metrics_csv(const std::vector<MetricRecord>& records, const std::filesystem::path& path) {
  std::ostringstream out;
  out << kMetricsHeader << '\n';
  for (const auto& r : records) {
    out << to_string(r.protocol) << ',' << dataset::to_string(r.quantity) << ',' << r.run_id << ',' << r.model << ','
        << text::format_double(r.mse_mean) << ',' << text::format_double(r.mse_std) << ','
        << text::format_double(r.retained_mse_mean) << ',' << text::format_double(r.retained_mse_std) << ','
        << r.n_repeats << ',' << text::format_double(r.wall_time) << ',' << r.seeds << '\n';
  }
  write_file(path, out.str());
}

std::vector<MetricRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::vector<MetricRecord> out;
  std::size_t row = 0;
  for (const auto& f : read_csv(path, kMetricsHeader)) {
    ++row;
    MetricRecord r;
    try {
      r.protocol = parse_protocol(f[0]);
      r.quantity = dataset::parse_quantity(f[1]);
    } catch (const Error& e) {
      fail(ErrorKind::MalformedCsv, path.string() + ": row " + std::to_string(row) + ": " + e.what());
    }
    r.run_id = f[2];
    r.model = f[3];
    r.mse_mean = number_field(f[4], path, row);
    r.mse_std = number_field(f[5], path, row);
    r.retained_mse_mean = number_field(f[6], path, row);
    r.retained_mse_std = number_field(f[7], path, row);
    r.n_repeats = count_field(f[8], path, row);
    r.wall_time = number_field(f[9], path, row);
    r.seeds = f[10];
    out.push_back(std::move(r));
  }
  return out;
}

bool natural_less(const std::string& a, const std::string& b) {
  auto split_tail = [](const std::string& s) {
    std::size_t i = s.size();
    while (i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1]))) --i;
    const std::string digits = s.substr(i);
    const long long n = digits.empty() || digits.size() > 18 ? -1 : std::stoll(digits);
    return std::make_pair(s.substr(0, i), n);
  };
  const auto [pa, na] = split_tail(a);
  const auto [pb, nb] = split_tail(b);
  if (pa != pb) return pa < pb;
  if (na != nb) return na < nb;
  return a < b;
}

void compute_averages(BenchmarkReport& report) {
  report.average.run_id = "Average";
  report.average.cells.assign(report.models.size(), std::nullopt);
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    double mean_sum = 0.0, std_sum = 0.0;
    std::size_t n = 0;
    for (const auto& row : report.rows) {
      if (m < row.cells.size() && row.cells[m]) {
        mean_sum += row.cells[m]->mean;
        std_sum += row.cells[m]->std;
        ++n;
      }
    }
    if (n > 0) report.average.cells[m] = Cell{mean_sum / static_cast<double>(n), std_sum / static_cast<double>(n)};
  }
}

namespace {

std::size_t mark_row(Row& row) {
  std::optional<double> best;
  for (const auto& c : row.cells) {
    if (c && (!best || c->mean < *best)) best = c->mean;
  }
  std::size_t marked = 0;
  for (auto& c : row.cells) {
    if (!c) continue;
    c->best = c->mean == *best;
    marked += c->best ? 1 : 0;
  }
  return marked;
}

}  // namespace

void mark_best(BenchmarkReport& report) {
  report.notes.erase(std::remove_if(report.notes.begin(), report.notes.end(),
                                    [](const std::string& n) { return n.rfind("tie:", 0) == 0; }),
                     report.notes.end());
  auto mark = [&](Row& row) {
    std::size_t present = 0;
    for (const auto& c : row.cells) present += c ? 1 : 0;
    if (present < 2) {
      for (auto& c : row.cells) {
        if (c) c->best = false;
      }
      return;
    }
    if (mark_row(row) > 1) {
      std::string tied;
      for (std::size_t m = 0; m < row.cells.size(); ++m) {
        if (row.cells[m] && row.cells[m]->best) tied += (tied.empty() ? "" : ", ") + report.models[m];
      }
      report.notes.push_back("tie: " + row.run_id + " best shared by " + tied);
    }
  };
  for (auto& row : report.rows) mark(row);
  if (!report.average.cells.empty()) mark(report.average);
}

std::vector<BenchmarkReport> build_reports(const std::vector<MetricRecord>& records) {
  if (records.empty()) fail(ErrorKind::EmptyReport, "no metrics to report");
  std::map<std::pair<int, int>, std::vector<const MetricRecord*>> groups;
  for (const auto& r : records) {
    groups[{static_cast<int>(r.protocol), static_cast<int>(r.quantity)}].push_back(&r);
  }
  std::vector<BenchmarkReport> out;
  for (const auto& [key, recs] : groups) {
    BenchmarkReport rep;
    rep.protocol = static_cast<Protocol>(key.first);
    rep.quantity = static_cast<dataset::Quantity>(key.second);
    std::vector<std::string> runs;
    for (const auto* r : recs) {
      if (std::find(rep.models.begin(), rep.models.end(), r->model) == rep.models.end()) rep.models.push_back(r->model);
      if (std::find(runs.begin(), runs.end(), r->run_id) == runs.end()) runs.push_back(r->run_id);
    }
    std::stable_sort(rep.models.begin(), rep.models.end(), [](const std::string& a, const std::string& b) {
      const auto ra = model_rank(a), rb = model_rank(b);
      return ra != rb ? ra < rb : a < b;
    });
    std::sort(runs.begin(), runs.end(), natural_less);
    for (const auto& run : runs) rep.rows.push_back(Row{run, std::vector<std::optional<Cell>>(rep.models.size())});
    for (const auto* r : recs) {
      const auto m = static_cast<std::size_t>(std::find(rep.models.begin(), rep.models.end(), r->model) - rep.models.begin());
      const auto i = static_cast<std::size_t>(std::find(runs.begin(), runs.end(), r->run_id) - runs.begin());
      if (rep.rows[i].cells[m]) {
        fail(ErrorKind::InvalidArgument, "duplicate metrics for " + r->run_id + "/" + r->model + " (" +
                                             std::string(to_string(rep.protocol)) + ", " +
                                             std::string(dataset::to_string(rep.quantity)) + ")");
      }
      rep.rows[i].cells[m] = Cell{r->mse_mean, r->mse_std};
    }
    compute_averages(rep);
    mark_best(rep);
    out.push_back(std::move(rep));
  }
  return out;
}

namespace {

std::string cell_text(const std::optional<Cell>& c) {
  if (!c) return "-";
  return format_cell(c->mean, c->std) + (c->best ? "*" : "");
}

// Display width in code points, so the two-byte '±' counts once.
std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char ch : s) n += (ch & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

std::string pad(const std::string& s, std::size_t width) {
  const auto w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

}  // namespace

std::string render_text(const BenchmarkReport& report) {
  if (report.rows.empty()) fail(ErrorKind::EmptyReport, "report has no rows");
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"Dataset"};
  header.insert(header.end(), report.models.begin(), report.models.end());
  table.push_back(header);
  for (const auto* row : [&] {
         std::vector<const Row*> all;
         for (const auto& r : report.rows) all.push_back(&r);
         all.push_back(&report.average);
         return all;
       }()) {
    std::vector<std::string> line{row->run_id};
    for (std::size_t m = 0; m < report.models.size(); ++m) {
      line.push_back(cell_text(m < row->cells.size() ? row->cells[m] : std::nullopt));
    }
    table.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : table) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], display_width(line[c]));
  }
  std::ostringstream out;
  out << to_string(report.protocol) << " / " << dataset::to_string(report.quantity)
      << ": test MSE (x1e-5), mean±std over repeats, * = best in row\n";
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << (c ? "  " : "") << (c + 1 < line.size() ? pad(line[c], widths[c]) : line[c]);
    }
    out << '\n';
  };
  std::size_t total = 0;
  for (auto w : widths) total += w;
  total += 2 * (widths.size() - 1);
  emit(table.front());
  out << std::string(total, '-') << '\n';
  for (std::size_t i = 1; i + 1 < table.size(); ++i) emit(table[i]);
  out << std::string(total, '-') << '\n';
  emit(table.back());
  for (const auto& n : report.notes) out << "note: " << n << '\n';
  return out.str();
}

std::string render_text(const std::vector<BenchmarkReport>& reports) {
  if (reports.empty()) fail(ErrorKind::EmptyReport, "no reports to render");
  std::string out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (i) out += '\n';
    out += render_text(reports[i]);
  }
  return out;
}

std::string render_csv(const std::vector<BenchmarkReport>& reports) {
  if (reports.empty()) fail(ErrorKind::EmptyReport, "no reports to render");
  std::ostringstream out;
  out << "protocol,quantity,run_id,model,mse_mean,mse_std,cell,best\n";
  for (const auto& rep : reports) {
    if (rep.rows.empty()) fail(ErrorKind::EmptyReport, "report has no rows");
    auto emit = [&](const Row& row) {
      for (std::size_t m = 0; m < rep.models.size(); ++m) {
        if (m >= row.cells.size() || !row.cells[m]) continue;
        const auto& c = *row.cells[m];
        out << to_string(rep.protocol) << ',' << dataset::to_string(rep.quantity) << ',' << row.run_id << ','
            << rep.models[m] << ',' << text::format_double(c.mean) << ',' << text::format_double(c.std) << ','
            << format_cell(c.mean, c.std) << ',' << (c.best ? 1 : 0) << '\n';
      }
    };
    for (const auto& row : rep.rows) emit(row);
    emit(rep.average);
  }
  return out.str();
}

void write_best_configs(const std::vector<BestConfig>& configs, const std::filesystem::path& path) {
  std::ostringstream out;
  out << kBestHeader << '\n';
  for (const auto& c : configs) {
    out << c.dataset << ',' << dataset::to_string(c.quantity) << ',' << c.model << ','
        << text::format_double(c.learning_rate) << ',' << text::format_double(c.weight_decay) << ','
        << text::format_double(c.dropout) << ',' << c.hidden << ',' << c.layers << ','
        << (c.heads ? std::to_string(*c.heads) : "-") << '\n';
  }
  write_file(path, out.str());
}

std::vector<BestConfig> read_best_configs(const std::filesystem::path& path) {
  std::vector<BestConfig> out;
  std::size_t row = 0;
  for (const auto& f : read_csv(path, kBestHeader)) {
    ++row;
    BestConfig c;
    c.dataset = f[0];
    try {
      c.quantity = dataset::parse_quantity(f[1]);
    } catch (const Error& e) {
      fail(ErrorKind::MalformedCsv, path.string() + ": row " + std::to_string(row) + ": " + e.what());
    }
    c.model = f[2];
    c.learning_rate = number_field(f[3], path, row);
    c.weight_decay = number_field(f[4], path, row);
    c.dropout = number_field(f[5], path, row);
    c.hidden = count_field(f[6], path, row);
    c.layers = count_field(f[7], path, row);
    if (f[8] != "-") c.heads = count_field(f[8], path, row);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace thermo::report
