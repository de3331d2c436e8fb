#include "ads/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ads/error.hpp"

namespace ads {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); i++) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size())
    throw InvariantError("csv row width " + std::to_string(row.size()) +
                         " != header width " + std::to_string(header.size()));
  rows.push_back(std::move(row));
}

std::string CsvTable::render() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); i++) {
      if (i) out += ',';
      out += csv_escape(fields[i]);
    }
    out += '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return out;
}

int CsvTable::col(const std::string& name) const {
  for (size_t i = 0; i < header.size(); i++)
    if (header[i] == name) return int(i);
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = csv_split(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      t.add_row(std::move(fields));
    }
  }
  if (first) throw ConfigError("csv: no header row");
  return t;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write file: " + path);
  out.write(content.data(), std::streamsize(content.size()));
  out.flush();
  if (!out) throw ConfigError("write failed: " + path);
}

namespace {

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  if (!std::isfinite(v)) return false;
  *out = v;
  return true;
}

double nearest_rank(const std::vector<double>& sorted, double pct) {
  size_t n = sorted.size();
  size_t rank = size_t(std::ceil(pct / 100.0 * double(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace

nlohmann::ordered_json summarize_table(const CsvTable& table) {
  nlohmann::ordered_json out;
  out["rows"] = table.rows.size();
  nlohmann::ordered_json cols = nlohmann::ordered_json::object();
  for (size_t c = 0; c < table.header.size(); c++) {
    std::vector<double> vals;
    vals.reserve(table.rows.size());
    bool numeric = !table.rows.empty();
    for (const auto& r : table.rows) {
      double v;
      if (!parse_double(r[c], &v)) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) continue;
    std::sort(vals.begin(), vals.end());
    long double sum = 0.0L;
    for (double v : vals) sum += v;
    nlohmann::ordered_json agg;
    agg["mean"] = double(sum / (long double)vals.size());
    agg["min"] = vals.front();
    agg["max"] = vals.back();
    agg["p50"] = nearest_rank(vals, 50.0);
    agg["p90"] = nearest_rank(vals, 90.0);
    agg["p99"] = nearest_rank(vals, 99.0);
    cols[table.header[c]] = agg;
  }
  out["columns"] = cols;
  return out;
}

EdgeTopology read_edge_topology(const std::string& path) {
  CsvTable t = parse_csv(read_text_file(path));
  const std::vector<std::string> want = {"node_name", "zone_id", "capacity",
                                         "x", "y"};
  if (t.header != want)
    throw ConfigError("topology csv: expected header node_name,zone_id,"
                      "capacity,x,y in " + path);
  EdgeTopology topo;
  for (const auto& r : t.rows) {
    TopoNode n;
    n.name = r[0];
    double zone, cap, x, y;
    if (!parse_double(r[1], &zone) || !parse_double(r[2], &cap) ||
        !parse_double(r[3], &x) || !parse_double(r[4], &y))
      throw ConfigError("topology csv: bad numeric field for node " + n.name);
    n.zone = int(zone);
    n.capacity = int(cap);
    n.x = x;
    n.y = y;
    if (n.capacity < 1)
      throw ConfigError("topology csv: capacity < 1 for node " + n.name);
    topo.nodes.push_back(std::move(n));
  }
  if (topo.nodes.empty()) throw ConfigError("topology csv: no nodes in " + path);
  return topo;
}

void write_edge_topology(const std::string& path, const EdgeTopology& topo) {
  CsvTable t;
  t.header = {"node_name", "zone_id", "capacity", "x", "y"};
  for (const auto& n : topo.nodes)
    t.add_row({n.name, std::to_string(n.zone), std::to_string(n.capacity),
               fmt_g(n.x), fmt_g(n.y)});
  write_text_file(path, t.render());
}

AppTopology read_app_topology(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("app json: " + std::string(e.what()));
  }
  AppTopology app;
  try {
    app.app_id = j.at("app_id").get<std::string>();
    for (const auto& o : j.at("operators")) {
      OperatorSpec op;
      op.id = o.at("id").get<std::string>();
      op.kind = o.at("kind").get<std::string>();
      op.stateful = o.at("stateful").get<bool>();
      op.parallelism = o.at("parallelism").get<int>();
      app.operators.push_back(std::move(op));
    }
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        throw ConfigError("app json: edge must be [from,to]");
      app.edges.emplace_back(e[0].get<std::string>(),
                             e[1].get<std::string>());
    }
    for (const auto& [op, node] : j.at("source_bindings").items())
      app.source_bindings[op] = node.get<std::string>();
    for (const auto& [op, node] : j.at("sink_bindings").items())
      app.sink_bindings[op] = node.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("app json: " + std::string(e.what()));
  }
  app.validate();
  return app;
}

void write_app_topology(const std::string& path, const AppTopology& app) {
  nlohmann::ordered_json j;
  j["app_id"] = app.app_id;
  auto ops = nlohmann::ordered_json::array();
  for (const auto& op : app.operators) {
    nlohmann::ordered_json o;
    o["id"] = op.id;
    o["kind"] = op.kind;
    o["stateful"] = op.stateful;
    o["parallelism"] = op.parallelism;
    ops.push_back(o);
  }
  j["operators"] = ops;
  auto edges = nlohmann::ordered_json::array();
  for (const auto& [from, to] : app.edges)
    edges.push_back(nlohmann::ordered_json::array({from, to}));
  j["edges"] = edges;
  j["source_bindings"] = nlohmann::ordered_json::object();
  for (const auto& [op, node] : app.source_bindings)
    j["source_bindings"][op] = node;
  j["sink_bindings"] = nlohmann::ordered_json::object();
  for (const auto& [op, node] : app.sink_bindings)
    j["sink_bindings"][op] = node;
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<PressureSample> read_pressure_csv(const std::string& path) {
  CsvTable t = parse_csv(read_text_file(path));
  const std::vector<std::string> want = {"time_s", "op_id", "input_rate",
                                         "queue_size"};
  if (t.header != want)
    throw ConfigError("pressure csv: expected header time_s,op_id,input_rate,"
                      "queue_size in " + path);
  std::vector<PressureSample> out;
  for (const auto& r : t.rows) {
    PressureSample s;
    double qs;
    if (!parse_double(r[0], &s.time_s) || !parse_double(r[2], &s.input_rate) ||
        !parse_double(r[3], &qs))
      throw ConfigError("pressure csv: bad numeric field at t=" + r[0]);
    s.op_id = r[1];
    s.queue_size = qs;
    out.push_back(std::move(s));
  }
  return out;
}

void write_pressure_csv(const std::string& path,
                        const std::vector<PressureSample>& samples) {
  CsvTable t;
  t.header = {"time_s", "op_id", "input_rate", "queue_size"};
  for (const auto& s : samples)
    t.add_row({fmt_g(s.time_s), s.op_id, fmt_g(s.input_rate),
               fmt_g(s.queue_size)});
  write_text_file(path, t.render());
}

NetGraph read_net_graph(const std::string& path) {
  std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  int source = -1, sink = -1;
  bool saw_meta = false;
  std::string body;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') {
      if (std::sscanf(line.c_str(), "#source=%d,sink=%d", &source, &sink) == 2)
        saw_meta = true;
      continue;
    }
    body += line;
    body += '\n';
  }
  if (!saw_meta)
    throw ConfigError("graph csv: missing #source=<id>,sink=<id> line in " +
                      path);
  CsvTable t = parse_csv(body);
  const std::vector<std::string> want = {"src", "dst", "theta",
                                         "base_delay_ms"};
  if (t.header != want)
    throw ConfigError("graph csv: expected header src,dst,theta,base_delay_ms"
                      " in " + path);
  NetGraph g;
  int max_id = std::max(source, sink);
  for (const auto& r : t.rows) {
    NetLink l;
    double src, dst;
    if (!parse_double(r[0], &src) || !parse_double(r[1], &dst) ||
        !parse_double(r[2], &l.theta) || !parse_double(r[3], &l.base_delay_ms))
      throw ConfigError("graph csv: bad numeric field in " + path);
    l.src = int(src);
    l.dst = int(dst);
    max_id = std::max({max_id, l.src, l.dst});
    g.links.push_back(l);
  }
  g.n = max_id + 1;
  g.source = source;
  g.sink = sink;
  g.finalize();
  return g;
}

void write_net_graph(const std::string& path, const NetGraph& graph) {
  std::string out = "#source=" + std::to_string(graph.source) +
                    ",sink=" + std::to_string(graph.sink) + "\n";
  CsvTable t;
  t.header = {"src", "dst", "theta", "base_delay_ms"};
  for (const auto& l : graph.links)
    t.add_row({std::to_string(l.src), std::to_string(l.dst), fmt_g(l.theta),
               fmt_g(l.base_delay_ms)});
  out += t.render();
  write_text_file(path, out);
}

}  // namespace ads
