#pragma once
#include <string>
#include <vector>

#include "ads/autoscale.hpp"
#include "ads/banditnet.hpp"
#include "ads/dataflow.hpp"
#include "ads/overlay.hpp"

#include "json.hpp"

namespace ads {

// Locale-independent numeric formatting for CSV cells (%.12g, '.' decimal).
std::string fmt_g(double v);

// Quotes a field when it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

// Splits one CSV line honoring double-quote escaping.
std::vector<std::string> csv_split(const std::string& line);

// In-memory table rendered with a header row, LF endings, UTF-8.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string render() const;
  int col(const std::string& name) const;  // -1 when absent
};

CsvTable parse_csv(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Per-numeric-column aggregates: mean, min, max, p50/p90/p99 (nearest rank).
nlohmann::ordered_json summarize_table(const CsvTable& table);

// node_name,zone_id,capacity,x,y
EdgeTopology read_edge_topology(const std::string& path);
void write_edge_topology(const std::string& path, const EdgeTopology& topo);

// {app_id, operators:[{id,kind,stateful,parallelism}], edges:[[from,to]],
//  source_bindings:{op:node}, sink_bindings:{op:node}}
AppTopology read_app_topology(const std::string& path);
void write_app_topology(const std::string& path, const AppTopology& app);

// time_s,op_id,input_rate,queue_size
std::vector<PressureSample> read_pressure_csv(const std::string& path);
void write_pressure_csv(const std::string& path,
                        const std::vector<PressureSample>& samples);

// "#source=<id>,sink=<id>" line, then src,dst,theta,base_delay_ms rows.
NetGraph read_net_graph(const std::string& path);
void write_net_graph(const std::string& path, const NetGraph& graph);

}  // namespace ads
