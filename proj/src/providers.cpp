#include "waypointrl/providers.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace waypointrl::prompt {

namespace {

using nlohmann::json;

constexpr const char* kEmbeddedMetaprompt = R"(You are guiding a tabletop robot arm.
Two annotated images are provided. The top-down view is overlaid with a {cols}x{rows} grid; columns are numbered 0 to {max_col} from left to right and rows 0 to {max_row} from top to bottom. Candidate grasp keypoints are drawn in teal and labeled {grasp_labels}; candidate target keypoints are drawn in blue and labeled {target_labels}. The side view is overlaid with {levels} evenly spaced horizontal height lines labeled 0 (table surface) to {max_level} (highest).
Task: {instruction}
First choose the grasp keypoint and the target keypoint that best fit the task. Then plan block_sequence, a coarse trajectory of grid blocks from the grasp location to the target location. Each block is a tuple (x, y, z) where (x, y) is a grid cell from the top-down view and z is a height line index from the side view. Lift away from the table while transporting.
Answer with your reasoning, then on the last line output block_sequence as a JSON array of [x, y, z] integer triples, for example [[0,0,0],[1,0,2]].
)";

void replace_all(std::string& text, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Eigen::Vector2i candidate_cell(const AnnotatedObservation& annotation, char prefix) {
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  int count = 0;
  for (const auto& c : annotation.top_down_candidates) {
    if (!c.label.empty() && c.label[0] == prefix) {
      sum += c.pixel;
      ++count;
    }
  }
  if (count == 0)
    throw std::invalid_argument(std::string("oracle_waypoints: no '") + prefix +
                                "' candidates in annotation");
  const Eigen::Vector2d mean = sum / count;
  const geom::GridSpec& grid = annotation.grid;
  const int x = std::clamp(static_cast<int>(std::floor(mean.x() / grid.cell_width())), 0,
                           grid.cols - 1);
  const int y = std::clamp(static_cast<int>(std::floor(mean.y() / grid.cell_height())), 0,
                           grid.rows - 1);
  return {x, y};
}

}  // namespace

std::vector<Eigen::Vector2i> cell_line(const Eigen::Vector2i& a, const Eigen::Vector2i& b) {
  std::vector<Eigen::Vector2i> cells;
  const int dx = std::abs(b.x() - a.x());
  const int dy = std::abs(b.y() - a.y());
  const int sx = b.x() > a.x() ? 1 : -1;
  const int sy = b.y() > a.y() ? 1 : -1;
  int err = dx - dy;
  Eigen::Vector2i cur = a;
  cells.push_back(cur);
  while (cur != b) {
    const int e2 = 2 * err;
    if (e2 > -dy) {  // step in x, never diagonally
      err -= dy;
      cur.x() += sx;
    } else {
      err += dx;
      cur.y() += sy;
    }
    cells.push_back(cur);
  }
  return cells;
}

geom::BlockSequence oracle_waypoints(const AnnotatedObservation& annotation,
                                     const std::string& instruction, int z_low, int z_lift) {
  (void)instruction;  // the plan is fully determined by the candidate cells
  const geom::GridSpec& grid = annotation.grid;
  if (z_low < 0 || z_low >= grid.height_levels || z_lift < 0 || z_lift >= grid.height_levels)
    throw std::invalid_argument("oracle_waypoints: z levels out of range");
  if (z_low == z_lift) throw std::invalid_argument("oracle_waypoints: z_low must differ from z_lift");

  const Eigen::Vector2i grasp = candidate_cell(annotation, 'P');
  const Eigen::Vector2i target = candidate_cell(annotation, 'Q');

  std::vector<geom::WaypointBlock> blocks;
  blocks.push_back({grasp.x(), grasp.y(), z_low});
  for (const Eigen::Vector2i& cell : cell_line(grasp, target))
    blocks.push_back({cell.x(), cell.y(), z_lift});
  blocks.push_back({target.x(), target.y(), z_low});

  std::vector<geom::WaypointBlock> deduped;
  for (const auto& b : blocks)
    if (deduped.empty() || !(deduped.back() == b)) deduped.push_back(b);
  return geom::BlockSequence(std::move(deduped), grid);
}

geom::BlockSequence OracleProvider::query(const AnnotatedObservation& annotation,
                                          const std::string& instruction) {
  ++query_count_;
  return oracle_waypoints(annotation, instruction, z_low_, z_lift_);
}

geom::BlockSequence FileProvider::query(const AnnotatedObservation& annotation,
                                        const std::string& instruction) {
  (void)instruction;
  ++query_count_;
  return geom::parse_sequence(read_text_file(path_), annotation.grid);
}

std::string fill_metaprompt(const AnnotatedObservation& annotation,
                            const std::string& instruction, const std::string& template_text) {
  std::string text = template_text.empty() ? kEmbeddedMetaprompt : template_text;
  std::string grasp_labels, target_labels;
  for (const auto& c : annotation.top_down_candidates) {
    if (c.label.empty()) continue;
    std::string& out = c.label[0] == 'P' ? grasp_labels : target_labels;
    if (!out.empty()) out += ", ";
    out += c.label;
  }
  const geom::GridSpec& grid = annotation.grid;
  replace_all(text, "{cols}", std::to_string(grid.cols));
  replace_all(text, "{rows}", std::to_string(grid.rows));
  replace_all(text, "{max_col}", std::to_string(grid.cols - 1));
  replace_all(text, "{max_row}", std::to_string(grid.rows - 1));
  replace_all(text, "{levels}", std::to_string(grid.height_levels));
  replace_all(text, "{max_level}", std::to_string(grid.height_levels - 1));
  replace_all(text, "{grasp_labels}", grasp_labels);
  replace_all(text, "{target_labels}", target_labels);
  replace_all(text, "{instruction}", instruction);
  return text;
}

std::optional<std::string> extract_triple_array(const std::string& text) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '[') continue;
    int depth = 0;
    for (std::size_t end = start; end < text.size(); ++end) {
      if (text[end] == '[') ++depth;
      if (text[end] == ']') --depth;
      if (depth != 0) continue;
      const std::string candidate = text.substr(start, end - start + 1);
      json parsed = json::parse(candidate, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_array() || parsed.empty()) break;
      bool all_triples = true;
      for (const auto& el : parsed) {
        if (!el.is_array() || el.size() != 3 || !el[0].is_number_integer() ||
            !el[1].is_number_integer() || !el[2].is_number_integer()) {
          all_triples = false;
          break;
        }
      }
      if (all_triples) return candidate;
      break;  // balanced but wrong shape; keep scanning after this '['
    }
  }
  return std::nullopt;
}

std::string base64_encode(const std::string& bytes) {
  static const char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < bytes.size()) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += table[v & 63];
    i += 3;
  }
  if (i + 1 == bytes.size()) {
    const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += "=";
  }
  return out;
}

geom::BlockSequence RemoteProvider::query(const AnnotatedObservation& annotation,
                                          const std::string& instruction) {
  ++query_count_;
  if (config_.base_url.empty()) throw ProviderError("remote provider: base_url not configured");

  std::string template_text;
  if (!config_.metaprompt_path.empty()) template_text = read_text_file(config_.metaprompt_path);
  const std::string prompt = fill_metaprompt(annotation, instruction, template_text);

  auto image_part = [](const Image& img) {
    return json{{"type", "image_url"},
                {"image_url",
                 {{"url", "data:image/x-portable-pixmap;base64," +
                              base64_encode(encode_ppm(img))}}}};
  };
  json messages = json::array();
  messages.push_back({{"role", "user"},
                      {"content", json::array({json{{"type", "text"}, {"text", prompt}},
                                               image_part(annotation.rendered_top),
                                               image_part(annotation.rendered_side)})}});

  httplib::Client client(config_.base_url);
  const auto timeout = std::chrono::milliseconds(
      static_cast<long>(std::max(1.0, config_.timeout_seconds * 1000.0)));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0')
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error = "no response";
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    const json body{{"model", config_.model}, {"messages", messages}};
    httplib::Result res = client.Post("/v1/chat/completions", headers, body.dump(),
                                      "application/json");
    if (!res)
      throw ProviderError("remote provider: request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw ProviderError("remote provider: endpoint returned status " +
                          std::to_string(res->status));

    std::string content;
    try {
      const json reply = json::parse(res->body);
      content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw ProviderError(std::string("remote provider: malformed endpoint reply: ") + e.what());
    }

    if (auto array_text = extract_triple_array(content)) {
      try {
        return geom::parse_sequence(*array_text, annotation.grid);
      } catch (const geom::ParseError& e) {
        last_error = e.what();
      }
    } else {
      last_error = "no JSON array of [x,y,z] integer triples found in the reply";
    }

    messages.push_back({{"role", "assistant"}, {"content", content}});
    messages.push_back(
        {{"role", "user"},
         {"content", "Your block_sequence was invalid: " + last_error +
                         ". Reply with only a corrected JSON array of [x,y,z] integer triples: "
                         "x in [0," +
                         std::to_string(annotation.grid.cols) + "), y in [0," +
                         std::to_string(annotation.grid.rows) + "), z in [0," +
                         std::to_string(annotation.grid.height_levels) +
                         "), at least 2 blocks, no repeated consecutive blocks."}});
  }
  throw ProviderError("remote provider: invalid waypoint sequence after " +
                      std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

geom::BlockSequence CachedProvider::query(const AnnotatedObservation& annotation,
                                          const std::string& instruction) {
  ++query_count_;
  namespace fs = std::filesystem;
  if (fs::exists(cache_path_)) {
    try {
      return geom::parse_sequence(read_text_file(cache_path_), annotation.grid);
    } catch (const std::exception&) {
      // Corrupt cache: fall through, re-query and overwrite.
    }
  }
  geom::BlockSequence seq = inner_.query(annotation, instruction);
  const fs::path target(cache_path_);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write waypoint cache: " + tmp.string());
    out << geom::serialize_sequence(seq);
  }
  fs::rename(tmp, target);
  return seq;
}

}  // namespace waypointrl::prompt
