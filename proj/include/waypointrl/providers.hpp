#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "waypointrl/annotate.hpp"
#include "waypointrl/geometry.hpp"

namespace waypointrl::prompt {

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Anything that can turn an annotated observation plus an instruction into
// a validated block sequence. Every implementation either returns a
// sequence satisfying the BlockSequence invariants or throws.
class WaypointProvider {
 public:
  virtual ~WaypointProvider() = default;
  virtual geom::BlockSequence query(const AnnotatedObservation& annotation,
                                    const std::string& instruction) = 0;
  virtual std::string name() const = 0;

  int query_count() const { return query_count_; }

 protected:
  int query_count_ = 0;
};

// 4-connected cell walk from a to b (both endpoints included); consecutive
// cells differ in exactly one coordinate by one.
std::vector<Eigen::Vector2i> cell_line(const Eigen::Vector2i& a, const Eigen::Vector2i& b);

// Deterministic pick-transport-place sequence: grasp cell at z_low, grasp
// cell at z_lift, the cell walk to the target cell at z_lift, target cell
// at z_low.
geom::BlockSequence oracle_waypoints(const AnnotatedObservation& annotation,
                                     const std::string& instruction, int z_low, int z_lift);

class OracleProvider : public WaypointProvider {
 public:
  explicit OracleProvider(int z_low = 0, int z_lift = 2) : z_low_(z_low), z_lift_(z_lift) {}
  geom::BlockSequence query(const AnnotatedObservation& annotation,
                            const std::string& instruction) override;
  std::string name() const override { return "oracle"; }

 private:
  int z_low_;
  int z_lift_;
};

// Reads a fixed waypoint file and validates it against the annotation grid.
class FileProvider : public WaypointProvider {
 public:
  explicit FileProvider(std::string path) : path_(std::move(path)) {}
  geom::BlockSequence query(const AnnotatedObservation& annotation,
                            const std::string& instruction) override;
  std::string name() const override { return "file"; }

 private:
  std::string path_;
};

struct EndpointConfig {
  std::string base_url;            // e.g. "http://127.0.0.1:8080"
  std::string model = "gpt-4o";
  std::string api_key_env;         // name of the env var holding the key
  double timeout_seconds = 30.0;
  int max_retries = 3;             // follow-up attempts after invalid output
  std::string metaprompt_path;     // empty: use the embedded template
};

// Chat-completions client: sends both annotated views base64-encoded with
// the filled metaprompt, extracts the first JSON array of integer triples
// from the reply and validates it. Invalid output triggers a follow-up
// message explaining the error, up to max_retries times.
class RemoteProvider : public WaypointProvider {
 public:
  explicit RemoteProvider(EndpointConfig config) : config_(std::move(config)) {}
  geom::BlockSequence query(const AnnotatedObservation& annotation,
                            const std::string& instruction) override;
  std::string name() const override { return "remote"; }

 private:
  EndpointConfig config_;
};

// Query-once semantics: the first call stores the provider's sequence in
// the waypoint file; later calls load the file and never re-query. A
// corrupt cache is re-queried and overwritten (atomic write-then-rename).
class CachedProvider : public WaypointProvider {
 public:
  CachedProvider(std::string cache_path, WaypointProvider& inner)
      : cache_path_(std::move(cache_path)), inner_(inner) {}
  geom::BlockSequence query(const AnnotatedObservation& annotation,
                            const std::string& instruction) override;
  std::string name() const override { return "cached:" + inner_.name(); }

 private:
  std::string cache_path_;
  WaypointProvider& inner_;
};

inline constexpr const char* kMetapromptVersion = "metaprompt_v1";

// Fills the metaprompt template: grid dimensions, candidate labels and the
// task instruction. `template_text` empty selects the embedded template.
std::string fill_metaprompt(const AnnotatedObservation& annotation,
                            const std::string& instruction,
                            const std::string& template_text = "");

// Extracts the first syntactically valid JSON array of 3-integer arrays
// embedded anywhere in free-form text.
std::optional<std::string> extract_triple_array(const std::string& text);

std::string base64_encode(const std::string& bytes);

}  // namespace waypointrl::prompt
