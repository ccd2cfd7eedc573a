#include "pcd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pcd/error.hpp"

namespace pcd {
namespace {

using nlohmann::json;

const char* selection_name(Selection s) { return s == Selection::kGreedy ? "greedy" : "sample"; }

Selection parse_selection(const std::string& name) {
  if (name == "greedy") return Selection::kGreedy;
  if (name == "sample") return Selection::kSample;
  throw Error("unknown selection '" + name + "'");
}

const char* tracker_name(TrackerMode m) { return m == TrackerMode::kExact ? "exact" : "nearest"; }

TrackerMode parse_tracker(const std::string& name) {
  if (name == "exact") return TrackerMode::kExact;
  if (name == "nearest") return TrackerMode::kNearestMatch;
  throw Error("unknown tracker '" + name + "'");
}

json to_json_doc(const PcdRunConfig& cfg, bool with_threads) {
  json task{{"kind", to_string(cfg.task.kind)},
            {"max_steps", cfg.task.max_steps},
            {"success_radius", cfg.task.success_radius}};

  json shift{{"variant", shift_name(cfg.shift)}};
  if (const auto* b = std::get_if<BrightnessShift>(&cfg.shift)) shift["offset"] = b->offset;
  if (const auto* d = std::get_if<DistractorShift>(&cfg.shift)) {
    shift["count"] = d->count;
    shift["label"] = d->label;
  }
  if (const auto* t = std::get_if<TextureShift>(&cfg.shift)) shift["pattern"] = t->pattern;

  json policy{{"kind", to_string(cfg.policy.kind)},
              {"lambda", cfg.policy.mixture.lambda},
              {"sharpness", cfg.policy.mixture.sharpness},
              {"bins", cfg.policy.mixture.action_bins},
              {"diffusion", {{"steps", cfg.policy.diffusion_steps}}}};

  json decode{{"alpha", cfg.decode.alpha},
              {"prob_floor", cfg.decode.prob_floor},
              {"selection", selection_name(cfg.decode.selection)}};

  json kde{{"n_samples", cfg.kde.n_samples},
           {"grid_count", cfg.kde.grid_count},
           {"support_pad", cfg.kde.support_pad}};
  if (const auto* f = std::get_if<FixedBandwidth>(&cfg.kde.bandwidth)) {
    kde["bandwidth"] = f->value;
  } else {
    kde["bandwidth"] = "scott";
  }

  json mask{{"prompt", to_string(cfg.mask.prompt)},
            {"tracker", tracker_name(cfg.mask.tracker)},
            {"inpaint", inpaint_name(cfg.mask.inpaint)},
            {"miss_prob", cfg.mask.miss_prob},
            {"jitter", cfg.mask.jitter}};
  if (const auto* c = std::get_if<ConstantFill>(&cfg.mask.inpaint)) mask["fill_value"] = c->value;
  if (const auto* n = std::get_if<NeighborDiffusionFill>(&cfg.mask.inpaint)) {
    mask["iterations"] = n->iterations;
  }

  json doc{{"task", task},     {"shift", shift},
           {"policy", policy}, {"decode", decode},
           {"kde", kde},       {"mask", mask},
           {"method", to_string(cfg.method)},
           {"trials", cfg.trials},
           {"seed", cfg.base_seed},
           {"both_metrics", cfg.both_metrics}};
  if (with_threads) doc["threads"] = cfg.threads;
  return doc;
}

void check_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) throw Error("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw Error("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

// Reads obj[key] into out if present, naming the key on type errors.
template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw Error("config: '" + (where.empty() ? std::string(key) : where + "." + key) +
                "' has the wrong type");
  }
}

}  // namespace

std::string config_to_json(const PcdRunConfig& cfg, int indent) {
  return to_json_doc(cfg, true).dump(indent);
}

PcdRunConfig config_from_json(const std::string& text) { return config_from_json(text, {}); }

PcdRunConfig config_from_json(const std::string& text, const PcdRunConfig& defaults) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config: malformed JSON: ") + e.what());
  }
  check_keys(doc, "", {"task", "shift", "policy", "decode", "kde", "mask", "method", "trials", "seed",
                       "both_metrics", "threads"});
  PcdRunConfig cfg = defaults;

  if (doc.contains("task")) {
    const json& t = doc["task"];
    check_keys(t, "task", {"kind", "max_steps", "success_radius"});
    if (t.contains("kind")) {
      std::string kind;
      read(t, "kind", "task", kind);
      cfg.task = make_task(parse_task_kind(kind));
    }
    read(t, "max_steps", "task", cfg.task.max_steps);
    read(t, "success_radius", "task", cfg.task.success_radius);
  }

  if (doc.contains("shift")) {
    const json& s = doc["shift"];
    check_keys(s, "shift", {"variant", "offset", "count", "label", "pattern"});
    std::string variant = shift_name(cfg.shift);
    read(s, "variant", "shift", variant);
    if (variant != shift_name(cfg.shift)) cfg.shift = parse_shift(variant);
    if (auto* b = std::get_if<BrightnessShift>(&cfg.shift)) read(s, "offset", "shift", b->offset);
    if (auto* d = std::get_if<DistractorShift>(&cfg.shift)) {
      read(s, "count", "shift", d->count);
      read(s, "label", "shift", d->label);
    }
    if (auto* tx = std::get_if<TextureShift>(&cfg.shift)) read(s, "pattern", "shift", tx->pattern);
  }

  if (doc.contains("policy")) {
    const json& p = doc["policy"];
    check_keys(p, "policy", {"kind", "lambda", "sharpness", "bins", "diffusion"});
    if (p.contains("kind")) {
      std::string kind;
      read(p, "kind", "policy", kind);
      cfg.policy.kind = parse_policy_kind(kind);
    }
    read(p, "lambda", "policy", cfg.policy.mixture.lambda);
    read(p, "sharpness", "policy", cfg.policy.mixture.sharpness);
    read(p, "bins", "policy", cfg.policy.mixture.action_bins);
    if (p.contains("diffusion")) {
      const json& d = p["diffusion"];
      check_keys(d, "policy.diffusion", {"steps"});
      read(d, "steps", "policy.diffusion", cfg.policy.diffusion_steps);
    }
  }

  if (doc.contains("decode")) {
    const json& d = doc["decode"];
    check_keys(d, "decode", {"alpha", "prob_floor", "selection"});
    read(d, "alpha", "decode", cfg.decode.alpha);
    read(d, "prob_floor", "decode", cfg.decode.prob_floor);
    if (d.contains("selection")) {
      std::string sel;
      read(d, "selection", "decode", sel);
      cfg.decode.selection = parse_selection(sel);
    }
  }

  if (doc.contains("kde")) {
    const json& k = doc["kde"];
    check_keys(k, "kde", {"n_samples", "bandwidth", "grid_count", "support_pad"});
    read(k, "n_samples", "kde", cfg.kde.n_samples);
    read(k, "grid_count", "kde", cfg.kde.grid_count);
    read(k, "support_pad", "kde", cfg.kde.support_pad);
    if (k.contains("bandwidth")) {
      const json& b = k["bandwidth"];
      if (b.is_string() && b.get<std::string>() == "scott") {
        cfg.kde.bandwidth = ScottBandwidth{};
      } else if (b.is_number()) {
        cfg.kde.bandwidth = FixedBandwidth{b.get<double>()};
      } else {
        throw Error("config: 'kde.bandwidth' must be \"scott\" or a number");
      }
    }
  }

  if (doc.contains("mask")) {
    const json& m = doc["mask"];
    check_keys(m, "mask",
               {"prompt", "tracker", "inpaint", "fill_value", "iterations", "miss_prob", "jitter"});
    std::string name;
    if (m.contains("prompt")) {
      read(m, "prompt", "mask", name);
      cfg.mask.prompt = parse_prompt_kind(name);
    }
    if (m.contains("tracker")) {
      read(m, "tracker", "mask", name);
      cfg.mask.tracker = parse_tracker(name);
    }
    if (m.contains("inpaint")) {
      read(m, "inpaint", "mask", name);
      cfg.mask.inpaint = parse_inpaint(name);
    }
    if (auto* c = std::get_if<ConstantFill>(&cfg.mask.inpaint)) read(m, "fill_value", "mask", c->value);
    if (auto* n = std::get_if<NeighborDiffusionFill>(&cfg.mask.inpaint)) {
      read(m, "iterations", "mask", n->iterations);
    }
    read(m, "miss_prob", "mask", cfg.mask.miss_prob);
    read(m, "jitter", "mask", cfg.mask.jitter);
  }

  if (doc.contains("method")) {
    std::string method;
    read(doc, "method", "", method);
    cfg.method = parse_method(method);
  }
  read(doc, "trials", "", cfg.trials);
  read(doc, "seed", "", cfg.base_seed);
  read(doc, "both_metrics", "", cfg.both_metrics);
  read(doc, "threads", "", cfg.threads);
  cfg.validate();
  return cfg;
}

PcdRunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const PcdRunConfig& cfg) {
  return fnv1a64(to_json_doc(cfg, false).dump());
}

}  // namespace pcd
