#include "hopman/data/dataset_io.hpp"

#include <fstream>

#include "hopman/png_io.hpp"

namespace hopman::data {

namespace fs = std::filesystem;

namespace {

u32 crc_of_bytes_list(std::vector<std::pair<std::string, std::vector<u8>>>& files) {
  // CRC over (name, content) records; order-sensitive by construction.
  u32 crc = 0;
  for (auto& [name, bytes] : files) {
    crc = crc32_bytes(name.data(), name.size(), crc);
    crc = crc32_bytes(bytes.data(), bytes.size(), crc);
  }
  return crc;
}

void write_file(const fs::path& p, const std::vector<u8>& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("dataset: cannot write " + p.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw DataError("dataset: short write " + p.string());
}

std::vector<u8> str_bytes(const std::string& s) { return {s.begin(), s.end()}; }

std::vector<u8> read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw DataError("dataset: missing file " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Clip files in a fixed order so the combined checksum is stable.
std::vector<std::pair<std::string, std::vector<u8>>> clip_files(const Clip& clip) {
  std::vector<std::pair<std::string, std::vector<u8>>> files;
  files.emplace_back("x0.png", encode_png(clip.x0));
  files.emplace_back("xg.png", encode_png(clip.xg));
  for (size_t k = 0; k < clip.masks.size(); ++k)
    files.emplace_back("m" + std::to_string(k) + ".png", encode_png(clip.masks[k]));
  nlohmann::json meta;
  meta["task"] = task_to_json(clip.task);
  meta["seed"] = clip.seed;
  meta["source"] = clip.source == ClipSource::kHumanScripted ? "human_scripted" : "hallucinated";
  meta["resolution"] = clip.x0.w;
  meta["k_frames"] = int(clip.masks.size());
  files.emplace_back("meta.json", str_bytes(meta.dump(2) + "\n"));
  return files;
}

}  // namespace

u32 write_clip_dir(const fs::path& dir, const Clip& clip) {
  if (int(clip.masks.size()) != kPlanFrames)
    throw DataError("write_clip: expected exactly " + std::to_string(kPlanFrames) +
                    " mask frames");
  fs::create_directories(dir);
  auto files = clip_files(clip);
  for (auto& [name, bytes] : files) write_file(dir / name, bytes);
  return crc_of_bytes_list(files);
}

u32 write_paired_dir(const fs::path& dir, const PairedExample& ex) {
  if (int(ex.robot_traj.observations.size()) != kHorizon ||
      int(ex.robot_traj.actions.size()) != kHorizon)
    throw DataError("write_paired: robot trajectory must have exactly 40 frames and actions");
  fs::create_directories(dir / "human");
  fs::create_directories(dir / "robot");

  auto files = clip_files(ex.human_clip);
  for (auto& [name, bytes] : files) write_file(dir / "human" / name, bytes);
  for (auto& [name, bytes] : files) name = "human/" + name;

  for (int t = 0; t < kHorizon; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "obs_%02d.png", t);
    files.emplace_back("robot/" + std::string(name),
                       encode_png(ex.robot_traj.observations[size_t(t)]));
    write_file(dir / "robot" / name, files.back().second);
  }
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : ex.robot_traj.actions) actions.push_back(action_to_json(a));
  files.emplace_back("robot/actions.json", str_bytes(actions.dump() + "\n"));
  write_file(dir / "robot" / "actions.json", files.back().second);

  nlohmann::json meta;
  meta["task"] = task_to_json(ex.robot_traj.task);
  meta["seed"] = ex.robot_traj.seed;
  meta["pairing"] = ex.pairing == Pairing::kCollected ? "collected" : "hallucinated";
  meta["obs_resolution"] = ex.robot_traj.observations[0].w;
  files.emplace_back("meta.json", str_bytes(meta.dump(2) + "\n"));
  write_file(dir / "meta.json", files.back().second);

  return crc_of_bytes_list(files);
}

Clip read_clip_dir(const fs::path& dir) {
  Clip clip;
  clip.x0 = read_png((dir / "x0.png").string());
  clip.xg = read_png((dir / "xg.png").string());
  const nlohmann::json meta = nlohmann::json::parse(read_file(dir / "meta.json"));
  const int k = meta.at("k_frames").get<int>();
  for (int i = 0; i < k; ++i)
    clip.masks.push_back(read_png((dir / ("m" + std::to_string(i) + ".png")).string()));
  clip.task = task_from_json(meta.at("task"));
  clip.seed = meta.at("seed").get<u64>();
  clip.source = meta.at("source").get<std::string>() == "hallucinated"
                    ? ClipSource::kHallucinated
                    : ClipSource::kHumanScripted;
  return clip;
}

PairedExample read_paired_dir(const fs::path& dir) {
  PairedExample ex;
  ex.human_clip = read_clip_dir(dir / "human");
  const nlohmann::json meta = nlohmann::json::parse(read_file(dir / "meta.json"));
  ex.pairing = meta.at("pairing").get<std::string>() == "collected" ? Pairing::kCollected
                                                                    : Pairing::kHallucinated;
  ex.robot_traj.task = task_from_json(meta.at("task"));
  ex.robot_traj.seed = meta.at("seed").get<u64>();
  for (int t = 0; t < kHorizon; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "obs_%02d.png", t);
    ex.robot_traj.observations.push_back(read_png((dir / "robot" / name).string()));
  }
  ex.robot_traj.goal_image = ex.robot_traj.observations.back();
  const nlohmann::json actions = nlohmann::json::parse(read_file(dir / "robot" / "actions.json"));
  for (const auto& a : actions) ex.robot_traj.actions.push_back(action_from_json(a));
  if (int(ex.robot_traj.actions.size()) != kHorizon)
    throw DataError("read_paired: bad action count in " + dir.string());
  return ex;
}

void write_manifest(const std::string& root, const DatasetManifest& man) {
  std::ofstream f(fs::path(root) / "manifest.json", std::ios::trunc);
  if (!f) throw DataError("dataset: cannot write manifest");
  f << man.to_json().dump(2) << "\n";
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  j["counts"] = {{"passive", passive}, {"collected", collected}, {"hallucinated", hallucinated}};
  j["clip_resolution"] = clip_resolution;
  j["obs_resolution"] = obs_resolution;
  j["k_frames"] = k_frames;
  j["horizon"] = horizon;
  j["split"] = split.to_json();
  j["example_crc"] = example_crc;
  j["gen_config"] = gen_config;
  return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.version = j.at("version").get<std::string>();
  if (m.version != kDatasetVersion)
    throw DataError("dataset: unknown version '" + m.version + "' (expected " + kDatasetVersion +
                    ")");
  m.passive = j.at("counts").at("passive").get<int>();
  m.collected = j.at("counts").at("collected").get<int>();
  m.hallucinated = j.at("counts").at("hallucinated").get<int>();
  m.clip_resolution = j.at("clip_resolution").get<int>();
  m.obs_resolution = j.at("obs_resolution").get<int>();
  m.k_frames = j.at("k_frames").get<int>();
  m.horizon = j.at("horizon").get<int>();
  m.split = SplitSpec::from_json(j.at("split"));
  m.example_crc = j.at("example_crc").get<std::map<std::string, u32>>();
  m.gen_config = j.value("gen_config", nlohmann::json::object());
  return m;
}

DatasetManifest read_manifest(const std::string& root) {
  const fs::path p = fs::path(root) / "manifest.json";
  std::ifstream f(p);
  if (!f) throw DataError("dataset: manifest missing at " + p.string());
  return DatasetManifest::from_json(nlohmann::json::parse(f));
}

namespace {

u32 crc_of_dir(const fs::path& dir, const std::vector<std::string>& names) {
  u32 crc = 0;
  for (const auto& name : names) {
    const auto bytes = read_file(dir / name);
    crc = crc32_bytes(name.data(), name.size(), crc);
    crc = crc32_bytes(bytes.data(), bytes.size(), crc);
  }
  return crc;
}

std::vector<std::string> clip_names(int k) {
  std::vector<std::string> n{"x0.png", "xg.png"};
  for (int i = 0; i < k; ++i) n.push_back("m" + std::to_string(i) + ".png");
  n.push_back("meta.json");
  return n;
}

std::vector<std::string> paired_names(int k) {
  std::vector<std::string> n;
  for (const auto& c : clip_names(k)) n.push_back("human/" + c);
  for (int t = 0; t < kHorizon; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "robot/obs_%02d.png", t);
    n.push_back(name);
  }
  n.push_back("robot/actions.json");
  n.push_back("meta.json");
  return n;
}

}  // namespace

void verify_dataset(const std::string& root, const DatasetManifest& man) {
  int passive = 0, paired = 0;
  for (const auto& [rel, crc] : man.example_crc) {
    const fs::path dir = fs::path(root) / rel;
    if (!fs::is_directory(dir)) throw DataError("dataset: missing example " + rel);
    const bool is_clip = rel.rfind("passive/", 0) == 0;
    const u32 actual =
        crc_of_dir(dir, is_clip ? clip_names(man.k_frames) : paired_names(man.k_frames));
    if (actual != crc) throw DataError("dataset: checksum mismatch in " + rel);
    (is_clip ? passive : paired) += 1;
  }
  if (passive != man.passive || paired != man.collected + man.hallucinated)
    throw DataError("dataset: manifest counts do not match the directory (" +
                    std::to_string(passive) + " passive, " + std::to_string(paired) +
                    " paired on disk)");
}

DatasetManifest read_dataset(const std::string& root) {
  DatasetManifest man = read_manifest(root);
  verify_dataset(root, man);
  return man;
}

diffusion::PlannerExample<float> clip_to_planner_example(const Clip& clip,
                                                         const diffusion::PlannerConfig& cfg) {
  const int R = cfg.resolution;
  diffusion::PlannerExample<float> ex;
  ex.cond = nn::Tensor<float>({cfg.cond_channels(), R, R});
  const Image x0 = clip.x0.w == R ? clip.x0 : resize_bilinear(clip.x0, R, R);
  copy_image_scaled(x0, ex.cond.data());
  if (cfg.goal_conditioned) {
    const Image xg = clip.xg.w == R ? clip.xg : resize_bilinear(clip.xg, R, R);
    copy_image_scaled(xg, ex.cond.data() + i64(3) * R * R);
  }
  if (int(clip.masks.size()) != cfg.k_frames)
    throw DataError("planner corpus: clip has wrong frame count");
  ex.masks = nn::Tensor<float>({cfg.out_channels(), R, R});
  for (int k = 0; k < cfg.k_frames; ++k) {
    const Image m =
        clip.masks[size_t(k)].w == R ? clip.masks[size_t(k)] : resize_nearest(clip.masks[size_t(k)], R, R);
    copy_image_scaled(m, ex.masks.data() + i64(3 * k) * R * R);
  }
  return ex;
}

std::vector<diffusion::PlannerExample<float>> load_planner_corpus(
    const std::string& root, const DatasetManifest& man, const diffusion::PlannerConfig& cfg,
    int limit) {
  std::vector<diffusion::PlannerExample<float>> out;
  for (int i = 0; i < man.passive; ++i) {
    if (limit >= 0 && int(out.size()) >= limit) break;
    char id[32];
    std::snprintf(id, sizeof(id), "p%06d", i);
    out.push_back(clip_to_planner_example(read_clip_dir(fs::path(root) / "passive" / id), cfg));
  }
  if (out.empty()) throw DataError("planner corpus: no passive clips found");
  return out;
}

std::vector<translation::PolicyTrajectory> load_policy_corpus(
    const std::string& root, const DatasetManifest& man, const std::string& condition,
    const translation::PolicyConfig& cfg, int limit) {
  const bool bc = condition == "BC";
  const bool want_collected = condition == "P" || condition == "P+H" || bc;
  const bool want_hallucinated = condition == "H" || condition == "P+H" || bc;
  if (!bc && condition != "P" && condition != "H" && condition != "P+H")
    throw ConfigError("unknown training condition '" + condition + "' (P, H, P+H, BC)");
  if (bc != !cfg.plan_tokens)
    throw ConfigError("policy config plan_tokens does not match condition " + condition);

  std::vector<translation::PolicyTrajectory> out;
  auto take = [&](const fs::path& dir) {
    PairedExample ex = read_paired_dir(dir);
    translation::PolicyTrajectory tr;
    const int R = cfg.obs_resolution;
    for (auto& img : ex.robot_traj.observations)
      tr.obs.push_back(img.w == R ? std::move(img) : resize_bilinear(img, R, R));
    tr.actions = std::move(ex.robot_traj.actions);
    if (bc) {
      tr.goal = tr.obs.back();
    } else {
      tr.goal = std::move(ex.human_clip.xg);
      tr.plan = std::move(ex.human_clip.masks);
    }
    out.push_back(std::move(tr));
  };

  int n_collected = 0, n_hallucinated = 0;
  for (int i = 0; i < man.collected && want_collected; ++i) {
    if (limit >= 0 && int(out.size()) >= limit) break;
    char id[32];
    std::snprintf(id, sizeof(id), "c%06d", i);
    take(fs::path(root) / "paired" / id);
    ++n_collected;
  }
  for (int i = 0; i < man.hallucinated && want_hallucinated; ++i) {
    if (limit >= 0 && int(out.size()) >= limit) break;
    char id[32];
    std::snprintf(id, sizeof(id), "h%06d", i);
    take(fs::path(root) / "paired" / id);
    ++n_hallucinated;
  }
  if (out.empty())
    throw ConfigError("condition " + condition + ": no trajectories available (dataset holds " +
                      std::to_string(man.collected) + " collected, " +
                      std::to_string(man.hallucinated) + " hallucinated)");
  return out;
}

}  // namespace hopman::data
