/*
 * lfqa : low-field MRI quality assessment and hippocampus atlas toolkit
 *
 * Copyright 2026 The lfqa Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfqa/artefact_sim.hpp"
#include "lfqa/error.hpp"
#include "lfqa/metrics.hpp"
#include "lfqa/nifti_io.hpp"
#include "lfqa/phantom.hpp"
#include "lfqa/qa_pipeline.hpp"
#include "lfqa/registration.hpp"

namespace lfqa::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Runs fn(0..n-1) on up to `jobs` threads; the first failure by index is
// rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto &t : pool)
    t.join();
  for (const auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

void require_exists(const fs::path &p) {
  if (!fs::exists(p))
    throw IoError("file not found: " + p.string());
}

// A NIfTI file, or the NIfTI files of a directory sorted by name.
std::vector<fs::path> list_volumes(const fs::path &in) {
  require_exists(in);
  if (!fs::is_directory(in))
    return {in};
  std::vector<fs::path> out;
  for (const auto &e : fs::directory_iterator(in))
    if (e.is_regular_file() && is_nifti_path(e.path()) &&
        e.path().extension() != ".img")
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, fs::path> volumes_by_stem(const fs::path &dir) {
  std::map<std::string, fs::path> out;
  for (const auto &p : list_volumes(dir))
    out.emplace(nifti_stem(p), p);
  return out;
}

void write_json(const json &j, const fs::path &path) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("file not found: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

ArtefactDomain domain_arg(const std::string &name) {
  const auto d = parse_domain(name);
  if (!d)
    throw InvalidArgument("unknown artefact domain '" + name + "'");
  return *d;
}

Similarity similarity_arg(const std::string &name) {
  if (name == "ncc")
    return Similarity::NormalizedCrossCorrelation;
  if (name == "ssd")
    return Similarity::SumOfSquaredDifferences;
  throw InvalidArgument("unknown similarity '" + name + "' (ncc|ssd)");
}

Dof dof_arg(int dof) {
  if (dof != 6 && dof != 9 && dof != 12)
    throw InvalidArgument("dof must be 6, 9 or 12");
  return static_cast<Dof>(dof);
}

std::string output_name(const std::string &stem, ArtefactDomain d, int cls, int idx) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_c%d_%04d", cls, idx);
  return stem + "_" + std::string(to_string(d)) + buf;
}

// Appends "--key value" for every config key not given on the command line,
// so explicit flags win.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::optional<std::string> config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      config = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config = args[i].substr(9);
  }
  if (!config)
    return args;
  const json j = read_json(*config);
  if (!j.is_object())
    throw ParseError("config file must hold a JSON object");
  auto given = [&](const std::string &flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string &a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  auto scalar = [](const json &v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  std::vector<std::string> extra;
  for (const auto &[key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || given(flag))
      continue;
    if (value.is_boolean()) {
      if (value.get<bool>())
        extra.push_back(flag);
    } else if (value.is_array()) {
      extra.push_back(flag);
      for (const auto &v : value)
        extra.push_back(scalar(v));
    } else {
      extra.push_back(flag);
      extra.push_back(scalar(value));
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::string in, out, domain, params, scores_out;
  int cls = 1, count = 1, jobs = 1;
  std::uint64_t seed = 0;
};

void cmd_simulate(const SimulateOpts &o, std::ostream &log) {
  const ArtefactDomain domain = domain_arg(o.domain);
  const Severity severity = severity_from_int(o.cls);
  if (o.count < 0)
    throw InvalidArgument("--count must be >= 0");
  SimParams sim = SimParams::defaults();
  if (!o.params.empty())
    sim = sim_params_from_json(read_json(o.params));
  const auto inputs = list_volumes(o.in);
  if (inputs.empty())
    throw InvalidArgument("no input volumes in " + o.in);
  fs::create_directories(o.out);

  struct Task {
    std::size_t input;
    int idx;
  };
  std::vector<Task> tasks;
  for (std::size_t f = 0; f < inputs.size(); ++f)
    for (int i = 0; i < o.count; ++i)
      tasks.push_back({f, i});
  std::vector<QAScoreRecord> records(tasks.size());
  parallel_for(tasks.size(), o.jobs, [&](std::size_t t) {
    const auto &task = tasks[t];
    const Volume src = read_volume(inputs[task.input]);
    Rng rng = Rng(o.seed).split((static_cast<std::uint64_t>(task.input) << 32) |
                                static_cast<std::uint32_t>(task.idx));
    auto [vol, params] = apply_artefact(src, domain, severity, sim, rng);
    const std::string name =
        output_name(nifti_stem(inputs[task.input]), domain, o.cls, task.idx);
    write_volume(vol, fs::path(o.out) / (name + ".nii.gz"));
    write_json({{"source", inputs[task.input].filename().string()},
                {"domain", std::string(to_string(domain))},
                {"class", o.cls},
                {"seed", o.seed},
                {"index", task.idx},
                {"params", to_json(params)}},
               fs::path(o.out) / (name + ".json"));
    records[t].sample_id = name;
    records[t][domain] = severity;
  });
  if (!o.scores_out.empty()) {
    std::sort(records.begin(), records.end(),
              [](const auto &a, const auto &b) { return a.sample_id < b.sample_id; });
    write_qa_csv(records, o.scores_out);
  }
  log << "simulate: wrote " << tasks.size() << " volumes to " << o.out << '\n';
}

struct DatasetOpts {
  std::string in, out;
  std::vector<int> counts{10, 10, 10};
  std::vector<std::string> domains;
  std::uint64_t seed = 0;
};

void cmd_qa_dataset(const DatasetOpts &o, std::ostream &log) {
  if (o.counts.size() != 3)
    throw InvalidArgument("--counts needs three values (class 0, 1, 2)");
  std::vector<ArtefactDomain> domains;
  for (const auto &d : o.domains)
    domains.push_back(domain_arg(d));
  if (domains.empty())
    domains.assign(kAllDomains.begin(), kAllDomains.end());
  std::vector<Volume> clean;
  for (const auto &p : list_volumes(o.in))
    clean.push_back(read_volume(p));
  if (clean.empty())
    throw InvalidArgument("no clean volumes in " + o.in);
  fs::create_directories(o.out);
  std::vector<QAScoreRecord> records;
  const SimParams sim = SimParams::defaults();
  for (ArtefactDomain d : domains) {
    const auto set = generate_training_set(clean, d, {o.counts[0], o.counts[1], o.counts[2]},
                                           sim, o.seed);
    for (const auto &ex : set) {
      write_volume(ex.volume, fs::path(o.out) / (ex.id + ".nii.gz"));
      json prov = {{"domain", std::string(to_string(d))},
                   {"class", to_int(ex.severity)},
                   {"source_index", ex.source_index},
                   {"seed", o.seed}};
      if (ex.params)
        prov["params"] = to_json(*ex.params);
      write_json(prov, fs::path(o.out) / (ex.id + ".json"));
      QAScoreRecord rec;
      rec.sample_id = ex.id;
      rec[d] = ex.severity;
      records.push_back(rec);
    }
  }
  std::sort(records.begin(), records.end(),
            [](const auto &a, const auto &b) { return a.sample_id < b.sample_id; });
  write_qa_csv(records, fs::path(o.out) / "scores.csv");
  log << "qa-dataset: wrote " << records.size() << " volumes to " << o.out << '\n';
}

struct TrainOpts {
  std::string data, scores, out, loss = "focal";
  std::uint64_t seed = 0;
  int epochs = 500, jobs = 1;
  double learning_rate = 1.0, l2 = 1e-4, alpha = 0.25, gamma = 2.0, train_fraction = 1.0;
};

std::vector<FeatureVector> features_of(const std::vector<fs::path> &files, int jobs) {
  std::vector<FeatureVector> out(files.size());
  parallel_for(files.size(), jobs,
               [&](std::size_t i) { out[i] = extract_features(read_volume(files[i])); });
  return out;
}

void cmd_qa_train(const TrainOpts &o, std::ostream &log) {
  const TrainingLoss loss = parse_training_loss(o.loss);
  const FocalParams focal{o.alpha, o.gamma};
  focal.validate();
  const TrainConfig config{o.epochs, o.learning_rate, o.l2};
  config.validate();
  auto records = read_qa_csv(o.scores);
  std::sort(records.begin(), records.end(),
            [](const auto &a, const auto &b) { return a.sample_id < b.sample_id; });
  const auto files = volumes_by_stem(o.data);
  if (files.empty())
    throw InvalidArgument("no training volumes in " + o.data);
  if (records.empty())
    throw InvalidArgument("score table is empty");
  std::vector<fs::path> paths;
  for (const auto &r : records) {
    const auto it = files.find(r.sample_id);
    if (it == files.end())
      throw IoError("no volume for sample " + r.sample_id + " in " + o.data);
    paths.push_back(it->second);
  }
  const auto features = features_of(paths, o.jobs);
  const auto [train_idx, val_idx] = split_indices(records.size(), o.train_fraction, o.seed);

  json report = {{"n_train", train_idx.size()},
                 {"n_validation", val_idx.size()},
                 {"loss", std::string(to_string(loss))},
                 {"seed", o.seed}};
  for (ArtefactDomain d : kAllDomains) {
    std::vector<LabelledFeatures> train;
    for (auto i : train_idx)
      train.push_back({features[i], records[i][d]});
    DomainClassifier c = train_domain(d, train, loss, focal, config);
    save_classifier(c, o.out);
    json dr = {{"epochs_run", c.loss_history.size() - 1},
               {"final_loss", c.loss_history.back()}};
    if (!val_idx.empty()) {
      std::size_t correct = 0;
      for (auto i : val_idx)
        correct += c.predict(features[i]) == records[i][d];
      dr["validation_accuracy"] =
          static_cast<double>(correct) / static_cast<double>(val_idx.size());
    }
    report["domains"][std::string(to_string(d))] = dr;
    log << "qa-train: " << to_string(d) << " loss " << c.loss_history.back() << '\n';
  }
  write_json(report, fs::path(o.out) / "training_report.json");
}

struct ScoreOpts {
  std::string model, in, out;
  int jobs = 1;
};

void cmd_qa_score(const ScoreOpts &o, std::ostream &log) {
  std::vector<DomainClassifier> classifiers;
  for (ArtefactDomain d : kAllDomains)
    classifiers.push_back(load_classifier(o.model, d));
  const auto files = list_volumes(o.in);
  if (files.empty())
    throw InvalidArgument("no input volumes in " + o.in);
  const auto features = features_of(files, o.jobs);
  std::vector<QAScoreRecord> records;
  for (std::size_t i = 0; i < files.size(); ++i)
    records.push_back(predict_features(classifiers, features[i], nifti_stem(files[i])));
  std::sort(records.begin(), records.end(),
            [](const auto &a, const auto &b) { return a.sample_id < b.sample_id; });
  write_qa_csv(records, o.out);
  log << "qa-score: scored " << records.size() << " volumes\n";
}

struct RegOpts {
  int dof = 12;
  std::string similarity = "ncc";

  RegistrationConfig config() const {
    RegistrationConfig c;
    c.dof = dof_arg(dof);
    c.similarity = similarity_arg(similarity);
    return c;
  }
};

struct AtlasOpts {
  std::string subjects, reference, out;
  double threshold = 0.1;
  int jobs = 1;
  RegOpts reg;
};

fs::path reference_image_path(const fs::path &atlas) {
  return atlas.parent_path() / (nifti_stem(atlas) + "_reference.nii.gz");
}

void cmd_build_atlas(const AtlasOpts &o, std::ostream &log) {
  const auto config = o.reg.config();
  if (!(o.threshold > 0.0 && o.threshold < 1.0))
    throw InvalidArgument("--threshold must lie in (0, 1)");
  const auto entries = read_manifest(o.subjects);
  if (entries.empty())
    throw InvalidArgument("manifest lists no subjects");
  std::size_t ref = 0;
  if (!o.reference.empty()) {
    const auto it = std::find_if(entries.begin(), entries.end(),
                                 [&](const auto &e) { return e.id == o.reference; });
    if (it == entries.end())
      throw InvalidArgument("reference id '" + o.reference + "' is not in the manifest");
    ref = static_cast<std::size_t>(it - entries.begin());
  }
  std::vector<Subject> subjects;
  for (const auto &e : entries) {
    Volume image = read_volume(e.image);
    LabelMask mask = read_mask(e.mask);
    if (!mask.grid().same_geometry(image.grid()))
      throw InvalidArgument("subject " + e.id + ": mask and image grids differ");
    subjects.push_back({e.id, std::move(image), mask.binarized()});
  }
  Atlas atlas = build_atlas(subjects, ref, config, o.jobs);
  atlas.threshold = o.threshold;
  const fs::path out(o.out);
  if (out.has_parent_path())
    fs::create_directories(out.parent_path());
  write_volume(subjects[ref].image, reference_image_path(out));
  json extra = {{"reference_id", entries[ref].id},
                {"reference_image", reference_image_path(out).filename().string()},
                {"dof", o.reg.dof},
                {"similarity", o.reg.similarity}};
  for (const auto &e : entries)
    extra["subjects"].push_back(e.id);
  write_atlas(atlas, out, extra.dump());
  log << "build-atlas: " << atlas.n_contributors << " subjects, reference "
      << entries[ref].id << '\n';
}

struct SegmentOpts {
  std::string atlas, in, out;
  double threshold = 0.0;
  RegOpts reg;
};

void cmd_segment(const SegmentOpts &o, std::ostream &log) {
  const auto config = o.reg.config();
  Atlas atlas = read_atlas(o.atlas);
  if (o.threshold != 0.0) {
    if (!(o.threshold > 0.0 && o.threshold < 1.0))
      throw InvalidArgument("--threshold must lie in (0, 1)");
    atlas.threshold = o.threshold;
  }
  const json side = read_json(atlas_sidecar_path(o.atlas));
  const fs::path ref_path =
      fs::path(o.atlas).parent_path() / side.value("reference_image", std::string());
  require_exists(ref_path);
  const Volume reference = read_volume(ref_path);
  const Volume target = read_volume(o.in);
  const LabelMask mask = segment_by_atlas(target, atlas, reference, config);
  const fs::path out(o.out);
  if (out.has_parent_path())
    fs::create_directories(out.parent_path());
  write_mask(mask, out);
  log << "segment: " << mask.count() << " foreground voxels\n";
}

struct EvalSegOpts {
  std::string pred, truth, out;
};

void cmd_eval_seg(const EvalSegOpts &o, std::ostream &log) {
  const auto truth = volumes_by_stem(o.truth);
  if (truth.empty())
    throw InvalidArgument("no reference masks in " + o.truth);
  const auto pred = volumes_by_stem(o.pred);
  json pairs = json::array();
  std::map<std::string, std::vector<double>> columns;
  for (const auto &[id, tpath] : truth) {
    const auto it = pred.find(id);
    if (it == pred.end())
      throw IoError("no predicted mask for " + id + " in " + o.pred);
    const LabelMask p = read_mask(it->second);
    const LabelMask t = read_mask(tpath);
    json rec = {{"id", id}};
    rec["dice"] = dice(p, t);
    columns["dice"].push_back(rec["dice"].get<double>());
    if (!p.empty() && !t.empty()) {
      const json m = to_json(evaluate_segmentation(p, t));
      for (const auto &[k, v] : m.items()) {
        rec[k] = v;
        if (k != "dice")
          columns[k].push_back(v.get<double>());
      }
    } else {
      for (const char *k : {"hd", "hd95", "assd"})
        rec[k] = nullptr;
      if (t.empty()) {
        rec["rve"] = nullptr;
      } else {
        rec["rve"] = rve(p, t);
        columns["rve"].push_back(rec["rve"].get<double>());
      }
    }
    pairs.push_back(rec);
  }
  json summary;
  for (const char *k : {"dice", "hd", "hd95", "assd", "rve"}) {
    const auto s = summarize(columns[k]);
    summary[k] = {{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}};
  }
  write_json({{"per_pair", pairs}, {"summary", summary}}, o.out);
  log << "eval-seg: " << pairs.size() << " pairs\n";
}

struct EvalQaOpts {
  std::string pred, truth, out;
};

json report_pair(const ConfusionMatrix &cm) {
  return {{"f1", to_json(fbeta_report(cm, 1.0))}, {"f2", to_json(fbeta_report(cm, 2.0))}};
}

void cmd_eval_qa(const EvalQaOpts &o, std::ostream &log) {
  const auto pred = read_qa_csv(o.pred);
  const auto truth = read_qa_csv(o.truth);
  std::map<std::string, const QAScoreRecord *> by_id;
  for (const auto &r : pred)
    by_id[r.sample_id] = &r;
  if (truth.empty())
    throw InvalidArgument("reference score table is empty");
  if (pred.size() != truth.size())
    throw InvalidArgument("score tables list different samples");
  std::array<std::vector<int>, kNumDomains> t, p;
  std::vector<int> all_t, all_p;
  for (const auto &r : truth) {
    const auto it = by_id.find(r.sample_id);
    if (it == by_id.end())
      throw InvalidArgument("sample " + r.sample_id + " has no prediction");
    for (ArtefactDomain d : kAllDomains) {
      t[index_of(d)].push_back(to_int(r[d]));
      p[index_of(d)].push_back(to_int((*it->second)[d]));
      all_t.push_back(to_int(r[d]));
      all_p.push_back(to_int((*it->second)[d]));
    }
  }
  json out = {{"n_samples", truth.size()},
              {"pooled", report_pair(confusion(all_t, all_p, kNumSeverities))}};
  for (ArtefactDomain d : kAllDomains)
    out["per_domain"][std::string(to_string(d))] =
        report_pair(confusion(t[index_of(d)], p[index_of(d)], kNumSeverities));
  write_json(out, o.out);
  log << "eval-qa: " << truth.size() << " samples\n";
}

struct PhantomOpts {
  std::string out;
  int count = 1, size = 64;
  std::uint64_t seed = 0;
};

void cmd_phantom(const PhantomOpts &o, std::ostream &log) {
  if (o.count < 0 || o.size < 8)
    throw InvalidArgument("--count must be >= 0 and --size >= 8");
  fs::create_directories(o.out);
  std::ofstream manifest(fs::path(o.out) / "manifest.tsv");
  if (!manifest)
    throw IoError("cannot write manifest in " + o.out);
  for (int s = 0; s < o.count; ++s) {
    char id[16];
    std::snprintf(id, sizeof id, "%04d", s + 1);
    Rng rng = Rng(o.seed).split(static_cast<std::uint64_t>(s));
    const Phantom ph = make_phantom({o.size, o.size, o.size}, Vec3::Ones(), &rng);
    const std::string image = std::string("sub-") + id + "_image.nii.gz";
    const std::string mask = std::string("sub-") + id + "_mask.nii.gz";
    write_volume(ph.image, fs::path(o.out) / image);
    write_mask(ph.hippocampus, fs::path(o.out) / mask);
    manifest << id << '\t' << image << '\t' << mask << '\n';
  }
  log << "phantom: wrote " << o.count << " subjects to " << o.out << '\n';
}

} // namespace

std::vector<ManifestEntry> read_manifest(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("file not found: " + path.string());
  const fs::path base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line[0] == '#')
      continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, '\t'))
      cols.push_back(c);
    if (cols.size() != 3 || cols[0].empty())
      throw ParseError("manifest row " + std::to_string(row) +
                       ": expected id<TAB>image<TAB>mask");
    ManifestEntry e{cols[0], fs::path(cols[1]), fs::path(cols[2])};
    for (auto *p : {&e.image, &e.mask}) {
      if (p->is_relative())
        *p = base / *p;
      require_exists(*p);
    }
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.id < b.id; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].id == out[i - 1].id)
      throw ParseError("manifest lists subject " + out[i].id + " twice");
  return out;
}

int run_cli(const std::vector<std::string> &raw_args, std::ostream &log) {
  CLI::App app{"lfqa: low-field MRI quality assessment and hippocampus atlas toolkit", "lfqa"};
  app.require_subcommand(1);
  std::string config_path;
  auto add_config = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "JSON file of option defaults");
  };

  SimulateOpts sim;
  auto *s = app.add_subcommand("simulate", "corrupt clean volumes with one artefact");
  s->add_option("--in", sim.in, "input volume or directory")->required();
  s->add_option("--out", sim.out, "output directory")->required();
  s->add_option("--domain", sim.domain, "artefact domain")->required();
  s->add_option("--class", sim.cls, "severity class")->required()->check(CLI::Range(1, 2));
  s->add_option("--count", sim.count, "outputs per input");
  s->add_option("--seed", sim.seed, "random seed");
  s->add_option("--params", sim.params, "JSON overrides of the sampling ranges");
  s->add_option("--scores-out", sim.scores_out, "also write a QA score CSV");
  s->add_option("--jobs", sim.jobs, "worker threads");
  add_config(s);

  DatasetOpts ds;
  auto *q = app.add_subcommand("qa-dataset", "simulate a labelled QA training set");
  q->add_option("--in", ds.in, "clean volume or directory")->required();
  q->add_option("--out", ds.out, "output directory")->required();
  q->add_option("--counts", ds.counts, "examples of class 0, 1 and 2 per domain")->expected(3);
  q->add_option("--domains", ds.domains, "domains (default: all)");
  q->add_option("--seed", ds.seed, "random seed");
  add_config(q);

  TrainOpts tr;
  auto *t = app.add_subcommand("qa-train", "train the seven domain classifiers");
  t->add_option("--data", tr.data, "volume directory")->required();
  t->add_option("--scores", tr.scores, "QA score CSV")->required();
  t->add_option("--out", tr.out, "model directory")->required();
  t->add_option("--loss", tr.loss, "focal or ce");
  t->add_option("--seed", tr.seed, "seed of the train/validation split");
  t->add_option("--epochs", tr.epochs, "training epochs");
  t->add_option("--learning-rate", tr.learning_rate, "initial line-search step");
  t->add_option("--l2", tr.l2, "weight decay");
  t->add_option("--alpha", tr.alpha, "focal weighting");
  t->add_option("--gamma", tr.gamma, "focal focusing exponent");
  t->add_option("--train-fraction", tr.train_fraction,
                "fraction used for training, rest for validation");
  t->add_option("--jobs", tr.jobs, "worker threads");
  add_config(t);

  ScoreOpts sc;
  auto *c = app.add_subcommand("qa-score", "score volumes with trained classifiers");
  c->add_option("--model", sc.model, "model directory")->required();
  c->add_option("--in", sc.in, "volume or directory")->required();
  c->add_option("--out", sc.out, "output CSV")->required();
  c->add_option("--jobs", sc.jobs, "worker threads");
  add_config(c);

  auto add_reg = [](CLI::App *sub, RegOpts &r) {
    sub->add_option("--dof", r.dof, "6, 9 or 12");
    sub->add_option("--similarity", r.similarity, "ncc or ssd");
  };

  AtlasOpts at;
  auto *b = app.add_subcommand("build-atlas", "build a hippocampus probability atlas");
  b->add_option("--subjects", at.subjects, "manifest (id, image, mask per line)")->required();
  b->add_option("--reference", at.reference, "reference subject id (default: first)");
  b->add_option("--out", at.out, "atlas NIfTI path")->required();
  b->add_option("--threshold", at.threshold, "segmentation threshold stored with the atlas");
  b->add_option("--jobs", at.jobs, "worker threads");
  add_reg(b, at.reg);
  add_config(b);

  SegmentOpts sg;
  auto *g = app.add_subcommand("segment", "segment a volume with an atlas");
  g->add_option("--atlas", sg.atlas, "atlas NIfTI path")->required();
  g->add_option("--in", sg.in, "target volume")->required();
  g->add_option("--out", sg.out, "output mask")->required();
  g->add_option("--threshold", sg.threshold, "override the atlas threshold");
  add_reg(g, sg.reg);
  add_config(g);

  EvalSegOpts es;
  auto *e = app.add_subcommand("eval-seg", "segmentation metrics per mask pair");
  e->add_option("--pred", es.pred, "predicted mask directory")->required();
  e->add_option("--truth", es.truth, "reference mask directory")->required();
  e->add_option("--out", es.out, "output JSON")->required();
  add_config(e);

  EvalQaOpts eq;
  auto *v = app.add_subcommand("eval-qa", "classification report for QA scores");
  v->add_option("--pred", eq.pred, "predicted score CSV")->required();
  v->add_option("--truth", eq.truth, "reference score CSV")->required();
  v->add_option("--out", eq.out, "output JSON")->required();
  add_config(v);

  PhantomOpts ph;
  auto *p = app.add_subcommand("phantom", "write synthetic subjects and a manifest");
  p->add_option("--out", ph.out, "output directory")->required();
  p->add_option("--count", ph.count, "number of subjects");
  p->add_option("--size", ph.size, "voxels per axis");
  p->add_option("--seed", ph.seed, "random seed");
  add_config(p);

  try {
    const auto args = merge_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty())
      reversed.pop_back();
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError &err) {
      std::ostringstream out, msg;
      const int code = app.exit(err, out, msg);
      log << out.str() << msg.str();
      return code == 0 ? kExitOk : kExitUsage;
    }
    for (auto *sub : app.get_subcommands())
      log << "resolved config [" << sub->get_name() << "]:\n"
          << sub->config_to_str(true, false);

    if (s->parsed())
      cmd_simulate(sim, log);
    else if (q->parsed())
      cmd_qa_dataset(ds, log);
    else if (t->parsed())
      cmd_qa_train(tr, log);
    else if (c->parsed())
      cmd_qa_score(sc, log);
    else if (b->parsed())
      cmd_build_atlas(at, log);
    else if (g->parsed())
      cmd_segment(sg, log);
    else if (e->parsed())
      cmd_eval_seg(es, log);
    else if (v->parsed())
      cmd_eval_qa(eq, log);
    else if (p->parsed())
      cmd_phantom(ph, log);
    return kExitOk;
  } catch (const IoError &err) {
    log << "error: " << err.what() << '\n';
    return kExitMissingInput;
  } catch (const NumericalError &err) {
    log << "error: " << err.what() << '\n';
    return kExitNumerical;
  } catch (const Error &err) {
    log << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error &err) {
    log << "error: " << err.what() << '\n';
    return kExitMissingInput;
  } catch (const json::exception &err) {
    log << "error: " << err.what() << '\n';
    return kExitUsage;
  }
}

} // namespace lfqa::cli
