// Copyright 2026 The Shaper Authors.
//
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
// limitations under the License.

// Command-line driver for the shaper pipeline: corpus and vocab
// preparation, super pre-training, perplexity evaluation, predictor fitting,
// latency benchmarking, evolutionary search and shape heuristics.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shaper/checkpoint.h"
#include "shaper/config.h"
#include "shaper/corpus.h"
#include "shaper/errors.h"
#include "shaper/gbt.h"
#include "shaper/heuristics.h"
#include "shaper/io.h"
#include "shaper/latency.h"
#include "shaper/runtime.h"
#include "shaper/search.h"
#include "shaper/supernet.h"
#include "shaper/surrogate.h"
#include "shaper/trainer.h"
#include "shaper/vocab.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace shaper {
namespace {

constexpr int kOutputFormatVersion = 1;

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kData:
    case ErrorKind::kFormat:
      return 2;
    case ErrorKind::kNumeric:
      return 3;
    case ErrorKind::kInfeasible:
      return 4;
    default:
      return 1;
  }
}

// Outputs written by the current command. Everything committed so far is
// removed again if the command fails, so a failed run leaves no partial set.
class Outputs {
 public:
  void Write(const std::string& path, const std::string& contents) {
    if (path.empty()) throw ConfigError("output path is empty");
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    WriteFileAtomic(path, contents);
    written_.push_back(path);
  }
  void WriteJson(const std::string& path, const json& j) { Write(path, j.dump(2) + "\n"); }
  void Adopt(const std::string& path) { written_.push_back(path); }
  void Rollback() {
    for (const std::string& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }
  void Commit() { written_.clear(); }

 private:
  std::vector<std::string> written_;
};

// Settings shared by the commands that take a run configuration.
struct Common {
  std::string config_path;
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
};

RunConfig LoadRunConfig(const Common& c) {
  RunConfig rc;
  if (!c.config_path.empty()) {
    rc = RunConfig::Load(c.config_path);
  } else if (c.preset == "bert-base") {
    rc.backbone = BackboneConfig::BertBase();
  } else if (c.preset != "desk") {
    throw ConfigError("unknown preset '" + c.preset + "' (expected desk or bert-base)");
  }
  if (c.seed) rc.seed = *c.seed;
  return rc;
}

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON run configuration");
  cmd->add_option("--preset", c.preset, "backbone preset when no config: desk | bert-base");
  cmd->add_option("--seed", c.seed, "random seed (overrides the config)");
}

template <typename T>
void Override(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

std::string EffectiveConfigPath(const std::string& output) {
  return output + ".config.json";
}

std::vector<int> LoadTokens(const std::string& corpus, const Vocab& vocab) {
  if (corpus.empty()) throw ConfigError("corpus path is required");
  std::vector<int> ids = EncodeCorpus(ReadLines(corpus), vocab);
  if (ids.empty()) throw DataError("corpus '" + corpus + "' contains no tokens");
  return ids;
}

EvalSet LoadEvalSet(const RunConfig& rc, const Vocab& vocab, std::size_t seq_len) {
  if (rc.paths.eval_corpus.empty()) throw ConfigError("eval corpus path is required");
  const std::vector<int> ids = LoadTokens(rc.paths.eval_corpus, vocab);
  return EvalSet::Build(ids, rc.eval.batch_size, seq_len, rc.eval.max_batches,
                        rc.training.masking, vocab.size(), rc.eval.mask_seed);
}

Supernet LoadModel(const std::string& path) {
  if (path.empty()) throw ConfigError("checkpoint path is required");
  return LoadCheckpoint(path);
}

// ---------------------------------------------------------------------------

struct GenCorpusArgs {
  std::size_t bytes = 1 << 20;
  std::uint64_t seed = 1;
  std::string out;
};

void RunGenCorpus(const GenCorpusArgs& a, Outputs& out) {
  SyntheticCorpusOptions opt;
  opt.target_bytes = a.bytes;
  opt.seed = a.seed;
  std::string text;
  for (const std::string& line : GenerateSyntheticCorpus(opt)) text += line + "\n";
  out.Write(a.out, text);
}

struct BuildVocabArgs {
  std::string corpus;
  std::size_t vocab_size = 2000;
  std::string out;
};

void RunBuildVocab(const BuildVocabArgs& a, Outputs& out) {
  const Vocab vocab = BuildVocab(ReadLines(a.corpus), a.vocab_size);
  out.Write(a.out, vocab.Serialize());
}

struct TrainArgs {
  Common common;
  std::string corpus, eval_corpus, vocab, out_dir;
  std::optional<std::size_t> steps, batch_size, warmup, eval_interval, shapes_per_step;
  std::optional<double> lr;
  std::optional<std::string> sampler;
  bool quiet = false;
};

void RunTrain(TrainArgs& a, Outputs& out) {
  RunConfig rc = LoadRunConfig(a.common);
  if (!a.corpus.empty()) rc.paths.corpus = a.corpus;
  if (!a.eval_corpus.empty()) rc.paths.eval_corpus = a.eval_corpus;
  if (!a.vocab.empty()) rc.paths.vocab = a.vocab;
  if (!a.out_dir.empty()) rc.paths.output_dir = a.out_dir;
  Override(a.steps, rc.training.steps);
  Override(a.batch_size, rc.training.batch_size);
  Override(a.warmup, rc.training.warmup_steps);
  Override(a.eval_interval, rc.training.eval_interval);
  Override(a.shapes_per_step, rc.training.shapes_per_step);
  Override(a.lr, rc.training.learning_rate);
  if (a.sampler) rc.training.sampler = ParseSamplerMode(*a.sampler);
  if (a.common.seed) rc.training.seed = rc.seed;
  rc.training.Validate();
  if (rc.paths.vocab.empty()) throw ConfigError("vocab path is required");

  const Vocab vocab = Vocab::Load(rc.paths.vocab);
  rc.backbone.vocab_size = vocab.size();
  rc.backbone.max_seq_len = std::max(rc.backbone.max_seq_len, rc.training.seq_len);
  rc.backbone.Validate();
  const std::vector<int> train_ids = LoadTokens(rc.paths.corpus, vocab);
  const EvalSet eval = LoadEvalSet(rc, vocab, rc.training.seq_len);

  Supernet model = Supernet::Build(rc.backbone, rc.seed);
  ProgressFn progress;
  if (!a.quiet) {
    progress = [&rc](const StepRecord& r) {
      if (r.step % 50 == 0 || r.step == rc.training.steps) {
        double sum = 0.0;
        for (double l : r.losses) sum += l;
        std::fprintf(stderr, "step %zu/%zu mean loss %.4f\n", r.step, rc.training.steps,
                     sum / static_cast<double>(r.losses.size()));
      }
    };
  }
  const TrainLog log = SuperPretrain(model, train_ids, eval, rc.training, progress);

  const fs::path dir(rc.paths.output_dir);
  fs::create_directories(dir);
  const std::string ckpt = (dir / "supernet.sshp").string();
  SaveCheckpoint(model, ckpt);
  out.Adopt(ckpt);
  out.Write((dir / "train_log.csv").string(), log.StepsCsv());
  out.Write((dir / "eval_log.csv").string(), log.EvalCsv());
  json eff = rc.ToJson();
  eff["config_hash"] = ConfigHash(rc.ToJson());
  out.WriteJson((dir / "effective_config.json").string(), eff);
}

struct EvalArgs {
  Common common;
  std::string checkpoint, eval_corpus, vocab, shape, out;
  std::size_t random = 0;
  std::optional<std::size_t> seq_len;
};

void RunEvalPerplexity(EvalArgs& a, Outputs& out) {
  RunConfig rc = LoadRunConfig(a.common);
  if (!a.checkpoint.empty()) rc.paths.checkpoint = a.checkpoint;
  if (!a.eval_corpus.empty()) rc.paths.eval_corpus = a.eval_corpus;
  if (!a.vocab.empty()) rc.paths.vocab = a.vocab;
  Override(a.seq_len, rc.training.seq_len);
  if (rc.paths.vocab.empty()) throw ConfigError("vocab path is required");
  Supernet model = LoadModel(rc.paths.checkpoint);
  rc.backbone = model.config();
  const Vocab vocab = Vocab::Load(rc.paths.vocab);
  if (vocab.size() != model.config().vocab_size) {
    throw ConfigError("vocab has " + std::to_string(vocab.size()) +
                      " tokens but the checkpoint expects " +
                      std::to_string(model.config().vocab_size));
  }
  const EvalSet eval = LoadEvalSet(rc, vocab, rc.training.seq_len);
  if (a.random > 0) {
    if (a.out.empty()) throw ConfigError("--out is required with --random");
    Rng rng(rc.seed);
    const SurrogateDataset data = CollectPerplexityDataset(model, a.random, eval, rng);
    out.Write(a.out, data.ToCsv());
    out.WriteJson(EffectiveConfigPath(a.out), rc.ToJson());
    return;
  }
  const ShapeVector shape =
      a.shape.empty() ? model.config().design_space.Largest() : ShapeVector::Parse(a.shape);
  model.config().design_space.Validate(shape);
  const double ppl = EvaluatePerplexity(model, shape, eval);
  const json result{{"format_version", kOutputFormatVersion},
                    {"shape", shape.ToString()},
                    {"params", CountParams(model.config(), shape)},
                    {"perplexity", ppl},
                    {"masked_tokens", eval.masked_tokens()}};
  if (a.out.empty()) {
    std::cout << result.dump(2) << "\n";
  } else {
    out.WriteJson(a.out, result);
    out.WriteJson(EffectiveConfigPath(a.out), rc.ToJson());
  }
}

struct FitArgs {
  Common common;
  std::string dataset, kind = "perplexity", out;
};

void RunFitPredictor(FitArgs& a, Outputs& out) {
  RunConfig rc = LoadRunConfig(a.common);
  const PredictorKind kind = ParsePredictorKind(a.kind);
  const SurrogateDataset data = SurrogateDataset::Load(a.dataset);
  const FitResult fit = FitSurrogate(data, kind, rc.surrogate, rc.seed);
  out.WriteJson(a.out, fit.model.ToJson());
  json report = fit.report.ToJson();
  report["kind"] = PredictorKindName(kind);
  report["dataset"] = a.dataset;
  report["seed"] = rc.seed;
  out.WriteJson(a.out + ".report.json", report);
  out.WriteJson(EffectiveConfigPath(a.out), rc.ToJson());
  std::cout << report.dump(2) << "\n";
}

struct BenchArgs {
  Common common;
  std::string checkpoint, out, device;
  std::size_t n = 200;
  std::optional<std::size_t> batch_size, seq_len, warmup, reps;
};

void RunBench(BenchArgs& a, Outputs& out) {
  RunConfig rc = LoadRunConfig(a.common);
  if (!a.checkpoint.empty()) rc.paths.checkpoint = a.checkpoint;
  Override(a.batch_size, rc.bench.batch_size);
  Override(a.seq_len, rc.bench.seq_len);
  Override(a.warmup, rc.bench.warmup);
  Override(a.reps, rc.bench.reps);
  rc.bench.Validate();
  Supernet model = LoadModel(rc.paths.checkpoint);
  rc.backbone = model.config();
  const std::string device = a.device.empty() ? DeviceLabel() : a.device;
  const Clock clock = Clock::Steady();
  Rng rng(rc.seed);
  const LatencyDataset ds = BuildLatencyDataset(model, a.n, rc.bench, rng, clock, device);
  if (ds.data.rows.empty()) throw DataError("every latency measurement failed");
  out.Write(a.out, ds.data.ToCsv());
  out.WriteJson(a.out + ".meta.json", ds.Sidecar(rc.bench, clock, device));
  out.WriteJson(EffectiveConfigPath(a.out), rc.ToJson());
  if (ds.skipped) std::fprintf(stderr, "skipped %zu rows\n", ds.skipped);
}

struct SearchArgs {
  Common common;
  std::string predictor, checkpoint, eval_corpus, vocab, latency_predictor, out;
  std::string constraint_kind;
  std::optional<std::uint64_t> min_params, max_params;
  std::optional<double> max_latency_ms;
  std::optional<std::size_t> population, iterations, threads;
  std::optional<double> mutation_prob;
};

void RunSearch(SearchArgs& a, Outputs& out) {
  RunConfig rc = LoadRunConfig(a.common);
  if (!a.checkpoint.empty()) rc.paths.checkpoint = a.checkpoint;
  if (!a.eval_corpus.empty()) rc.paths.eval_corpus = a.eval_corpus;
  if (!a.vocab.empty()) rc.paths.vocab = a.vocab;
  Override(a.population, rc.search.population_size);
  Override(a.iterations, rc.search.iterations);
  Override(a.threads, rc.search.threads);
  Override(a.mutation_prob, rc.search.mutation_prob);
  if (a.common.seed) rc.search.seed = rc.seed;
  if (!a.constraint_kind.empty()) {
    json cj{{"kind", a.constraint_kind}};
    if (a.min_params) cj["min_params"] = *a.min_params;
    if (a.max_params) cj["max_params"] = *a.max_params;
    if (a.max_latency_ms) cj["max_latency_ms"] = *a.max_latency_ms;
    if (a.constraint_kind == "latency_max") cj["device"] = DeviceLabel();
    rc.constraint = Constraint::FromJson(cj);
  }
  rc.search.Validate();

  std::optional<GbtModel> latency;
  if (!a.latency_predictor.empty()) latency = GbtModel::Load(a.latency_predictor);

  std::optional<GbtModel> ppl_model;
  std::optional<Supernet> supernet;
  std::optional<EvalSet> eval;
  FitnessFn fitness;
  std::string mode;
  if (!a.predictor.empty()) {
    ppl_model = GbtModel::Load(a.predictor);
    if (!rc.paths.checkpoint.empty()) rc.backbone = LoadModel(rc.paths.checkpoint).config();
    const BackboneConfig backbone = rc.backbone;
    const GbtModel* m = &*ppl_model;
    fitness = [m, backbone](const ShapeVector& s) { return PredictShape(*m, backbone, s); };
    mode = "predictor";
  } else {
    supernet = LoadModel(rc.paths.checkpoint);
    rc.backbone = supernet->config();
    if (rc.paths.vocab.empty()) throw ConfigError("vocab path is required for direct search");
    const Vocab vocab = Vocab::Load(rc.paths.vocab);
    eval = LoadEvalSet(rc, vocab, rc.training.seq_len);
    // Direct evaluation reconfigures the shared model: keep it sequential.
    rc.search.threads = 1;
    Supernet* model = &*supernet;
    const EvalSet* es = &*eval;
    fitness = [model, es](const ShapeVector& s) { return EvaluatePerplexity(*model, s, *es); };
    mode = "direct";
  }
  const SearchProblem problem =
      MakeProblem(rc.backbone, fitness, rc.constraint, latency ? &*latency : nullptr);
  const SearchResult result = Evolve(problem, rc.search);

  const json effective = rc.ToJson();
  json j = result.ToJson();
  j["fitness_mode"] = mode;
  j["constraint"] = rc.constraint.ToJson();
  j["seed"] = rc.search.seed;
  j["config_hash"] = ConfigHash(effective);
  if (!a.predictor.empty()) j["predictor"] = a.predictor;
  if (!rc.paths.checkpoint.empty()) j["checkpoint"] = rc.paths.checkpoint;
  out.WriteJson(a.out, j);
  out.Write(a.out + ".history.csv", result.HistoryCsv());
  out.WriteJson(EffectiveConfigPath(a.out), effective);
  std::cout << result.best.shape.ToString() << " fitness " << result.best.fitness
            << " params " << result.best.params << "\n";
}

struct HeuristicArgs {
  Common common;
  std::string reference, out;
  std::optional<double> reference_params, fixed_params;
  double target_params = 0.0;
};

void RunHeuristic(HeuristicArgs& a, Outputs& out) {
  const RunConfig rc = LoadRunConfig(a.common);
  HeuristicSpec spec;
  spec.reference = ShapeVector::Parse(a.reference);
  rc.backbone.design_space.Validate(spec.reference);
  spec.reference_params = a.reference_params
                              ? *a.reference_params
                              : static_cast<double>(CountParams(rc.backbone, spec.reference));
  spec.fixed_params = a.fixed_params
                          ? *a.fixed_params
                          : static_cast<double>(ShapeIndependentParams(rc.backbone));
  spec.target_params = a.target_params;
  const ShapeVector shape = CigarScale(spec, rc.backbone.design_space);
  const json j{{"format_version", kOutputFormatVersion},
               {"reference", spec.reference.ToString()},
               {"reference_params", spec.reference_params},
               {"fixed_params", spec.fixed_params},
               {"target_params", spec.target_params},
               {"shape", shape.ToString()},
               {"params", CountParams(rc.backbone, shape)}};
  std::cout << shape.ToString() << "\n";
  if (!a.out.empty()) {
    out.WriteJson(a.out, j);
    out.WriteJson(EffectiveConfigPath(a.out), rc.ToJson());
  }
}

struct TemplateArgs {
  Common common;
  std::string kind, out;
};

void RunTemplate(TemplateArgs& a, Outputs& out) {
  const RunConfig rc = LoadRunConfig(a.common);
  std::vector<TemplateKind> kinds;
  if (a.kind == "all") {
    kinds = AllTemplateKinds();
  } else {
    kinds.push_back(ParseTemplateKind(a.kind));
  }
  json shapes = json::object();
  for (TemplateKind k : kinds) {
    const ShapeVector s = TemplatedShape(k, rc.backbone.design_space);
    shapes[TemplateKindName(k)] = {{"shape", s.ToString()},
                                   {"params", CountParams(rc.backbone, s)}};
    std::cout << TemplateKindName(k) << " " << s.ToString() << "\n";
  }
  if (!a.out.empty()) {
    out.WriteJson(a.out, {{"format_version", kOutputFormatVersion}, {"templates", shapes}});
    out.WriteJson(EffectiveConfigPath(a.out), rc.ToJson());
  }
}

struct DiagonalArgs {
  std::string checkpoint, out;
};

void RunAnalyzeDiagonals(const DiagonalArgs& a, Outputs& out) {
  const Supernet model = LoadModel(a.checkpoint);
  out.Write(a.out, ComputeDiagonalProfile(model).ToCsv());
}

}  // namespace
}  // namespace shaper

int main(int argc, char** argv) {
  using namespace shaper;
  TuneAllocator();
  CLI::App app{"Elastic-shape supernet toolkit"};
  app.require_subcommand(1);

  GenCorpusArgs gen;
  auto* c_gen = app.add_subcommand("gen-corpus", "write a synthetic text corpus");
  c_gen->add_option("--bytes", gen.bytes, "approximate corpus size");
  c_gen->add_option("--seed", gen.seed, "generator seed");
  c_gen->add_option("--out", gen.out, "output text file")->required();

  BuildVocabArgs bv;
  auto* c_vocab = app.add_subcommand("build-vocab", "build a frequency-ordered vocab");
  c_vocab->add_option("--corpus", bv.corpus, "corpus, one document per line")->required();
  c_vocab->add_option("--vocab-size", bv.vocab_size, "maximum vocab size incl. specials");
  c_vocab->add_option("--out", bv.out, "output vocab file")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "super pre-train the supernet");
  AddCommon(c_train, tr.common);
  c_train->add_option("--corpus", tr.corpus, "training corpus");
  c_train->add_option("--eval-corpus", tr.eval_corpus, "evaluation corpus");
  c_train->add_option("--vocab", tr.vocab, "vocab file");
  c_train->add_option("--out-dir", tr.out_dir, "directory for checkpoint and logs");
  c_train->add_option("--steps", tr.steps, "training steps");
  c_train->add_option("--batch-size", tr.batch_size, "sequences per batch");
  c_train->add_option("--warmup", tr.warmup, "warmup steps");
  c_train->add_option("--eval-interval", tr.eval_interval, "steps between evaluations");
  c_train->add_option("--shapes-per-step", tr.shapes_per_step, "sub-networks per step");
  c_train->add_option("--lr", tr.lr, "peak learning rate");
  c_train->add_option("--sampler", tr.sampler, "random | sandwich");
  c_train->add_flag("--quiet", tr.quiet, "no progress output");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval-perplexity", "MLM perplexity of sub-networks");
  AddCommon(c_eval, ev.common);
  c_eval->add_option("--checkpoint", ev.checkpoint, "supernet checkpoint");
  c_eval->add_option("--eval-corpus", ev.eval_corpus, "evaluation corpus");
  c_eval->add_option("--vocab", ev.vocab, "vocab file");
  c_eval->add_option("--shape", ev.shape, "shape such as 64-32-48-16 (default: largest)");
  c_eval->add_option("--random", ev.random, "collect a dataset of N random shapes");
  c_eval->add_option("--seq-len", ev.seq_len, "eval sequence length");
  c_eval->add_option("--out", ev.out, "output JSON, or dataset CSV with --random");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit-predictor", "fit a boosted-tree predictor");
  AddCommon(c_fit, fit.common);
  c_fit->add_option("--dataset", fit.dataset, "dataset CSV")->required();
  c_fit->add_option("--kind", fit.kind, "perplexity | latency");
  c_fit->add_option("--out", fit.out, "output model JSON")->required();

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "measure sub-network latency on this host");
  AddCommon(c_bench, bench.common);
  c_bench->add_option("--checkpoint", bench.checkpoint, "supernet checkpoint");
  c_bench->add_option("--n", bench.n, "number of random shapes");
  c_bench->add_option("--batch-size", bench.batch_size, "batch size");
  c_bench->add_option("--seq-len", bench.seq_len, "sequence length");
  c_bench->add_option("--warmup", bench.warmup, "untimed forwards per shape");
  c_bench->add_option("--reps", bench.reps, "timed forwards per shape");
  c_bench->add_option("--device", bench.device, "device label (default: host CPU)");
  c_bench->add_option("--out", bench.out, "output dataset CSV")->required();

  SearchArgs se;
  auto* c_search = app.add_subcommand("search", "evolutionary search over shapes");
  AddCommon(c_search, se.common);
  c_search->add_option("--predictor", se.predictor, "perplexity predictor JSON");
  c_search->add_option("--checkpoint", se.checkpoint, "checkpoint for direct evaluation");
  c_search->add_option("--eval-corpus", se.eval_corpus, "eval corpus for direct evaluation");
  c_search->add_option("--vocab", se.vocab, "vocab for direct evaluation");
  c_search->add_option("--latency-predictor", se.latency_predictor, "latency predictor JSON");
  c_search->add_option("--constraint", se.constraint_kind, "none | param_range | latency_max");
  c_search->add_option("--min-params", se.min_params, "lower parameter bound");
  c_search->add_option("--max-params", se.max_params, "upper parameter bound");
  c_search->add_option("--max-latency-ms", se.max_latency_ms, "latency bound");
  c_search->add_option("--population", se.population, "population size");
  c_search->add_option("--iterations", se.iterations, "generations");
  c_search->add_option("--mutation-prob", se.mutation_prob, "per-gene mutation probability");
  c_search->add_option("--threads", se.threads, "concurrent predictor evaluations");
  c_search->add_option("--out", se.out, "output JSON")->required();

  HeuristicArgs he;
  auto* c_heur = app.add_subcommand("heuristic", "cigar-scale a reference shape");
  AddCommon(c_heur, he.common);
  c_heur->add_option("--reference", he.reference, "reference shape")->required();
  c_heur->add_option("--reference-params", he.reference_params,
                     "reference parameter count (default: exact count)");
  c_heur->add_option("--fixed-params", he.fixed_params,
                     "width-independent parameters (default: exact count)");
  c_heur->add_option("--target-params", he.target_params, "target parameter count")
      ->required();
  c_heur->add_option("--out", he.out, "output JSON");

  TemplateArgs te;
  auto* c_tmpl = app.add_subcommand("template", "templated shapes");
  AddCommon(c_tmpl, te.common);
  c_tmpl->add_option("--kind", te.kind, "template name or 'all'")->required();
  c_tmpl->add_option("--out", te.out, "output JSON");

  DiagonalArgs dg;
  auto* c_diag = app.add_subcommand("analyze-diagonals", "bottleneck diagonal profiles");
  c_diag->add_option("--checkpoint", dg.checkpoint, "supernet checkpoint")->required();
  c_diag->add_option("--out", dg.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  Outputs outputs;
  try {
    if (*c_gen) RunGenCorpus(gen, outputs);
    if (*c_vocab) RunBuildVocab(bv, outputs);
    if (*c_train) RunTrain(tr, outputs);
    if (*c_eval) RunEvalPerplexity(ev, outputs);
    if (*c_fit) RunFitPredictor(fit, outputs);
    if (*c_bench) RunBench(bench, outputs);
    if (*c_search) RunSearch(se, outputs);
    if (*c_heur) RunHeuristic(he, outputs);
    if (*c_tmpl) RunTemplate(te, outputs);
    if (*c_diag) RunAnalyzeDiagonals(dg, outputs);
    outputs.Commit();
    return 0;
  } catch (const Error& e) {
    outputs.Rollback();
    std::cerr << "error (" << ErrorKindName(e.kind()) << "): " << e.what() << "\n";
    return ExitCode(e.kind());
  } catch (const std::exception& e) {
    outputs.Rollback();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
