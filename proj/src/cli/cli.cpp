// Copyright 2026 The PitchRAVE Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pitchrave/cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "pitchrave/common.hpp"
#include "pitchrave/data/dataset.hpp"
#include "pitchrave/dsp/filters.hpp"
#include "pitchrave/eval/mushra.hpp"
#include "pitchrave/eval/objective.hpp"
#include "pitchrave/eval/server.hpp"
#include "pitchrave/model/checkpoint.hpp"
#include "pitchrave/train/trainer.hpp"

namespace pitchrave::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

template <typename T>
void Override(json& section, const char* key, const std::optional<T>& value) {
  if (value) section[key] = *value;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string midi;
  std::string out;
  std::optional<std::int64_t> stage1_steps, stage2_steps, eval_every;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> batch_size, crop_length;
  std::optional<double> beta, lr;
  std::optional<std::string> conditioning;
};

int CmdTrain(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  json cfg = a.config.empty() ? json::object() : ReadJsonFile(a.config);
  if (!cfg.is_object()) throw UsageError("config must be a JSON object");
  for (const char* key : {"model", "train", "data"}) {
    if (!cfg.contains(key)) cfg[key] = json::object();
  }
  json& tj = cfg["train"];
  Override(tj, "stage1_steps", a.stage1_steps);
  Override(tj, "stage2_steps", a.stage2_steps);
  Override(tj, "eval_every", a.eval_every);
  Override(tj, "seed", a.seed);
  Override(tj, "batch_size", a.batch_size);
  Override(tj, "crop_length", a.crop_length);
  Override(tj, "beta", a.beta);
  Override(tj, "lr", a.lr);
  Override(cfg["model"], "conditioning", a.conditioning);

  model::ModelConfig mc;
  train::TrainConfig tc;
  data::DatasetConfig dc;
  try {
    mc = cfg["model"].get<model::ModelConfig>();
    tc = cfg["train"].get<train::TrainConfig>();
    dc.validation_fraction = cfg["data"].value("validation_fraction", dc.validation_fraction);
  } catch (const json::exception& e) {
    throw UsageError("invalid config: " + std::string(e.what()));
  }
  mc.Validate();
  tc.Validate();
  dc.n_bands = mc.n_bands;
  dc.seed = tc.seed;

  const fs::path out_dir = a.out;
  fs::create_directories(out_dir);
  const std::string midi_dir = a.midi.empty() ? a.data : a.midi;
  const json snapshot = {{"command", "train"},
                         {"model", mc},
                         {"train", tc},
                         {"data",
                          {{"audio_dir", a.data},
                           {"midi_dir", midi_dir},
                           {"validation_fraction", dc.validation_fraction}}}};
  WriteJsonFile(out_dir / "config.json", snapshot);

  data::DatasetBuild build =
      data::MakeDataset(a.data, midi_dir, dc, train::LengthGranularity(mc));
  for (const auto& w : build.warnings) err << "warning: " << w << '\n';
  WriteJsonFile(out_dir / "dataset.json", build.manifest);

  model::RaveModel model(mc, tc.seed);
  train::Trainer trainer(model, build.dataset, tc);
  std::ofstream log(out_dir / "metrics.jsonl", std::ios::trunc);
  if (!log) throw DataError("cannot write " + (out_dir / "metrics.jsonl").string());
  trainer.Run(&log, [&](train::Stage stage, const model::RaveModel& m) {
    const json meta = {{"stage", train::ToString(stage)}, {"step", trainer.state().step},
                       {"seed", tc.seed}};
    if (stage == train::Stage::kRepresentation) {
      model::SaveCheckpoint(out_dir / "stage1", m, meta);
    }
  });
  const json meta = {{"stage", train::ToString(trainer.state().stage)},
                     {"step", trainer.state().step},
                     {"seed", tc.seed}};
  model::SaveCheckpoint(out_dir / "checkpoint", model, meta);
  out << json{{"checkpoint", (out_dir / "checkpoint").string()},
              {"metrics", (out_dir / "metrics.jsonl").string()},
              {"steps", trainer.state().step}}
             .dump()
      << '\n';
  return kExitOk;
}

struct ReconstructArgs {
  std::string ckpt, audio, midi, out;
  bool float32 = false;
};

int CmdReconstruct(const ReconstructArgs& a, std::ostream& out, std::ostream& err) {
  model::RaveModel model = model::LoadModel(a.ckpt);
  const auto& mc = model.config();
  std::vector<data::NoteEvent> notes;
  if (mc.conditioning != model::Conditioning::kNone) {
    if (a.midi.empty()) throw DataError("reconstruct: this model needs --midi");
    if (!fs::exists(a.midi)) throw DataError("reconstruct: MIDI file not found: " + a.midi);
  }
  if (!a.midi.empty()) {
    data::MidiFile m = data::ReadMidi(a.midi);
    for (const auto& w : m.warnings) err << "warning: " << w << '\n';
    notes = std::move(m.notes);
  }
  AudioBuffer audio = data::LoadWav(a.audio);
  const std::size_t original = audio.size();
  const std::size_t gran = mc.n_bands * mc.total_stride();
  audio.samples.resize((original + gran - 1) / gran * gran, 0.0);
  const data::AlignedExample ex = data::MakeAlignedExample("input", audio, notes, mc.n_bands);
  const data::Batch batch = data::MakeBatch({ex}, {{0, 0}}, ex.audio.size(), mc.n_bands);

  ad::Tape tape;
  tape.set_recording(false);
  const ad::Tensor y = train::Reconstruct(tape, model, batch.audio, batch.aux);
  AudioBuffer result;
  result.samples.assign(y.values().begin(), y.values().begin() + static_cast<std::ptrdiff_t>(original));
  result.Validate();
  const fs::path out_path = a.out;
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  WriteWav(out_path, result, a.float32 ? WavEncoding::kFloat32 : WavEncoding::kPcm16);
  fs::path snap = out_path;
  snap.replace_extension(".config.json");
  WriteJsonFile(snap, {{"command", "reconstruct"},
                       {"checkpoint", a.ckpt},
                       {"audio", a.audio},
                       {"midi", a.midi},
                       {"out", a.out},
                       {"float32", a.float32},
                       {"model", mc}});
  out << json{{"out", a.out}, {"samples", result.size()}}.dump() << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string ref, test, ref_dir, test_dir, out;
  std::size_t spectral_window = 1024;
  bool toy = false;
};

int CmdEval(const EvalArgs& a, std::ostream& out) {
  eval::ObjectiveConfig cfg;
  cfg.spectral_window = a.spectral_window;
  if (a.toy) cfg.multiscale = metrics::MultiscaleConfig::Toy();
  json report;
  if (!a.ref_dir.empty() || !a.test_dir.empty()) {
    if (a.ref_dir.empty() || a.test_dir.empty()) {
      throw UsageError("eval: --ref-dir and --test-dir go together");
    }
    report = eval::ObjectiveReport(a.ref_dir, a.test_dir, cfg);
  } else {
    if (a.ref.empty() || a.test.empty()) throw UsageError("eval: give --ref and --test");
    report = eval::ComparePair(data::LoadWav(a.ref), data::LoadWav(a.test), cfg);
  }
  if (!a.out.empty()) {
    WriteJsonFile(a.out, report);
    fs::path snap = a.out;
    snap.replace_extension(".config.json");
    WriteJsonFile(snap, {{"command", "eval"},
                         {"ref", a.ref},
                         {"test", a.test},
                         {"ref_dir", a.ref_dir},
                         {"test_dir", a.test_dir},
                         {"spectral_window", cfg.spectral_window},
                         {"multiscale", cfg.multiscale}});
  }
  out << report.dump(2) << '\n';
  return kExitOk;
}

int CmdAnchor(const std::string& in, const std::string& out_path, std::ostream& out) {
  const AudioBuffer x = data::LoadWav(in);
  const AudioBuffer y = dsp::MakeAnchor(x);
  WriteWav(out_path, y);
  out << json{{"out", out_path}, {"samples", y.size()}}.dump() << '\n';
  return kExitOk;
}

int CmdSpectrogram(const std::string& in, std::size_t window, const std::string& out_path,
                   std::ostream& out) {
  const eval::SpectrogramDb s = eval::ExportSpectrogram(data::LoadWav(in), window);
  std::ofstream csv(out_path, std::ios::trunc);
  if (!csv) throw DataError("cannot write " + out_path);
  eval::WriteSpectrogramCsv(csv, s);
  out << json{{"out", out_path}, {"bins", s.db.rows()}, {"frames", s.db.cols()}}.dump() << '\n';
  return kExitOk;
}

int CmdServe(const std::string& stimuli, const std::string& ratings, const std::string& host,
             int port, std::ostream& err) {
  eval::MushraService service(eval::LoadStimuliManifest(stimuli), ratings);
  err << "serving MUSHRA test on http://" << host << ':' << port << '\n';
  service.Listen(host, port);
  return kExitOk;
}

int CmdReport(const std::string& ratings, std::ostream& out) {
  out << eval::ReportJson(eval::AggregateScores(eval::ReadRatings(ratings))).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pitch-conditioned multiband audio autoencoder"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Two-stage training on paired WAV/MIDI files");
  train->add_option("--config", train_args.config, "JSON config {model, train, data}");
  train->add_option("--data", train_args.data, "Directory of WAV files")->required();
  train->add_option("--midi", train_args.midi, "Directory of MIDI files (default: --data)");
  train->add_option("--out", train_args.out, "Run directory")->required();
  train->add_option("--stage1-steps", train_args.stage1_steps);
  train->add_option("--stage2-steps", train_args.stage2_steps);
  train->add_option("--eval-every", train_args.eval_every);
  train->add_option("--seed", train_args.seed);
  train->add_option("--batch-size", train_args.batch_size);
  train->add_option("--crop-length", train_args.crop_length);
  train->add_option("--beta", train_args.beta);
  train->add_option("--lr", train_args.lr);
  train->add_option("--conditioning", train_args.conditioning, "none, concat or aux_fc");

  ReconstructArgs rec_args;
  auto* rec = app.add_subcommand("reconstruct", "Resynthesise a WAV file through a checkpoint");
  rec->add_option("--ckpt", rec_args.ckpt)->required();
  rec->add_option("--audio", rec_args.audio)->required();
  rec->add_option("--midi", rec_args.midi);
  rec->add_option("--out", rec_args.out)->required();
  rec->add_flag("--float32", rec_args.float32, "Write 32-bit float samples");

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "Spectral and multiscale distances");
  ev->add_option("--ref", eval_args.ref);
  ev->add_option("--test", eval_args.test);
  ev->add_option("--ref-dir", eval_args.ref_dir);
  ev->add_option("--test-dir", eval_args.test_dir);
  ev->add_option("--spectral-window", eval_args.spectral_window);
  ev->add_flag("--toy", eval_args.toy, "Use the toy window set");
  ev->add_option("--out", eval_args.out, "Also write the report here");

  std::string anchor_in, anchor_out;
  auto* anchor = app.add_subcommand("anchor", "1 kHz high-pass MUSHRA anchor");
  anchor->add_option("input", anchor_in)->required();
  anchor->add_option("output", anchor_out)->required();

  std::string spec_in, spec_out;
  std::size_t spec_window = 1024;
  auto* spec = app.add_subcommand("spectrogram", "Export a dB spectrogram as CSV");
  spec->add_option("--audio", spec_in)->required();
  spec->add_option("--window", spec_window);
  spec->add_option("--out", spec_out)->required();

  std::string stimuli, ratings = "ratings.jsonl", host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve-mushra", "Serve the listening test over HTTP");
  serve->add_option("--stimuli", stimuli)->required();
  serve->add_option("--ratings", ratings);
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  std::string report_ratings;
  auto* report = app.add_subcommand("report", "Aggregate MUSHRA ratings");
  report->add_option("--ratings", report_ratings)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*train) return CmdTrain(train_args, out, err);
    if (*rec) return CmdReconstruct(rec_args, out, err);
    if (*ev) return CmdEval(eval_args, out);
    if (*anchor) return CmdAnchor(anchor_in, anchor_out, out);
    if (*spec) return CmdSpectrogram(spec_in, spec_window, spec_out, out);
    if (*serve) return CmdServe(stimuli, ratings, host, port, err);
    if (*report) return CmdReport(report_ratings, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace pitchrave::cli
