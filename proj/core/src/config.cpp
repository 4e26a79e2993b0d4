#include "visreg/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "visreg/conv.hpp"

namespace visreg {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

double parse_double(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + v + "'");
  }
}

long parse_int(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(where + ": expected true/false, got '" + v + "'");
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = "line " + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = t.substr(1, t.size() - 2);
      if (section != "dataset" && section != "model" && section != "regularizers" &&
          section != "trainer" && section != "output") {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    const std::string field = "[" + section + "] " + key;

    if (section == "dataset") {
      if (key == "kind") cfg.dataset.kind = val;
      else if (key == "train_images") cfg.dataset.train_images = val;
      else if (key == "train_labels") cfg.dataset.train_labels = val;
      else if (key == "test_images") cfg.dataset.test_images = val;
      else if (key == "test_labels") cfg.dataset.test_labels = val;
      else if (key == "train_batches") {
        cfg.dataset.train_batches.clear();
        if (!val.empty()) {
          for (auto& p : split(val, ',')) cfg.dataset.train_batches.push_back(p);
        }
      }
      else if (key == "test_batch") cfg.dataset.test_batch = val;
      else if (key == "limit_train") cfg.dataset.limit_train = static_cast<int>(parse_int(val, field));
      else if (key == "limit_test") cfg.dataset.limit_test = static_cast<int>(parse_int(val, field));
      else if (key == "standardize") cfg.dataset.standardize = parse_bool(val, field);
      else throw ConfigError(field + ": unknown key");
    } else if (section == "model") {
      if (key == "architecture") cfg.model.architecture = val;
      else if (key == "activation") cfg.model.activation = val;
      else throw ConfigError(field + ": unknown key");
    } else if (section == "regularizers") {
      if (key == "mu1") cfg.reg.mu1 = parse_double(val, field);
      else if (key == "mu2") cfg.reg.mu2 = parse_double(val, field);
      else if (key == "lambda") cfg.reg.lambda = parse_double(val, field);
      else if (key == "kernel") cfg.reg.kernel = val;
      else throw ConfigError(field + ": unknown key");
    } else if (section == "trainer") {
      if (key == "epochs") cfg.trainer.epochs = static_cast<int>(parse_int(val, field));
      else if (key == "batch_size") cfg.trainer.batch_size = static_cast<int>(parse_int(val, field));
      else if (key == "learning_rate") cfg.trainer.learning_rate = parse_double(val, field);
      else if (key == "momentum") cfg.trainer.momentum = parse_double(val, field);
      else if (key == "nesterov") cfg.trainer.nesterov = parse_bool(val, field);
      else if (key == "schedule") cfg.trainer.schedule = val;
      else if (key == "schedule_steps") {
        cfg.trainer.schedule_steps.clear();
        if (!val.empty()) {
          for (auto& p : split(val, ',')) {
            const auto kv = split(p, ':');
            if (kv.size() != 2) throw ConfigError(field + ": expected epoch:rate pairs");
            cfg.trainer.schedule_steps.emplace_back(
                static_cast<int>(parse_int(kv[0], field)), parse_double(kv[1], field));
          }
        }
      }
      else if (key == "seed") cfg.trainer.seed = static_cast<uint64_t>(parse_int(val, field));
      else if (key == "checkpoint_every")
        cfg.trainer.checkpoint_every = static_cast<int>(parse_int(val, field));
      else throw ConfigError(field + ": unknown key");
    } else if (section == "output") {
      if (key == "dir") cfg.output.dir = val;
      else throw ConfigError(field + ": unknown key");
    } else {
      throw ConfigError(where + ": key outside any section");
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[dataset]\n";
  out << "kind = " << cfg.dataset.kind << "\n";
  out << "train_images = " << cfg.dataset.train_images << "\n";
  out << "train_labels = " << cfg.dataset.train_labels << "\n";
  out << "test_images = " << cfg.dataset.test_images << "\n";
  out << "test_labels = " << cfg.dataset.test_labels << "\n";
  out << "train_batches = " << join(cfg.dataset.train_batches, ",") << "\n";
  out << "test_batch = " << cfg.dataset.test_batch << "\n";
  out << "limit_train = " << cfg.dataset.limit_train << "\n";
  out << "limit_test = " << cfg.dataset.limit_test << "\n";
  out << "standardize = " << (cfg.dataset.standardize ? "true" : "false") << "\n";
  out << "\n[model]\n";
  out << "architecture = " << cfg.model.architecture << "\n";
  out << "activation = " << cfg.model.activation << "\n";
  out << "\n[regularizers]\n";
  out << "mu1 = " << fmt17(cfg.reg.mu1) << "\n";
  out << "mu2 = " << fmt17(cfg.reg.mu2) << "\n";
  out << "lambda = " << fmt17(cfg.reg.lambda) << "\n";
  out << "kernel = " << cfg.reg.kernel << "\n";
  out << "\n[trainer]\n";
  out << "epochs = " << cfg.trainer.epochs << "\n";
  out << "batch_size = " << cfg.trainer.batch_size << "\n";
  out << "learning_rate = " << fmt17(cfg.trainer.learning_rate) << "\n";
  out << "momentum = " << fmt17(cfg.trainer.momentum) << "\n";
  out << "nesterov = " << (cfg.trainer.nesterov ? "true" : "false") << "\n";
  out << "schedule = " << cfg.trainer.schedule << "\n";
  {
    std::vector<std::string> steps;
    for (const auto& [e, r] : cfg.trainer.schedule_steps) {
      steps.push_back(std::to_string(e) + ":" + fmt17(r));
    }
    out << "schedule_steps = " << join(steps, ",") << "\n";
  }
  out << "seed = " << cfg.trainer.seed << "\n";
  out << "checkpoint_every = " << cfg.trainer.checkpoint_every << "\n";
  out << "\n[output]\n";
  out << "dir = " << cfg.output.dir << "\n";
  return out.str();
}

namespace {

const char* kMnistFc =
    "input(784) -- fc(1000) -- dropout(0.3) -- fc(1000) -- dropout(0.3) -- fc(1000) "
    "-- output(10)";
const char* kMnistConv =
    "input(28x28) -- conv(3x3, 64) -- conv(3x3, 64) -- dropout(0.1) -- maxpool(3x3) "
    "-- dropout(0.1) -- fc(1024) -- output(10)";
const char* kCifarConvCanonical =
    "input(32x32) -- conv(5x5, 64) -- dropout(0.1) -- maxpool(3x3) -- conv(5x5, 64) "
    "-- dropout(0.1) -- maxpool(3x3) -- conv(5x5, 64) -- dropout(0.1) -- maxpool(3x3) "
    "-- dropout(0.1) -- fc(384) -- dropout(0.1) -- fc(192) -- dropout(0.1) -- output(10)";
// Same-padded convolutions keep the 32x32 pooling chain well-formed; a valid
// 5x5 convolution cannot be applied to the 2x2 map left before fc(384).
const char* kCifarConvExpansion =
    "input(32x32x3) -- conv(5x5, 64, same) -- dropout(0.1) -- maxpool(3x3) "
    "-- conv(5x5, 64, same) -- dropout(0.1) -- maxpool(3x3) -- conv(5x5, 64, same) "
    "-- dropout(0.1) -- maxpool(3x3) -- dropout(0.1) -- fc(384) -- dropout(0.1) "
    "-- fc(192) -- dropout(0.1) -- output(10)";

}  // namespace

bool is_preset(const std::string& name) {
  return name == "mnist_fc" || name == "mnist_conv" || name == "cifar_conv";
}

std::string preset_canonical(const std::string& name) {
  if (name == "mnist_fc") return kMnistFc;
  if (name == "mnist_conv") return kMnistConv;
  if (name == "cifar_conv") return kCifarConvCanonical;
  throw ConfigError("unknown architecture preset '" + name + "'");
}

std::string preset_expansion(const std::string& name) {
  if (name == "cifar_conv") return kCifarConvExpansion;
  return preset_canonical(name);
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh_fn;
  if (name == "none") return Activation::none;
  throw ConfigError("unknown activation '" + name + "'");
}

namespace {

/// "name(a, b, ...)" -> name + argument strings.
bool parse_call(const std::string& token, std::string& name, std::vector<std::string>& args) {
  const size_t open = token.find('(');
  if (open == std::string::npos || token.back() != ')') return false;
  name = trim(token.substr(0, open));
  const std::string inner = token.substr(open + 1, token.size() - open - 2);
  args.clear();
  if (!trim(inner).empty()) {
    for (auto& a : split(inner, ',')) args.push_back(a);
  }
  return true;
}

/// "HxW" or "HxWxC".
bool parse_dims(const std::string& s, std::vector<int>& dims) {
  dims.clear();
  for (auto& part : split(s, 'x')) {
    try {
      size_t pos = 0;
      const int v = std::stoi(part, &pos);
      if (pos != part.size() || v < 1) return false;
      dims.push_back(v);
    } catch (const std::exception&) {
      return false;
    }
  }
  return !dims.empty();
}

}  // namespace

ArchSpec parse_architecture(const std::string& text, Activation default_act) {
  const std::string inline_text = is_preset(trim(text)) ? preset_expansion(trim(text)) : text;

  ArchSpec arch;
  std::vector<std::string> tokens;
  {
    // Split on "--" so fc(1000) -- fc(1000) keeps each call intact.
    std::string cur;
    for (size_t i = 0; i < inline_text.size(); ++i) {
      if (inline_text[i] == '-' && i + 1 < inline_text.size() && inline_text[i + 1] == '-') {
        tokens.push_back(trim(cur));
        cur.clear();
        ++i;
      } else {
        cur += inline_text[i];
      }
    }
    tokens.push_back(trim(cur));
  }
  if (tokens.empty()) throw ConfigError("architecture: empty layer list");

  bool have_input = false;
  for (size_t ti = 0; ti < tokens.size(); ++ti) {
    const std::string& tok = tokens[ti];
    std::string name;
    std::vector<std::string> args;
    if (tok.empty() || !parse_call(tok, name, args)) {
      throw ConfigError("architecture: cannot parse token '" + tok + "'");
    }
    const std::string where = "architecture token '" + tok + "'";
    if (name == "input") {
      if (ti != 0 || args.size() != 1) throw ConfigError(where + ": input(...) must come first");
      std::vector<int> dims;
      if (!parse_dims(args[0], dims)) throw ConfigError(where + ": bad dimensions");
      if (dims.size() == 1) {
        arch.input_count = dims[0];
      } else if (dims.size() == 2) {
        arch.input_shape = Shape3{dims[0], dims[1], 1};
      } else if (dims.size() == 3) {
        arch.input_shape = Shape3{dims[0], dims[1], dims[2]};
      } else {
        throw ConfigError(where + ": expected N, HxW or HxWxC");
      }
      have_input = true;
    } else if (name == "fc") {
      if (args.size() != 1) throw ConfigError(where + ": fc takes one argument");
      arch.layers.push_back(
          LayerSpec::dense(static_cast<int>(parse_int(args[0], where)), default_act));
    } else if (name == "dropout") {
      if (args.size() != 1) throw ConfigError(where + ": dropout takes one argument");
      arch.layers.push_back(LayerSpec::dropout(parse_double(args[0], where)));
    } else if (name == "conv") {
      if (args.size() != 2 && args.size() != 3) {
        throw ConfigError(where + ": conv takes (SxS, C[, same])");
      }
      std::vector<int> dims;
      if (!parse_dims(args[0], dims) || dims.size() != 2 || dims[0] != dims[1]) {
        throw ConfigError(where + ": conv kernel must be SxS");
      }
      ConvPad pad = ConvPad::valid;
      if (args.size() == 3) {
        if (args[2] == "same") pad = ConvPad::same;
        else if (args[2] == "valid") pad = ConvPad::valid;
        else throw ConfigError(where + ": padding must be 'same' or 'valid'");
      }
      arch.layers.push_back(LayerSpec::conv(
          dims[0], static_cast<int>(parse_int(args[1], where)), default_act, pad));
    } else if (name == "maxpool") {
      if (args.size() != 1) throw ConfigError(where + ": maxpool takes one argument");
      std::vector<int> dims;
      if (!parse_dims(args[0], dims) || dims.size() != 2 || dims[0] != dims[1]) {
        throw ConfigError(where + ": maxpool window must be SxS");
      }
      arch.layers.push_back(LayerSpec::maxpool(dims[0]));
    } else if (name == "output") {
      if (args.size() != 1) throw ConfigError(where + ": output takes one argument");
      arch.layers.push_back(
          LayerSpec::softmax_output(static_cast<int>(parse_int(args[0], where))));
    } else {
      throw ConfigError(where + ": unknown layer kind '" + name + "'");
    }
  }
  if (!have_input) throw ConfigError("architecture: missing input(...) declaration");
  if (arch.layers.empty()) throw ConfigError("architecture: no layers after input");
  return arch;
}

RelKernel kernel_from_name(const std::string& name) {
  if (name == "laplacian") return laplacian3();
  throw ConfigError("unknown kernel '" + name + "' (supported: laplacian)");
}

Schedule schedule_from_config(const TrainerSection& t) {
  Schedule s;
  if (t.schedule == "constant") s.kind = Schedule::Kind::constant;
  else if (t.schedule == "mnist") s.kind = Schedule::Kind::mnist;
  else if (t.schedule == "cifar") s.kind = Schedule::Kind::cifar;
  else if (t.schedule == "custom") {
    s.kind = Schedule::Kind::custom;
    s.steps = t.schedule_steps;
    std::sort(s.steps.begin(), s.steps.end());
  } else {
    throw ConfigError("[trainer] schedule: unknown schedule '" + t.schedule + "'");
  }
  return s;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.dataset.kind == "mnist") {
    if (cfg.dataset.train_images.empty()) throw ConfigError("[dataset] train_images: missing path");
    if (cfg.dataset.train_labels.empty()) throw ConfigError("[dataset] train_labels: missing path");
    if (cfg.dataset.test_images.empty()) throw ConfigError("[dataset] test_images: missing path");
    if (cfg.dataset.test_labels.empty()) throw ConfigError("[dataset] test_labels: missing path");
  } else if (cfg.dataset.kind == "cifar10") {
    if (cfg.dataset.train_batches.empty()) throw ConfigError("[dataset] train_batches: missing paths");
    if (cfg.dataset.test_batch.empty()) throw ConfigError("[dataset] test_batch: missing path");
  } else {
    throw ConfigError("[dataset] kind: unknown dataset '" + cfg.dataset.kind + "'");
  }
  if (cfg.reg.mu1 < 0 || cfg.reg.mu2 < 0 || cfg.reg.lambda < 0) {
    throw ConfigError("[regularizers]: weights must be non-negative");
  }
  kernel_from_name(cfg.reg.kernel);
  if (cfg.trainer.epochs < 1) throw ConfigError("[trainer] epochs: must be >= 1");
  if (cfg.trainer.batch_size < 1) throw ConfigError("[trainer] batch_size: must be >= 1");
  if (cfg.trainer.momentum < 0 || cfg.trainer.momentum >= 1) {
    throw ConfigError("[trainer] momentum: must be in [0, 1)");
  }
  schedule_from_config(cfg.trainer);
  parse_architecture(cfg.model.architecture, parse_activation(cfg.model.activation));
  if (cfg.output.dir.empty()) throw ConfigError("[output] dir: missing");
}

Shape3 resolve_input_shape(const ArchSpec& arch, const Shape3* dataset_shape) {
  if (arch.input_count > 0) {
    if (!dataset_shape) {
      throw ConfigError("architecture: input(" + std::to_string(arch.input_count) +
                        ") needs a dataset to supply the 2D geometry; use input(HxW[xC])");
    }
    if (dataset_shape->count() != arch.input_count) {
      throw ConfigError("architecture: input(" + std::to_string(arch.input_count) +
                        ") does not match dataset sample size " +
                        std::to_string(dataset_shape->count()));
    }
    return *dataset_shape;
  }
  if (dataset_shape && !(*dataset_shape == arch.input_shape)) {
    throw ConfigError("architecture: declared input shape does not match the dataset");
  }
  return arch.input_shape;
}

NetworkModel build_model(const ExperimentConfig& cfg, const Shape3* dataset_shape) {
  const ArchSpec arch =
      parse_architecture(cfg.model.architecture, parse_activation(cfg.model.activation));
  const Shape3 input = resolve_input_shape(arch, dataset_shape);
  return NetworkModel(input, arch.layers, cfg.trainer.seed);
}

TrainConfig build_train_config(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.mu1 = cfg.reg.mu1;
  tc.mu2 = cfg.reg.mu2;
  tc.lambda = cfg.reg.lambda;
  tc.alpha0 = cfg.trainer.learning_rate;
  tc.momentum = cfg.trainer.momentum;
  tc.nesterov = cfg.trainer.nesterov;
  tc.schedule = schedule_from_config(cfg.trainer);
  tc.epochs = cfg.trainer.epochs;
  tc.batch_size = cfg.trainer.batch_size;
  tc.seed = cfg.trainer.seed;
  tc.checkpoint_every = cfg.trainer.checkpoint_every;
  tc.out_dir = cfg.output.dir;
  return tc;
}

std::string resolve_data_path(const std::string& path, const std::string& root) {
  if (root.empty() || path.empty() || path.front() == '/') return path;
  return root + "/" + path;
}

}  // namespace visreg
