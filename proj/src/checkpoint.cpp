#include "mpssl/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mpssl/common.hpp"

namespace mpssl {

namespace {

std::string hexd(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hexd(const std::string& s) {
  return std::strtod(s.c_str(), nullptr);
}

}  // namespace

const ad::Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return m;
  throw RunError("checkpoint: missing tensor '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return true;
  return false;
}

std::string Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw RunError("checkpoint: missing meta key '" + key + "'");
}

long Checkpoint::meta_long(const std::string& key) const {
  return std::stol(meta_value(key));
}

double Checkpoint::meta_double(const std::string& key) const {
  return parse_hexd(meta_value(key));
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path);
  if (!out) throw RunError("checkpoint: cannot write '" + path + "'");
  out << "mpssl-checkpoint v" << ck.schema_version << "\n";
  out << "kind " << ck.kind << "\n";
  out << "seed " << ck.seed << "\n";
  out << "config_hash " << (ck.config_hash.empty() ? "-" : ck.config_hash) << "\n";
  out << "epoch " << ck.epoch << "\n";
  for (const auto& [k, v] : ck.meta) out << "meta " << k << " " << v << "\n";
  for (const auto& [name, m] : ck.tensors) {
    out << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        if (j) out << " ";
        out << hexd(m(i, j));
      }
      out << "\n";
    }
  }
  out << "end\n";
  if (!out) throw RunError("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RunError("checkpoint: cannot read '" + path + "'");
  Checkpoint ck;
  std::string line;
  if (!std::getline(in, line) || line.rfind("mpssl-checkpoint v", 0) != 0)
    throw RunError("checkpoint: bad header in '" + path + "'");
  ck.schema_version = std::stoi(line.substr(std::strlen("mpssl-checkpoint v")));
  if (ck.schema_version != 1)
    throw RunError("checkpoint: unsupported schema version in '" + path + "'");

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "end") return ck;
    if (tag == "kind") {
      ls >> ck.kind;
    } else if (tag == "seed") {
      ls >> ck.seed;
    } else if (tag == "config_hash") {
      std::string h;
      ls >> h;
      ck.config_hash = h == "-" ? "" : h;
    } else if (tag == "epoch") {
      ls >> ck.epoch;
    } else if (tag == "meta") {
      std::string k, v;
      ls >> k >> v;
      ck.meta.emplace_back(k, v);
    } else if (tag == "tensor") {
      std::string name;
      int rows = 0, cols = 0;
      ls >> name >> rows >> cols;
      ad::Matrix m(rows, cols);
      for (int i = 0; i < rows; ++i) {
        if (!std::getline(in, line))
          throw RunError("checkpoint: truncated tensor '" + name + "' in '" +
                         path + "'");
        std::istringstream row(line);
        std::string cell;
        for (int j = 0; j < cols; ++j) {
          if (!(row >> cell))
            throw RunError("checkpoint: short row in tensor '" + name + "'");
          m(i, j) = parse_hexd(cell);
        }
      }
      ck.tensors.emplace_back(name, std::move(m));
    } else {
      throw RunError("checkpoint: unknown record '" + tag + "' in '" + path + "'");
    }
  }
  throw RunError("checkpoint: missing end marker in '" + path + "'");
}

// ---------------------------------------------------------------------------

void save_run_checkpoint(const std::string& path, const ClassifierParams& theta,
                         const MapperParams& phi, const ConverterParams& xi,
                         const SgdMomentum& sgd, const Adam& outer_opt,
                         int epoch, std::uint64_t seed,
                         std::uint64_t config_hash) {
  Checkpoint ck;
  ck.kind = "run";
  ck.seed = seed;
  ck.config_hash = to_hex(config_hash);
  ck.epoch = epoch;
  ck.meta.emplace_back("input_dim", std::to_string(theta.cfg.input_dim));
  ck.meta.emplace_back("hidden1", std::to_string(theta.cfg.hidden1));
  ck.meta.emplace_back("hidden2", std::to_string(theta.cfg.hidden2));
  ck.meta.emplace_back("num_classes", std::to_string(theta.cfg.num_classes));
  ck.meta.emplace_back("leak", hexd(theta.cfg.leak));
  ck.meta.emplace_back("converter_tau", hexd(xi.cfg.tau));
  ck.meta.emplace_back("converter_mode",
                       std::to_string(static_cast<int>(xi.cfg.mode)));
  ck.meta.emplace_back("adam_steps", std::to_string(outer_opt.step_count()));

  const char* tnames[] = {"theta.w1", "theta.b1", "theta.w2",
                          "theta.b2", "theta.wh", "theta.bh"};
  auto tvars = theta.all();
  for (std::size_t i = 0; i < tvars.size(); ++i)
    ck.tensors.emplace_back(tnames[i], tvars[i]->value);

  auto pvars = phi.params();
  for (std::size_t i = 0; i < pvars.size(); ++i)
    ck.tensors.emplace_back("phi." + std::to_string(i), pvars[i]->value);
  ck.tensors.emplace_back("xi.logits", xi.logits->value);

  auto sgd_state = sgd.state();
  for (std::size_t i = 0; i < sgd_state.size(); ++i)
    ck.tensors.emplace_back("sgd.v" + std::to_string(i), sgd_state[i]);
  auto adam_state = outer_opt.state();
  for (std::size_t i = 0; i < adam_state.size(); ++i)
    ck.tensors.emplace_back("adam.s" + std::to_string(i), adam_state[i]);

  save_checkpoint(path, ck);
}

ClassifierParams load_run_classifier(const Checkpoint& ck) {
  ClassifierConfig cfg;
  cfg.input_dim = static_cast<int>(ck.meta_long("input_dim"));
  cfg.hidden1 = static_cast<int>(ck.meta_long("hidden1"));
  cfg.hidden2 = static_cast<int>(ck.meta_long("hidden2"));
  cfg.num_classes = static_cast<int>(ck.meta_long("num_classes"));
  cfg.leak = ck.meta_double("leak");
  cfg.seed = ck.seed;
  auto p = make_classifier(cfg);
  p.set_values({ck.tensor("theta.w1"), ck.tensor("theta.b1"),
                ck.tensor("theta.w2"), ck.tensor("theta.b2"),
                ck.tensor("theta.wh"), ck.tensor("theta.bh")});
  return p;
}

// ---------------------------------------------------------------------------

void save_foundation_checkpoint(const std::string& path,
                                const FoundationGenerator& gen,
                                const FoundationClassifier* fclf) {
  const auto& dom = gen.domain;
  Checkpoint ck;
  ck.kind = "foundation";
  ck.seed = dom.spec.seed;
  ck.meta.emplace_back("num_classes", std::to_string(dom.spec.num_classes));
  ck.meta.emplace_back("data_dim", std::to_string(dom.spec.data_dim));
  ck.meta.emplace_back("latent_dim", std::to_string(dom.spec.latent_dim));
  ck.meta.emplace_back("separation", hexd(dom.spec.separation));
  ck.meta.emplace_back("sv_min", hexd(dom.spec.sv_min));
  ck.meta.emplace_back("sv_max", hexd(dom.spec.sv_max));
  ck.meta.emplace_back("backend",
                       gen.backend == GenBackend::analytic ? "analytic" : "learned");

  ad::Matrix means(dom.num_classes(), dom.data_dim());
  for (int c = 0; c < dom.num_classes(); ++c)
    means.row(c) = dom.means[static_cast<std::size_t>(c)].transpose();
  ck.tensors.emplace_back("means", means);
  for (int c = 0; c < dom.num_classes(); ++c)
    ck.tensors.emplace_back("scale." + std::to_string(c),
                            dom.scales[static_cast<std::size_t>(c)]);

  if (gen.learned) {
    const auto& lp = *gen.learned;
    ck.tensors.emplace_back("gen.emb", lp.emb);
    ck.tensors.emplace_back("gen.w_z", lp.w_z);
    ck.tensors.emplace_back("gen.w_g", lp.w_g);
    ck.tensors.emplace_back("gen.b_g", lp.b_g);
    ck.tensors.emplace_back("gen.w_o", lp.w_o);
    ck.tensors.emplace_back("gen.w_m", lp.w_m);
    ck.tensors.emplace_back("gen.b_m", lp.b_m);
  }
  if (fclf) {
    ck.meta.emplace_back("fclf_holdout_acc", hexd(fclf->holdout_accuracy));
    ck.meta.emplace_back("fclf_leak", hexd(fclf->leak));
    ck.tensors.emplace_back("fclf.w1", fclf->w1);
    ck.tensors.emplace_back("fclf.b1", fclf->b1);
    ck.tensors.emplace_back("fclf.w2", fclf->w2);
    ck.tensors.emplace_back("fclf.b2", fclf->b2);
  }
  save_checkpoint(path, ck);
}

FoundationBundle load_foundation_checkpoint(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.kind != "foundation")
    throw RunError("checkpoint: '" + path + "' is not a foundation checkpoint");

  FoundationDomain dom;
  dom.spec.num_classes = static_cast<int>(ck.meta_long("num_classes"));
  dom.spec.data_dim = static_cast<int>(ck.meta_long("data_dim"));
  dom.spec.latent_dim = static_cast<int>(ck.meta_long("latent_dim"));
  dom.spec.seed = ck.seed;
  dom.spec.separation = ck.meta_double("separation");
  dom.spec.sv_min = ck.meta_double("sv_min");
  dom.spec.sv_max = ck.meta_double("sv_max");
  const auto& means = ck.tensor("means");
  for (int c = 0; c < dom.spec.num_classes; ++c) {
    dom.means.push_back(means.row(c).transpose());
    dom.scales.push_back(ck.tensor("scale." + std::to_string(c)));
  }

  FoundationBundle out{make_analytic_generator(dom), std::nullopt};
  if (ck.meta_value("backend") == "learned") {
    LearnedGenParams lp;
    lp.emb = ck.tensor("gen.emb");
    lp.w_z = ck.tensor("gen.w_z");
    lp.w_g = ck.tensor("gen.w_g");
    lp.b_g = ck.tensor("gen.b_g").row(0);
    lp.w_o = ck.tensor("gen.w_o");
    lp.w_m = ck.tensor("gen.w_m");
    lp.b_m = ck.tensor("gen.b_m").row(0);
    out.generator.backend = GenBackend::learned;
    out.generator.learned = std::move(lp);
  }
  if (ck.has_tensor("fclf.w1")) {
    FoundationClassifier fc;
    fc.w1 = ck.tensor("fclf.w1");
    fc.b1 = ck.tensor("fclf.b1").row(0);
    fc.w2 = ck.tensor("fclf.w2");
    fc.b2 = ck.tensor("fclf.b2").row(0);
    fc.leak = ck.meta_double("fclf_leak");
    fc.holdout_accuracy = ck.meta_double("fclf_holdout_acc");
    out.classifier = std::move(fc);
  }
  return out;
}

}  // namespace mpssl
