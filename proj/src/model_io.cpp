#include "ccafuse/model_io.hpp"

#include <fstream>
#include <sstream>

namespace ccafuse {

Json matrix_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw IoError("model file: matrix size does not match its data");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)];
  return m;
}

namespace {

Json vec(const Vector& v) { return matrix_to_json(v); }
Vector vec_from(const Json& j) { return matrix_from_json(j).col(0); }
Json rowvec(const RowVector& v) { return matrix_to_json(v.transpose()); }
RowVector rowvec_from(const Json& j) { return matrix_from_json(j).col(0).transpose(); }

Json network_json(const Network& net) {
  Json layers = Json::array();
  for (const auto& l : net.layers()) {
    layers.push_back(Json{{"activation", std::string(to_string(l.activation))},
                          {"weights", matrix_to_json(l.weights)},
                          {"bias", vec(l.bias)}});
  }
  return layers;
}

Network network_from(const Json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& l : j) {
    DenseLayer d;
    d.activation = parse_activation(l.at("activation").get<std::string>());
    d.weights = matrix_from_json(l.at("weights"));
    d.bias = vec_from(l.at("bias"));
    layers.push_back(std::move(d));
  }
  return Network(std::move(layers));
}

Json scaler_json(const Scaler& s) {
  return Json{{"mode", to_string(s.mode)}, {"offset", rowvec(s.offset)}, {"scale", rowvec(s.scale)}};
}

Scaler scaler_from(const Json& j) {
  Scaler s;
  s.mode = parse_scale_mode(j.at("mode").get<std::string>());
  s.offset = rowvec_from(j.at("offset"));
  s.scale = rowvec_from(j.at("scale"));
  return s;
}

Json rbm_json(const Rbm& r) {
  return Json{{"weights", matrix_to_json(r.weights)}, {"visible_bias", vec(r.visible_bias)},
              {"hidden_bias", vec(r.hidden_bias)}};
}

Rbm rbm_from(const Json& j) {
  Rbm r;
  r.weights = matrix_from_json(j.at("weights"));
  r.visible_bias = vec_from(j.at("visible_bias"));
  r.hidden_bias = vec_from(j.at("hidden_bias"));
  return r;
}

Json cca_json(const CcaModel& m) {
  return Json{{"proj1", matrix_to_json(m.proj1)}, {"proj2", matrix_to_json(m.proj2)},
              {"correlations", vec(m.correlations)}, {"mean1", vec(m.mean1)},
              {"mean2", vec(m.mean2)}, {"reg", m.reg}};
}

CcaModel cca_from(const Json& j) {
  CcaModel m;
  m.proj1 = matrix_from_json(j.at("proj1"));
  m.proj2 = matrix_from_json(j.at("proj2"));
  m.correlations = vec_from(j.at("correlations"));
  m.mean1 = vec_from(j.at("mean1"));
  m.mean2 = vec_from(j.at("mean2"));
  m.reg = j.at("reg").get<double>();
  return m;
}

Json svm_json(const SvmModel& m) {
  return Json{{"weights", matrix_to_json(m.weights)}, {"bias", vec(m.bias)}, {"c", m.c},
              {"objective_curve", m.objective_curve}};
}

SvmModel svm_from(const Json& j) {
  SvmModel m;
  m.weights = matrix_from_json(j.at("weights"));
  m.bias = vec_from(j.at("bias"));
  m.c = j.at("c").get<double>();
  m.objective_curve = j.at("objective_curve").get<std::vector<double>>();
  return m;
}

}  // namespace

void save_pipeline(const Pipeline& p, const std::string& path) {
  Json j{{"version", kModelVersion},
         {"method", to_string(p.method)},
         {"alpha1", p.alpha1},
         {"scaler1", scaler_json(p.scaler1)},
         {"scaler2", scaler_json(p.scaler2)}};
  if (p.dcca) {
    const DccaModel& d = *p.dcca;
    j["dcca"] = Json{{"tower1", network_json(d.tower1)}, {"tower2", network_json(d.tower2)},
                     {"out_dim", d.out_dim},              {"alpha1", d.alpha1},
                     {"reg1", d.reg1},                    {"reg2", d.reg2},
                     {"training_curve", d.training_curve}, {"alignment", cca_json(d.alignment)}};
  }
  if (p.bdae) {
    const BdaeModel& b = *p.bdae;
    j["bdae"] = Json{{"rbm1", rbm_json(b.rbm1)},
                     {"rbm2", rbm_json(b.rbm2)},
                     {"joint", rbm_json(b.joint)},
                     {"encoder1", network_json(b.encoder1)},
                     {"encoder2", network_json(b.encoder2)},
                     {"shared_encoder", network_json(b.shared_encoder)},
                     {"shared_decoder", network_json(b.shared_decoder)},
                     {"decoder1", network_json(b.decoder1)},
                     {"decoder2", network_json(b.decoder2)},
                     {"pretrain_error", b.pretrain_error},
                     {"finetune_curve", b.finetune_curve}};
  }
  if (p.unit1) j["unit1"] = scaler_json(*p.unit1);
  if (p.unit2) j["unit2"] = scaler_json(*p.unit2);
  if (p.measure) {
    j["measure"] = Json{{"sources", p.measure->sources()}, {"values", p.measure->values()}};
  }
  Json svms = Json::array();
  for (const auto& s : p.classifiers) svms.push_back(svm_json(s));
  j["classifiers"] = svms;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file '" + path + "'");
  out << kModelMagic << "\n" << j.dump() << "\n";
  if (!out) throw IoError("write failed for model file '" + path + "'");
}

Pipeline load_pipeline(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  std::string magic;
  std::getline(in, magic);
  if (magic != kModelMagic) throw IoError("'" + path + "' is not a model file (bad header)");
  Json j;
  try {
    j = Json::parse(in);
    if (j.at("version").get<int>() != kModelVersion) {
      throw IoError("model file '" + path + "' has unsupported version " + j.at("version").dump());
    }
    Pipeline p;
    p.method = parse_method(j.at("method").get<std::string>());
    p.alpha1 = j.at("alpha1").get<double>();
    p.scaler1 = scaler_from(j.at("scaler1"));
    p.scaler2 = scaler_from(j.at("scaler2"));
    if (j.contains("dcca")) {
      const Json& d = j.at("dcca");
      DccaModel m;
      m.tower1 = network_from(d.at("tower1"));
      m.tower2 = network_from(d.at("tower2"));
      m.out_dim = d.at("out_dim").get<Eigen::Index>();
      m.alpha1 = d.at("alpha1").get<double>();
      m.reg1 = d.at("reg1").get<double>();
      m.reg2 = d.at("reg2").get<double>();
      m.training_curve = d.at("training_curve").get<std::vector<double>>();
      m.alignment = cca_from(d.at("alignment"));
      p.dcca = std::move(m);
    }
    if (j.contains("bdae")) {
      const Json& b = j.at("bdae");
      BdaeModel m;
      m.rbm1 = rbm_from(b.at("rbm1"));
      m.rbm2 = rbm_from(b.at("rbm2"));
      m.joint = rbm_from(b.at("joint"));
      m.encoder1 = network_from(b.at("encoder1"));
      m.encoder2 = network_from(b.at("encoder2"));
      m.shared_encoder = network_from(b.at("shared_encoder"));
      m.shared_decoder = network_from(b.at("shared_decoder"));
      m.decoder1 = network_from(b.at("decoder1"));
      m.decoder2 = network_from(b.at("decoder2"));
      m.pretrain_error = b.at("pretrain_error").get<double>();
      m.finetune_curve = b.at("finetune_curve").get<std::vector<double>>();
      p.bdae = std::move(m);
    }
    if (j.contains("unit1")) p.unit1 = scaler_from(j.at("unit1"));
    if (j.contains("unit2")) p.unit2 = scaler_from(j.at("unit2"));
    if (j.contains("measure")) {
      const Json& m = j.at("measure");
      const int n = m.at("sources").get<int>();
      const auto values = m.at("values").get<std::vector<double>>();
      FuzzyMeasure mu(n);
      if (values.size() != mu.values().size()) throw IoError("model file: fuzzy measure has the wrong size");
      for (std::uint32_t s = 0; s < values.size(); ++s) mu.set(s, values[s]);
      mu.validate();
      p.measure = mu;
    }
    for (const auto& s : j.at("classifiers")) p.classifiers.push_back(svm_from(s));
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("model file '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace ccafuse
