#include "bbsteal/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace bbsteal {

namespace {

void write_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), s.size());
}

std::string read_string(std::istream& in) {
  const uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  return s;
}

void write_floats(std::ostream& out, const std::vector<float>& v) {
  write_u32(out, static_cast<uint32_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
}

std::vector<float> read_floats(std::istream& in) {
  const uint32_t len = read_u32(in);
  std::vector<float> v(len);
  in.read(reinterpret_cast<char*>(v.data()), len * sizeof(float));
  return v;
}

constexpr char kModelMagic[8] = {'B', 'B', 'S', 'C', '0', '0', '0', '1'};
constexpr char kStateMagic[8] = {'B', 'B', 'S', 'A', '0', '0', '0', '1'};

void write_sample(std::ostream& out, const Sample& s) {
  write_string(out, s.image.id);
  write_string(out, provenance_name(s.provenance));
  write_u32(out, static_cast<uint32_t>(s.image.data.c));
  write_u32(out, static_cast<uint32_t>(s.image.data.h));
  write_u32(out, static_cast<uint32_t>(s.image.data.w));
  write_floats(out, s.image.data.v);
  if (const auto* h = std::get_if<HardLabel>(&s.label)) {
    write_string(out, "hard");
    write_u32(out, static_cast<uint32_t>(h->class_index));
    write_u32(out, static_cast<uint32_t>(h->num_classes()));
  } else if (const auto* p = std::get_if<ProbVector>(&s.label)) {
    write_string(out, "prob");
    write_floats(out, p->probs);
  } else {
    write_string(out, "none");
  }
}

Sample read_sample(std::istream& in) {
  Sample s;
  s.image.id = read_string(in);
  s.provenance = provenance_from_name(read_string(in));
  const int c = static_cast<int>(read_u32(in));
  const int h = static_cast<int>(read_u32(in));
  const int w = static_cast<int>(read_u32(in));
  Tensor3 t(c, h, w);
  t.v = read_floats(in);
  if (t.v.size() != static_cast<size_t>(c) * h * w) throw std::runtime_error("corrupt sample");
  s.image.data = std::move(t);
  const std::string kind = read_string(in);
  if (kind == "hard") {
    const int cls = static_cast<int>(read_u32(in));
    const int nc = static_cast<int>(read_u32(in));
    s.label = hard_label_from_class(cls, nc);
  } else if (kind == "prob") {
    ProbVector p;
    p.probs = read_floats(in);
    s.label = std::move(p);
  } else if (kind != "none") {
    throw std::runtime_error("corrupt sample label kind: " + kind);
  }
  return s;
}

void write_sampleset(std::ostream& out, const SampleSet& set) {
  write_u32(out, static_cast<uint32_t>(set.size()));
  for (const Sample& s : set.items()) write_sample(out, s);
}

SampleSet read_sampleset(std::istream& in) {
  SampleSet set;
  const uint32_t n = read_u32(in);
  for (uint32_t i = 0; i < n; ++i) set.add(read_sample(in));
  return set;
}

void write_model(std::ostream& out, const Classifier& model) {
  nlohmann::json meta;
  meta["arch"] = model.arch();
  meta["classes"] = model.num_classes();
  meta["in_c"] = model.input_dims().c;
  meta["in_h"] = model.input_dims().h;
  meta["in_w"] = model.input_dims().w;
  meta["seed"] = model.init_seed();
  write_string(out, meta.dump());
  const auto& params = model.net().params;
  write_u32(out, static_cast<uint32_t>(params.size()));
  for (const Param& p : params) {
    write_string(out, p.name);
    write_u32(out, static_cast<uint32_t>(p.shape.size()));
    for (int d : p.shape) write_u32(out, static_cast<uint32_t>(d));
    write_floats(out, p.v);
  }
}

Classifier read_model(std::istream& in) {
  nlohmann::json meta = nlohmann::json::parse(read_string(in));
  Classifier model(meta.at("arch").get<std::string>(),
                   Dims{meta.at("in_c").get<int>(), meta.at("in_h").get<int>(),
                        meta.at("in_w").get<int>()},
                   meta.at("classes").get<int>(), meta.at("seed").get<uint64_t>());
  const uint32_t n = read_u32(in);
  auto& params = model.net().params;
  if (n != params.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  for (uint32_t i = 0; i < n; ++i) {
    const std::string name = read_string(in);
    if (name != params[i].name) throw std::runtime_error("checkpoint: unexpected tensor " + name);
    const uint32_t ndim = read_u32(in);
    std::vector<int> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<int>(read_u32(in));
    if (shape != params[i].shape) throw std::runtime_error("checkpoint: shape mismatch for " + name);
    params[i].v = read_floats(in);
    if (params[i].v.size() != static_cast<size_t>(params[i].size())) {
      throw std::runtime_error("checkpoint: truncated tensor " + name);
    }
  }
  return model;
}

}  // namespace

void save_classifier(const std::string& path, const Classifier& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_classifier: cannot write " + path);
  out.write(kModelMagic, 8);
  write_model(out, model);
}

Classifier load_classifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_classifier: cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kModelMagic, 8) != 0) {
    throw std::runtime_error("load_classifier: bad magic in " + path);
  }
  return read_model(in);
}

void save_attack_state(const std::string& path, const AttackState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_attack_state: cannot write " + path);
  out.write(kStateMagic, 8);
  write_u32(out, static_cast<uint32_t>(state.next_iteration));
  write_sampleset(out, state.transfer_set);
  write_sampleset(out, state.erased_set);
  write_u32(out, static_cast<uint32_t>(state.trace.size()));
  for (const TracePoint& tp : state.trace) {
    nlohmann::json j;
    j["iteration"] = tp.iteration;
    j["q"] = tp.q;
    j["agreement"] = tp.agreement;
    j["accuracy"] = tp.accuracy;
    j["dt"] = tp.dt_size;
    j["de"] = tp.de_size;
    j["dp"] = tp.dp_size;
    write_string(out, j.dump());
  }
  write_u32(out, state.has_substitute ? 1 : 0);
  if (state.has_substitute) write_model(out, state.substitute);
}

AttackState load_attack_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_attack_state: cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kStateMagic, 8) != 0) {
    throw std::runtime_error("load_attack_state: bad magic in " + path);
  }
  AttackState state;
  state.next_iteration = static_cast<int>(read_u32(in));
  state.transfer_set = read_sampleset(in);
  state.erased_set = read_sampleset(in);
  const uint32_t ntrace = read_u32(in);
  for (uint32_t i = 0; i < ntrace; ++i) {
    nlohmann::json j = nlohmann::json::parse(read_string(in));
    TracePoint tp;
    tp.iteration = j.at("iteration").get<int>();
    tp.q = j.at("q").get<uint64_t>();
    tp.agreement = j.at("agreement").get<double>();
    tp.accuracy = j.at("accuracy").get<double>();
    tp.dt_size = j.at("dt").get<size_t>();
    tp.de_size = j.at("de").get<size_t>();
    tp.dp_size = j.at("dp").get<size_t>();
    state.trace.push_back(tp);
  }
  state.has_substitute = read_u32(in) == 1;
  if (state.has_substitute) state.substitute = read_model(in);
  return state;
}

}  // namespace bbsteal
