#include "impostor/model_io.hpp"

#include <zlib.h>

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "impostor/error.hpp"

namespace impostor {

namespace {

using detail::ByteReader;
using detail::ByteWriter;

enum class HeadTag : std::uint32_t { raw = 0, pq = 1, softmax = 2 };

std::uint32_t checked_u32(std::size_t v, const char* what) {
  require(v <= std::numeric_limits<std::uint32_t>::max(), std::string("model: ") + what + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

nlohmann::json metadata_json(const TrainingMetadata& m) {
  return nlohmann::json{{"scheme", to_string(m.scheme)},
                        {"seed", m.seed},
                        {"epochs", m.epochs},
                        {"lambda", m.lambda},
                        {"normalization_factor", m.normalization_factor},
                        {"final_loss", m.final_loss},
                        {"final_classification_term", m.final_classification_term},
                        {"final_attachment_term", m.final_attachment_term},
                        {"anomalies", m.anomalies}};
}

TrainingMetadata metadata_from_json(const nlohmann::json& j) {
  TrainingMetadata m;
  m.scheme = parse_scheme(j.at("scheme").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.epochs = j.at("epochs").get<std::size_t>();
  m.lambda = j.at("lambda").get<double>();
  m.normalization_factor = j.at("normalization_factor").get<double>();
  m.final_loss = j.at("final_loss").get<double>();
  m.final_classification_term = j.at("final_classification_term").get<double>();
  m.final_attachment_term = j.at("final_attachment_term").get<double>();
  m.anomalies = j.at("anomalies").get<std::size_t>();
  return m;
}

class Parser {
 public:
  explicit Parser(ByteReader& r) : r_(r) {}

  template <class T>
  T get(const char* what) {
    T v{};
    if (!r_.scalar(v)) throw DataError(DataErrorCode::truncated, std::string("model ends inside ") + what);
    return v;
  }

  double finite_f32(const char* what) {
    const float v = get<float>(what);
    if (!std::isfinite(v)) throw DataError(DataErrorCode::non_finite, std::string("non-finite value in ") + what);
    return v;
  }

  double finite_f64(const char* what) {
    const double v = get<double>(what);
    if (!std::isfinite(v)) throw DataError(DataErrorCode::non_finite, std::string("non-finite value in ") + what);
    return v;
  }

  void need(std::uint64_t bytes, const char* what) {
    if (r_.remaining() < bytes) throw DataError(DataErrorCode::truncated, std::string("model ends inside ") + what);
  }

 private:
  ByteReader& r_;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const TrainedModel& model) {
  model.validate();
  ByteWriter w;
  w.bytes(kModelMagic, 4);
  w.u32(kModelVersion);

  const Backbone& net = model.backbone;
  w.u32(checked_u32(net.input_dim(), "input_dim"));
  w.u32(checked_u32(net.layers().size(), "layer count"));
  w.f64(net.passthrough_scale());
  for (const auto& layer : net.layers()) {
    w.u32(checked_u32(layer.in_dim(), "layer width"));
    w.u32(checked_u32(layer.out_dim(), "layer width"));
    w.u32(static_cast<std::uint32_t>(layer.activation));
    for (double v : layer.weights.values()) w.f32(static_cast<float>(v));
    for (double v : layer.bias) w.f32(static_cast<float>(v));
  }

  w.u32(checked_u32(model.class_count, "class count"));
  if (const auto* raw = std::get_if<ImpostorSet>(&model.head)) {
    w.u32(static_cast<std::uint32_t>(HeadTag::raw));
    w.u32(checked_u32(raw->size(), "impostor count"));
    w.u32(checked_u32(raw->dim(), "impostor width"));
    for (std::size_t i = 0; i < raw->size(); ++i) {
      w.u32(raw->labels[i]);
      for (double v : raw->points.row(i)) w.f32(static_cast<float>(v));
    }
  } else if (const auto* pq = std::get_if<CompressedImpostors>(&model.head)) {
    const PqCodebook& cb = pq->codebook;
    w.u32(static_cast<std::uint32_t>(HeadTag::pq));
    w.u32(checked_u32(pq->size(), "impostor count"));
    w.u32(checked_u32(cb.dim(), "impostor width"));
    w.u32(checked_u32(cb.subspaces(), "subspace count"));
    w.u32(checked_u32(cb.centroids_per_subspace(), "centroid count"));
    for (std::size_t s = 0; s < cb.subspaces(); ++s) {
      for (double v : cb.centroids(s).values()) w.f64(v);
    }
    for (Label l : pq->labels) w.u32(l);
    const bool narrow = cb.centroids_per_subspace() <= 256;
    for (std::uint16_t c : pq->codes.values) {
      if (narrow) {
        w.u8(static_cast<std::uint8_t>(c));
      } else {
        w.u16(c);
      }
    }
  } else {
    w.u32(static_cast<std::uint32_t>(HeadTag::softmax));
  }

  w.f64(model.kernel.sigma());
  const std::string meta = metadata_json(model.meta).dump();
  w.u32(checked_u32(meta.size(), "metadata length"));
  w.bytes(meta.data(), meta.size());
  w.u32(crc_of(w.buffer().data(), w.buffer().size()));
  return w.buffer();
}

TrainedModel parse_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw DataError(DataErrorCode::truncated, "file shorter than the magic tag");
  if (std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    throw DataError(DataErrorCode::bad_magic, "not an IMPM model file");
  }
  if (bytes.size() < 12) throw DataError(DataErrorCode::truncated, "model header is incomplete");
  {
    ByteReader header(bytes.data() + 4, 4);
    std::uint32_t version = 0;
    header.scalar(version);
    if (version != kModelVersion) {
      throw DataError(DataErrorCode::version_mismatch, "unsupported model version " + std::to_string(version));
    }
  }
  const std::size_t body = bytes.size() - 4;
  {
    ByteReader trailer(bytes.data() + body, 4);
    std::uint32_t stored = 0;
    trailer.scalar(stored);
    if (stored != crc_of(bytes.data(), body)) {
      throw DataError(DataErrorCode::checksum_mismatch, "model checksum does not match its contents");
    }
  }

  ByteReader r(bytes.data() + 8, body - 8);
  Parser p(r);
  TrainedModel model;

  const auto input_dim = p.get<std::uint32_t>("backbone header");
  const auto layer_count = p.get<std::uint32_t>("backbone header");
  const double scale = p.finite_f64("backbone header");
  std::vector<DenseLayer> layers;
  for (std::uint32_t li = 0; li < layer_count; ++li) {
    const auto in = p.get<std::uint32_t>("layer header");
    const auto out = p.get<std::uint32_t>("layer header");
    const auto act = p.get<std::uint32_t>("layer header");
    if (act > 1) throw DataError(DataErrorCode::malformed, "unknown activation code " + std::to_string(act));
    p.need((static_cast<std::uint64_t>(in) * out + out) * 4, "layer parameters");
    DenseLayer layer{Matrix(out, in), std::vector<double>(out), static_cast<Activation>(act)};
    for (double& v : layer.weights.values()) v = p.finite_f32("layer weights");
    for (double& v : layer.bias) v = p.finite_f32("layer bias");
    layers.push_back(std::move(layer));
  }
  try {
    model.backbone = layers.empty() ? Backbone::passthrough(input_dim, scale) : Backbone(input_dim, std::move(layers));
  } catch (const ContractError& e) {
    throw DataError(DataErrorCode::malformed, e.what());
  }

  model.class_count = p.get<std::uint32_t>("class count");
  const auto tag = p.get<std::uint32_t>("head tag");
  auto read_label = [&](std::size_t i) {
    const auto l = p.get<std::uint32_t>("impostor labels");
    if (l >= model.class_count) {
      throw DataError(DataErrorCode::label_out_of_range, "impostor " + std::to_string(i) + " has label " +
                                                             std::to_string(l), static_cast<std::int64_t>(i));
    }
    return l;
  };
  if (tag == static_cast<std::uint32_t>(HeadTag::raw)) {
    const auto count = p.get<std::uint32_t>("impostor header");
    const auto dim = p.get<std::uint32_t>("impostor header");
    p.need(static_cast<std::uint64_t>(count) * (4ull + 4ull * dim), "impostors");
    ImpostorSet set{Matrix(count, dim), std::vector<Label>(count), model.class_count, false};
    for (std::uint32_t i = 0; i < count; ++i) {
      set.labels[i] = read_label(i);
      for (double& v : set.points.row(i)) v = p.finite_f32("impostors");
    }
    model.head = std::move(set);
  } else if (tag == static_cast<std::uint32_t>(HeadTag::pq)) {
    const auto count = p.get<std::uint32_t>("codebook header");
    const auto dim = p.get<std::uint32_t>("codebook header");
    const auto m = p.get<std::uint32_t>("codebook header");
    const auto k = p.get<std::uint32_t>("codebook header");
    if (m == 0 || dim % m != 0 || k == 0 || k > 65536) {
      throw DataError(DataErrorCode::malformed, "invalid codebook shape");
    }
    p.need(static_cast<std::uint64_t>(k) * dim * 8, "codebook");
    std::vector<Matrix> centroids;
    for (std::uint32_t s = 0; s < m; ++s) {
      Matrix c(k, dim / m);
      for (double& v : c.values()) v = p.finite_f64("codebook");
      centroids.push_back(std::move(c));
    }
    CompressedImpostors pq;
    pq.codebook = PqCodebook(dim, m, k, std::move(centroids));
    pq.class_count = model.class_count;
    p.need(static_cast<std::uint64_t>(count) * 4, "impostor labels");
    for (std::uint32_t i = 0; i < count; ++i) pq.labels.push_back(read_label(i));
    pq.codes = PqCodes{count, m, std::vector<std::uint16_t>(static_cast<std::size_t>(count) * m)};
    const bool narrow = k <= 256;
    p.need(static_cast<std::uint64_t>(count) * m * (narrow ? 1 : 2), "codes");
    for (auto& c : pq.codes.values) {
      c = narrow ? p.get<std::uint8_t>("codes") : p.get<std::uint16_t>("codes");
      if (c >= k) throw DataError(DataErrorCode::malformed, "code out of range");
    }
    model.head = std::move(pq);
  } else if (tag == static_cast<std::uint32_t>(HeadTag::softmax)) {
    model.head = SoftmaxHead{};
  } else {
    throw DataError(DataErrorCode::malformed, "unknown head tag " + std::to_string(tag));
  }

  const double sigma = p.finite_f64("sigma");
  if (!(sigma > 0.0)) throw DataError(DataErrorCode::malformed, "sigma must be positive");
  model.kernel = KernelParams(sigma);

  const auto meta_len = p.get<std::uint32_t>("metadata length");
  p.need(meta_len, "metadata");
  std::string meta(meta_len, '\0');
  r.bytes(meta.data(), meta_len);
  try {
    model.meta = metadata_from_json(nlohmann::json::parse(meta));
  } catch (const std::exception& e) {
    throw DataError(DataErrorCode::malformed, std::string("metadata: ") + e.what());
  }
  if (r.remaining() != 0) throw DataError(DataErrorCode::malformed, "trailing bytes before the checksum");
  if (auto* raw = std::get_if<ImpostorSet>(&model.head)) raw->frozen = model.meta.scheme == Scheme::fixed;

  try {
    model.validate();
  } catch (const ContractError& e) {
    throw DataError(DataErrorCode::malformed, e.what());
  }
  return model;
}

void write_model(const std::string& path, const TrainedModel& model) {
  detail::write_file_bytes(path, serialize_model(model));
}

TrainedModel read_model(const std::string& path) { return parse_model(detail::read_file_bytes(path)); }

TrainedModel round_to_storage(const TrainedModel& model) {
  TrainedModel out = model;
  auto round = [](std::span<double> values) {
    for (double& v : values) v = static_cast<float>(v);
  };
  std::vector<DenseLayer> layers = model.backbone.layers();
  for (auto& layer : layers) {
    round(layer.weights.values());
    round(layer.bias);
  }
  out.backbone = layers.empty() ? model.backbone : Backbone(model.backbone.input_dim(), std::move(layers));
  if (auto* raw = std::get_if<ImpostorSet>(&out.head)) round(raw->points.values());
  return out;
}

}  // namespace impostor
