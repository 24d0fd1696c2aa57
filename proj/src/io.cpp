#include "detcal/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include <unistd.h>

#include "detcal/error.hpp"

namespace detcal::io {
namespace {

class Reader {
 public:
  explicit Reader(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    throw ParseError(source_ + ": " + (path.empty() ? "<root>" : path) + ": " + message);
  }

  Json parse(std::string_view text) const {
    try {
      return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
      throw ParseError(source_ + ": syntax error at byte " + std::to_string(e.byte) +
                       ": " + e.what());
    }
  }

  const Json& field(const Json& obj, const char* key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) {
      fail(path.empty() ? std::string(key) : path + "." + key, "missing required key");
    }
    return *it;
  }

  const Json& array(const Json& j, const std::string& path) const {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
  }

  double number(const Json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
  }

  std::int64_t integer(const Json& j, const std::string& path) const {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) {
      const double v = j.get<double>();
      if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9.0e15) {
        return static_cast<std::int64_t>(v);
      }
    }
    fail(path, "expected an integer");
  }

  int int32(const Json& j, const std::string& path) const {
    const std::int64_t v = integer(j, path);
    if (v < INT32_MIN || v > INT32_MAX) fail(path, "integer out of range");
    return static_cast<int>(v);
  }

  double unit(const Json& j, const std::string& path) const {
    const double v = number(j, path);
    if (v < 0.0 || v > 1.0) fail(path, "value " + format_number(v) + " outside [0, 1]");
    return v;
  }

  BBox bbox(const Json& j, const std::string& path) const {
    if (!j.is_array() || j.size() != 4) fail(path, "expected [x, y, width, height]");
    const double x = number(j[0], path + "[0]");
    const double y = number(j[1], path + "[1]");
    const double w = number(j[2], path + "[2]");
    const double h = number(j[3], path + "[3]");
    if (w < 0.0 || h < 0.0) fail(path, "negative width or height");
    return BBox::from_xywh(x, y, w, h);
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

std::string key(const std::string& base, const char* name) {
  return base.empty() ? std::string(name) : base + "." + name;
}

std::string at(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

Json bbox_json(const BBox& box) {
  const auto xywh = box.to_xywh();
  return Json::array({xywh[0], xywh[1], xywh[2], xywh[3]});
}

// Little-endian helpers for the binary batch format.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class ByteCursor {
 public:
  ByteCursor(std::string_view bytes, std::string_view source)
      : bytes_(bytes), source_(source) {}

  void need(std::size_t n, const char* what) const { need(n, 1, what); }

  // Overflow-safe check for `units` items of `unit_size` bytes each.
  void need(std::size_t units, std::size_t unit_size, const char* what) const {
    if (units > remaining() / unit_size) {
      throw ParseError(std::string(source_) + ": truncated binary batch at byte " +
                       std::to_string(pos_ + kTcdMagic.size()) + " while reading " + what);
    }
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f32(const char* what) {
    return static_cast<double>(std::bit_cast<float>(u32(what)));
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

// L*R*K without wrap-around; nullopt when it does not fit.
std::optional<std::size_t> checked_cells(std::uint32_t l, std::uint32_t r, std::uint32_t k) {
  std::size_t lr = 0;
  std::size_t lrk = 0;
  if (__builtin_mul_overflow(static_cast<std::size_t>(l), static_cast<std::size_t>(r), &lr) ||
      __builtin_mul_overflow(lr, static_cast<std::size_t>(k), &lrk)) {
    return std::nullopt;
  }
  return lrk;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(tmp.string() + ": cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(tmp.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(path.string() + ": cannot replace file: " + ec.message());
  }
}

// -- COCO ------------------------------------------------------------------

std::vector<Detection> parse_coco_detections(std::string_view text,
                                             std::string_view source) {
  const Reader r(source);
  const Json root = r.parse(text);
  r.array(root, "");
  std::vector<Detection> out;
  out.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string p = at("", i);
    const Json& item = root[i];
    Detection d;
    d.image_id = r.integer(r.field(item, "image_id", p), key(p, "image_id"));
    d.class_id = r.int32(r.field(item, "category_id", p), key(p, "category_id"));
    d.box = r.bbox(r.field(item, "bbox", p), key(p, "bbox"));
    d.score = r.unit(r.field(item, "score", p), key(p, "score"));
    out.push_back(d);
  }
  return out;
}

std::vector<Detection> load_coco_detections(const std::filesystem::path& path) {
  return parse_coco_detections(read_file(path), path.string());
}

AnnotationSet parse_coco_annotations(std::string_view text, std::string_view source) {
  const Reader r(source);
  const Json root = r.parse(text);
  AnnotationSet out;

  const Json& images = r.array(r.field(root, "images", ""), "images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string p = at("images", i);
    ImageInfo info;
    info.id = r.integer(r.field(images[i], "id", p), key(p, "id"));
    info.width = r.number(r.field(images[i], "width", p), key(p, "width"));
    info.height = r.number(r.field(images[i], "height", p), key(p, "height"));
    if (info.width < 0.0 || info.height < 0.0) r.fail(p, "negative image size");
    if (!out.images.emplace(info.id, info).second) r.fail(key(p, "id"), "duplicate image id");
  }

  const Json& categories = r.array(r.field(root, "categories", ""), "categories");
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string p = at("categories", i);
    const int id = r.int32(r.field(categories[i], "id", p), key(p, "id"));
    std::string name;
    if (auto it = categories[i].find("name"); it != categories[i].end() && it->is_string()) {
      name = it->get<std::string>();
    }
    if (!out.categories.emplace(id, name).second) r.fail(key(p, "id"), "duplicate category id");
  }

  const Json& anns = r.array(r.field(root, "annotations", ""), "annotations");
  out.ground_truth.reserve(anns.size());
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string p = at("annotations", i);
    GroundTruthBox g;
    g.image_id = r.integer(r.field(anns[i], "image_id", p), key(p, "image_id"));
    g.class_id = r.int32(r.field(anns[i], "category_id", p), key(p, "category_id"));
    g.box = r.bbox(r.field(anns[i], "bbox", p), key(p, "bbox"));
    if (!out.images.contains(g.image_id)) {
      r.fail(key(p, "image_id"), "unknown image id " + std::to_string(g.image_id));
    }
    if (!out.categories.contains(g.class_id)) {
      r.fail(key(p, "category_id"), "unknown category id " + std::to_string(g.class_id));
    }
    out.ground_truth.push_back(g);
  }
  return out;
}

AnnotationSet load_coco_annotations(const std::filesystem::path& path) {
  return parse_coco_annotations(read_file(path), path.string());
}

DatasetBundle load_bundle(const std::filesystem::path& detections,
                          const std::filesystem::path& annotations) {
  AnnotationSet anns = load_coco_annotations(annotations);
  DatasetBundle bundle;
  bundle.detections = load_coco_detections(detections);
  const Reader r(detections.string());
  for (std::size_t i = 0; i < bundle.detections.size(); ++i) {
    const Detection& d = bundle.detections[i];
    if (!anns.images.contains(d.image_id)) {
      r.fail(key(at("", i), "image_id"), "unknown image id " + std::to_string(d.image_id));
    }
    if (!anns.categories.contains(d.class_id)) {
      r.fail(key(at("", i), "category_id"),
             "unknown category id " + std::to_string(d.class_id));
    }
  }
  bundle.ground_truth = std::move(anns.ground_truth);
  bundle.categories = std::move(anns.categories);
  bundle.images = std::move(anns.images);
  return bundle;
}

Json coco_detections_json(std::span<const Detection> detections) {
  Json out = Json::array();
  for (const Detection& d : detections) {
    out.push_back({{"image_id", d.image_id},
                   {"category_id", d.class_id},
                   {"bbox", bbox_json(d.box)},
                   {"score", d.score}});
  }
  return out;
}

Json coco_annotations_json(const DatasetBundle& bundle) {
  Json images = Json::array();
  for (const auto& [id, info] : bundle.images) {
    images.push_back({{"id", id}, {"width", info.width}, {"height", info.height}});
  }
  Json anns = Json::array();
  for (std::size_t i = 0; i < bundle.ground_truth.size(); ++i) {
    const GroundTruthBox& g = bundle.ground_truth[i];
    anns.push_back({{"id", i + 1},
                    {"image_id", g.image_id},
                    {"category_id", g.class_id},
                    {"bbox", bbox_json(g.box)}});
  }
  Json cats = Json::array();
  for (const auto& [id, name] : bundle.categories) {
    cats.push_back({{"id", id}, {"name", name}});
  }
  return Json{{"images", images}, {"annotations", anns}, {"categories", cats}};
}

void write_coco_detections(const std::filesystem::path& path,
                           std::span<const Detection> detections) {
  write_file_atomic(path, coco_detections_json(detections).dump() + "\n");
}

void write_coco_annotations(const std::filesystem::path& path,
                            const DatasetBundle& bundle) {
  write_file_atomic(path, coco_annotations_json(bundle).dump() + "\n");
}

// -- TCD batches -------------------------------------------------------------

Json tcd_batch_json(const TcdBatch& batch) {
  Json positives = Json::array();
  for (const ImagePositives& p : batch.positives) {
    Json list = Json::array();
    for (std::size_t i = 0; i < p.size(); ++i) {
      list.push_back({{"iou", p.iou[i]}, {"shat", p.shat[i]}});
    }
    positives.push_back(std::move(list));
  }
  Json q = Json::array();
  for (std::uint8_t v : batch.targets) q.push_back(static_cast<int>(v));
  return Json{{"L", batch.images},     {"R", batch.locations},
              {"K", batch.classes},    {"s", batch.confidences},
              {"q", std::move(q)},     {"positives", std::move(positives)}};
}

TcdBatch parse_tcd_batch_json(std::string_view text, std::string_view source) {
  const Reader r(source);
  const Json root = r.parse(text);
  auto dim = [&](const char* name) {
    const std::int64_t v = r.integer(r.field(root, name, ""), name);
    if (v < 0 || v > UINT32_MAX) r.fail(name, "dimension out of range");
    return static_cast<std::uint32_t>(v);
  };
  TcdBatch batch;
  batch.images = dim("L");
  batch.locations = dim("R");
  batch.classes = dim("K");
  if (!checked_cells(batch.images, batch.locations, batch.classes)) {
    r.fail("", "L*R*K overflows");
  }
  const std::size_t n = batch.cells();

  const Json& s = r.array(r.field(root, "s", ""), "s");
  const Json& q = r.array(r.field(root, "q", ""), "q");
  if (s.size() != n) r.fail("s", "expected " + std::to_string(n) + " values (L*R*K)");
  if (q.size() != n) r.fail("q", "expected " + std::to_string(n) + " values (L*R*K)");
  batch.confidences.reserve(n);
  batch.targets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    batch.confidences.push_back(r.unit(s[i], at("s", i)));
    const std::int64_t t = r.integer(q[i], at("q", i));
    if (t != 0 && t != 1) r.fail(at("q", i), "expected 0 or 1");
    batch.targets.push_back(static_cast<std::uint8_t>(t));
  }

  const Json& positives = r.array(r.field(root, "positives", ""), "positives");
  if (positives.size() != batch.images) {
    r.fail("positives", "expected one list per image (" + std::to_string(batch.images) + ")");
  }
  batch.positives.resize(batch.images);
  for (std::size_t l = 0; l < positives.size(); ++l) {
    const std::string p = at("positives", l);
    const Json& list = r.array(positives[l], p);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string pi = at(p, i);
      const double overlap = r.unit(r.field(list[i], "iou", pi), key(pi, "iou"));
      const double conf = r.unit(r.field(list[i], "shat", pi), key(pi, "shat"));
      batch.positives[l].add(overlap, conf);
    }
  }
  try {
    batch.validate();
  } catch (const InputError& e) {
    r.fail("", e.what());
  }
  return batch;
}

std::string encode_tcd_batch(const TcdBatch& batch) {
  batch.validate();
  std::string out(kTcdMagic);
  put_u32(out, batch.images);
  put_u32(out, batch.locations);
  put_u32(out, batch.classes);
  for (double v : batch.confidences) put_f32(out, v);
  for (std::uint8_t v : batch.targets) out.push_back(static_cast<char>(v));
  for (const ImagePositives& p : batch.positives) {
    put_u32(out, static_cast<std::uint32_t>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
      put_f32(out, p.iou[i]);
      put_f32(out, p.shat[i]);
    }
  }
  return out;
}

TcdBatch decode_tcd_batch(std::string_view bytes, std::string_view source) {
  if (bytes.substr(0, kTcdMagic.size()) != kTcdMagic) {
    throw ParseError(std::string(source) + ": missing TCB1 magic");
  }
  ByteCursor in(bytes.substr(kTcdMagic.size()), source);
  TcdBatch batch;
  batch.images = in.u32("L");
  batch.locations = in.u32("R");
  batch.classes = in.u32("K");
  if (!checked_cells(batch.images, batch.locations, batch.classes)) {
    throw ParseError(std::string(source) + ": L*R*K overflows");
  }
  const std::size_t n = batch.cells();
  // 5 bytes per cell (f32 + u8) must be present before allocating.
  in.need(n, 5, "confidence map");
  batch.confidences.reserve(n);
  for (std::size_t i = 0; i < n; ++i) batch.confidences.push_back(in.f32("s"));
  batch.targets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) batch.targets.push_back(in.u8("q"));
  batch.positives.resize(batch.images);
  for (std::size_t l = 0; l < batch.images; ++l) {
    const std::uint32_t count = in.u32("positive count");
    in.need(count, 8, "positives");
    for (std::uint32_t i = 0; i < count; ++i) {
      const double overlap = in.f32("iou");
      const double conf = in.f32("shat");
      batch.positives[l].add(overlap, conf);
    }
  }
  if (in.remaining() != 0) {
    throw ParseError(std::string(source) + ": " + std::to_string(in.remaining()) +
                     " trailing bytes after binary batch");
  }
  try {
    batch.validate();
  } catch (const InputError& e) {
    throw ParseError(std::string(source) + ": " + e.what());
  }
  return batch;
}

TcdBatch load_tcd_batch(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (std::string_view(bytes).substr(0, kTcdMagic.size()) == kTcdMagic) {
    return decode_tcd_batch(bytes, path.string());
  }
  return parse_tcd_batch_json(bytes, path.string());
}

void write_tcd_batch(const std::filesystem::path& path, const TcdBatch& batch,
                     TcdEncoding encoding) {
  if (encoding == TcdEncoding::kBinary) {
    write_file_atomic(path, encode_tcd_batch(batch));
  } else {
    write_file_atomic(path, tcd_batch_json(batch).dump() + "\n");
  }
}

// -- MC passes ---------------------------------------------------------------

Json mc_passes_json(const McImage& image) {
  Json passes = Json::array();
  for (const McPass& pass : image.passes) {
    Json dets = Json::array();
    for (const Detection& d : pass.detections) {
      dets.push_back({{"bbox", bbox_json(d.box)}, {"class", d.class_id}, {"score", d.score}});
    }
    passes.push_back({{"n", pass.index}, {"detections", std::move(dets)}});
  }
  return Json{{"image_id", image.image_id},
              {"width", image.width},
              {"height", image.height},
              {"passes", std::move(passes)}};
}

McImage parse_mc_passes(std::string_view text, std::string_view source) {
  const Reader r(source);
  const Json root = r.parse(text);
  McImage image;
  image.image_id = r.integer(r.field(root, "image_id", ""), "image_id");
  image.width = r.number(r.field(root, "width", ""), "width");
  image.height = r.number(r.field(root, "height", ""), "height");
  if (!(image.width > 0.0) || !(image.height > 0.0)) r.fail("width", "image size must be positive");
  const Json& passes = r.array(r.field(root, "passes", ""), "passes");
  for (std::size_t i = 0; i < passes.size(); ++i) {
    const std::string p = at("passes", i);
    McPass pass;
    pass.index = r.int32(r.field(passes[i], "n", p), key(p, "n"));
    const std::string dp = key(p, "detections");
    const Json& dets = r.array(r.field(passes[i], "detections", p), dp);
    for (std::size_t j = 0; j < dets.size(); ++j) {
      const std::string pj = at(dp, j);
      Detection d;
      d.image_id = image.image_id;
      d.box = r.bbox(r.field(dets[j], "bbox", pj), key(pj, "bbox"));
      d.class_id = r.int32(r.field(dets[j], "class", pj), key(pj, "class"));
      d.score = r.unit(r.field(dets[j], "score", pj), key(pj, "score"));
      pass.detections.push_back(d);
    }
    image.passes.push_back(std::move(pass));
  }
  return image;
}

McImage load_mc_passes(const std::filesystem::path& path) {
  return parse_mc_passes(read_file(path), path.string());
}

void write_mc_passes(const std::filesystem::path& path, const McImage& image) {
  write_file_atomic(path, mc_passes_json(image).dump() + "\n");
}

// -- Reports -----------------------------------------------------------------

Json reliability_json(std::span<const ReliabilityRecord> records) {
  Json out = Json::array();
  for (const ReliabilityRecord& rec : records) {
    out.push_back({{"bin_lo", rec.bin_lo},
                   {"bin_hi", rec.bin_hi},
                   {"count", rec.count},
                   {"mean_conf", rec.mean_conf},
                   {"mean_outcome", rec.mean_outcome},
                   {"gap", rec.gap}});
  }
  return out;
}

std::string reliability_csv(std::span<const ReliabilityRecord> records) {
  std::string out(kReliabilityCsvHeader);
  out += '\n';
  for (const ReliabilityRecord& rec : records) {
    out += format_number(rec.bin_lo) + ',' + format_number(rec.bin_hi) + ',' +
           std::to_string(rec.count) + ',' + format_number(rec.mean_conf) + ',' +
           format_number(rec.mean_outcome) + ',' + format_number(rec.gap) + '\n';
  }
  return out;
}

std::string render_report(const Report& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) return reliability_csv(report.reliability);
  Json out = report.summary;
  if (!report.reliability.empty()) out["reliability"] = reliability_json(report.reliability);
  return out.dump(2) + "\n";
}

void write_report(const std::filesystem::path& path, ReportFormat format,
                  const Report& report) {
  write_file_atomic(path, render_report(report, format));
}

Json temperature_model_json(const TemperatureModel& model) {
  return Json{{"temperature", model.temperature}};
}

TemperatureModel parse_temperature_model(std::string_view text, std::string_view source) {
  const Reader r(source);
  const Json root = r.parse(text);
  const double t = r.number(r.field(root, "temperature", ""), "temperature");
  if (!(t > 0.0)) r.fail("temperature", "must be positive");
  return TemperatureModel{t};
}

}  // namespace detcal::io
