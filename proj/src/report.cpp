#include "bbsteal/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "bbsteal/attention.hpp"
#include "bbsteal/checkpoint.hpp"
#include "bbsteal/experiment.hpp"
#include "bbsteal/truncation.hpp"

namespace fs = std::filesystem;

namespace bbsteal {

namespace {

struct TraceFile {
  std::string run;   // group key
  uint64_t seed = 0;
  fs::path dir;
  std::vector<TracePoint> trace;
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (n - 1.0);
  return {mean, std::sqrt(var)};
}

void write_pgm(const std::string& path, const std::vector<float>& vals, int h, int w) {
  float lo = vals[0], hi = vals[0];
  for (float v : vals) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const float range = hi - lo > 1e-12f ? hi - lo : 1.0f;
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << w << " " << h << "\n255\n";
  for (float v : vals) {
    const unsigned char b = static_cast<unsigned char>(255.0f * (v - lo) / range);
    out.put(static_cast<char>(b));
  }
}

void write_ppm(const std::string& path, const Tensor3& img) {
  std::ofstream out(path, std::ios::binary);
  out << "P6\n" << img.w << " " << img.h << "\n255\n";
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = img.c == 3 ? img.at(c, y, x) : img.at(0, y, x);
        out.put(static_cast<char>(static_cast<unsigned char>(255.0f * std::clamp(v, 0.0f, 1.0f))));
      }
    }
  }
}

void write_heatmap_csv(const std::string& path, const std::vector<float>& vals, int h, int w) {
  std::ofstream out(path);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out << vals[static_cast<size_t>(y) * w + x] << (x + 1 == w ? '\n' : ',');
    }
  }
}

void emit_heatmaps(const fs::path& dir, const std::vector<TraceFile>& traces) {
  // needs a manifest, the victim checkpoint and at least one substitute
  const fs::path manifest_path = dir / "manifest.json";
  const fs::path victim_path = dir / "victim" / "victim.ckpt";
  if (!fs::exists(manifest_path) || !fs::exists(victim_path)) return;
  fs::path sub_path;
  for (const TraceFile& t : traces) {
    const fs::path cand = t.dir / "substitute_final.ckpt";
    if (fs::exists(cand)) {
      sub_path = cand;
      break;
    }
  }
  if (sub_path.empty()) return;

  const ExperimentManifest m = load_manifest(manifest_path.string());
  const Classifier victim = load_classifier(victim_path.string());
  const Classifier substitute = load_classifier(sub_path.string());
  const LabeledData test = build_labeled_dataset(m.test_data, m.image_hw, "test");

  const fs::path hdir = dir / "heatmaps";
  fs::create_directories(hdir);
  const size_t count = std::min<size_t>(6, test.size());
  for (size_t i = 0; i < count; ++i) {
    const ImageTensor& x = test.images[i];
    const AttentionMap va = substitute_attention(victim, x);
    const AttentionMap sa = substitute_attention(substitute, x);
    const std::string stem = "sample" + std::to_string(i);
    write_ppm((hdir / (stem + "_input.ppm")).string(), x.data);
    write_pgm((hdir / (stem + "_victim.pgm")).string(), va.upsampled, va.image_h, va.image_w);
    write_pgm((hdir / (stem + "_substitute.pgm")).string(), sa.upsampled, sa.image_h, sa.image_w);
    write_heatmap_csv((hdir / (stem + "_victim.csv")).string(), va.upsampled, va.image_h,
                      va.image_w);
    write_heatmap_csv((hdir / (stem + "_substitute.csv")).string(), sa.upsampled, sa.image_h,
                      sa.image_w);
  }
}

}  // namespace

void emit_report(const std::string& dir) {
  if (!fs::exists(dir)) throw std::runtime_error("emit_report: no such directory " + dir);

  std::vector<TraceFile> traces;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().filename() != "trace.jsonl") continue;
    TraceFile tf;
    tf.dir = entry.path().parent_path();
    std::string leaf = tf.dir.filename().string();
    if (leaf.rfind("seed_", 0) == 0) {
      tf.seed = std::stoull(leaf.substr(5));
      tf.run = fs::relative(tf.dir.parent_path(), dir).string();
    } else {
      tf.seed = 0;
      tf.run = fs::relative(tf.dir, dir).string();
    }
    if (tf.run.empty() || tf.run == ".") tf.run = "run";
    tf.trace = load_trace(entry.path().string());
    traces.push_back(std::move(tf));
  }
  if (traces.empty()) throw std::runtime_error("emit_report: no traces under " + dir);
  std::sort(traces.begin(), traces.end(), [](const TraceFile& a, const TraceFile& b) {
    return a.run == b.run ? a.seed < b.seed : a.run < b.run;
  });

  // long-format curves
  {
    std::ofstream out((fs::path(dir) / "curves.csv").string());
    out << "run,seed,iteration,q,agreement,accuracy,dt,de,dp\n";
    for (const TraceFile& tf : traces) {
      for (const TracePoint& tp : tf.trace) {
        out << tf.run << ',' << tf.seed << ',' << tp.iteration << ',' << tp.q << ','
            << tp.agreement << ',' << tp.accuracy << ',' << tp.dt_size << ',' << tp.de_size << ','
            << tp.dp_size << '\n';
      }
    }
  }

  // per-run aggregation over seeds
  {
    std::map<std::string, std::map<int, std::vector<const TracePoint*>>> grouped;
    for (const TraceFile& tf : traces) {
      for (const TracePoint& tp : tf.trace) grouped[tf.run][tp.iteration].push_back(&tp);
    }
    std::ofstream out((fs::path(dir) / "summary.csv").string());
    out << "run,iteration,q,seeds,agreement_mean,agreement_std,accuracy_mean,accuracy_std\n";
    for (const auto& [run, by_iter] : grouped) {
      for (const auto& [iter, pts] : by_iter) {
        std::vector<double> agr, acc;
        uint64_t q = 0;
        for (const TracePoint* p : pts) {
          agr.push_back(p->agreement);
          acc.push_back(p->accuracy);
          q = std::max(q, p->q);
        }
        const auto [am, as] = mean_std(agr);
        const auto [cm, cs] = mean_std(acc);
        out << run << ',' << iter << ',' << q << ',' << pts.size() << ',' << am << ',' << as << ','
            << cm << ',' << cs << '\n';
      }
    }
  }

  emit_heatmaps(fs::path(dir), traces);
}

}  // namespace bbsteal
