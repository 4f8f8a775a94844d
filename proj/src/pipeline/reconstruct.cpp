#include "psdf/pipeline/reconstruct.hpp"

#include "psdf/error.hpp"
#include "psdf/geometry/voxelize.hpp"
#include "psdf/nn/checkpoint.hpp"
#include "psdf/sampling/sampling.hpp"

#include <cstdio>
#include <ostream>

namespace psdf::pipeline {

namespace fs = std::filesystem;

std::string checkpoint_dtype(const fs::path& dir) { return nn::read_checkpoint_manifest(dir.string()).dtype; }

template <typename T>
model::SdfModel<T> load_model(const fs::path& dir) {
  const auto manifest = nn::read_checkpoint_manifest(dir.string());
  if (!manifest.config.contains("model")) throw DataError("checkpoint " + dir.string() + " has no model config");
  model::SdfModel<T> net(model::model_config_from_json(manifest.config.at("model")));
  nn::load_checkpoint(dir.string(), net.parameters());
  return net;
}

template <typename T>
geometry::SdfGrid predict_grid(const model::SdfModel<T>& net, const render::Image& image,
                               const camera::CameraPose& pose, int res) {
  const auto points = sampling::test_grid(res);
  const auto values = net.predict(image, pose, points);
  geometry::SdfGrid grid = geometry::make_grid({res, res, res}, geometry::Vec3::Constant(-1.0),
                                               geometry::Vec3::Constant(1.0));
  for (std::size_t i = 0; i < values.size(); ++i) grid.values[i] = static_cast<double>(values[i]);
  return grid;
}

template <typename T>
geometry::Mesh reconstruct(const model::SdfModel<T>& net, const render::Image& image, const camera::CameraPose& pose,
                           int res) {
  return geometry::marching_cubes(geometry::pad_grid(predict_grid(net, image, pose, res), 1.0));
}

geometry::Mesh reference_mesh(const geometry::SdfScene& scene, int res) {
  return geometry::marching_cubes(geometry::pad_grid(geometry::sample_grid(scene, {res, res, res}), 1.0));
}

nlohmann::json summary_to_json(const EvaluationSummary& summary) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : summary.samples) {
    nlohmann::json row{{"scene", s.scene_id}, {"view", s.view}, {"empty", s.empty}};
    if (s.empty) {
      row["iou"] = s.report.iou;
    } else {
      row.update(eval::metrics_to_json(s.report));
    }
    samples.push_back(std::move(row));
  }
  return {{"samples", samples}, {"mean", eval::metrics_to_json(summary.mean)}, {"empty_count", summary.empty_count}};
}

template <typename T>
EvaluationSummary evaluate(const model::SdfModel<T>& net, const std::vector<TrainSample>& data,
                           const EvaluateOptions& options, std::ostream* log) {
  EvaluationSummary summary;
  summary.mean.point_count = options.metrics.point_count;
  summary.mean.voxel_res = options.metrics.voxel_res;
  if (options.mesh_dir) fs::create_directories(*options.mesh_dir);
  const std::size_t count = options.limit ? std::min(options.limit, data.size()) : data.size();
  std::size_t scored = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& sample = data[i];
    SampleMetrics m;
    m.scene_id = sample.scene_id;
    m.view = sample.view;
    const auto mesh = reconstruct(net, sample.image, sample.pose, options.grid_res);
    if (options.mesh_dir) {
      char name[96];
      std::snprintf(name, sizeof name, "%s_view_%02d.obj", sample.scene_id.c_str(), sample.view);
      geometry::write_obj(mesh, (*options.mesh_dir / name).string());
    }
    const auto reference_occ = geometry::solid_voxelize(*sample.scene, options.metrics.voxel_res);
    m.report.point_count = options.metrics.point_count;
    m.report.voxel_res = options.metrics.voxel_res;
    if (mesh.empty()) {
      m.empty = true;
      geometry::OccupancyGrid none = reference_occ;
      std::fill(none.cells.begin(), none.cells.end(), 0);
      m.report.iou = eval::iou(none, reference_occ);
      ++summary.empty_count;
    } else {
      m.report = eval::compute_metrics(mesh, reference_mesh(*sample.scene, options.grid_res), reference_occ,
                                       options.metrics);
      summary.mean.cd += m.report.cd;
      summary.mean.emd += m.report.emd;
      summary.mean.cd_raw += m.report.cd_raw;
      summary.mean.emd_raw += m.report.emd_raw;
      summary.mean.emd_exact = summary.mean.emd_exact && m.report.emd_exact;
      ++scored;
    }
    summary.mean.iou += m.report.iou;
    if (log) {
      char buf[160];
      if (m.empty) {
        std::snprintf(buf, sizeof buf, "%s view %d: empty reconstruction\n", m.scene_id.c_str(), m.view);
      } else {
        std::snprintf(buf, sizeof buf, "%s view %d: cd %.3f  emd %.3f  iou %.1f\n", m.scene_id.c_str(), m.view,
                      m.report.cd, m.report.emd, m.report.iou);
      }
      *log << buf << std::flush;
    }
    summary.samples.push_back(std::move(m));
  }
  if (scored) {
    summary.mean.cd /= static_cast<double>(scored);
    summary.mean.emd /= static_cast<double>(scored);
    summary.mean.cd_raw /= static_cast<double>(scored);
    summary.mean.emd_raw /= static_cast<double>(scored);
  }
  if (count) summary.mean.iou /= static_cast<double>(count);
  return summary;
}

#define PSDF_INSTANTIATE_PIPELINE(T)                                                                             \
  template model::SdfModel<T> load_model<T>(const fs::path&);                                                   \
  template geometry::SdfGrid predict_grid<T>(const model::SdfModel<T>&, const render::Image&,                   \
                                             const camera::CameraPose&, int);                                   \
  template geometry::Mesh reconstruct<T>(const model::SdfModel<T>&, const render::Image&,                       \
                                         const camera::CameraPose&, int);                                       \
  template EvaluationSummary evaluate<T>(const model::SdfModel<T>&, const std::vector<TrainSample>&,            \
                                         const EvaluateOptions&, std::ostream*);

PSDF_INSTANTIATE_PIPELINE(float)
PSDF_INSTANTIATE_PIPELINE(double)

}  // namespace psdf::pipeline
