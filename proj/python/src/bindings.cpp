#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "occtrack/cli.hpp"
#include "occtrack/error.hpp"
#include "occtrack/feature.hpp"
#include "occtrack/geometry.hpp"
#include "occtrack/metrics.hpp"
#include "occtrack/oae.hpp"
#include "occtrack/objectives.hpp"
#include "occtrack/reid.hpp"
#include "occtrack/visibility.hpp"

namespace py = pybind11;
using namespace occtrack;

namespace {

py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

using Array3 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using Records = std::vector<std::vector<std::pair<std::int64_t, ObjectState3D>>>;

TrajectorySet to_set(const Records& frames) {
  TrajectorySet t;
  for (const auto& f : frames) {
    auto& out = t.frames.emplace_back();
    for (const auto& [id, s] : f) out.push_back({id, s, 1.0});
  }
  return t;
}

FeaturePyramid to_pyramid(int camera_id, const std::vector<Array3>& levels, const std::vector<double>& strides) {
  if (levels.size() != strides.size()) throw Error(ErrorKind::LengthMismatch, "one stride per level is required");
  if (levels.empty()) throw Error(ErrorKind::InvalidArgument, "a pyramid needs at least one level");
  std::vector<FeatureLevel> out;
  int channels = -1;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const Array3& a = levels[l];
    if (a.ndim() != 3) throw Error(ErrorKind::InvalidArgument, "levels must be (height, width, channels) arrays");
    if (channels >= 0 && a.shape(2) != channels) throw Error(ErrorKind::ChannelMismatch, "levels differ in channels");
    channels = static_cast<int>(a.shape(2));
    FeatureLevel f;
    f.height = static_cast<int>(a.shape(0));
    f.width = static_cast<int>(a.shape(1));
    f.stride = strides[l];
    f.values.assign(a.data(), a.data() + a.size());
    out.push_back(std::move(f));
  }
  return FeaturePyramid(camera_id, channels, std::move(out));
}

std::vector<LabeledEmbedding> labeled(const Eigen::MatrixXd& emb, const std::vector<std::int64_t>& ids) {
  if (static_cast<std::size_t>(emb.rows()) != ids.size()) {
    throw Error(ErrorKind::LengthMismatch, "one identity per embedding row is required");
  }
  std::vector<LabeledEmbedding> out;
  for (Eigen::Index r = 0; r < emb.rows(); ++r) out.push_back({emb.row(r).transpose(), ids[static_cast<std::size_t>(r)]});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of occtrack";
  m.attr("__version__") = OCCTRACK_VERSION;

  static py::exception<Error> error(m, "Error", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<CameraModel>(m, "CameraModel")
      .def(py::init<int, double, double, double, double, const Mat3&, const Vec3&, int, int>(), py::arg("id"),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("R"), py::arg("t"), py::arg("width"),
           py::arg("height"))
      .def_static("look_at", &CameraModel::look_at, py::arg("id"), py::arg("position"), py::arg("target"),
                  py::arg("focal"), py::arg("width"), py::arg("height"))
      .def_property_readonly("id", &CameraModel::id)
      .def_property_readonly("rotation", &CameraModel::rotation)
      .def_property_readonly("translation", &CameraModel::translation)
      .def_property_readonly("center", &CameraModel::center);

  py::class_<ObjectState3D>(m, "ObjectState3D")
      .def(py::init<const Vec3&, double, double, double, double, const Vec3&>(), py::arg("center"), py::arg("w"),
           py::arg("l"), py::arg("h"), py::arg("yaw") = 0.0, py::arg("velocity") = Vec3::Zero())
      .def_property_readonly("center", &ObjectState3D::center)
      .def_property_readonly("w", &ObjectState3D::w)
      .def_property_readonly("l", &ObjectState3D::l)
      .def_property_readonly("h", &ObjectState3D::h)
      .def_property_readonly("yaw", &ObjectState3D::yaw)
      .def_property_readonly("velocity", &ObjectState3D::velocity)
      .def("to_array", &ObjectState3D::to_array);

  m.def(
      "project_point",
      [](const CameraModel& cam, const Vec3& p) {
        const Projection r = project_point(cam, p);
        return py::make_tuple(r.u, r.v, r.depth);
      },
      py::arg("camera"), py::arg("point"), "(u, v, depth) of a world point; raises Error when behind the camera.");

  m.def(
      "box_corners",
      [](const ObjectState3D& s) {
        Eigen::Matrix<double, 8, 3, Eigen::RowMajor> out;
        const auto c = box_corners(s);
        for (int i = 0; i < 8; ++i) out.row(i) = c[static_cast<std::size_t>(i)].transpose();
        return out;
      },
      py::arg("state"));

  m.def(
      "generate_keypoints",
      [](const ObjectState3D& s, const std::vector<Vec3>& offsets) {
        const KeypointSet k = generate_keypoints(s, offsets);
        Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> out(static_cast<Eigen::Index>(k.size()), 3);
        for (std::size_t i = 0; i < k.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = k.points[i].transpose();
        return out;
      },
      py::arg("state"), py::arg("learned_offsets") = std::vector<Vec3>{});

  m.def(
      "visible_fraction",
      [](const CameraModel& cam, const ObjectState3D& target, const std::vector<ObjectState3D>& blockers, int grid) {
        return visible_fraction(cam, target, blockers, grid).value;
      },
      py::arg("camera"), py::arg("target"), py::arg("blockers") = std::vector<ObjectState3D>{}, py::arg("grid") = 32);

  m.def(
      "fuse_embedding",
      [](const std::vector<VecX>& features, const std::vector<double>& visibility, double floor) -> py::object {
        std::vector<ViewFeature> views;
        for (const auto& f : features) views.push_back({f, true});
        std::vector<VisibilityScore> vis;
        for (double v : visibility) {
          VisibilityScore s;
          s.value = v;
          vis.push_back(s);
        }
        const FusionResult r = fuse_embedding(views, vis, floor);
        if (r.all_occluded) return py::none();
        return py::cast(r.embedding.values());
      },
      py::arg("features"), py::arg("visibility"), py::arg("visibility_floor") = kDefaultVisibilityFloor,
      "Visibility-weighted, unit-normalized fusion; None when every view is occluded.");

  m.def(
      "msda",
      [](const std::vector<std::tuple<int, std::vector<Array3>, std::vector<double>>>& pyramids,
         const std::vector<std::vector<std::tuple<int, int, float, float, float>>>& queries, const std::string& mode,
         bool renormalize, unsigned workers) {
        std::vector<FeaturePyramid> pyrs;
        for (const auto& [id, levels, strides] : pyramids) pyrs.push_back(to_pyramid(id, levels, strides));
        SamplePlan plan;
        for (const auto& q : queries) {
          auto& tuples = plan.queries.emplace_back();
          for (const auto& [cam, level, u, v, w] : q) tuples.push_back({cam, level, u, v, w});
        }
        const auto norm = renormalize ? WeightNormalization::Renormalize : WeightNormalization::AsGiven;
        MsdaResult r;
        if (mode == "reference") {
          r = msda_reference(pyrs, plan, norm);
        } else if (mode == "full" || mode == "half") {
          r = msda_optimized(pyrs, plan, mode == "full" ? PrecisionMode::Full : PrecisionMode::PackedHalf,
                             MsdaOptions{norm, workers});
        } else {
          throw Error(ErrorKind::InvalidArgument, "mode must be reference, full or half");
        }
        py::array_t<float> values({static_cast<py::ssize_t>(plan.queries.size()), static_cast<py::ssize_t>(r.channels)});
        std::copy(r.values.begin(), r.values.end(), values.mutable_data());
        std::vector<bool> empty(r.empty.begin(), r.empty.end());
        return py::make_tuple(values, empty);
      },
      py::arg("pyramids"), py::arg("queries"), py::arg("mode") = "full", py::arg("renormalize") = true,
      py::arg("workers") = 1,
      "pyramids: [(camera_id, [level arrays (H, W, C)], [strides])]; queries: [[(camera_id, level, u, v, "
      "weight)]]. Returns (values (Q, C), empty flags).");

  m.def("iou3d", &iou3d, py::arg("a"), py::arg("b"));

  m.def(
      "evaluate_hota",
      [](const Records& gt, const Records& pred) {
        return to_python(hota_report_to_json(evaluate_hota(to_set(gt), to_set(pred))));
      },
      py::arg("gt"), py::arg("pred"), "Frames of (track_id, ObjectState3D) pairs; returns the report as a dict.");

  m.def(
      "reid_evaluate",
      [](const Eigen::MatrixXd& gallery, const std::vector<std::int64_t>& gallery_ids, const Eigen::MatrixXd& probes,
         const std::vector<std::int64_t>& probe_ids) {
        const auto g = labeled(gallery, gallery_ids);
        const auto p = labeled(probes, probe_ids);
        return to_python(reid_report_to_json(reid_evaluate(g, p)));
      },
      py::arg("gallery"), py::arg("gallery_ids"), py::arg("probes"), py::arg("probe_ids"));

  m.def(
      "gradient_checks",
      [](int instances, std::uint64_t seed, double tolerance) {
        const auto checks = run_gradient_checks(instances, seed, tolerance);
        return to_python(gradient_checks_to_json(checks, tolerance));
      },
      py::arg("instances") = 100, py::arg("seed") = 0, py::arg("tolerance") = 1e-4);

  m.def(
      "dispatch",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
