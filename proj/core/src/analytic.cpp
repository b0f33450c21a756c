#include "tiledit/analytic.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "tiledit/errors.hpp"

namespace tiledit {

namespace {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    if (i) out += ",";
    out += buf;
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    char* end = nullptr;
    double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str()) {
      throw Error(ErrorCode::bad_format, "bad number list entry '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

// Broadcast a single value to length d; otherwise require exactly d entries.
std::vector<double> fit_length(std::vector<double> v, int d, const std::string& what) {
  if (static_cast<int>(v.size()) == 1 && d > 1) {
    return std::vector<double>(d, v[0]);
  }
  if (static_cast<int>(v.size()) != d) {
    throw Error(ErrorCode::count_mismatch,
                what + " has " + std::to_string(v.size()) + " entries, expected " +
                    std::to_string(d));
  }
  return v;
}

// Posterior statistics of one component at one noise level.
struct ComponentPosterior {
  std::vector<double> mean_z0;  // E[z0 | x, class]
  double log_marginal = 0.0;    // log N(x; sqrt(ab) mu, ab Sigma + (1-ab) I) + log prior
};

ComponentPosterior component_posterior(const GaussianComponent& comp, double prior,
                                       const std::vector<double>& x, double ab,
                                       bool need_marginal) {
  int d = static_cast<int>(comp.mean.size());
  double sab = std::sqrt(ab);
  ComponentPosterior out;
  out.mean_z0.resize(d);
  double quad = 0.0;
  double logdet = 0.0;
  if (comp.diagonal) {
    for (int i = 0; i < d; ++i) {
      double s2 = comp.cov[i];
      if (!(s2 > 0.0)) {
        throw Error(ErrorCode::singular_covariance, "non-positive diagonal covariance entry");
      }
      double denom = ab * s2 + (1.0 - ab);
      double r = x[i] - sab * comp.mean[i];
      out.mean_z0[i] = comp.mean[i] + sab * s2 * r / denom;
      if (need_marginal) {
        quad += r * r / denom;
        logdet += std::log(denom);
      }
    }
  } else {
    Eigen::Map<const RowMatrixXd> sigma(comp.cov.data(), d, d);
    Eigen::Map<const Eigen::VectorXd> mu(comp.mean.data(), d);
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
    Eigen::MatrixXd a = ab * sigma;
    a.diagonal().array() += 1.0 - ab;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::singular_covariance, "noised covariance is not positive definite");
    }
    Eigen::VectorXd r = xv - sab * mu;
    Eigen::VectorXd ainv_r = llt.solve(r);
    Eigen::VectorXd m = mu + sab * (sigma * ainv_r);
    for (int i = 0; i < d; ++i) out.mean_z0[i] = m[i];
    if (need_marginal) {
      quad = r.dot(ainv_r);
      Eigen::MatrixXd l = llt.matrixL();
      for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(l(i, i));
    }
  }
  if (need_marginal) {
    out.log_marginal = std::log(prior) - 0.5 * (quad + logdet);
  }
  return out;
}

}  // namespace

void GaussianMixtureWorld::validate() const {
  if (block_height < 1 || block_width < 1 || block_channels < 1) {
    throw Error(ErrorCode::invalid_range, "world block dims must be positive");
  }
  if (components.empty() || components.size() != class_priors.size()) {
    throw Error(ErrorCode::count_mismatch,
                "world needs matching components and priors, got " +
                    std::to_string(components.size()) + " vs " +
                    std::to_string(class_priors.size()));
  }
  double total = 0.0;
  for (double p : class_priors) {
    if (!(p > 0.0)) throw Error(ErrorCode::invalid_range, "class priors must be positive");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_range, "class priors must sum to 1");
  }
  int d = dim();
  for (const GaussianComponent& c : components) {
    if (static_cast<int>(c.mean.size()) != d) {
      throw Error(ErrorCode::count_mismatch, "component mean length != block dim");
    }
    std::size_t want = c.diagonal ? static_cast<std::size_t>(d)
                                  : static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
    if (c.cov.size() != want) {
      throw Error(ErrorCode::count_mismatch, "component covariance has the wrong size");
    }
    if (c.diagonal) {
      for (double v : c.cov) {
        if (!(v > 0.0)) throw Error(ErrorCode::singular_covariance, "diagonal entry <= 0");
      }
    } else {
      for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
          if (std::fabs(c.cov[i * d + j] - c.cov[j * d + i]) > 1e-12) {
            throw Error(ErrorCode::singular_covariance, "full covariance is not symmetric");
          }
        }
      }
      Eigen::Map<const RowMatrixXd> sigma(c.cov.data(), d, d);
      Eigen::LLT<Eigen::MatrixXd> llt(sigma);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::singular_covariance, "full covariance is not positive definite");
      }
    }
  }
}

Tensor analytic_epsilon(const GaussianMixtureWorld& world, const Tensor& z_t, int t,
                        const Conditioning& cond, const NoiseSchedule& schedule) {
  world.validate();
  int bh = world.block_height, bw = world.block_width, bc = world.block_channels;
  if (z_t.height() % bh != 0 || z_t.width() % bw != 0 || z_t.channels() != bc) {
    throw Error(ErrorCode::shape_mismatch,
                "latent " + z_t.shape_string() + " is not a block multiple of world " +
                    Tensor::shape_string(bh, bw, bc));
  }
  int selected = -1;
  if (cond.kind == Conditioning::Kind::class_label) {
    if (cond.class_label < 0 || cond.class_label >= world.num_classes()) {
      throw Error(ErrorCode::unknown_conditioning,
                  "class " + std::to_string(cond.class_label) + " outside the world's " +
                      std::to_string(world.num_classes()) + " classes");
    }
    selected = cond.class_label;
  } else if (cond.kind == Conditioning::Kind::embedding) {
    throw Error(ErrorCode::unknown_conditioning,
                "the analytic backend takes class labels or null conditioning");
  }

  double ab = schedule.alpha_bar(t);
  Tensor out = zeros_like(z_t);
  if (ab >= 1.0) {
    return out;  // no-noise limit: z_t is clean, the noise estimate is zero
  }
  double sab = std::sqrt(ab);
  double snab = std::sqrt(1.0 - ab);

  int d = world.dim();
  int blocks_y = z_t.height() / bh;
  int blocks_x = z_t.width() / bw;
  std::vector<double> x(d);
  std::vector<double> mean_z0(d);
  bool mixture = selected < 0 && world.num_classes() > 1;
  std::vector<ComponentPosterior> posts;

  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      for (int k = 0; k < d; ++k) {
        int y = by * bh + k / (bw * bc);
        int xcol = bx * bw + (k / bc) % bw;
        int ch = k % bc;
        x[k] = z_t.at(y, xcol, ch);
      }
      if (!mixture) {
        int c = selected < 0 ? 0 : selected;
        ComponentPosterior post =
            component_posterior(world.components[c], world.class_priors[c], x, ab, false);
        mean_z0 = post.mean_z0;
      } else {
        posts.clear();
        double max_lw = -1e300;
        for (int c = 0; c < world.num_classes(); ++c) {
          posts.push_back(
              component_posterior(world.components[c], world.class_priors[c], x, ab, true));
          max_lw = std::max(max_lw, posts.back().log_marginal);
        }
        double norm = 0.0;
        std::fill(mean_z0.begin(), mean_z0.end(), 0.0);
        for (const ComponentPosterior& post : posts) {
          double w = std::exp(post.log_marginal - max_lw);
          norm += w;
          for (int k = 0; k < d; ++k) mean_z0[k] += w * post.mean_z0[k];
        }
        for (int k = 0; k < d; ++k) mean_z0[k] /= norm;
      }
      for (int k = 0; k < d; ++k) {
        int y = by * bh + k / (bw * bc);
        int xcol = bx * bw + (k / bc) % bw;
        int ch = k % bc;
        out.at(y, xcol, ch) = static_cast<float>((x[k] - sab * mean_z0[k]) / snab);
      }
    }
  }
  return out;
}

Tensor sample_world(const GaussianMixtureWorld& world, int canvas_height, int canvas_width,
                    int cls, Prng& rng) {
  int bh = world.block_height, bw = world.block_width, bc = world.block_channels;
  if (canvas_height % bh != 0 || canvas_width % bw != 0) {
    throw Error(ErrorCode::shape_mismatch, "canvas is not a block multiple of the world");
  }
  if (cls >= world.num_classes()) {
    throw Error(ErrorCode::unknown_conditioning, "class " + std::to_string(cls) + " out of range");
  }
  int d = world.dim();
  Tensor out(canvas_height, canvas_width, bc);
  std::vector<double> v(d);
  for (int by = 0; by < canvas_height / bh; ++by) {
    for (int bx = 0; bx < canvas_width / bw; ++bx) {
      int c = cls;
      if (c < 0) {
        double u = rng.uniform();
        double acc = 0.0;
        c = world.num_classes() - 1;
        for (int i = 0; i < world.num_classes(); ++i) {
          acc += world.class_priors[i];
          if (u <= acc) {
            c = i;
            break;
          }
        }
      }
      const GaussianComponent& comp = world.components[c];
      if (comp.diagonal) {
        for (int k = 0; k < d; ++k) v[k] = comp.mean[k] + std::sqrt(comp.cov[k]) * rng.normal();
      } else {
        Eigen::Map<const RowMatrixXd> sigma(comp.cov.data(), d, d);
        Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) {
          throw Error(ErrorCode::singular_covariance, "cannot factor component covariance");
        }
        Eigen::VectorXd n(d);
        for (int k = 0; k < d; ++k) n[k] = rng.normal();
        Eigen::VectorXd s = llt.matrixL() * n;
        for (int k = 0; k < d; ++k) v[k] = comp.mean[k] + s[k];
      }
      for (int k = 0; k < d; ++k) {
        int y = by * bh + k / (bw * bc);
        int xcol = bx * bw + (k / bc) % bw;
        out.at(y, xcol, k % bc) = static_cast<float>(v[k]);
      }
    }
  }
  return out;
}

Manifest GaussianMixtureWorld::to_manifest() const {
  Manifest m;
  m.set("kind", "gaussian-mixture-world");
  m.set("name", name);
  m.set("block", std::to_string(block_height) + "," + std::to_string(block_width) + "," +
                     std::to_string(block_channels));
  m.set_int("classes", num_classes());
  for (int c = 0; c < num_classes(); ++c) {
    std::string prefix = "class." + std::to_string(c) + ".";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", class_priors[c]);
    m.set(prefix + "prior", buf);
    m.set(prefix + "mean", join_doubles(components[c].mean));
    m.set(prefix + "cov", (components[c].diagonal ? std::string("diag:") : std::string("full:")) +
                              join_doubles(components[c].cov));
  }
  return m;
}

GaussianMixtureWorld GaussianMixtureWorld::from_manifest(const Manifest& m) {
  if (m.get_or("kind", "") != "gaussian-mixture-world") {
    throw Error(ErrorCode::bad_format, "manifest is not a gaussian-mixture-world");
  }
  GaussianMixtureWorld w;
  w.name = m.get_or("name", "world");
  std::vector<double> block = split_doubles(m.get("block"));
  if (block.size() != 3) {
    throw Error(ErrorCode::bad_format, "world block must be h,w,c");
  }
  w.block_height = static_cast<int>(block[0]);
  w.block_width = static_cast<int>(block[1]);
  w.block_channels = static_cast<int>(block[2]);
  int classes = static_cast<int>(m.get_int("classes"));
  int d = w.dim();
  for (int c = 0; c < classes; ++c) {
    std::string prefix = "class." + std::to_string(c) + ".";
    w.class_priors.push_back(m.get_double(prefix + "prior"));
    GaussianComponent comp;
    comp.mean = fit_length(split_doubles(m.get(prefix + "mean")), d, prefix + "mean");
    std::string cov = m.get(prefix + "cov");
    if (cov.rfind("diag:", 0) == 0) {
      comp.diagonal = true;
      comp.cov = fit_length(split_doubles(cov.substr(5)), d, prefix + "cov");
    } else if (cov.rfind("full:", 0) == 0) {
      comp.diagonal = false;
      comp.cov = split_doubles(cov.substr(5));
    } else {
      throw Error(ErrorCode::bad_format, prefix + "cov must start with diag: or full:");
    }
    w.components.push_back(std::move(comp));
  }
  w.validate();
  return w;
}

void GaussianMixtureWorld::save(const std::string& path) const { to_manifest().save(path); }

GaussianMixtureWorld GaussianMixtureWorld::load(const std::string& path) {
  return from_manifest(Manifest::load(path));
}

GaussianMixtureWorld GaussianMixtureWorld::builtin(const std::string& name) {
  GaussianMixtureWorld w;
  w.name = name;
  if (name == "unit") {
    w.block_height = 1, w.block_width = 1, w.block_channels = 2;
    w.components.push_back({{0.0, 0.0}, true, {1.0, 1.0}});
    w.class_priors = {1.0};
  } else if (name == "blob") {
    w.block_height = 1, w.block_width = 1, w.block_channels = 2;
    w.components.push_back({{0.8, -0.3}, true, {0.25, 0.5625}});
    w.class_priors = {1.0};
  } else if (name == "twoclass") {
    w.block_height = 2, w.block_width = 2, w.block_channels = 1;
    w.components.push_back({{0.2, 0.8, 0.2, 0.8}, true, {0.02, 0.02, 0.02, 0.02}});
    w.components.push_back({{0.8, 0.2, 0.8, 0.2}, true, {0.02, 0.02, 0.02, 0.02}});
    w.class_priors = {0.5, 0.5};
  } else if (name == "texture") {
    w.block_height = 4, w.block_width = 4, w.block_channels = 1;
    GaussianComponent stripes, checkers;
    stripes.diagonal = checkers.diagonal = true;
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        stripes.mean.push_back(y % 2 == 0 ? 0.85 : 0.15);
        checkers.mean.push_back((x + y) % 2 == 0 ? 0.85 : 0.15);
        stripes.cov.push_back(0.02);
        checkers.cov.push_back(0.02);
      }
    }
    w.components = {stripes, checkers};
    w.class_priors = {0.5, 0.5};
  } else {
    throw Error(ErrorCode::unsupported_backend, "unknown builtin world '" + name + "'");
  }
  w.validate();
  return w;
}

AnalyticEstimator::AnalyticEstimator(GaussianMixtureWorld world, NoiseSchedule schedule)
    : world_(std::move(world)), schedule_(std::move(schedule)) {
  world_.validate();
}

}  // namespace tiledit
