#include "tiledit/conv_denoiser.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tiledit/container.hpp"
#include "tiledit/errors.hpp"
#include "tiledit/manifest.hpp"

namespace tiledit {

namespace {

// View of a base denoiser with its convolutions re-dilated. Shares weights
// through the owning pointer; input dims are pinned to factor x base.
class DilatedDenoiser : public NoiseEstimator {
 public:
  DilatedDenoiser(std::shared_ptr<const ConvDenoiser> base, int factor, DilationProfile profile)
      : base_(std::move(base)), factor_(factor), profile_(std::move(profile)) {}

  int base_height() const override { return base_->base_height() * factor_; }
  int base_width() const override { return base_->base_width() * factor_; }
  int channels() const override { return base_->channels(); }
  bool supports_dilation() const override { return false; }
  const NoiseSchedule& schedule() const override { return base_->schedule(); }
  std::string id() const override {
    return base_->id() + ":dilated x" + std::to_string(factor_);
  }

  Tensor predict(const Tensor& z_t, int t, const Conditioning& cond) const override {
    if (z_t.height() != base_height() || z_t.width() != base_width()) {
      throw Error(ErrorCode::shape_mismatch,
                  "dilated estimator expects " +
                      Tensor::shape_string(base_height(), base_width(), channels()) + ", got " +
                      z_t.shape_string());
    }
    return base_->forward(z_t, t, cond, &profile_);
  }

 private:
  std::shared_ptr<const ConvDenoiser> base_;
  int factor_;
  DilationProfile profile_;
};

}  // namespace

ConvDenoiser::ConvDenoiser(ConvDenoiserSpec spec, NoiseSchedule schedule, std::uint64_t init_seed)
    : spec_(spec), schedule_(std::move(schedule)) {
  if (spec.base_height < 1 || spec.base_width < 1 || spec.channels < 1 || spec.hidden < 1 ||
      spec.embed_dim < 1 || spec.num_classes < 1) {
    throw Error(ErrorCode::invalid_range, "conv denoiser spec fields must be positive");
  }
  int in_ch = spec.channels + 2 + spec.embed_dim;
  params_.conv1 = Conv2d("conv1", in_ch, spec.hidden, 3);
  params_.conv2 = Conv2d("conv2", spec.hidden, spec.hidden, 3);
  params_.conv3 = Conv2d("conv3", spec.hidden, spec.channels, 3);
  Prng rng(init_seed);
  params_.conv1.init_he(rng);
  params_.conv2.init_he(rng);
  params_.conv3.init_he(rng);
  params_.class_embed.resize(static_cast<std::size_t>(spec.num_classes + 1) * spec.embed_dim);
  for (float& v : params_.class_embed) v = rng.normal_f() * 0.5f;
}

int ConvDenoiser::class_index(const Conditioning& cond) const {
  switch (cond.kind) {
    case Conditioning::Kind::null_cond:
      return spec_.num_classes;
    case Conditioning::Kind::class_label:
      if (cond.class_label < 0 || cond.class_label >= spec_.num_classes) {
        throw Error(ErrorCode::unknown_conditioning,
                    "class " + std::to_string(cond.class_label) + " outside the model's " +
                        std::to_string(spec_.num_classes) + " classes");
      }
      return cond.class_label;
    case Conditioning::Kind::embedding:
      throw Error(ErrorCode::unknown_conditioning,
                  "the toy denoiser is class-conditional; embeddings need the adapter path");
  }
  throw Error(ErrorCode::unknown_conditioning, "unhandled conditioning kind");
}

Tensor ConvDenoiser::forward(const Tensor& z_t, int t, const Conditioning& cond,
                             const DilationProfile* profile) const {
  if (z_t.channels() != spec_.channels || z_t.height() % spec_.base_height != 0 ||
      z_t.width() % spec_.base_width != 0 || z_t.height() == 0) {
    throw Error(ErrorCode::shape_mismatch,
                "latent " + z_t.shape_string() + " is not a positive multiple of base " +
                    Tensor::shape_string(spec_.base_height, spec_.base_width, spec_.channels));
  }
  int cls = class_index(cond);
  double ab = schedule_.alpha_bar(t);
  float level0 = static_cast<float>(std::sqrt(ab));
  float level1 = static_cast<float>(std::sqrt(1.0 - ab));

  int in_ch = spec_.channels + 2 + spec_.embed_dim;
  Tensor x(z_t.height(), z_t.width(), in_ch);
  const float* embed_row =
      params_.class_embed.data() + static_cast<std::size_t>(cls) * spec_.embed_dim;
  for (int y = 0; y < x.height(); ++y) {
    for (int xc = 0; xc < x.width(); ++xc) {
      float* dst = x.data() + (static_cast<std::size_t>(y) * x.width() + xc) * in_ch;
      const float* src =
          z_t.data() + (static_cast<std::size_t>(y) * z_t.width() + xc) * spec_.channels;
      for (int c = 0; c < spec_.channels; ++c) dst[c] = src[c];
      dst[spec_.channels] = level0;
      dst[spec_.channels + 1] = level1;
      for (int e = 0; e < spec_.embed_dim; ++e) dst[spec_.channels + 2 + e] = embed_row[e];
    }
  }

  auto dil = [&](const Conv2d& conv) {
    return profile ? profile->factor_for(conv.name, t) : 1;
  };
  Tensor h1 = relu(params_.conv1.forward(x, dil(params_.conv1)));
  Tensor h2 = relu(params_.conv2.forward(h1, dil(params_.conv2)));
  return params_.conv3.forward(h2, dil(params_.conv3));
}

Tensor ConvDenoiser::predict(const Tensor& z_t, int t, const Conditioning& cond) const {
  return forward(z_t, t, cond, nullptr);
}

std::shared_ptr<const NoiseEstimator> ConvDenoiser::redilate_with(
    int factor, const DilationProfile& profile) const {
  auto self = std::static_pointer_cast<const ConvDenoiser>(shared_self());
  const DilationProfile& effective =
      profile.empty() ? (default_profile_.empty() ? DilationProfile::uniform(factor)
                                                  : default_profile_)
                      : profile;
  return std::make_shared<DilatedDenoiser>(self, factor, effective);
}

std::shared_ptr<ConvDenoiser> ConvDenoiser::with_schedule(NoiseSchedule schedule) const {
  auto out = std::make_shared<ConvDenoiser>(spec_, std::move(schedule), 0);
  out->params_ = params_;
  out->default_profile_ = default_profile_;
  return out;
}

void ConvDenoiser::save(const std::string& dir) const {
  if (!schedule_.has_params()) {
    throw Error(ErrorCode::bad_format, "cannot serialize a raw-beta schedule into a model dir");
  }
  std::filesystem::create_directories(dir);
  const ScheduleParams& sp = schedule_.params();
  Manifest m;
  m.set("kind", "conv-denoiser");
  m.set_int("base_height", spec_.base_height);
  m.set_int("base_width", spec_.base_width);
  m.set_int("channels", spec_.channels);
  m.set_int("hidden", spec_.hidden);
  m.set_int("embed_dim", spec_.embed_dim);
  m.set_int("num_classes", spec_.num_classes);
  m.set_int("schedule.num_train_steps", sp.num_train_steps);
  m.set_int("schedule.num_sample_steps", sp.num_sample_steps);
  m.set_double("schedule.beta_start", sp.beta_start);
  m.set_double("schedule.beta_end", sp.beta_end);
  m.set("schedule.spacing", to_string(sp.spacing));
  m.save(dir + "/model.manifest");

  auto put = [&](const std::string& name, const std::vector<float>& data,
                 std::vector<std::uint32_t> dims) {
    RawTensor raw;
    raw.dims = std::move(dims);
    raw.data = data;
    write_container(dir + "/" + name + ".lts", raw);
  };
  auto put_conv = [&](const Conv2d& conv) {
    put(conv.name + "_weight", conv.weight,
        {static_cast<std::uint32_t>(conv.out_channels), static_cast<std::uint32_t>(conv.ksize),
         static_cast<std::uint32_t>(conv.ksize), static_cast<std::uint32_t>(conv.in_channels)});
    put(conv.name + "_bias", conv.bias, {static_cast<std::uint32_t>(conv.out_channels)});
  };
  put_conv(params_.conv1);
  put_conv(params_.conv2);
  put_conv(params_.conv3);
  put("class_embed", params_.class_embed,
      {static_cast<std::uint32_t>(spec_.num_classes + 1),
       static_cast<std::uint32_t>(spec_.embed_dim)});

  if (!default_profile_.empty()) {
    std::ofstream out(dir + "/dilation.profile", std::ios::trunc);
    out << default_profile_.serialize();
  }
}

std::shared_ptr<ConvDenoiser> ConvDenoiser::load(const std::string& dir) {
  Manifest m = Manifest::load(dir + "/model.manifest");
  if (m.get_or("kind", "") != "conv-denoiser") {
    throw Error(ErrorCode::bad_format, "'" + dir + "' is not a conv-denoiser model dir");
  }
  ConvDenoiserSpec spec;
  spec.base_height = static_cast<int>(m.get_int("base_height"));
  spec.base_width = static_cast<int>(m.get_int("base_width"));
  spec.channels = static_cast<int>(m.get_int("channels"));
  spec.hidden = static_cast<int>(m.get_int("hidden"));
  spec.embed_dim = static_cast<int>(m.get_int("embed_dim"));
  spec.num_classes = static_cast<int>(m.get_int("num_classes"));
  ScheduleParams sp;
  sp.num_train_steps = static_cast<int>(m.get_int("schedule.num_train_steps"));
  sp.num_sample_steps = static_cast<int>(m.get_int("schedule.num_sample_steps"));
  sp.beta_start = m.get_double("schedule.beta_start");
  sp.beta_end = m.get_double("schedule.beta_end");
  sp.spacing = beta_spacing_from_string(m.get("schedule.spacing"));

  auto model = std::make_shared<ConvDenoiser>(spec, NoiseSchedule::build(sp), 0);
  auto get = [&](const std::string& name, std::vector<float>& into, std::size_t want) {
    RawTensor raw = read_container(dir + "/" + name + ".lts");
    if (raw.data.size() != want) {
      throw Error(ErrorCode::shape_mismatch,
                  "tensor '" + name + "' has " + std::to_string(raw.data.size()) +
                      " values, expected " + std::to_string(want));
    }
    into = std::move(raw.data);
  };
  auto get_conv = [&](Conv2d& conv) {
    get(conv.name + "_weight", conv.weight, conv.weight_count());
    get(conv.name + "_bias", conv.bias, static_cast<std::size_t>(conv.out_channels));
  };
  get_conv(model->params_.conv1);
  get_conv(model->params_.conv2);
  get_conv(model->params_.conv3);
  get("class_embed", model->params_.class_embed,
      static_cast<std::size_t>(spec.num_classes + 1) * spec.embed_dim);

  std::string profile_path = dir + "/dilation.profile";
  if (std::filesystem::exists(profile_path)) {
    std::ifstream in(profile_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    model->default_profile_ = DilationProfile::parse(buf.str());
  }
  return model;
}

}  // namespace tiledit
