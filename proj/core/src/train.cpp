#include "tiledit/train.hpp"

#include <algorithm>
#include <cmath>

#include "tiledit/errors.hpp"

namespace tiledit {

Tensor corpus_image(const CorpusSpec& spec, int cls, std::uint64_t seed, int index) {
  if (cls < 0 || cls >= spec.num_classes) {
    throw Error(ErrorCode::unknown_conditioning,
                "corpus class " + std::to_string(cls) + " out of range");
  }
  Prng rng(derive_stream(seed, static_cast<std::uint64_t>(cls) + 1,
                         static_cast<std::uint64_t>(index) + 1));
  int band = rng.uniform_int(2, 4);
  int phase = rng.uniform_int(0, band * 2 - 1);
  // Fixed channel tints keep classes colorful without adding class info.
  const float gain[3] = {1.0f, 0.85f, 0.7f};
  Tensor img(spec.base_height, spec.base_width, spec.channels);
  for (int y = 0; y < spec.base_height; ++y) {
    for (int x = 0; x < spec.base_width; ++x) {
      int cell = cls == 0 ? (y + phase) / band : (y + phase) / band + (x + phase) / band;
      float base = cell % 2 == 0 ? 0.9f : 0.1f;
      for (int c = 0; c < spec.channels; ++c) {
        float g = c < 3 ? gain[c] : 1.0f;
        float v = base * g + 0.02f * rng.normal_f();
        img.at(y, x, c) = std::clamp(v, 0.0f, 1.0f);
      }
    }
  }
  return img;
}

TrainResult train_toy(const CorpusSpec& corpus, const NoiseSchedule& schedule, int epochs,
                      std::uint64_t seed, const TrainOptions& options) {
  if (epochs < 0) {
    throw Error(ErrorCode::invalid_range, "epochs must be >= 0");
  }
  ConvDenoiserSpec spec;
  spec.base_height = corpus.base_height;
  spec.base_width = corpus.base_width;
  spec.channels = corpus.channels;
  spec.num_classes = corpus.num_classes;
  auto model = std::make_shared<ConvDenoiser>(spec, schedule, derive_stream(seed, 0xbeef));

  TrainResult result;
  result.estimator = model;
  if (epochs == 0) {
    return result;
  }

  ConvDenoiser::Params& p = model->params();
  Adam opt_w1, opt_b1, opt_w2, opt_b2, opt_w3, opt_b3, opt_embed;
  opt_w1.lr = opt_b1.lr = opt_w2.lr = opt_b2.lr = opt_w3.lr = opt_b3.lr = opt_embed.lr = options.lr;
  opt_w1.init(p.conv1.weight.size());
  opt_b1.init(p.conv1.bias.size());
  opt_w2.init(p.conv2.weight.size());
  opt_b2.init(p.conv2.bias.size());
  opt_w3.init(p.conv3.weight.size());
  opt_b3.init(p.conv3.bias.size());
  opt_embed.init(p.class_embed.size());

  std::vector<float> gw1(p.conv1.weight.size()), gb1(p.conv1.bias.size());
  std::vector<float> gw2(p.conv2.weight.size()), gb2(p.conv2.bias.size());
  std::vector<float> gw3(p.conv3.weight.size()), gb3(p.conv3.bias.size());
  std::vector<float> gembed(p.class_embed.size());

  Prng rng(derive_stream(seed, 0x7ea1));
  const int T = schedule.num_steps();
  const int in_ch = spec.channels + 2 + spec.embed_dim;
  const std::size_t cells =
      static_cast<std::size_t>(spec.base_height) * spec.base_width * spec.channels;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    double loss_sum = 0.0;
    int steps = 0;
    for (int index = 0; index < corpus.images_per_class; ++index) {
      for (int cls = 0; cls < corpus.num_classes; ++cls) {
        Tensor z0 = corpus_image(corpus, cls, seed, index);
        int t = rng.uniform_int(1, T);
        double ab = schedule.alpha_bar(t);
        double sab = std::sqrt(ab), snab = std::sqrt(1.0 - ab);
        Tensor eps(z0.height(), z0.width(), z0.channels());
        Tensor z_t(z0.height(), z0.width(), z0.channels());
        for (std::size_t i = 0; i < eps.size(); ++i) {
          eps.data()[i] = rng.normal_f();
          z_t.data()[i] = static_cast<float>(sab * z0.data()[i] + snab * eps.data()[i]);
        }
        bool drop = rng.uniform() < options.null_drop;
        Conditioning cond =
            drop ? Conditioning::null_conditioning() : Conditioning::for_class(cls);
        int embed_row = model->class_index(cond);

        // Forward with kept activations.
        Tensor x(z_t.height(), z_t.width(), in_ch);
        const float* erow = p.class_embed.data() + static_cast<std::size_t>(embed_row) * spec.embed_dim;
        for (int y = 0; y < x.height(); ++y) {
          for (int xc = 0; xc < x.width(); ++xc) {
            float* dst = x.data() + (static_cast<std::size_t>(y) * x.width() + xc) * in_ch;
            const float* src =
                z_t.data() + (static_cast<std::size_t>(y) * z_t.width() + xc) * spec.channels;
            for (int c = 0; c < spec.channels; ++c) dst[c] = src[c];
            dst[spec.channels] = static_cast<float>(sab);
            dst[spec.channels + 1] = static_cast<float>(snab);
            for (int e = 0; e < spec.embed_dim; ++e) dst[spec.channels + 2 + e] = erow[e];
          }
        }
        Tensor a1 = p.conv1.forward(x, 1);
        Tensor h1 = relu(a1);
        Tensor a2 = p.conv2.forward(h1, 1);
        Tensor h2 = relu(a2);
        Tensor out = p.conv3.forward(h2, 1);

        double loss = 0.0;
        Tensor grad_out(out.height(), out.width(), out.channels());
        for (std::size_t i = 0; i < out.size(); ++i) {
          float d = out.data()[i] - eps.data()[i];
          loss += static_cast<double>(d) * d;
          grad_out.data()[i] = 2.0f * d / static_cast<float>(cells);
        }
        loss /= static_cast<double>(cells);
        if (!std::isfinite(loss)) {
          throw Error(ErrorCode::diverged_training,
                      "loss became non-finite at epoch " + std::to_string(epoch));
        }
        loss_sum += loss;
        ++steps;

        std::fill(gw1.begin(), gw1.end(), 0.0f);
        std::fill(gb1.begin(), gb1.end(), 0.0f);
        std::fill(gw2.begin(), gw2.end(), 0.0f);
        std::fill(gb2.begin(), gb2.end(), 0.0f);
        std::fill(gw3.begin(), gw3.end(), 0.0f);
        std::fill(gb3.begin(), gb3.end(), 0.0f);
        std::fill(gembed.begin(), gembed.end(), 0.0f);

        Tensor gh2 = p.conv3.backward(h2, grad_out, 1, gw3, gb3);
        Tensor ga2 = relu_backward(a2, gh2);
        Tensor gh1 = p.conv2.backward(h1, ga2, 1, gw2, gb2);
        Tensor ga1 = relu_backward(a1, gh1);
        Tensor gx = p.conv1.backward(x, ga1, 1, gw1, gb1);
        // Embedding rows receive the summed spatial gradient of their channels.
        float* grow = gembed.data() + static_cast<std::size_t>(embed_row) * spec.embed_dim;
        for (int y = 0; y < gx.height(); ++y) {
          for (int xc = 0; xc < gx.width(); ++xc) {
            const float* g = gx.data() + (static_cast<std::size_t>(y) * gx.width() + xc) * in_ch;
            for (int e = 0; e < spec.embed_dim; ++e) grow[e] += g[spec.channels + 2 + e];
          }
        }

        opt_w1.update(p.conv1.weight, gw1);
        opt_b1.update(p.conv1.bias, gb1);
        opt_w2.update(p.conv2.weight, gw2);
        opt_b2.update(p.conv2.bias, gb2);
        opt_w3.update(p.conv3.weight, gw3);
        opt_b3.update(p.conv3.bias, gb3);
        opt_embed.update(p.class_embed, gembed);
      }
    }
    result.epoch_loss.push_back(loss_sum / steps);
  }
  return result;
}

}  // namespace tiledit
