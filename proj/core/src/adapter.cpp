#include "tiledit/adapter.hpp"

#include <filesystem>

#include "tiledit/conv_denoiser.hpp"
#include "tiledit/errors.hpp"

namespace tiledit {

std::shared_ptr<const NoiseEstimator> pretrained_adapter(const std::string& model_locator) {
  if (model_locator.find("://") != std::string::npos) {
    throw Error(ErrorCode::model_unavailable,
                "remote model locators are not supported: '" + model_locator + "'");
  }
  std::filesystem::path dir(model_locator);
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::model_unavailable,
                "model locator '" + model_locator + "' is not a readable directory");
  }
  if (!std::filesystem::exists(dir / "model.manifest", ec)) {
    throw Error(ErrorCode::model_unavailable,
                "'" + model_locator + "' has no model.manifest");
  }
  return ConvDenoiser::load(model_locator);
}

}  // namespace tiledit
