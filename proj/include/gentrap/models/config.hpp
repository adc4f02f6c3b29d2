#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gentrap/error.hpp"

namespace gentrap::models {

inline const std::vector<std::string> kArchitectures{"gentrap", "gen_lstmplus", "lstmplus", "gnn_lstmae", "lstmae"};

struct TransformerConfig {
  std::size_t feat_width = 17;
  std::size_t heads = 4;
  std::size_t head_dim = 32;
  std::vector<std::size_t> conv_widths{32, 17};
  std::size_t blocks = 1;

  void validate() const {
    if (heads == 0 || head_dim == 0 || blocks == 0) throw ConfigError("transformer: heads, head_dim and blocks must be positive");
    if (conv_widths.size() != 2) throw ConfigError("transformer: conv_widths needs exactly two entries");
    if (conv_widths.back() != feat_width)
      throw ConfigError("transformer: last conv width " + std::to_string(conv_widths.back()) + " must equal feat_width " +
                        std::to_string(feat_width));
  }
};

struct GenTrapConfig {
  std::size_t window = 5;
  std::size_t max_k = 3;
  std::vector<std::size_t> static_ff_widths{32, 17};
  std::vector<std::size_t> head_ff_widths{16, 2};
  std::size_t infer_k = 3;

  void validate() const {
    if (window == 0 || max_k == 0) throw ConfigError("window and max_k must be positive");
    if (infer_k == 0 || infer_k > max_k) throw ConfigError("infer_k must be in [1, max_k]");
    if (static_ff_widths.size() != 2 || head_ff_widths.size() != 2) throw ConfigError("feed-forward widths need two entries");
    if (head_ff_widths.back() != 2) throw ConfigError("head feed-forward must end in 2 outputs (failure / no failure)");
  }
};

/// Everything needed to rebuild a model's parameter layout.
struct ModelConfig {
  std::string architecture = "gentrap";
  std::uint64_t init_seed = 1;
  GenTrapConfig gentrap;
  TransformerConfig transformer;
  std::vector<std::size_t> lstm_widths{64, 64, 32, 17};
  std::vector<std::size_t> encoder_widths{32, 24};
  std::vector<std::size_t> decoder_widths{24, 32};

  void validate() const {
    if (std::find(kArchitectures.begin(), kArchitectures.end(), architecture) == kArchitectures.end())
      throw ConfigError("unknown architecture '" + architecture + "'");
    gentrap.validate();
    transformer.validate();
    if (lstm_widths.empty() || encoder_widths.empty() || decoder_widths.empty()) throw ConfigError("LSTM width lists must be nonempty");
    if (encoder_widths.back() != decoder_widths.front())
      throw ConfigError("autoencoder: decoder must start at the latent width " + std::to_string(encoder_widths.back()));
  }
};

inline void to_json(nlohmann::json& j, const TransformerConfig& c) {
  j = {{"feat_width", c.feat_width}, {"heads", c.heads}, {"head_dim", c.head_dim}, {"conv_widths", c.conv_widths}, {"blocks", c.blocks}};
}

inline void from_json(const nlohmann::json& j, TransformerConfig& c) {
  c.feat_width = j.value("feat_width", c.feat_width);
  c.heads = j.value("heads", c.heads);
  c.head_dim = j.value("head_dim", c.head_dim);
  c.conv_widths = j.value("conv_widths", c.conv_widths);
  c.blocks = j.value("blocks", c.blocks);
}

inline void to_json(nlohmann::json& j, const GenTrapConfig& c) {
  j = {{"window", c.window},
       {"max_k", c.max_k},
       {"static_ff_widths", c.static_ff_widths},
       {"head_ff_widths", c.head_ff_widths},
       {"infer_k", c.infer_k}};
}

inline void from_json(const nlohmann::json& j, GenTrapConfig& c) {
  c.window = j.value("window", c.window);
  c.max_k = j.value("max_k", c.max_k);
  c.static_ff_widths = j.value("static_ff_widths", c.static_ff_widths);
  c.head_ff_widths = j.value("head_ff_widths", c.head_ff_widths);
  c.infer_k = j.value("infer_k", c.infer_k);
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"architecture", c.architecture},     {"init_seed", c.init_seed},         {"gentrap", c.gentrap},
       {"transformer", c.transformer},       {"lstm_widths", c.lstm_widths},     {"encoder_widths", c.encoder_widths},
       {"decoder_widths", c.decoder_widths}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.architecture = j.value("architecture", c.architecture);
  c.init_seed = j.value("init_seed", c.init_seed);
  if (j.contains("gentrap")) c.gentrap = j.at("gentrap").get<GenTrapConfig>();
  if (j.contains("transformer")) c.transformer = j.at("transformer").get<TransformerConfig>();
  c.lstm_widths = j.value("lstm_widths", c.lstm_widths);
  c.encoder_widths = j.value("encoder_widths", c.encoder_widths);
  c.decoder_widths = j.value("decoder_widths", c.decoder_widths);
}

}  // namespace gentrap::models
