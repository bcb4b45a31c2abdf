/* Copyright 2026 The fhat Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "fhat/costmodel.h"

#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "fhat/errors.h"
#include "fhat/ops.h"

namespace fhat {

std::size_t DecoderSteps(double max_audio_ms, double f_enc_ms, std::size_t max_labels) {
  if (!(max_audio_ms > 0.0) || !(f_enc_ms > 0.0)) {
    throw ConfigError("DecoderSteps: durations must be positive");
  }
  const double q = max_audio_ms / f_enc_ms;
  const double r = std::round(q);
  // Exact multiples must not round up through floating-point noise.
  const double frames = std::abs(q - r) < 1e-9 ? r : std::ceil(q);
  return static_cast<std::size_t>(frames) + max_labels;
}

EncoderCostModel EncoderCostModel::FromConfig(const EncoderConfig& c, std::size_t input_frames) {
  c.Validate();
  const double m = static_cast<double>(c.model_dim);
  const double f = static_cast<double>(c.ffn_multiplier * c.model_dim);
  const double k = static_cast<double>(c.conv_kernel_size);
  EncoderCostModel model;
  // FFN1 (2mf), conv module (pw1 2m^2, depthwise km, pw2 m^2), key and value
  // projections (2m^2) all run over the full block input.
  model.linear_coeff = 2.0 * m * f + 5.0 * m * m + k * m;
  // Query and output projections and FFN2 run over the pooled queries.
  model.query_coeff = 2.0 * m * m + 2.0 * m * f;
  model.attention_coeff = 2.0 * m;

  double sub = 0.0;
  double in = static_cast<double>(c.input_dim);
  std::size_t length = input_frames;
  for (std::size_t s = 0; s < c.NumSubsampleStages(); ++s) {
    sub += 3.0 * in * static_cast<double>(length);  // depthwise kernel 3
    length = ops::CeilDiv(length, 2);
    sub += in * m * static_cast<double>(length);
    in = m;
  }
  sub += in * m * static_cast<double>(length);
  model.subsample_cost = sub;
  return model;
}

double EncoderCostModel::BlockCost(std::size_t length, std::size_t stride) const {
  const double l = static_cast<double>(length);
  const double lq = static_cast<double>(ops::CeilDiv(length, stride));
  return linear_coeff * l + query_coeff * lq + attention_coeff * lq * l;
}

EncoderCost ComputeEncoderCost(const EncoderConfig& config, std::size_t input_frames) {
  const EncoderCostModel model = EncoderCostModel::FromConfig(config, input_frames);
  EncoderCost cost;
  cost.lengths = config.BlockLengths(input_frames);
  cost.subsample = model.subsample_cost;
  cost.total = cost.subsample;
  for (std::size_t b = 0; b < config.num_blocks; ++b) {
    cost.blocks.push_back(model.BlockCost(cost.lengths[b], config.StrideAt(b)));
    cost.total += cost.blocks.back();
  }
  return cost;
}

LinearFit FitLatency(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("FitLatency: x and y differ in length");
  if (x.size() < 2) throw DimensionError("FitLatency: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 1e-12 * std::max(1.0, mx * mx)) {
    throw NumericError("FitLatency: x is constant, slope undefined");
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
  }
  // Constant y is fit exactly by a zero slope.
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

CostReport MakeCostReport(const std::string& id, const std::string& shorthand,
                          const CostSettings& settings) {
  const EncoderConfig config = WithFunnel(settings.base, shorthand);
  const auto input_frames = static_cast<std::size_t>(
      std::ceil(settings.max_audio_ms / settings.base.input_frame_ms - 1e-9));
  CostReport r;
  r.id = id;
  r.shorthand = FormatFunnelShorthand(config.funnel);
  r.f_enc_ms = config.FrameDurationMs();
  r.encoder_frames = config.OutputLength(input_frames);
  r.decoder_steps = DecoderSteps(settings.max_audio_ms, r.f_enc_ms, settings.max_labels);
  r.encoder = ComputeEncoderCost(config, input_frames);
  return r;
}

Reduction ReductionReport(const CostReport& baseline, const CostReport& candidate) {
  Reduction r;
  r.decoder = 1.0 - static_cast<double>(candidate.decoder_steps) /
                        static_cast<double>(baseline.decoder_steps);
  r.encoder = 1.0 - candidate.encoder.total / baseline.encoder.total;
  return r;
}

CostTable BuildCostTable(const std::vector<std::pair<std::string, std::string>>& configs,
                         const CostSettings& settings) {
  CostTable table;
  for (const auto& [id, shorthand] : configs) {
    table.rows.push_back(MakeCostReport(id, shorthand, settings));
  }
  for (auto& row : table.rows) {
    const Reduction red = ReductionReport(table.rows.front(), row);
    row.decoder_reduction = red.decoder;
    row.encoder_reduction = red.encoder;
  }
  return table;
}

namespace {

std::string Quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string CostTableCsv(const CostTable& table) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "id,encoder_config,f_enc_ms,encoder_frames,decoder_steps,encoder_cost,"
        "subsample_cost,decoder_reduction,encoder_reduction\n";
  for (const auto& r : table.rows) {
    os << Quote(r.id) << ',' << Quote(r.shorthand) << ',' << r.f_enc_ms << ','
       << r.encoder_frames << ',' << r.decoder_steps << ',' << r.encoder.total << ','
       << r.encoder.subsample << ',' << r.decoder_reduction << ',' << r.encoder_reduction
       << '\n';
  }
  return os.str();
}

std::string CostTableJson(const CostTable& table) {
  using nlohmann::json;
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"id", r.id},
                    {"encoder_config", r.shorthand},
                    {"f_enc_ms", r.f_enc_ms},
                    {"encoder_frames", r.encoder_frames},
                    {"decoder_steps", r.decoder_steps},
                    {"encoder_cost", r.encoder.total},
                    {"subsample_cost", r.encoder.subsample},
                    {"block_costs", r.encoder.blocks},
                    {"block_lengths", r.encoder.lengths},
                    {"decoder_reduction", r.decoder_reduction},
                    {"encoder_reduction", r.encoder_reduction}});
  }
  json out = {{"rows", rows}};
  auto fit_json = [](const LinearFit& f) {
    return json{{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
  };
  if (table.decoder_fit) out["decoder_fit"] = fit_json(*table.decoder_fit);
  if (table.encoder_fit) out["encoder_fit"] = fit_json(*table.encoder_fit);
  return out.dump(2) + "\n";
}

namespace {

constexpr std::array<PublishedLatency, 8> kFrameRateSweep{{
    {"B0", "-", 40, 144, 526},
    {"E1", "s15^2", 80, 142, 280},
    {"E2", "s13^2,s15^2", 160, 134, 155},
    {"E3", "s11^2,s13^2,s15^2", 320, 121, 96},
    {"E4", "s9^2,s11^2,s13^2,s15^2", 640, 106, 66},
    {"E5", "s7^2,s9^2,s11^2,s13^2,s15^2", 1280, 90, 51},
    {"E6", "s5^2,s7^2,s9^2,s11^2,s13^2,s15^2", 2560, 74, 44},
    {"E7", "s3^2,s5^2,s7^2,s9^2,s11^2,s13^2,s15^2", 5120, 58, 34},
}};

constexpr std::array<PublishedLatency, 10> kPlacementAblation{{
    {"E5", "s7^2,s9^2,s11^2,s13^2,s15^2", 1280, 90, -1},
    {"E51", "s11^2,s12^2,s13^2,s14^2,s15^2", 1280, 116, -1},
    {"E52", "s4^2,s5^2,s6^2,s7^2,s8^2", 1280, 60, -1},
    {"E53", "s14^8,s15^4", 1280, 133, -1},
    {"E54", "s13^4,s15^8", 1280, 128, -1},
    {"E6", "s5^2,s7^2,s9^2,s11^2,s13^2,s15^2", 2560, 74, -1},
    {"E61", "s10^2,s11^2,s12^2,s13^2,s14^2,s15^2", 2560, 108, -1},
    {"E62", "s4^2,s5^2,s6^2,s7^2,s8^2,s9^2", 2560, 59, -1},
    {"E63", "s14^8,s15^8", 2560, 133, -1},
    {"E64", "s13^8,s15^8", 2560, 126, -1},
}};

}  // namespace

std::span<const PublishedLatency> PublishedFrameRateSweep() { return kFrameRateSweep; }
std::span<const PublishedLatency> PublishedPlacementAblation() { return kPlacementAblation; }

CostTable PublishedSweepTable(const CostSettings& settings) {
  std::vector<std::pair<std::string, std::string>> configs;
  std::vector<double> steps, cost, dec_ms, enc_ms;
  for (const auto& p : kFrameRateSweep) configs.emplace_back(p.id, p.shorthand);
  CostTable table = BuildCostTable(configs, settings);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    steps.push_back(static_cast<double>(table.rows[i].decoder_steps));
    cost.push_back(table.rows[i].encoder.total);
    dec_ms.push_back(kFrameRateSweep[i].decoder_ms);
    enc_ms.push_back(kFrameRateSweep[i].encoder_ms);
  }
  table.decoder_fit = FitLatency(steps, dec_ms);
  table.encoder_fit = FitLatency(cost, enc_ms);
  return table;
}

}  // namespace fhat
