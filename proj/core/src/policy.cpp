#include "deskrl/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "deskrl/common.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {

void PolicyConfig::validate() const {
  if (alphabet < 2 || alphabet > 64) throw ConfigError("alphabet must be in 2..64");
  if (hidden < 1 || hidden > 64) throw ConfigError("hidden must be in 1..64");
  if (value_hidden < 1 || value_hidden > 64) throw ConfigError("value_hidden must be in 1..64");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (prompt_dims < 1) throw ConfigError("prompt_dims must be >= 1");
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
}

std::uint64_t PolicyConfig::shape_hash() const {
  std::uint64_t h = 0x6465736b726cULL;
  for (int v : {alphabet, hidden, value_hidden, window, prompt_dims, dynamic_dims, max_len})
    h = hash_mix(h, static_cast<std::uint64_t>(v));
  return h;
}

SparseVec ContextEncoder::encode(std::span<const double> prompt_features,
                                 const DynamicFeatureFn& dynamic_fn,
                                 std::span<const int> prefix) {
  if (static_cast<int>(prompt_features.size()) != cfg_.prompt_dims)
    throw InvalidInput("ContextEncoder: prompt feature size mismatch");
  const int v = cfg_.alphabet;
  SparseVec ctx;
  ctx.dim = cfg_.context_dims();
  ctx.entries.reserve(prompt_features.size() + 3 * cfg_.window + 4);

  for (std::size_t i = 0; i < prompt_features.size(); ++i)
    if (prompt_features[i] != 0.0) ctx.entries.emplace_back(static_cast<int>(i), prompt_features[i]);

  if (cfg_.dynamic_dims > 0 && dynamic_fn) {
    dynamic_fn(prefix, dynamic_scratch_);
    for (int i = 0; i < cfg_.dynamic_dims; ++i)
      if (dynamic_scratch_[static_cast<std::size_t>(i)] != 0.0)
        ctx.entries.emplace_back(cfg_.prompt_dims + i,
                                 dynamic_scratch_[static_cast<std::size_t>(i)]);
  }

  const int len = static_cast<int>(prefix.size());
  const int slot_base = cfg_.prompt_dims + cfg_.dynamic_dims;
  for (int j = 0; j < cfg_.window; ++j) {
    const int pos = len - 1 - j;
    if (pos < 0) break;
    ctx.entries.emplace_back(slot_base + j * v + prefix[pos], 1.0);
  }

  const int window_bag = slot_base + cfg_.window * v;
  std::vector<int> counts(static_cast<std::size_t>(v), 0);
  for (int j = 0; j < std::min(cfg_.window, len); ++j) counts[prefix[len - 1 - j]]++;
  for (int t = 0; t < v; ++t)
    if (counts[t] > 0)
      ctx.entries.emplace_back(window_bag + t, counts[t] / static_cast<double>(cfg_.window));

  const int prefix_bag = window_bag + v;
  std::fill(counts.begin(), counts.end(), 0);
  for (int t : prefix) counts[t]++;
  for (int t = 0; t < v; ++t)
    if (counts[t] > 0)
      ctx.entries.emplace_back(prefix_bag + t, counts[t] / static_cast<double>(cfg_.max_len));

  ctx.entries.emplace_back(prefix_bag + v, len / static_cast<double>(cfg_.max_len));
  return ctx;
}

Policy Policy::init(const PolicyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Policy p;
  p.cfg = cfg;
  const std::size_t d = static_cast<std::size_t>(cfg.context_dims());
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t hv = static_cast<std::size_t>(cfg.value_hidden);
  const std::size_t v = static_cast<std::size_t>(cfg.alphabet);

  p.off.w1 = 0;
  p.off.b1 = p.off.w1 + h * d;
  p.off.w2 = p.off.b1 + h;
  p.off.b2 = p.off.w2 + v * h;
  p.off.v1 = p.off.b2 + v;
  p.off.vb1 = p.off.v1 + hv * d;
  p.off.v2 = p.off.vb1 + hv;
  p.off.vb2 = p.off.v2 + hv;
  p.off.total = p.off.vb2 + 1;

  p.theta.assign(p.off.total, 0.0);
  // Trunks get small random weights; heads start at zero so the initial
  // policy is exactly uniform and the initial value prediction exactly zero.
  CounterRng rng = CounterRng::keyed({seed, 0x696e6974ULL});
  for (std::size_t i = p.off.w1; i < p.off.b1; ++i) p.theta[i] = rng.uniform(-0.08, 0.08);
  for (std::size_t i = p.off.v1; i < p.off.vb1; ++i) p.theta[i] = rng.uniform(-0.08, 0.08);
  return p;
}

namespace {

void check_ctx(const Policy& policy, const SparseVec& ctx) {
  if (ctx.dim != policy.cfg.context_dims())
    throw InvalidInput("context dimension mismatch");
}

// tanh(W x + b) for a row-major weight block.
void trunk_forward(const Policy& policy, std::size_t w_off, std::size_t b_off, int rows,
                   const SparseVec& ctx, std::vector<double>& h) {
  const std::size_t d = static_cast<std::size_t>(policy.cfg.context_dims());
  h.assign(static_cast<std::size_t>(rows), 0.0);
  for (int r = 0; r < rows; ++r) {
    double acc = policy.theta[b_off + static_cast<std::size_t>(r)];
    const double* row = policy.theta.data() + w_off + static_cast<std::size_t>(r) * d;
    for (const auto& [idx, val] : ctx.entries) acc += row[idx] * val;
    h[static_cast<std::size_t>(r)] = std::tanh(acc);
  }
}

std::vector<double> masked_probs(std::span<const double> logp) {
  std::vector<double> p(logp.size(), 0.0);
  for (std::size_t i = 0; i < logp.size(); ++i)
    if (logp[i] > -std::numeric_limits<double>::infinity()) p[i] = std::exp(logp[i]);
  return p;
}

}  // namespace

std::vector<double> logits(const Policy& policy, const SparseVec& ctx) {
  check_ctx(policy, ctx);
  std::vector<double> h;
  trunk_forward(policy, policy.off.w1, policy.off.b1, policy.cfg.hidden, ctx, h);
  const std::size_t v = static_cast<std::size_t>(policy.cfg.alphabet);
  const std::size_t hd = static_cast<std::size_t>(policy.cfg.hidden);
  std::vector<double> z(v, 0.0);
  for (std::size_t k = 0; k < v; ++k) {
    double acc = policy.theta[policy.off.b2 + k];
    const double* row = policy.theta.data() + policy.off.w2 + k * hd;
    for (std::size_t j = 0; j < hd; ++j) acc += row[j] * h[j];
    z[k] = acc;
  }
  return z;
}

std::vector<double> masked_log_softmax(std::span<const double> raw_logits, std::uint64_t mask) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double max_z = kNegInf;
  for (std::size_t k = 0; k < raw_logits.size(); ++k)
    if ((mask >> k) & 1ULL) max_z = std::max(max_z, raw_logits[k]);
  if (max_z == kNegInf) throw InvalidInput("masked_log_softmax: empty legal set");
  double sum = 0.0;
  for (std::size_t k = 0; k < raw_logits.size(); ++k)
    if ((mask >> k) & 1ULL) sum += std::exp(raw_logits[k] - max_z);
  const double log_z = max_z + std::log(sum);
  std::vector<double> out(raw_logits.size(), kNegInf);
  for (std::size_t k = 0; k < raw_logits.size(); ++k)
    if ((mask >> k) & 1ULL) out[k] = raw_logits[k] - log_z;
  return out;
}

double logprob_at(const Policy& policy, const SparseVec& ctx, int token, std::uint64_t mask) {
  if (token < 0 || token >= policy.cfg.alphabet || !((mask >> token) & 1ULL))
    throw InvalidInput("logprob_at: token outside the legal set");
  const std::vector<double> logp = masked_log_softmax(logits(policy, ctx), mask);
  return logp[static_cast<std::size_t>(token)];
}

double value_predict(const Policy& policy, const SparseVec& ctx) {
  check_ctx(policy, ctx);
  std::vector<double> h;
  trunk_forward(policy, policy.off.v1, policy.off.vb1, policy.cfg.value_hidden, ctx, h);
  double acc = policy.theta[policy.off.vb2];
  for (std::size_t j = 0; j < h.size(); ++j) acc += policy.theta[policy.off.v2 + j] * h[j];
  return acc;
}

void accumulate_logprob_grad(const Policy& policy, const SparseVec& ctx, int token,
                             std::uint64_t mask, double weight, std::span<double> grad) {
  if (token < 0 || token >= policy.cfg.alphabet || !((mask >> token) & 1ULL))
    throw InvalidInput("accumulate_logprob_grad: token outside the legal set");
  check_ctx(policy, ctx);
  if (grad.size() != policy.off.total) throw InvalidInput("gradient buffer size mismatch");

  const std::size_t d = static_cast<std::size_t>(policy.cfg.context_dims());
  const std::size_t hd = static_cast<std::size_t>(policy.cfg.hidden);
  const std::size_t v = static_cast<std::size_t>(policy.cfg.alphabet);

  std::vector<double> h;
  trunk_forward(policy, policy.off.w1, policy.off.b1, policy.cfg.hidden, ctx, h);
  std::vector<double> z(v, 0.0);
  for (std::size_t k = 0; k < v; ++k) {
    double acc = policy.theta[policy.off.b2 + k];
    const double* row = policy.theta.data() + policy.off.w2 + k * hd;
    for (std::size_t j = 0; j < hd; ++j) acc += row[j] * h[j];
    z[k] = acc;
  }
  const std::vector<double> logp = masked_log_softmax(z, mask);
  const std::vector<double> p = masked_probs(logp);

  // d logp(token)/dz_k = 1{k == token} - p_k over the legal set.
  std::vector<double> dh(hd, 0.0);
  for (std::size_t k = 0; k < v; ++k) {
    if (!((mask >> k) & 1ULL)) continue;
    const double dz = ((static_cast<int>(k) == token) ? 1.0 : 0.0) - p[k];
    grad[policy.off.b2 + k] += weight * dz;
    double* wrow = grad.data() + policy.off.w2 + k * hd;
    const double* w2row = policy.theta.data() + policy.off.w2 + k * hd;
    for (std::size_t j = 0; j < hd; ++j) {
      wrow[j] += weight * dz * h[j];
      dh[j] += dz * w2row[j];
    }
  }
  for (std::size_t j = 0; j < hd; ++j) {
    const double dpre = dh[j] * (1.0 - h[j] * h[j]);
    grad[policy.off.b1 + j] += weight * dpre;
    double* wrow = grad.data() + policy.off.w1 + j * d;
    for (const auto& [idx, val] : ctx.entries) wrow[idx] += weight * dpre * val;
  }
}

void accumulate_value_grad(const Policy& policy, const SparseVec& ctx, double weight,
                           std::span<double> grad) {
  check_ctx(policy, ctx);
  if (grad.size() != policy.off.total) throw InvalidInput("gradient buffer size mismatch");
  const std::size_t d = static_cast<std::size_t>(policy.cfg.context_dims());
  const std::size_t hv = static_cast<std::size_t>(policy.cfg.value_hidden);

  std::vector<double> h;
  trunk_forward(policy, policy.off.v1, policy.off.vb1, policy.cfg.value_hidden, ctx, h);
  grad[policy.off.vb2] += weight;
  for (std::size_t j = 0; j < hv; ++j) {
    grad[policy.off.v2 + j] += weight * h[j];
    const double dpre = policy.theta[policy.off.v2 + j] * (1.0 - h[j] * h[j]);
    grad[policy.off.vb1 + j] += weight * dpre;
    double* wrow = grad.data() + policy.off.v1 + j * d;
    for (const auto& [idx, val] : ctx.entries) wrow[idx] += weight * dpre * val;
  }
}

bool advance_rollout(const Policy& policy, int snapshot_version, const PromptView& prompt,
                     Trajectory& traj, int max_len, std::uint64_t global_seed, int token_budget) {
  if (max_len < 1) throw InvalidInput("advance_rollout: max_len must be >= 1");
  if (!traj.tokens.empty() && traj.tokens.back() == kTokEnd) return true;
  if (static_cast<int>(traj.tokens.size()) >= max_len) return true;

  ContextEncoder encoder(policy.cfg);
  const CounterRng stream = CounterRng::keyed({global_seed, prompt.uid, traj.attempt});
  traj.prompt_uid = prompt.uid;

  int emitted = 0;
  while (emitted < token_budget) {
    const int t = static_cast<int>(traj.tokens.size());
    const SparseVec ctx = encoder.encode(prompt.features, prompt.dynamic_features, traj.tokens);
    const std::vector<double> logp = masked_log_softmax(logits(policy, ctx), prompt.legal_mask);
    const std::vector<double> p = masked_probs(logp);

    const double u = stream.unit_at(static_cast<std::uint64_t>(t));
    double acc = 0.0;
    int picked = -1;
    for (int k = 0; k < policy.cfg.alphabet; ++k) {
      if (!((prompt.legal_mask >> k) & 1ULL)) continue;
      acc += p[static_cast<std::size_t>(k)];
      picked = k;
      if (u < acc) break;
    }
    traj.tokens.push_back(picked);
    traj.behavior_logprobs.push_back(logp[static_cast<std::size_t>(picked)]);
    traj.snapshot_versions.push_back(snapshot_version);
    ++emitted;

    if (picked == kTokEnd) return true;
    if (static_cast<int>(traj.tokens.size()) >= max_len) {
      traj.truncated = true;
      return true;
    }
  }
  return false;
}

Trajectory rollout(const Policy& policy, int snapshot_version, const PromptView& prompt,
                   int max_len, std::uint64_t global_seed, std::uint64_t attempt) {
  Trajectory traj;
  traj.attempt = attempt;
  advance_rollout(policy, snapshot_version, prompt, traj, max_len, global_seed, max_len);
  return traj;
}

Trajectory greedy_rollout(const Policy& policy, int snapshot_version, const PromptView& prompt,
                          int max_len) {
  if (max_len < 1) throw InvalidInput("greedy_rollout: max_len must be >= 1");
  ContextEncoder encoder(policy.cfg);
  Trajectory traj;
  traj.prompt_uid = prompt.uid;
  while (true) {
    const SparseVec ctx = encoder.encode(prompt.features, prompt.dynamic_features, traj.tokens);
    const std::vector<double> logp = masked_log_softmax(logits(policy, ctx), prompt.legal_mask);
    int picked = -1;
    for (int k = 0; k < policy.cfg.alphabet; ++k) {
      if (!((prompt.legal_mask >> k) & 1ULL)) continue;
      if (picked < 0 || logp[static_cast<std::size_t>(k)] > logp[static_cast<std::size_t>(picked)])
        picked = k;
    }
    traj.tokens.push_back(picked);
    traj.behavior_logprobs.push_back(logp[static_cast<std::size_t>(picked)]);
    traj.snapshot_versions.push_back(snapshot_version);
    if (picked == kTokEnd) return traj;
    if (static_cast<int>(traj.tokens.size()) >= max_len) {
      traj.truncated = true;
      return traj;
    }
  }
}

SeqTensors evaluate_sequence(const Policy& policy, const PromptView& prompt,
                             std::span<const int> tokens) {
  ContextEncoder encoder(policy.cfg);
  SeqTensors out;
  out.contexts.reserve(tokens.size());
  out.logprobs.reserve(tokens.size());
  out.values.reserve(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    SparseVec ctx = encoder.encode(prompt.features, prompt.dynamic_features, tokens.subspan(0, t));
    out.logprobs.push_back(logprob_at(policy, ctx, tokens[t], prompt.legal_mask));
    out.values.push_back(value_predict(policy, ctx));
    out.contexts.push_back(std::move(ctx));
  }
  out.end_context = encoder.encode(prompt.features, prompt.dynamic_features, tokens);
  return out;
}

LogprobGradResult logprob_grad(const Policy& policy, const PromptView& prompt,
                               const Trajectory& traj) {
  LogprobGradResult out;
  out.grad.assign(policy.off.total, 0.0);
  ContextEncoder encoder(policy.cfg);
  for (std::size_t t = 0; t < traj.tokens.size(); ++t) {
    const int token = traj.tokens[t];
    if (token < 0 || token >= policy.cfg.alphabet)
      throw InvalidInput("logprob_grad: token outside the alphabet");
    const SparseVec ctx =
        encoder.encode(prompt.features, prompt.dynamic_features,
                       std::span<const int>(traj.tokens).subspan(0, t));
    out.logprobs.push_back(logprob_at(policy, ctx, token, prompt.legal_mask));
    accumulate_logprob_grad(policy, ctx, token, prompt.legal_mask, 1.0, out.grad);
  }
  return out;
}

namespace {

struct FrozenBatch {
  std::vector<SeqTensors> tensors;   // contexts are parameter independent
  std::vector<SeqView> views;        // spans into the items + recomputed buffers
};

// Recomputes logprobs/values under the given policy into the cached tensors
// and rebuilds the view array.
void refresh_batch(const Policy& policy, std::span<const GradCheckItem> batch, FrozenBatch& fb) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    SeqTensors& st = fb.tensors[i];
    for (std::size_t t = 0; t < st.contexts.size(); ++t) {
      st.logprobs[t] =
          logprob_at(policy, st.contexts[t], batch[i].traj.tokens[t], batch[i].prompt.legal_mask);
      st.values[t] = value_predict(policy, st.contexts[t]);
    }
    fb.views[i] = SeqView{st.logprobs,
                          batch[i].traj.behavior_logprobs,
                          batch[i].traj.advantages,
                          st.values,
                          batch[i].traj.value_targets,
                          batch[i].traj.reward};
  }
}

FrozenBatch freeze_batch(const Policy& policy, std::span<const GradCheckItem> batch) {
  FrozenBatch fb;
  fb.tensors.reserve(batch.size());
  for (const GradCheckItem& item : batch)
    fb.tensors.push_back(evaluate_sequence(policy, item.prompt, item.traj.tokens));
  fb.views.resize(batch.size());
  refresh_batch(policy, batch, fb);
  return fb;
}

}  // namespace

double batch_combined_loss(const Policy& policy, std::span<const GradCheckItem> batch,
                           const ClipParams& clip, double mu, double value_coeff) {
  FrozenBatch fb = freeze_batch(policy, batch);
  return combined_loss(fb.views, clip, mu, value_coeff).total;
}

std::vector<double> batch_combined_loss_grad(const Policy& policy,
                                             std::span<const GradCheckItem> batch,
                                             const ClipParams& clip, double mu,
                                             double value_coeff, double* loss_out) {
  FrozenBatch fb = freeze_batch(policy, batch);
  TokenGrads token_grads;
  const LossBreakdown breakdown = combined_loss(fb.views, clip, mu, value_coeff, 0.5, &token_grads);
  if (loss_out != nullptr) *loss_out = breakdown.total;

  std::vector<double> grad(policy.off.total, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const SeqTensors& st = fb.tensors[i];
    for (std::size_t t = 0; t < st.contexts.size(); ++t) {
      const double dlp = token_grads.d_logprob[i][t];
      if (dlp != 0.0)
        accumulate_logprob_grad(policy, st.contexts[t], batch[i].traj.tokens[t],
                                batch[i].prompt.legal_mask, dlp, grad);
      const double dv = token_grads.d_value[i][t];
      if (dv != 0.0) accumulate_value_grad(policy, st.contexts[t], dv, grad);
    }
  }
  return grad;
}

FiniteDiffReport finite_diff_check(const Policy& policy, std::span<const GradCheckItem> batch,
                                   const ClipParams& clip, double mu, double value_coeff,
                                   double step, std::size_t min_coords, std::uint64_t seed) {
  if (!(step > 0.0)) throw InvalidInput("finite_diff_check: step must be > 0");
  const std::vector<double> analytic = batch_combined_loss_grad(policy, batch, clip, mu, value_coeff);

  FrozenBatch fb = freeze_batch(policy, batch);
  Policy scratch = policy;
  auto loss_at = [&]() {
    refresh_batch(scratch, batch, fb);
    return combined_loss(fb.views, clip, mu, value_coeff).total;
  };

  std::vector<std::size_t> coords;
  const std::size_t total = policy.off.total;
  if (total <= min_coords) {
    coords.resize(total);
    for (std::size_t i = 0; i < total; ++i) coords[i] = i;
  } else {
    CounterRng rng = CounterRng::keyed({seed, 0x6664636bULL});
    std::vector<bool> taken(total, false);
    while (coords.size() < min_coords) {
      const std::size_t i = rng.next_below(total);
      if (!taken[i]) {
        taken[i] = true;
        coords.push_back(i);
      }
    }
  }

  FiniteDiffReport report;
  report.coords_checked = coords.size();
  for (std::size_t i : coords) {
    const double saved = scratch.theta[i];
    scratch.theta[i] = saved + step;
    const double up = loss_at();
    scratch.theta[i] = saved - step;
    const double down = loss_at();
    scratch.theta[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double a = analytic[i];
    const double denom = std::max(std::abs(a), std::abs(fd));
    const double err = denom < 1e-6 ? std::abs(a - fd) : std::abs(a - fd) / denom;
    if (err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst_coordinate = i;
    }
  }
  return report;
}

// --- checkpoint io -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'S', 'K', 'R', 'L', 'C', 'K', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}
void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const Policy& policy, const std::string& path, std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(policy.cfg.alphabet));
  put_u32(out, static_cast<std::uint32_t>(policy.cfg.hidden));
  put_u32(out, static_cast<std::uint32_t>(policy.cfg.value_hidden));
  put_u32(out, static_cast<std::uint32_t>(policy.cfg.window));
  put_u32(out, static_cast<std::uint32_t>(policy.cfg.prompt_dims));
  put_u32(out, static_cast<std::uint32_t>(policy.cfg.dynamic_dims));
  put_u32(out, static_cast<std::uint32_t>(policy.cfg.max_len));
  put_u64(out, config_hash);
  put_u64(out, policy.theta.size());
  for (double d : policy.theta) put_u64(out, std::bit_cast<std::uint64_t>(d));
  if (!out) throw ConfigError("failed writing checkpoint: " + path);
}

Policy load_checkpoint(const std::string& path, std::uint64_t* config_hash_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("not a checkpoint file: " + path);
  if (get_u32(in) != kFormatVersion) throw ConfigError("unsupported checkpoint format version");

  PolicyConfig cfg;
  cfg.alphabet = static_cast<int>(get_u32(in));
  cfg.hidden = static_cast<int>(get_u32(in));
  cfg.value_hidden = static_cast<int>(get_u32(in));
  cfg.window = static_cast<int>(get_u32(in));
  cfg.prompt_dims = static_cast<int>(get_u32(in));
  cfg.dynamic_dims = static_cast<int>(get_u32(in));
  cfg.max_len = static_cast<int>(get_u32(in));
  const std::uint64_t config_hash = get_u64(in);
  const std::uint64_t count = get_u64(in);

  Policy policy = Policy::init(cfg, 0);
  if (count != policy.theta.size()) throw ConfigError("checkpoint parameter count mismatch");
  for (double& d : policy.theta) d = std::bit_cast<double>(get_u64(in));
  if (!in) throw ConfigError("truncated checkpoint: " + path);
  if (config_hash_out != nullptr) *config_hash_out = config_hash;
  return policy;
}

}  // namespace deskrl
