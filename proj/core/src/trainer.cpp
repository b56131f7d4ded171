#include "fakejob/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fakejob/error.hpp"
#include "fakejob/rng.hpp"

namespace fakejob::trainer {

SplitResult split_dataset(std::size_t n, std::uint64_t seed) {
    if (n < 5) throw DataError(fmt::format("cannot split {} rows; need at least 5", n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(seed);
    fisher_yates(std::span<std::size_t>(order), rng);

    const auto n_test = n / 5;
    const auto n_val = (n - n_test) / 5;
    SplitResult s;
    s.test.assign(order.begin(), order.begin() + n_test);
    s.validation.assign(order.begin() + n_test, order.begin() + n_test + n_val);
    s.train.assign(order.begin() + n_test + n_val, order.end());
    return s;
}

void TrainConfig::validate() const {
    if (epochs_max == 0 || batch_size == 0) throw ContractError("train config: epochs_max and batch_size must be positive");
    if (!(learning_rate > 0) || !(epsilon > 0)) throw ContractError("train config: learning_rate and epsilon must be positive");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ContractError("train config: betas must lie in [0, 1)");
    if (patience >= epochs_max && patience != 0) {
        throw ContractError(fmt::format("train config: patience {} must be below epochs_max {}", patience, epochs_max));
    }
}

AdamState make_adam_state(std::span<const NamedTensor> params) {
    AdamState s;
    for (const auto& p : params) {
        s.m.emplace_back(p.tensor.size(), 0.0);
        s.v.emplace_back(p.tensor.size(), 0.0);
    }
    return s;
}

void adam_step(std::span<NamedTensor> params, AdamState& state, std::size_t t, const TrainConfig& cfg) {
    if (t == 0) throw ContractError("adam_step: step index is 1-based");
    if (state.m.size() != params.size()) throw ContractError("adam_step: optimizer state does not match parameters");
    for (auto& p : params) {
        for (double gv : std::as_const(p.tensor).grad()) {
            if (!std::isfinite(gv)) throw NumericError(fmt::format("non-finite gradient in '{}'", p.name));
        }
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto theta = params[k].tensor.values();
        const auto grad = std::as_const(params[k].tensor).grad();
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
    state.step = t;
}

StopDecision early_stop_check(std::span<const double> val_losses, std::size_t patience) {
    if (val_losses.empty()) throw ContractError("early_stop_check: no losses");
    StopDecision d;
    d.best_index = static_cast<std::size_t>(std::min_element(val_losses.begin(), val_losses.end()) - val_losses.begin());
    if (patience == 0 || val_losses.size() < patience) return d;

    std::size_t stale = 0;
    double best = val_losses[0];
    for (std::size_t i = 0; i < val_losses.size(); ++i) {
        if (i > 0 && val_losses[i] < best) {
            best = val_losses[i];
            stale = 0;
        } else {
            ++stale;
        }
    }
    d.stop = stale >= patience;
    return d;
}

Evaluation evaluate(const bilstm::ModelParams& params, std::span<const features::EncodedExample> set,
                    std::size_t batch_size) {
    if (set.empty()) throw DataError("cannot evaluate an empty split");
    const auto probs = bilstm::predict(set, params, batch_size);
    double loss = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        loss += ndgrad::bce(probs[i], set[i].label);
        correct += static_cast<std::size_t>((probs[i] >= 0.5 ? 1 : 0) == set[i].label);
    }
    const double n = static_cast<double>(set.size());
    return {loss / n, static_cast<double>(correct) / n};
}

TrainResult train(bilstm::ModelParams params, std::span<const features::EncodedExample> train_set,
                  std::span<const features::EncodedExample> validation_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty()) throw DataError("training split is empty");
    if (validation_set.empty()) throw DataError("validation split is empty");

    std::vector<NamedTensor> named;
    for (auto& [name, t] : params.named()) named.push_back({name, t});
    auto adam = make_adam_state(named);

    SplitMix64 rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    std::vector<double> val_losses;
    auto best = params.clone();
    std::size_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
        fisher_yates(std::span<std::size_t>(order), rng);
        double loss_sum = 0;
        std::vector<features::EncodedExample> batch;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const auto n = std::min(cfg.batch_size, order.size() - start);
            batch.clear();
            std::vector<double> labels;
            for (std::size_t k = 0; k < n; ++k) {
                batch.push_back(train_set[order[start + k]]);
                labels.push_back(batch.back().label);
            }
            params.zero_grad();
            ndgrad::Graph g;
            auto probs = bilstm::model_forward(g, batch, params);
            auto loss = ndgrad::bce_mean(g, probs, labels);
            const double lv = loss.item();
            if (!std::isfinite(lv)) {
                throw NumericError(fmt::format("epoch {} batch {}: loss is not finite", epoch, start / cfg.batch_size + 1));
            }
            g.backward(loss);
            try {
                adam_step(named, adam, ++step, cfg);
            } catch (const NumericError& e) {
                throw NumericError(fmt::format("epoch {} batch {}: {}", epoch, start / cfg.batch_size + 1, e.what()));
            }
            loss_sum += lv * static_cast<double>(n);
        }

        const auto val = evaluate(params, validation_set);
        EpochRecord rec{loss_sum / static_cast<double>(order.size()), val.loss, val.accuracy};
        result.history.epochs.push_back(rec);
        val_losses.push_back(val.loss);
        if (on_epoch) on_epoch(epoch, rec);

        const auto decision = early_stop_check(val_losses, cfg.patience);
        if (decision.best_index + 1 == epoch) best = params.clone();
        result.history.stopped_epoch = epoch;
        result.history.best_epoch = decision.best_index + 1;
        if (decision.stop) break;
    }

    for (auto& [name, t] : best.named()) t.set_requires_grad(true);
    result.params = std::move(best);
    return result;
}

}  // namespace fakejob::trainer
