// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pcflow/error.hpp"

namespace pcflow {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("config: unknown key '" + (section.empty() ? key : section + "." + key) +
                              "'");
        }
    }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            obj.at(key).get_to(out);
        } catch (const json::exception& e) {
            throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
        }
    }
}

void parse_network(const json& j, net::NetworkConfig& n) {
    check_keys(j, "network",
               {"levels", "widths", "cv_dim", "k_cv", "k_conv", "k_up", "k_loss", "weightnet_out",
                "weightnet_hidden", "cost_hidden", "w_hidden", "pred_conv_widths", "head_hidden",
                "use_upsampled_feature", "use_predictor_feature", "act_slope"});
    get_to(j, "levels", n.levels);
    get_to(j, "widths", n.widths);
    get_to(j, "cv_dim", n.cv_dim);
    get_to(j, "k_cv", n.k_cv);
    get_to(j, "k_conv", n.k_conv);
    get_to(j, "k_up", n.k_up);
    get_to(j, "k_loss", n.k_loss);
    get_to(j, "weightnet_out", n.weightnet_out);
    get_to(j, "weightnet_hidden", n.weightnet_hidden);
    get_to(j, "cost_hidden", n.cost_hidden);
    get_to(j, "w_hidden", n.w_hidden);
    get_to(j, "pred_conv_widths", n.pred_conv_widths);
    get_to(j, "head_hidden", n.head_hidden);
    get_to(j, "use_upsampled_feature", n.use_upsampled_feature);
    get_to(j, "use_predictor_feature", n.use_predictor_feature);
    get_to(j, "act_slope", n.act_slope);
}

void parse_loss(const json& j, LossConfig& l) {
    check_keys(j, "loss", {"mode", "alpha", "beta", "k_inter"});
    if (j.contains("mode")) {
        const auto m = j.at("mode").get<std::string>();
        if (m == "supervised") {
            l.mode = LossConfig::Mode::kSupervised;
        } else if (m == "self-supervised") {
            l.mode = LossConfig::Mode::kSelfSupervised;
        } else {
            throw ConfigError("config: loss.mode must be 'supervised' or 'self-supervised', got '" +
                              m + "'");
        }
    }
    get_to(j, "alpha", l.weights.alpha);
    if (j.contains("beta")) {
        std::vector<double> b;
        j.at("beta").get_to(b);
        if (b.size() != 3) throw ConfigError("config: loss.beta must list exactly 3 factors");
        l.weights.beta = {b[0], b[1], b[2]};
    }
    get_to(j, "k_inter", l.k_inter);
}

void parse_train(const json& j, TrainConfig& t) {
    check_keys(j, "train", {"lr", "steps", "seed", "checkpoint_every"});
    get_to(j, "lr", t.lr);
    get_to(j, "steps", t.steps);
    get_to(j, "seed", t.seed);
    get_to(j, "checkpoint_every", t.checkpoint_every);
}

void parse_data(const json& j, DataConfig& d) {
    check_keys(j, "data",
               {"kind", "n_points", "shape", "motion", "translation", "rotation_deg",
                "deform_amplitude", "noise_sigma", "extent", "objects", "seed", "num_pairs", "p",
                "q", "gt"});
    if (j.contains("kind")) {
        const auto k = j.at("kind").get<std::string>();
        if (k == "synthetic") {
            d.kind = DataConfig::Kind::kSynthetic;
        } else if (k == "files") {
            d.kind = DataConfig::Kind::kFiles;
        } else {
            throw ConfigError("config: data.kind must be 'synthetic' or 'files', got '" + k + "'");
        }
    }
    get_to(j, "n_points", d.spec.n_points);
    if (j.contains("shape")) d.spec.shape = harness::shape_from_string(j.at("shape").get<std::string>());
    if (j.contains("motion"))
        d.spec.motion = harness::motion_from_string(j.at("motion").get<std::string>());
    if (j.contains("translation")) {
        std::vector<double> t;
        j.at("translation").get_to(t);
        if (t.size() != 3) throw ConfigError("config: data.translation must list 3 components");
        d.spec.translation = {t[0], t[1], t[2]};
    }
    get_to(j, "rotation_deg", d.spec.rotation_deg);
    get_to(j, "deform_amplitude", d.spec.deform_amplitude);
    get_to(j, "noise_sigma", d.spec.noise_sigma);
    get_to(j, "extent", d.spec.extent);
    get_to(j, "objects", d.spec.objects);
    get_to(j, "seed", d.spec.seed);
    get_to(j, "num_pairs", d.num_pairs);
    get_to(j, "p", d.p_file);
    get_to(j, "q", d.q_file);
    get_to(j, "gt", d.gt_file);
}

} // namespace

void RunConfig::validate() const {
    network.validate();
    loss.weights.validate(network.levels);
    if (loss.k_inter < 1) throw ConfigError("config: loss.k_inter must be >= 1");
    if (train.lr < 0) throw ConfigError("config: train.lr must be >= 0");
    if (train.steps < 0) throw ConfigError("config: train.steps must be >= 0");
    if (train.checkpoint_every < 1) throw ConfigError("config: train.checkpoint_every must be >= 1");
    if (data.kind == DataConfig::Kind::kSynthetic) {
        data.spec.validate(network.min_points());
        if (data.num_pairs < 1) throw ConfigError("config: data.num_pairs must be >= 1");
    } else {
        if (data.p_file.empty() || data.q_file.empty()) {
            throw ConfigError("config: data.kind='files' requires 'p' and 'q' paths");
        }
        for (const std::string& f : {data.p_file, data.q_file}) {
            if (!std::filesystem::exists(f)) throw ConfigError("config: missing data file '" + f + "'");
        }
        if (!data.gt_file.empty() && !std::filesystem::exists(data.gt_file)) {
            throw ConfigError("config: missing data file '" + data.gt_file + "'");
        }
    }
}

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "", {"network", "loss", "train", "data"});
    RunConfig cfg;
    if (j.contains("network")) parse_network(j.at("network"), cfg.network);
    if (j.contains("loss")) parse_loss(j.at("loss"), cfg.loss);
    if (j.contains("train")) parse_train(j.at("train"), cfg.train);
    if (j.contains("data")) parse_data(j.at("data"), cfg.data);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const RunConfig& cfg) {
    json j;
    j["network"] = {{"levels", cfg.network.levels},
                    {"widths", cfg.network.widths},
                    {"cv_dim", cfg.network.cv_dim},
                    {"k_cv", cfg.network.k_cv},
                    {"k_conv", cfg.network.k_conv},
                    {"k_up", cfg.network.k_up},
                    {"k_loss", cfg.network.k_loss},
                    {"weightnet_out", cfg.network.weightnet_out},
                    {"weightnet_hidden", cfg.network.weightnet_hidden},
                    {"cost_hidden", cfg.network.cost_hidden},
                    {"w_hidden", cfg.network.w_hidden},
                    {"pred_conv_widths", cfg.network.pred_conv_widths},
                    {"head_hidden", cfg.network.head_hidden},
                    {"use_upsampled_feature", cfg.network.use_upsampled_feature},
                    {"use_predictor_feature", cfg.network.use_predictor_feature},
                    {"act_slope", cfg.network.act_slope}};
    j["loss"] = {{"mode", cfg.loss.mode == LossConfig::Mode::kSupervised ? "supervised"
                                                                         : "self-supervised"},
                 {"alpha", cfg.loss.weights.alpha},
                 {"beta", std::vector<double>{cfg.loss.weights.beta.begin(), cfg.loss.weights.beta.end()}},
                 {"k_inter", cfg.loss.k_inter}};
    j["train"] = {{"lr", cfg.train.lr},
                  {"steps", cfg.train.steps},
                  {"seed", cfg.train.seed},
                  {"checkpoint_every", cfg.train.checkpoint_every}};
    if (cfg.data.kind == DataConfig::Kind::kSynthetic) {
        j["data"] = {{"kind", "synthetic"},
                     {"n_points", cfg.data.spec.n_points},
                     {"shape", harness::to_string(cfg.data.spec.shape)},
                     {"motion", harness::to_string(cfg.data.spec.motion)},
                     {"translation", std::vector<double>{cfg.data.spec.translation.begin(),
                                                         cfg.data.spec.translation.end()}},
                     {"rotation_deg", cfg.data.spec.rotation_deg},
                     {"deform_amplitude", cfg.data.spec.deform_amplitude},
                     {"noise_sigma", cfg.data.spec.noise_sigma},
                     {"extent", cfg.data.spec.extent},
                     {"objects", cfg.data.spec.objects},
                     {"seed", cfg.data.spec.seed},
                     {"num_pairs", cfg.data.num_pairs}};
    } else {
        j["data"] = {{"kind", "files"}, {"p", cfg.data.p_file}, {"q", cfg.data.q_file}};
        if (!cfg.data.gt_file.empty()) j["data"]["gt"] = cfg.data.gt_file;
    }
    return j.dump(2);
}

} // namespace pcflow
