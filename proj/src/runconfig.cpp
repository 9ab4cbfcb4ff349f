#include "camse/runconfig.hpp"

#include <fstream>
#include <set>

#include "camse/errors.hpp"

namespace camse {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& scope, const std::set<std::string>& known) {
    for (const auto& [key, _] : obj.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown config key: " + (scope.empty() ? key : scope + "." + key));
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

ScoreMode parse_mode(const std::string& s) {
    if (s == "sms+sas") return ScoreMode::sms_sas;
    if (s == "sms") return ScoreMode::sms_only;
    if (s == "sas") return ScoreMode::sas_only;
    throw ConfigError("score_mode must be one of sms+sas, sms, sas; got '" + s + "'");
}

std::string mode_name(ScoreMode m) {
    switch (m) {
        case ScoreMode::sms_sas: return "sms+sas";
        case ScoreMode::sms_only: return "sms";
        case ScoreMode::sas_only: return "sas";
    }
    return "sms+sas";
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be an object");
    reject_unknown(j, "", {"model", "train", "paths"});
    RunConfig cfg;

    if (j.contains("model")) {
        const json& m = j.at("model");
        reject_unknown(m, "model",
                       {"scales", "subspaces", "embedding_dim", "context_units", "attention_units",
                        "attention_hidden", "gate_hidden", "dropout", "sas_bias", "score_mode",
                        "statement_separator", "fine_tune_embeddings"});
        read(m, "scales", cfg.model.camse.scales);
        read(m, "subspaces", cfg.model.camse.subspaces);
        read(m, "embedding_dim", cfg.model.camse.embed_dim);
        read(m, "context_units", cfg.model.camse.context_units);
        cfg.model.camse.attention_units = cfg.model.camse.context_units;  // default u2 = u1
        read(m, "attention_units", cfg.model.camse.attention_units);
        read(m, "attention_hidden", cfg.model.camse.attention_hidden);
        read(m, "gate_hidden", cfg.model.gate_hidden);
        read(m, "dropout", cfg.model.camse.dropout);
        read(m, "sas_bias", cfg.model.sas_bias);
        read(m, "statement_separator", cfg.model.statement_separator);
        read(m, "fine_tune_embeddings", cfg.model.fine_tune_embeddings);
        if (m.contains("score_mode")) {
            cfg.model.score_mode = parse_mode(m.at("score_mode").get<std::string>());
        }
    }

    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown(t, "train",
                       {"batch_size", "epochs", "learning_rate", "lr_decay", "adam_beta1",
                        "adam_beta2", "adam_epsilon", "seed", "max_statement_tokens",
                        "max_document_tokens", "evidence_cap", "dev_fraction",
                        "early_stop_dev_accuracy", "checkpoint_dtype"});
        read(t, "batch_size", cfg.train.batch_size);
        read(t, "epochs", cfg.train.epochs);
        read(t, "learning_rate", cfg.train.learning_rate);
        read(t, "lr_decay", cfg.train.lr_decay);
        read(t, "adam_beta1", cfg.train.adam_beta1);
        read(t, "adam_beta2", cfg.train.adam_beta2);
        read(t, "adam_epsilon", cfg.train.adam_epsilon);
        read(t, "seed", cfg.train.seed);
        read(t, "max_statement_tokens", cfg.train.limits.max_statement_tokens);
        read(t, "max_document_tokens", cfg.train.limits.max_document_tokens);
        read(t, "evidence_cap", cfg.train.limits.evidence_cap);
        read(t, "dev_fraction", cfg.dev_fraction);
        read(t, "early_stop_dev_accuracy", cfg.train.early_stop_dev_accuracy);
        if (t.contains("checkpoint_dtype")) {
            const std::string dt = t.at("checkpoint_dtype").get<std::string>();
            if (dt == "f32") {
                cfg.checkpoint_dtype = CheckpointDtype::f32;
            } else if (dt == "f64") {
                cfg.checkpoint_dtype = CheckpointDtype::f64;
            } else {
                throw ConfigError("checkpoint_dtype must be f32 or f64, got '" + dt + "'");
            }
        }
    }

    if (j.contains("paths")) {
        const json& p = j.at("paths");
        reject_unknown(p, "paths",
                       {"embeddings", "train_data", "dev_data", "test_data", "checkpoint",
                        "metrics_log", "index"});
        read(p, "embeddings", cfg.paths.embeddings);
        read(p, "train_data", cfg.paths.train_data);
        read(p, "dev_data", cfg.paths.dev_data);
        read(p, "test_data", cfg.paths.test_data);
        read(p, "checkpoint", cfg.paths.checkpoint);
        read(p, "metrics_log", cfg.paths.metrics_log);
        read(p, "index", cfg.paths.index);
    }

    if (cfg.dev_fraction < 0.0 || cfg.dev_fraction >= 1.0) {
        throw ConfigError("dev_fraction must be in [0, 1)");
    }
    if (cfg.train.limits.max_statement_tokens < cfg.model.camse.scales ||
        cfg.train.limits.max_document_tokens < cfg.model.camse.scales) {
        throw ConfigError("truncation limits must be at least the largest convolution window");
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    return from_json(j);
}

json RunConfig::to_json() const {
    json m;
    m["scales"] = model.camse.scales;
    m["subspaces"] = model.camse.subspaces;
    m["embedding_dim"] = model.camse.embed_dim;
    m["context_units"] = model.camse.context_units;
    m["attention_units"] = model.camse.attention_units;
    m["attention_hidden"] = model.camse.attention_hidden;
    m["gate_hidden"] = model.gate_hidden;
    m["dropout"] = model.camse.dropout;
    m["sas_bias"] = model.sas_bias;
    m["score_mode"] = mode_name(model.score_mode);
    m["statement_separator"] = model.statement_separator;
    m["fine_tune_embeddings"] = model.fine_tune_embeddings;

    json t;
    t["batch_size"] = train.batch_size;
    t["epochs"] = train.epochs;
    t["learning_rate"] = train.learning_rate;
    t["lr_decay"] = train.lr_decay;
    t["adam_beta1"] = train.adam_beta1;
    t["adam_beta2"] = train.adam_beta2;
    t["adam_epsilon"] = train.adam_epsilon;
    t["seed"] = train.seed;
    t["max_statement_tokens"] = train.limits.max_statement_tokens;
    t["max_document_tokens"] = train.limits.max_document_tokens;
    t["evidence_cap"] = train.limits.evidence_cap;
    t["dev_fraction"] = dev_fraction;
    t["early_stop_dev_accuracy"] = train.early_stop_dev_accuracy;
    t["checkpoint_dtype"] = checkpoint_dtype == CheckpointDtype::f32 ? "f32" : "f64";

    json p;
    p["embeddings"] = paths.embeddings;
    p["train_data"] = paths.train_data;
    p["dev_data"] = paths.dev_data;
    p["test_data"] = paths.test_data;
    p["checkpoint"] = paths.checkpoint;
    p["metrics_log"] = paths.metrics_log;
    p["index"] = paths.index;

    json root;
    root["model"] = std::move(m);
    root["train"] = std::move(t);
    root["paths"] = std::move(p);
    return root;
}

}  // namespace camse
