#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "conflictforge/config.hpp"
#include "conflictforge/live_backend.hpp"
#include "conflictforge/mock.hpp"
#include "conflictforge/pipeline.hpp"
#include "conflictforge/remote_judge.hpp"

namespace cf = conflictforge;
namespace fs = std::filesystem;

namespace {

struct CliOptions {
    std::string config_path;
    std::string run_dir = "runs/default";
    std::string dataset;
    std::string boolean_dataset;
    std::string endpoint;
    std::string judge;
    std::string templates_path;
    std::string kind;
    std::string order;
    std::string quantity;
    int irrelevant = -1;
    uint64_t seed = 0;
    bool seed_set = false;
    bool mock = false;
};

cf::RunConfig load_config(const CliOptions& opt, cf::mock::MockFixture* fixture) {
    cf::RunConfig cfg;
    if (opt.mock) {
        *fixture = cf::mock::build_mock_fixture(fs::path(opt.run_dir) / "fixture");
        cfg = fixture->cfg;
    } else if (!opt.config_path.empty()) {
        cfg = cf::RunConfig::from_ini(cf::IniFile::parse_file(opt.config_path));
    } else {
        throw cf::ConfigError("either --config or --mock is required");
    }
    if (!opt.dataset.empty()) cfg.entity_dataset = opt.dataset;
    if (!opt.boolean_dataset.empty()) cfg.boolean_dataset = opt.boolean_dataset;
    if (!opt.endpoint.empty()) cfg.subject_endpoint = opt.endpoint;
    if (!opt.judge.empty()) cfg.judge_kind = opt.judge;
    if (opt.seed_set) cfg.seed = opt.seed;

    if (!opt.kind.empty()) cfg.scenario_kinds = {opt.kind};
    if (!opt.order.empty()) {
        if (opt.order == "random") cfg.scenario_kinds = {"MultiSource"};
        else if (opt.order == "memory-first" || opt.order == "counter-first")
            cfg.scenario_kinds = {"OrderProbe"};
        else throw cf::ConfigError("--order must be memory-first, counter-first or random");
    }
    if (!opt.quantity.empty()) cfg.scenario_kinds = {"Quantity"};
    if (opt.irrelevant >= 0) cfg.scenario_kinds = {"IrrelevantMix"};
    return cfg;
}

cf::TemplateSet load_templates(const CliOptions& opt) {
    if (opt.templates_path.empty()) return cf::builtin_templates();
    std::ifstream in(opt.templates_path);
    if (!in) throw cf::ConfigError("cannot open templates file: " + opt.templates_path);
    nlohmann::json j;
    in >> j;
    return cf::templates_from_json(j);
}

std::unique_ptr<cf::Pipeline> make_pipeline(const CliOptions& opt) {
    auto fixture = std::make_shared<cf::mock::MockFixture>();
    cf::RunConfig cfg = load_config(opt, fixture.get());

    cf::Pipeline::BackendFactory factory;
    std::shared_ptr<cf::EntailmentJudge> judge;
    if (opt.mock) {
        factory = [fixture](const cf::EndpointConfig&) { return fixture->backend; };
        judge = fixture->judge;
    } else {
        factory = [](const cf::EndpointConfig&) { return std::make_shared<cf::LiveBackend>(); };
        if (cfg.judge_kind == "remote") {
            if (cfg.judge_url.empty()) throw cf::ConfigError("remote judge needs judge_url");
            judge = std::make_shared<cf::RemoteJudge>(cfg.judge_url);
        } else if (cfg.judge_kind == "llm") {
            // judge gateway is owned by the pipeline; construct lazily below
        } else {
            throw cf::ConfigError("judge must be remote or llm for live runs");
        }
    }

    auto pipeline = std::make_unique<cf::Pipeline>(cfg, fs::path(opt.run_dir), factory, judge,
                                                   load_templates(opt));
    if (!opt.mock && cfg.judge_kind == "llm") {
        // rebuild with an LLM judge bound to the pipeline's own judge endpoint
        auto& gw = pipeline->gateway(cfg.judge_endpoint);
        judge = std::make_shared<cf::LlmJudge>(gw);
        pipeline = std::make_unique<cf::Pipeline>(cfg, fs::path(opt.run_dir), factory, judge,
                                                  load_templates(opt));
    }
    return pipeline;
}

void print_summary(const cf::RunSummary& summary) {
    for (auto& s : summary.stages) {
        std::cout << s.stage << ": " << s.count;
        if (!s.path.empty()) std::cout << "  -> " << s.path;
        std::cout << "\n";
    }
    auto j = summary.funnel.to_json();
    std::cout << "funnel: " << j.dump() << "\n";
}

int run_stage(const CliOptions& opt, const std::string& stage) {
    auto pipeline = make_pipeline(opt);
    if (stage == "all" || stage == "run") {
        print_summary(pipeline->run_all());
        return 0;
    }
    std::cout << "ingest: " << pipeline->ingest() << "\n";
    for (auto& d : pipeline->diagnostics()) std::cerr << "rejected record: " << d << "\n";
    if (stage == "ingest") return 0;
    std::cout << "elicit: " << pipeline->elicit_stage() << "\n";
    if (stage == "elicit") return 0;
    std::cout << "forge: " << pipeline->forge_stage() << "\n";
    if (stage == "forge") return 0;
    auto funnel = pipeline->filter_stage();
    std::cout << "filter: " << funnel.to_json().dump() << "\n";
    if (stage == "filter") return 0;
    std::cout << "scenarios: " << pipeline->scenario_stage() << "\n";
    pipeline->report_stage();
    std::cout << "report written to " << (fs::path(opt.run_dir) / "report").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-conflict evaluation harness"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "run configuration (INI)");
    app.add_option("--run-dir", opt.run_dir, "run directory (cache, stages, report)");
    app.add_option("--seed", opt.seed, "global seed override")->each([&](const std::string&) {
        opt.seed_set = true;
    });
    app.add_option("--endpoint", opt.endpoint, "subject endpoint name");
    app.add_option("--judge", opt.judge, "judge kind: remote | llm");
    app.add_option("--templates", opt.templates_path, "relation template JSON override");
    app.add_flag("--mock", opt.mock, "use the bundled scripted fixture (no network)");

    std::string stage;
    for (const char* name : {"ingest", "elicit", "forge", "filter", "run", "report", "all"}) {
        auto* sub = app.add_subcommand(name, std::string("run through the ") + name + " stage");
        sub->fallthrough();  // allow global flags after the subcommand
        sub->callback([&stage, name] { stage = name; });
        if (std::string(name) == "elicit" || std::string(name) == "ingest") {
            sub->add_option("--dataset", opt.dataset, "entity dataset (JSONL)");
            sub->add_option("--boolean-dataset", opt.boolean_dataset, "boolean dataset (JSONL)");
        }
        if (std::string(name) == "run") {
            sub->add_option("--kind", opt.kind, "scenario kind");
            sub->add_option("--order", opt.order, "memory-first | counter-first | random");
            sub->add_option("--quantity", opt.quantity, "n_mem:n_ctr vote split");
            sub->add_option("--irrelevant", opt.irrelevant, "irrelevant evidence count");
        }
    }
    auto* tmpl = app.add_subcommand("templates", "export the built-in relation templates");
    tmpl->fallthrough();
    std::string tmpl_out = "templates.json";
    tmpl->add_option("--out", tmpl_out, "output path");
    tmpl->callback([&stage] { stage = "templates"; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (stage == "templates") {
            std::ofstream out(tmpl_out);
            out << cf::templates_to_json(cf::builtin_templates()).dump(2) << "\n";
            std::cout << "wrote " << tmpl_out << "\n";
            return 0;
        }
        return run_stage(opt, stage);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
