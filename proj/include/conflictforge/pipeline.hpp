#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "conflictforge/config.hpp"
#include "conflictforge/corpus.hpp"
#include "conflictforge/counterforge.hpp"
#include "conflictforge/elicitation.hpp"
#include "conflictforge/filters.hpp"
#include "conflictforge/gateway.hpp"
#include "conflictforge/metrics.hpp"
#include "conflictforge/scenarios.hpp"

namespace conflictforge {

namespace detail {

inline uint64_t mix_seed(uint64_t seed, const std::string& id) {
    uint64_t h = seed ^ 0xc2b2ae3d27d4eb4full;
    for (unsigned char c : id) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string format4(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << v;
    return ss.str();
}

}  // namespace detail

/// Everything scenario construction needs, independent of how evidence
/// generation is backed (live gateway vs scripted fixture).
struct BatteryContext {
    const std::vector<SourceQuestion>* questions = nullptr;
    const std::map<std::string, CounterRecord>* counters = nullptr;
    const std::vector<ConflictExample>* kept = nullptr;
    const RunConfig* cfg = nullptr;
    const TemplateSet* templates = nullptr;
    Embedder* embedder = nullptr;
    // produces one extra memory-side supporting passage for quantity scenarios
    std::function<std::string(const ConflictExample&)> memory_extra;

    const SourceQuestion* find_question(const std::string& id) const {
        for (auto& q : *questions)
            if (q.id == id) return &q;
        return nullptr;
    }
};

inline std::vector<std::string> battery_excluded_entities(const BatteryContext& ctx,
                                                          const ConflictExample& ex) {
    std::vector<std::string> out;
    if (const SourceQuestion* q = ctx.find_question(ex.question_id))
        for (auto& alias : q->ground_truth) out.push_back(alias);
    if (auto it = ctx.counters->find(ex.question_id);
        it != ctx.counters->end() && it->second.counter_object)
        out.push_back(*it->second.counter_object);
    return out;
}

/// Same-question-type sentence pool for irrelevant retrieval: leading
/// sentences of other kept examples' parametric memories, with their
/// triples for option rendering.
inline std::vector<IrrelevantCandidate> battery_irrelevant_corpus(const BatteryContext& ctx,
                                                                  const std::string& skip_id) {
    std::vector<IrrelevantCandidate> corpus;
    for (auto& other : *ctx.kept) {
        if (other.question_id == skip_id) continue;
        const SourceQuestion* oq = ctx.find_question(other.question_id);
        if (!oq || oq->kind != QuestionKind::Entity || !oq->triple) continue;
        std::string sentence = other.parametric_memory;
        if (auto dot = sentence.find(". "); dot != std::string::npos)
            sentence = sentence.substr(0, dot + 1);
        corpus.push_back({sentence, *oq->triple});
    }
    return corpus;
}

inline std::vector<Scenario> build_battery(const BatteryContext& ctx, const std::string& kind) {
    std::vector<Scenario> out;
    for (auto& ex : *ctx.kept) {
        uint64_t opt_seed = detail::mix_seed(ctx.cfg->options_seed, ex.question_id);
        uint64_t ord_seed = detail::mix_seed(ctx.cfg->order_seed, ex.question_id);
        const CounterRecord* cr = nullptr;
        if (auto it = ctx.counters->find(ex.question_id); it != ctx.counters->end())
            cr = &it->second;
        const SourceQuestion* q = ctx.find_question(ex.question_id);

        if (kind == "SingleSource") {
            out.push_back(scenario_single_source(ex, SingleSourceVariant::Generation, std::nullopt,
                                                 opt_seed));
            if (cr && cr->substituted_memory)
                out.push_back(scenario_single_source(ex, SingleSourceVariant::Substitution,
                                                     cr->substituted_memory, opt_seed));
        } else if (kind == "MultiSource") {
            out.push_back(scenario_multi_source(ex, OrderPolicy::Random, ord_seed));
        } else if (kind == "OrderProbe") {
            out.push_back(scenario_multi_source(ex, OrderPolicy::MemoryFirst, opt_seed));
            out.push_back(scenario_multi_source(ex, OrderPolicy::CounterFirst, opt_seed));
        } else if (kind == "AnswerAsEvidence") {
            out.push_back(scenario_answer_as_evidence(ex, EvidenceSide::MemorySide, opt_seed));
            out.push_back(scenario_answer_as_evidence(ex, EvidenceSide::CounterSide, opt_seed));
        } else if (kind == "Quantity") {
            ExtraEvidencePool pool;
            if (cr && cr->substituted_memory)
                pool.counter_side.push_back(make_evidence(*cr->substituted_memory,
                                                          Stance::SupportsCounter,
                                                          Origin::Substituted));
            pool.memory_side.push_back(make_evidence(ctx.memory_extra(ex), Stance::SupportsMemory,
                                                     Origin::Generated));
            for (auto [nm, nc] : {std::pair{1, 1}, {2, 1}, {1, 2}, {2, 2}}) {
                if (nm == 2 && pool.memory_side.empty()) continue;
                if (nc == 2 && pool.counter_side.empty()) continue;
                out.push_back(scenario_quantity(ex, nm, nc, pool,
                                                ord_seed + uint64_t(nm) * 10 + uint64_t(nc)));
            }
        } else if (kind == "IrrelevantMix") {
            auto corpus = battery_irrelevant_corpus(ctx, ex.question_id);
            auto excluded = battery_excluded_entities(ctx, ex);
            for (auto [nr, ni] : {std::pair{0, 3}, {1, 2}, {2, 1}}) {
                try {
                    out.push_back(scenario_irrelevant(ex, nr, ni, corpus, *ctx.embedder,
                                                      ord_seed + uint64_t(nr) * 10 + uint64_t(ni),
                                                      excluded, *ctx.templates));
                } catch (const CorpusTooSmall&) {
                    // not enough same-type sentences survive exclusion
                }
            }
        } else if (kind == "Fragmented") {
            if (q && q->kind == QuestionKind::Boolean && q->facts.size() >= 2)
                out.push_back(
                    scenario_fragmented(ex, q->facts, EvidenceSide::MemorySide, ord_seed));
        } else {
            throw ConfigError("unknown scenario kind: " + kind);
        }
    }
    return out;
}

struct StageSummary {
    std::string stage;
    size_t count = 0;
    std::string path;
};

struct RunSummary {
    std::vector<StageSummary> stages;
    FunnelStats funnel;
};

/// Renders the per-kind answer-distribution table. Kept separate from file
/// IO so count fixtures can be rendered directly in tests.
inline std::string render_tables_csv(const std::map<std::string, ChoiceCounts>& per_kind) {
    std::string csv = "kind,f_m,f_c,f_u,f_x,frac_m,frac_c,frac_u,M_R\n";
    for (auto& [kind, c] : per_kind) {
        size_t total = c.total();
        double fm = total ? static_cast<double>(c.memory) / total : 0.0;
        double fc = total ? static_cast<double>(c.counter) / total : 0.0;
        double fu = total ? static_cast<double>(c.uncertain) / total : 0.0;
        auto mr = c.ratio();
        csv += kind + "," + std::to_string(c.memory) + "," + std::to_string(c.counter) + "," +
               std::to_string(c.uncertain) + "," + std::to_string(c.other) + "," +
               detail::format4(fm) + "," + detail::format4(fc) + "," + detail::format4(fu) + "," +
               (mr ? detail::format4(*mr) : "null") + "\n";
    }
    return csv;
}

class Pipeline {
public:
    using BackendFactory =
        std::function<std::shared_ptr<ChatBackend>(const EndpointConfig&)>;

    Pipeline(RunConfig cfg, std::filesystem::path run_dir, BackendFactory factory,
             std::shared_ptr<EntailmentJudge> judge,
             TemplateSet templates = builtin_templates())
        : cfg_(std::move(cfg)),
          run_dir_(std::move(run_dir)),
          factory_(std::move(factory)),
          judge_(std::move(judge)),
          templates_(std::move(templates)) {
        cfg_.validate();
        std::filesystem::create_directories(run_dir_ / "steps");
    }

    const RunConfig& config() const { return cfg_; }
    const std::filesystem::path& run_dir() const { return run_dir_; }
    const std::vector<SourceQuestion>& questions() const { return questions_; }
    const std::vector<ConflictExample>& kept() const { return kept_; }
    const FunnelStats& funnel() const { return funnel_; }

    Gateway& gateway(const std::string& endpoint_name) {
        auto it = gateways_.find(endpoint_name);
        if (it != gateways_.end()) return *it->second;
        const auto& ep = cfg_.endpoint(endpoint_name);
        auto gw = std::make_unique<Gateway>(run_dir_ / "cache", factory_(ep), ep);
        return *gateways_.emplace(endpoint_name, std::move(gw)).first->second;
    }

    // ---- stage: ingest ----------------------------------------------------

    size_t ingest() {
        questions_.clear();
        auto take = [&](LoadResult&& res, const std::string& what) {
            for (auto& d : res.diagnostics)
                diagnostics_.push_back(what + ":" + std::to_string(d.line) + " " + d.code + " " +
                                       d.detail);
            for (auto& q : res.questions) questions_.push_back(std::move(q));
        };
        if (!cfg_.entity_dataset.empty())
            take(load_entity_dataset(cfg_.entity_dataset), "entity");
        if (!cfg_.boolean_dataset.empty())
            take(load_boolean_dataset(cfg_.boolean_dataset), "boolean");
        if (questions_.empty() && !diagnostics_.empty())
            throw ConfigError("all dataset records were rejected");
        catalog_ = build_entity_catalog(questions_);
        return questions_.size();
    }

    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

    // ---- stage: elicit ----------------------------------------------------

    size_t elicit_stage() {
        auto path = run_dir_ / "steps" / "1_elicitation.jsonl";
        elicitations_.clear();
        auto& gw = gateway(cfg_.subject_endpoint);
        std::ofstream out(path);
        for (auto& q : questions_) {
            auto rec = elicit(q, gw);
            nlohmann::json j = {{"question_id", rec.question_id},
                                {"raw_response", rec.raw_response},
                                {"memory_answer", rec.memory_answer},
                                {"parametric_memory", rec.parametric_memory},
                                {"verdict", to_string(rec.verdict)}};
            out << j.dump() << "\n";
            elicitations_[q.id] = std::move(rec);
        }
        return elicitations_.size();
    }

    // ---- stage: forge -----------------------------------------------------

    size_t forge_stage(bool with_substitution = true) {
        auto path = run_dir_ / "steps" / "2_counter.jsonl";
        counters_.clear();
        auto& gen = gateway(cfg_.generator_endpoint);
        std::ofstream out(path);
        for (auto& q : questions_) {
            auto it = elicitations_.find(q.id);
            if (it == elicitations_.end()) continue;
            const auto& rec = it->second;
            if (rec.verdict != Verdict::Correct && rec.verdict != Verdict::Wrong) continue;

            CounterRecord cr;
            cr.question_id = q.id;
            uint64_t seed = detail::mix_seed(cfg_.seed, q.id);
            if (q.kind == QuestionKind::Entity) {
                auto [obj, claim] = make_counter_answer_entity(q, rec, catalog_, seed, templates_);
                cr.counter_object = obj;
                cr.counter_answer_claim = claim;
                cr.method = CounterMethod::Generation;
                cr.counter_memory = generate_counter_memory(claim, gen);
                if (with_substitution) {
                    try {
                        auto sub = substitute_in_memory(rec.parametric_memory, q.ground_truth, obj);
                        cr.substituted_memory = sub.text;
                    } catch (const NoMentionFound&) {
                        // passage never names the answer entity; substitution
                        // variant simply unavailable for this item
                    }
                }
            } else {
                auto pair = make_claim_pair_boolean(q, gen);
                bool memory_true = text::has_word(rec.memory_answer, "true");
                auto sided = assign_claims(pair, memory_true);
                cr.memory_claim = sided.memory_claim;
                cr.counter_answer_claim = sided.counter_claim;
                cr.method = CounterMethod::Generation;
                cr.counter_memory = generate_counter_memory(sided.counter_claim, gen);
            }
            nlohmann::json j = {{"question_id", cr.question_id},
                                {"counter_answer_claim", cr.counter_answer_claim},
                                {"method", to_string(cr.method)},
                                {"counter_memory", cr.counter_memory}};
            if (cr.counter_object) j["counter_object"] = *cr.counter_object;
            if (cr.memory_claim) j["memory_claim"] = *cr.memory_claim;
            if (cr.substituted_memory) j["substituted_memory"] = *cr.substituted_memory;
            out << j.dump() << "\n";
            counters_[q.id] = std::move(cr);
        }
        return counters_.size();
    }

    // ---- stage: filter ----------------------------------------------------

    FunnelStats filter_stage() {
        std::vector<PipelineItem> items;
        for (auto& q : questions_) {
            auto e = elicitations_.find(q.id);
            if (e == elicitations_.end()) continue;
            PipelineItem item;
            item.question = q;
            item.elicitation = e->second;
            if (auto c = counters_.find(q.id); c != counters_.end()) item.counter = c->second;
            items.push_back(std::move(item));
        }

        auto& gw = gateway(cfg_.subject_endpoint);
        std::ofstream consistency_out(run_dir_ / "steps" / "4_consistency.jsonl");
        auto consistent = [&](const PipelineItem& item) {
            bool ok = check_consistency(item.question, item.elicitation, gw);
            nlohmann::json j = {{"question_id", item.question.id}, {"consistent", ok}};
            consistency_out << j.dump() << "\n";
            return ok;
        };

        verdict_log_.clear();
        auto outcome = run_funnel(items, *judge_, consistent, &verdict_log_);

        std::ofstream entail_out(run_dir_ / "steps" / "3_entailment.jsonl");
        for (auto& v : verdict_log_) {
            nlohmann::json j = {{"premise", v.premise},
                                {"hypothesis", v.hypothesis},
                                {"label", to_string(v.label)},
                                {"score", v.score}};
            entail_out << j.dump() << "\n";
        }

        std::ofstream examples_out(run_dir_ / "examples.jsonl");
        for (auto& q : questions_) {
            for (auto& ex : outcome.all) {
                if (ex.question_id != q.id) continue;
                nlohmann::json j = {{"question_id", ex.question_id},
                                    {"question", ex.question},
                                    {"memory_answer", ex.memory_answer},
                                    {"parametric_memory", ex.parametric_memory},
                                    {"counter_answer_claim", ex.counter_answer_claim},
                                    {"counter_memory", ex.counter_memory},
                                    {"funnel_status", to_string(ex.funnel_status)}};
                if (ex.popularity) j["popularity"] = *ex.popularity;
                examples_out << j.dump() << "\n";
            }
        }

        std::ofstream funnel_out(run_dir_ / "funnel.json");
        funnel_out << outcome.stats.to_json().dump(2) << "\n";

        kept_ = outcome.kept;
        funnel_ = outcome.stats;
        return funnel_;
    }

    const std::vector<EntailmentVerdict>& verdict_log() const { return verdict_log_; }

    // ---- stage: scenarios + trials ----------------------------------------

    size_t scenario_stage() {
        std::filesystem::create_directories(run_dir_ / "scenarios");
        std::filesystem::create_directories(run_dir_ / "trials");
        auto& gw = gateway(cfg_.subject_endpoint);
        size_t total = 0;
        for (auto& kind : cfg_.scenario_kinds) {
            auto scenarios = build_scenarios_for_kind(kind);
            std::ofstream sout(run_dir_ / "scenarios" / (kind + ".jsonl"));
            std::ofstream tout(run_dir_ / "trials" / (kind + ".jsonl"));
            for (auto& s : scenarios) {
                sout << to_json(s).dump() << "\n";
                auto trial = execute(s, gw);
                tout << to_json(trial).dump() << "\n";
                trials_[kind].push_back(trial);
                scenarios_[kind].push_back(s);
                ++total;
            }
        }
        return total;
    }

    const std::map<std::string, std::vector<TrialResult>>& trials() const { return trials_; }
    const std::map<std::string, std::vector<Scenario>>& scenarios() const { return scenarios_; }

    std::vector<Scenario> build_scenarios_for_kind(const std::string& kind) {
        BatteryContext ctx;
        ctx.questions = &questions_;
        ctx.counters = &counters_;
        ctx.kept = &kept_;
        ctx.cfg = &cfg_;
        ctx.templates = &templates_;
        ctx.embedder = &embedder_;
        ctx.memory_extra = [this](const ConflictExample& ex) {
            return generate_counter_memory(ex.memory_answer, gateway(cfg_.generator_endpoint));
        };
        return build_battery(ctx, kind);
    }

    // ---- stage: report ----------------------------------------------------

    void report_stage() {
        for (auto& kind : cfg_.scenario_kinds)
            if (!trials_.count(kind)) throw IncompleteRun("missing trials for " + kind);

        auto report_dir = run_dir_ / "report";
        std::filesystem::create_directories(report_dir / "series");

        std::map<std::string, ChoiceCounts> per_kind;
        for (auto& [kind, trials] : trials_)
            for (auto& t : trials) per_kind[kind].add(t.choice);

        nlohmann::json metrics;
        for (auto& [kind, counts] : per_kind) metrics["per_kind"][kind] = to_json(counts);
        metrics["funnel"] = funnel_.to_json();

        // popularity buckets over multi-source trials on entity questions
        if (auto series = popularity_series()) {
            metrics["popularity"] = series->first;
            write_file(report_dir / "series" / "popularity.csv", series->second);
        }
        write_quantity_series(report_dir);
        write_irrelevant_series(report_dir);

        write_file(report_dir / "metrics.json", metrics.dump(2) + "\n");
        write_file(report_dir / "tables.csv", render_tables_csv(per_kind));
    }

    RunSummary run_all() {
        RunSummary summary;
        auto record = [&](const std::string& stage, size_t n, const std::string& p) {
            summary.stages.push_back({stage, n, p});
        };
        record("ingest", ingest(), "");
        record("elicit", elicit_stage(), (run_dir_ / "steps" / "1_elicitation.jsonl").string());
        record("forge", forge_stage(), (run_dir_ / "steps" / "2_counter.jsonl").string());
        summary.funnel = filter_stage();
        record("filter", summary.funnel.final_count, (run_dir_ / "funnel.json").string());
        record("scenarios", scenario_stage(), (run_dir_ / "trials").string());
        report_stage();
        record("report", per_kind_total(), (run_dir_ / "report").string());
        return summary;
    }

private:
    size_t per_kind_total() const {
        size_t n = 0;
        for (auto& [_, t] : trials_) n += t.size();
        return n;
    }

    const SourceQuestion* find_question(const std::string& id) const {
        for (auto& q : questions_)
            if (q.id == id) return &q;
        return nullptr;
    }

    std::optional<std::pair<nlohmann::json, std::string>> popularity_series() {
        auto it = trials_.find("MultiSource");
        if (it == trials_.end()) return std::nullopt;
        std::vector<ConflictExample> examples;
        std::vector<Choice> choices;
        auto& scen = scenarios_["MultiSource"];
        for (size_t i = 0; i < it->second.size() && i < scen.size(); ++i) {
            const ConflictExample* ex = nullptr;
            for (auto& k : kept_)
                if (k.question_id == scen[i].question_id) ex = &k;
            if (!ex || !ex->popularity) continue;
            examples.push_back(*ex);
            choices.push_back(it->second[i].choice);
        }
        if (examples.empty()) return std::nullopt;
        auto pb = bucket_popularity(examples, choices, cfg_.popularity_edges);
        std::string csv = "log10_popularity_lo,M_R\n";
        for (size_t i = 0; i + 1 < pb.edges.size(); ++i) {
            auto r = pb.buckets[i].ratio();
            csv += detail::format4(pb.edges[i]) + "," + (r ? detail::format4(*r) : "null") + "\n";
        }
        return std::make_pair(to_json(pb), csv);
    }

    void write_quantity_series(const std::filesystem::path& report_dir) {
        auto it = trials_.find("Quantity");
        if (it == trials_.end()) return;
        std::map<int, ChoiceCounts> by_balance;  // n_mem - n_ctr
        auto& scen = scenarios_["Quantity"];
        for (size_t i = 0; i < it->second.size() && i < scen.size(); ++i) {
            int nm = scen[i].params.value("n_mem", 0);
            int nc = scen[i].params.value("n_ctr", 0);
            by_balance[nm - nc].add(it->second[i].choice);
        }
        std::string csv = "evidence_balance,M_R\n";
        for (auto& [bal, counts] : by_balance) {
            auto r = counts.ratio();
            csv += std::to_string(bal) + "," + (r ? detail::format4(*r) : "null") + "\n";
        }
        write_file(report_dir / "series" / "quantity.csv", csv);
    }

    void write_irrelevant_series(const std::filesystem::path& report_dir) {
        auto it = trials_.find("IrrelevantMix");
        if (it == trials_.end()) return;
        std::map<int, ChoiceCounts> by_irrelevant;
        auto& scen = scenarios_["IrrelevantMix"];
        for (size_t i = 0; i < it->second.size() && i < scen.size(); ++i)
            by_irrelevant[scen[i].params.value("n_irrelevant", 0)].add(it->second[i].choice);
        std::string csv = "n_irrelevant,M_R\n";
        for (auto& [n, counts] : by_irrelevant) {
            auto r = counts.ratio();
            csv += std::to_string(n) + "," + (r ? detail::format4(*r) : "null") + "\n";
        }
        write_file(report_dir / "series" / "irrelevant.csv", csv);
    }

    static void write_file(const std::filesystem::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        out << content;
    }

    RunConfig cfg_;
    std::filesystem::path run_dir_;
    BackendFactory factory_;
    std::shared_ptr<EntailmentJudge> judge_;
    TemplateSet templates_;
    HashingEmbedder embedder_;

    std::vector<SourceQuestion> questions_;
    std::vector<std::string> diagnostics_;
    EntityCatalog catalog_;
    std::map<std::string, ElicitationRecord> elicitations_;
    std::map<std::string, CounterRecord> counters_;
    std::vector<ConflictExample> kept_;
    std::vector<EntailmentVerdict> verdict_log_;
    FunnelStats funnel_;
    std::map<std::string, std::vector<Scenario>> scenarios_;
    std::map<std::string, std::vector<TrialResult>> trials_;
    std::map<std::string, std::unique_ptr<Gateway>> gateways_;
};

}  // namespace conflictforge
