#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "nete/batch.hpp"
#include "nete/cli.hpp"
#include "nete/corpus.hpp"
#include "nete/curvature.hpp"
#include "nete/error.hpp"
#include "nete/evaluation.hpp"
#include "nete/injection.hpp"
#include "nete/json_writer.hpp"

namespace nete::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Exit code 2: the run finished but some items failed.
struct PartialFailure {};

void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << content;
    if (!f) throw IoError("write failed for " + path);
}

std::optional<std::string> scorer_url_from_env() {
    if (const char* v = std::getenv(scorer_url_env); v && *v) return std::string(v);
    return std::nullopt;
}

void add_run_flags(CLI::App* app, RunFlags& f, bool with_methods) {
    app->add_option("--seed", f.seed, "Global seed (default 0)");
    app->add_option("--k", f.k, "Perturbations per sample (default 50)");
    app->add_option("--mask-ratio", f.mask_ratio, "Fraction of words masked per perturbation (default 0.10)");
    app->add_option("--span", f.max_span, "Maximum masked span length in words (default 2)");
    app->add_option("--scorer", f.scorer, "Scorer spec: builtin:ngram?order=2&alpha=1&corpus=PATH | remote:URL");
    app->add_option("--filler", f.filler, "Filler spec: builtin:ngram?... | builtin:unigram?... | remote:URL");
    if (with_methods) {
        app->add_option("--method", f.methods, "Methods: nete,log,rank,logrank,entropy,onion");
        app->add_option("--threshold", f.thresholds, "Decision threshold: VALUE (nete) or METHOD=VALUE");
    }
    app->add_option("--parallelism", f.parallelism, "Worker threads over samples (default 1)");
    app->add_option("--timeout", f.timeout_seconds, "Remote request timeout in seconds (default 30)");
    app->add_option("--max-in-flight", f.max_in_flight, "Concurrent remote requests (default 4)");
    app->add_option("--retries", f.retries, "Attempts per remote request (default 3)");
    app->add_option("--candidates", f.candidates, "Remote fill candidates per request (default 1)");
    app->add_option("--bins", f.bins, "Histogram bins (default 20)");
    app->add_option("--config", f.config_path, "JSON config file; flags override it");
}

BatchConfig batch_config(const RunConfig& rc) {
    BatchConfig bc;
    bc.k = rc.k;
    bc.options = rc.perturb_options();
    bc.seed = rc.seed;
    bc.parallelism = rc.parallelism;
    return bc;
}

std::vector<Sample> load_nonempty(const std::string& path) {
    auto samples = load_jsonl(path);
    if (samples.empty()) throw InvalidArgument(path + " contains no samples");
    return samples;
}

// --- score -----------------------------------------------------------------

struct ScoreArgs {
    RunFlags flags;
    std::string input;
    std::string text;
    std::string output;
};

void cmd_score(const ScoreArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig rc = resolve_config(a.flags, scorer_url_from_env());
    rc.validate();
    if (a.input.empty() == a.text.empty()) throw InvalidArgument("give exactly one of an input file or --text");
    ModelFactory factory;
    const auto scorer = factory.scorer(rc.scorer, rc.http_options());

    std::vector<Sample> samples;
    if (!a.text.empty()) {
        samples.push_back(Sample{"text", a.text, Label::unknown, std::nullopt, nlohmann::json::object()});
    } else {
        samples = load_nonempty(a.input);
    }
    std::vector<Outcome<ScoreResult>> results(samples.size());
    const auto n = static_cast<std::int64_t>(samples.size());
#pragma omp parallel for schedule(dynamic) num_threads(rc.parallelism)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            results[i].value = scorer->score(samples[i].text);
        } catch (const std::exception& e) {
            results[i].error = e.what();
        }
    }
    nlohmann::json rows = nlohmann::json::array();
    std::size_t failures = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        nlohmann::json row{{"id", samples[i].id}};
        if (results[i].ok()) {
            row["result"] = to_json(*results[i].value);
        } else {
            row["error"] = results[i].error;
            err << "error: sample " << samples[i].id << ": " << results[i].error << "\n";
            ++failures;
        }
        rows.push_back(std::move(row));
    }
    emit(a.output, write_json({{"scorer", scorer->identity()}, {"results", std::move(rows)}}), out);
    if (failures) throw PartialFailure{};
}

// --- detect ----------------------------------------------------------------

struct DetectArgs {
    RunFlags flags;
    std::string input;
    std::string output;
    std::string csv;
    bool timings = false;
};

void cmd_detect(const DetectArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig rc = resolve_config(a.flags, scorer_url_from_env());
    rc.validate();
    if (rc.methods.empty()) throw InvalidArgument("no detection method selected");

    std::map<std::string, double> timings;
    auto t0 = Clock::now();
    const auto samples = load_jsonl(a.input);
    timings["load"] = seconds_since(t0);

    t0 = Clock::now();
    ModelFactory factory;
    const auto scorer = factory.scorer(rc.scorer, rc.http_options());
    const bool needs_filler = std::find(rc.methods.begin(), rc.methods.end(), Method::nete) != rc.methods.end();
    std::shared_ptr<const Filler> filler;
    if (needs_filler) filler = factory.filler(rc.filler, rc.http_options(), rc.candidates);
    timings["models"] = seconds_since(t0);

    t0 = Clock::now();
    const auto scores = score_methods(samples, rc.methods, *scorer, filler.get(), batch_config(rc));
    timings["scoring"] = seconds_since(t0);

    RunResults results;
    results.config = rc.echo();
    results.config["scorer"] = scorer->identity();
    results.config["filler"] = filler ? filler->identity() : "";
    results.config["input"] = a.input;
    results.methods = rc.methods;
    results.histogram_bins = rc.bins;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        SampleRecord rec;
        rec.id = samples[i].id;
        rec.label = samples[i].label;
        rec.nete = scores[i].nete;
        for (std::size_t m = 0; m < rc.methods.size(); ++m) {
            SampleRecord::MethodScore ms;
            const auto& o = scores[i].by_method[m];
            if (o.ok()) {
                ms.score = *o.value;
                if (auto it = rc.thresholds.find(rc.methods[m]); it != rc.thresholds.end())
                    ms.verdict = judge(rc.methods[m], *o.value, it->second);
            } else {
                ms.error = o.error;
                err << "error: sample " << rec.id << " method " << to_string(rc.methods[m]) << ": " << o.error << "\n";
            }
            rec.methods[rc.methods[m]] = std::move(ms);
        }
        results.samples.push_back(std::move(rec));
    }
    if (a.timings) results.timings = timings;

    const Report report = emit_report(results);
    emit(a.output, write_json(report.document), out);
    if (!a.csv.empty()) emit(a.csv, report.csv, out);
    if (report.failures) throw PartialFailure{};
}

// --- inject ----------------------------------------------------------------

struct InjectArgs {
    std::string input;
    std::string output;
    std::string scheme = "word";
    std::vector<std::string> triggers;
    std::string sentence;
    int count = 3;
    std::string position = "append";
    std::uint64_t seed = 0;
};

void cmd_inject(const InjectArgs& a, std::ostream& out) {
    TriggerSpec spec;
    spec.scheme = parse_scheme(a.scheme);
    spec.word_count = a.count;
    spec.sentence_position = parse_position(a.position);
    switch (spec.scheme) {
        case TriggerScheme::word:
            for (const auto& t : a.triggers) {
                std::stringstream ss(t);
                std::string w;
                while (std::getline(ss, w, ',')) if (!w.empty()) spec.word_triggers.push_back(w);
            }
            if (!a.sentence.empty()) throw InvalidArgument("--sentence is not used by the word scheme");
            break;
        case TriggerScheme::sentence:
            if (!a.sentence.empty()) spec.sentence_trigger = a.sentence;
            else if (a.triggers.size() == 1) spec.sentence_trigger = a.triggers.front();
            else throw InvalidArgument("sentence scheme needs exactly one --trigger (or --sentence)");
            break;
        case TriggerScheme::combo:
            if (a.triggers.empty() || a.sentence.empty())
                throw InvalidArgument("combo scheme needs both --trigger WORD and --sentence TEXT");
            for (const auto& t : a.triggers) {
                std::stringstream ss(t);
                std::string w;
                while (std::getline(ss, w, ',')) if (!w.empty()) spec.word_triggers.push_back(w);
            }
            spec.sentence_trigger = a.sentence;
            break;
    }
    spec.validate();
    const auto samples = load_jsonl(a.input);
    emit(a.output, to_jsonl(poison_dataset(samples, spec, a.seed)), out);
}

// --- calibrate -------------------------------------------------------------

struct CalibrateArgs {
    RunFlags flags;
    std::string input;
    std::string output;
};

void cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig rc = resolve_config(a.flags, scorer_url_from_env());
    rc.methods = {Method::nete};
    rc.validate();
    const auto samples = load_nonempty(a.input);
    ModelFactory factory;
    const auto scorer = factory.scorer(rc.scorer, rc.http_options());
    const auto filler = factory.filler(rc.filler, rc.http_options(), rc.candidates);
    const auto stats = nete_batch(samples, *scorer, *filler, batch_config(rc));

    std::vector<DiscrepancyStat> ok;
    nlohmann::json failures = nlohmann::json::array();
    for (std::size_t i = 0; i < stats.size(); ++i) {
        if (stats[i].ok()) {
            ok.push_back(*stats[i].value);
        } else {
            failures.push_back({{"id", samples[i].id}, {"error", stats[i].error}});
            err << "error: sample " << samples[i].id << ": " << stats[i].error << "\n";
        }
    }
    if (ok.empty()) throw Error("no reference sample produced a statistic");
    const Calibration cal = calibrate_threshold(ok);
    if (cal.excluded_infinite)
        err << "warning: excluded " << cal.excluded_infinite << " reference sample(s) with infinite z\n";

    nlohmann::json z = nlohmann::json::array();
    for (const auto& s : ok) z.push_back(json_number(s.z));
    nlohmann::json config = rc.echo();
    config["scorer"] = scorer->identity();
    config["filler"] = filler->identity();
    config["input"] = a.input;
    const nlohmann::json doc{{"epsilon", cal.epsilon},
                             {"used", cal.used},
                             {"excluded_infinite", cal.excluded_infinite},
                             {"reference_z", std::move(z)},
                             {"failures", std::move(failures)},
                             {"config", std::move(config)}};
    out << format_double(cal.epsilon) << "\n";
    if (!a.output.empty()) emit(a.output, write_json(doc), out);
    if (ok.size() != samples.size()) throw PartialFailure{};
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    std::vector<std::string> files;
    std::string output;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (a.files.empty() || a.files.size() % 2 != 0)
        throw InvalidArgument("eval takes pairs of files: CLEAN_SCORES BACKDOOR_SCORES [CLEAN BACKDOOR ...]");
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < a.files.size(); i += 2) {
        const auto clean = read_score_file(a.files[i]);
        const auto backdoor = read_score_file(a.files[i + 1]);
        auto roc = to_json(auroc(clean, backdoor));
        roc["clean_file"] = a.files[i];
        roc["backdoor_file"] = a.files[i + 1];
        runs.push_back(std::move(roc));
    }
    emit(a.output, write_json({{"runs", std::move(runs)}}), out);
}

// --- pdc -------------------------------------------------------------------

struct PdcArgs {
    RunFlags flags;
    std::string clean;
    std::string backdoor;
    std::string output;
};

void cmd_pdc(const PdcArgs& a, std::ostream& out) {
    RunConfig rc = resolve_config(a.flags, scorer_url_from_env());
    rc.methods.clear();
    rc.validate();
    const auto clean = load_nonempty(a.clean);
    const auto backdoor = load_nonempty(a.backdoor);
    ModelFactory factory;
    const auto scorer = factory.scorer(rc.scorer, rc.http_options());
    const auto filler = factory.filler(rc.filler, rc.http_options(), rc.candidates);
    const PdcResult res = pdc_test(clean, backdoor, *scorer, *filler, batch_config(rc));

    double lo = INFINITY, hi = -INFINITY;
    for (const auto* v : {&res.clean, &res.backdoor})
        for (double d : *v) {
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    auto side = [&](const std::vector<double>& d, const std::vector<Sample>& s) {
        nlohmann::json ids = nlohmann::json::array();
        for (const auto& x : s) ids.push_back(x.id);
        const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
        return nlohmann::json{{"ids", std::move(ids)},
                              {"discrepancies", d},
                              {"mean", mean},
                              {"histogram", to_json(density_histogram(d, rc.bins, lo, hi))}};
    };
    nlohmann::json config = rc.echo();
    config.erase("methods");
    config.erase("thresholds");
    config["scorer"] = scorer->identity();
    config["filler"] = filler->identity();
    emit(a.output,
         write_json({{"config", std::move(config)}, {"clean", side(res.clean, clean)},
                     {"backdoor", side(res.backdoor, backdoor)}}),
         out);
}

// --- curvature-check -------------------------------------------------------

struct CurvatureArgs {
    int dims = 0;
    std::size_t m = 100000;
    std::uint64_t seed = 0;
    std::string output;
};

void cmd_curvature(const CurvatureArgs& a, std::ostream& out) {
    using namespace curvature;
    if (a.dims < 1) throw InvalidArgument("--dims must be >= 1");
    if (a.m < 2) throw InvalidArgument("--m must be >= 2");
    const auto d = static_cast<std::size_t>(a.dims);

    std::vector<double> a_coef(d), lin(d), x(d);
    for (std::size_t i = 0; i < d; ++i) {
        a_coef[i] = static_cast<double>(i + 1);
        lin[i] = 0.5 * static_cast<double>(i + 1);
        x[i] = 0.25 * static_cast<double>(i + 1);
    }
    // Quadratics are probed with unit steps, where the second difference is
    // exact. The cosine row needs a small step and tolerates its truncation
    // error; its identity only holds to second order so it is reported, not gated.
    struct Row {
        AnalyticFunction f;
        double h;
        double slack;
        bool identity_exact;
    };
    constexpr double fp_slack = 1e-9;
    std::vector<Row> rows{{constant_function(d, 1.5), 1.0, fp_slack, true},
                          {linear_function(lin, 0.25), 1.0, fp_slack, true},
                          {diagonal_quadratic(a_coef, -1.0), 1.0, fp_slack, true}};
    if (d >= 2) rows.push_back({bilinear_function(d), 1.0, fp_slack, true});
    rows.push_back({cosine_sum(d), 1e-3, 1e-6, false});

    constexpr double k_se = 3.0;
    bool all_pass = true;
    nlohmann::json out_rows = nlohmann::json::array();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& f = rows[r].f;
        const double exact = (*f.hessian_trace_at)(x);
        const std::uint64_t s = a.seed + 1000 * r;

        const auto hr = hutchinson_trace(f, x, a.m, rows[r].h, s, Noise::rademacher);
        const auto hg = hutchinson_trace(f, x, a.m, rows[r].h, s + 1, Noise::gaussian);
        const double fd = fd_trace(f, x);
        const auto id = identity_check(f, x, a.m, s + 2, Noise::gaussian);

        auto est_json = [&](const TraceEstimate& e) {
            const double gap = std::abs(e.value - exact);
            const bool pass = gap <= k_se * e.standard_error + rows[r].slack;
            return std::pair{nlohmann::json{{"estimate", e.value},
                                            {"std_err", e.standard_error},
                                            {"abs_gap", gap},
                                            {"pass", pass}},
                             pass};
        };
        const auto [hr_json, hr_pass] = est_json(hr);
        const auto [hg_json, hg_pass] = est_json(hg);
        const bool fd_pass = std::abs(fd - exact) <= 1e-6;
        const bool id_pass = id.abs_gap <= k_se * id.std_err + fp_slack;

        bool row_pass = hr_pass && hg_pass && fd_pass;
        nlohmann::json identity{{"lhs", id.lhs}, {"rhs", id.rhs}, {"abs_gap", id.abs_gap},
                                {"std_err", id.std_err}, {"pass", id_pass}, {"gated", rows[r].identity_exact}};
        if (rows[r].identity_exact) {
            row_pass = row_pass && id_pass;
        } else {
            // Gaussian z: E cos(x + z) = cos(x) exp(-1/2), so the left-hand side
            // has a closed form even where the second-order identity is off.
            double expected = 0.0;
            for (double xi : x) expected += std::cos(xi) * (1.0 - std::exp(-0.5));
            const bool lhs_pass = std::abs(id.lhs - expected) <= k_se * id.std_err + fp_slack;
            identity["lhs_expected"] = expected;
            identity["lhs_pass"] = lhs_pass;
            row_pass = row_pass && lhs_pass;
        }
        all_pass = all_pass && row_pass;
        out_rows.push_back({{"function", f.name},
                            {"h", rows[r].h},
                            {"exact_trace", exact},
                            {"hutchinson_rademacher", hr_json},
                            {"hutchinson_gaussian", hg_json},
                            {"fd_trace", {{"value", fd}, {"abs_gap", std::abs(fd - exact)}, {"pass", fd_pass}}},
                            {"identity", std::move(identity)},
                            {"pass", row_pass}});
    }
    nlohmann::json x_json = x;
    emit(a.output,
         write_json({{"dims", a.dims}, {"m", a.m}, {"seed", a.seed}, {"point", std::move(x_json)},
                     {"fd_step", default_fd_step}, {"tolerance", "3*std_err + 1e-9 (cosine: + 1e-6)"},
                     {"rows", std::move(out_rows)}, {"pass", all_pass}}),
         out);
    if (!all_pass) throw PartialFailure{};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Zero-shot backdoor sample detection by perturbation discrepancy", "nete"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "nete 1.0.0");

    std::function<void()> action;

    ScoreArgs score_a;
    auto* score = app.add_subcommand("score", "Per-token log-probabilities, ranks and entropies");
    score->add_option("input", score_a.input, "JSONL samples");
    score->add_option("--text", score_a.text, "Score a single text instead of a file");
    score->add_option("--output", score_a.output, "Output path (default stdout)");
    add_run_flags(score, score_a.flags, false);
    score->callback([&] { action = [&] { cmd_score(score_a, out, err); }; });

    DetectArgs detect_a;
    auto* detect = app.add_subcommand("detect", "Score samples with NETE and baselines, emit a report");
    detect->add_option("input", detect_a.input, "JSONL samples")->required();
    detect->add_option("--output", detect_a.output, "Report JSON path (default stdout)");
    detect->add_option("--csv", detect_a.csv, "Also write the per-sample CSV table here");
    detect->add_flag("--timings", detect_a.timings, "Add wall-clock seconds per stage to the report");
    add_run_flags(detect, detect_a.flags, true);
    detect->callback([&] { action = [&] { cmd_detect(detect_a, out, err); }; });

    InjectArgs inject_a;
    auto* inject = app.add_subcommand("inject", "Insert word and/or sentence triggers into clean samples");
    inject->add_option("input", inject_a.input, "JSONL clean samples")->required();
    inject->add_option("--output", inject_a.output, "Output JSONL (default stdout)");
    inject->add_option("--scheme", inject_a.scheme, "word | sentence | combo")->capture_default_str();
    inject->add_option("--trigger", inject_a.triggers, "Trigger word(s), comma separated; sentence for --scheme sentence");
    inject->add_option("--sentence", inject_a.sentence, "Trigger sentence (sentence and combo schemes)");
    inject->add_option("--count", inject_a.count, "Insertions of the word trigger")->capture_default_str();
    inject->add_option("--position", inject_a.position, "append | prepend")->capture_default_str();
    inject->add_option("--seed", inject_a.seed, "Seed")->capture_default_str();
    inject->callback([&] { action = [&] { cmd_inject(inject_a, out); }; });

    CalibrateArgs cal_a;
    auto* calibrate = app.add_subcommand("calibrate", "Threshold = mean NETE statistic of a known-attack set");
    calibrate->add_option("input", cal_a.input, "JSONL reference backdoor samples")->required();
    calibrate->add_option("--output", cal_a.output, "Also write a JSON report here");
    add_run_flags(calibrate, cal_a.flags, false);
    calibrate->callback([&] { action = [&] { cmd_calibrate(cal_a, out, err); }; });

    EvalArgs eval_a;
    auto* eval = app.add_subcommand("eval", "AUROC of clean vs backdoor score files");
    eval->add_option("files", eval_a.files, "CLEAN_SCORES BACKDOOR_SCORES [...]")->required();
    eval->add_option("--output", eval_a.output, "Output path (default stdout)");
    eval->callback([&] { action = [&] { cmd_eval(eval_a, out); }; });

    PdcArgs pdc_a;
    auto* pdc = app.add_subcommand("pdc", "Discrepancy densities of a clean and a backdoor set");
    pdc->add_option("clean", pdc_a.clean, "JSONL clean samples")->required();
    pdc->add_option("backdoor", pdc_a.backdoor, "JSONL backdoor samples")->required();
    pdc->add_option("--output", pdc_a.output, "Output path (default stdout)");
    add_run_flags(pdc, pdc_a.flags, false);
    pdc->callback([&] { action = [&] { cmd_pdc(pdc_a, out); }; });

    CurvatureArgs curv_a;
    auto* curv = app.add_subcommand("curvature-check", "Validate the trace estimators on analytic functions");
    curv->add_option("--dims", curv_a.dims, "Dimension of the test functions")->required();
    curv->add_option("--m", curv_a.m, "Monte-Carlo draws")->capture_default_str();
    curv->add_option("--seed", curv_a.seed, "Seed")->capture_default_str();
    curv->add_option("--output", curv_a.output, "Output path (default stdout)");
    curv->callback([&] { action = [&] { cmd_curvature(curv_a, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        action();
        return 0;
    } catch (const PartialFailure&) {
        return 2;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"nete"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace nete::cli
