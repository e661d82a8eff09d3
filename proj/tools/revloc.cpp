// revloc: command-line front end for ingesting a corpus, building the revision
// graph, training the ranker and evaluating it over chronological folds.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "revloc/diagnostics.hpp"
#include "revloc/evaluation.hpp"
#include "revloc/pipeline.hpp"
#include "revloc/significance.hpp"
#include "revloc/synthetic.hpp"

namespace fs = std::filesystem;
using namespace revloc;

namespace {

std::ifstream open_in(const fs::path& p, const std::string& hint = "") {
  std::ifstream in(p);
  if (!in) throw ArgumentError("cannot open " + p.string() + hint);
  return in;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ArgumentError("cannot write " + p.string());
  return out;
}

std::string header(const PipelineConfig& cfg, const std::string& what) {
  return "# revloc " + what + " seed=" + std::to_string(cfg.seed);
}

// Artifacts of earlier stages, loaded on first use.
class Session {
 public:
  explicit Session(PipelineConfig cfg) : cfg_(std::move(cfg)) {}

  const PipelineConfig& config() const { return cfg_; }

  const Corpus& corpus() {
    if (!corpus_) {
      auto in = open_in(cfg_.normalized_corpus(), " (run `revloc ingest` first)");
      corpus_ = read_corpus_jsonl(in);
    }
    return *corpus_;
  }

  const RevisionGraph& graph() {
    if (!graph_) {
      auto in = open_in(cfg_.store_path(), " (run `revloc graph build` first)");
      graph_ = load_graph(in);
      if (graph_->revision() != corpus().latest_revision()) {
        throw RevisionOrderError("graph store is at revision " + std::to_string(graph_->revision()) +
                                 " but the corpus ends at " + std::to_string(corpus().latest_revision()) +
                                 " (run `revloc graph update`)");
      }
    }
    return *graph_;
  }

  const std::vector<RankingQuery>& queries() {
    if (!queries_) queries_ = build_queries(corpus(), graph(), query_options(cfg_.model, cfg_.simrank));
    return *queries_;
  }

  /// The query of one report: its before-fix revision when it has a fix,
  /// otherwise the latest revision.
  RankingQuery query_for(const std::string& report_id) {
    const Corpus& c = corpus();
    std::map<std::string, const BugReportRecord*> reports;
    for (const auto* r : c.reports()) reports[r->id] = r;
    auto it = reports.find(report_id);
    if (it == reports.end()) throw ArgumentError("unknown report id '" + report_id + "'");
    const auto fixed = first_fix_revision(c);
    auto f = fixed.find(report_id);
    const Revision rev = f != fixed.end() && f->second >= 1 ? f->second - 1 : c.latest_revision();
    return build_query(c, graph(), fix_history(graph()), reports, *it->second, rev,
                       query_options(cfg_.model, cfg_.simrank));
  }

 private:
  PipelineConfig cfg_;
  std::optional<Corpus> corpus_;
  std::optional<RevisionGraph> graph_;
  std::optional<std::vector<RankingQuery>> queries_;
};

void save_store(const PipelineConfig& cfg, RevisionGraph& g) {
  attach_similarity(g, simrank(g, cfg.simrank));
  std::ostringstream buf;
  save_graph(buf, g);
  auto out = open_out(cfg.store_path());
  out << buf.str();
}

int cmd_ingest(const PipelineConfig& cfg) {
  if (cfg.corpus.empty()) throw ArgumentError("no corpus path configured (set corpus=...)");
  auto in = open_in(cfg.corpus);
  std::vector<FixLink> links;
  const Corpus corpus = read_corpus_jsonl(in, &links);
  std::ostringstream buf;
  write_corpus_jsonl(buf, corpus);
  auto out = open_out(cfg.normalized_corpus());
  out << buf.str();
  const auto s = summarize(corpus, links.size());
  std::printf("revisions\t%zu\nfiles\t%zu\nmethod_versions\t%zu\nmethods_latest\t%zu\nreports\t%zu\n"
              "linked_reports\t%zu\ncommits\t%zu\nfix_links\t%zu\n",
              s.revisions, s.files, s.method_versions, s.methods_latest, s.reports, s.linked_reports, s.commits,
              s.fix_links);
  return 0;
}

int cmd_graph(Session& session, const std::string& mode) {
  const auto& cfg = session.config();
  RevisionGraph g;
  if (mode == "update" && fs::exists(cfg.store_path())) {
    auto in = open_in(cfg.store_path());
    g = load_graph(in);
  }
  update_graph(g, session.corpus());
  save_store(cfg, g);
  std::printf("revision\t%d\nmethod_nodes\t%zu\nreport_nodes\t%zu\nedges\t%zu\n", g.revision(),
              g.count_nodes(NodeKind::kMethod), g.count_nodes(NodeKind::kReport), g.edges().size());
  return 0;
}

int cmd_features(Session& session, const std::string& report) {
  std::vector<FeatureRow> rows;
  auto add = [&rows](const RankingQuery& q) {
    for (std::size_t i = 0; i < q.candidates.size(); ++i) rows.push_back({q.report->id, q.candidates[i]->id, q.features[i]});
  };
  if (!report.empty()) add(session.query_for(report));
  else
    for (const auto& q : session.queries()) add(q);
  const auto path = session.config().output / "features.tsv";
  auto out = open_out(path);
  write_feature_rows(out, rows);
  std::printf("%zu rows written to %s\n", rows.size(), path.string().c_str());
  return 0;
}

int cmd_train(Session& session) {
  const auto& cfg = session.config();
  std::vector<const RankingQuery*> all;
  for (const auto& q : session.queries()) all.push_back(&q);
  const auto res = train(session.corpus(), all, cfg.model);
  std::ostringstream buf;
  save_model(buf, res.model);
  open_out(cfg.model_path()) << buf.str();
  auto loss = open_out(cfg.output / "loss.tsv");
  loss << header(cfg, "loss") << "\nepoch\tloss\n";
  char line[64];
  for (std::size_t e = 0; e < res.loss_curve.size(); ++e) {
    std::snprintf(line, sizeof line, "%zu\t%.9f\n", e + 1, res.loss_curve[e]);
    loss << line;
  }
  std::printf("trained on %zu instances from %zu reports; model written to %s\n", res.instances,
              all.size() - res.skipped.size(), cfg.model_path().string().c_str());
  return 0;
}

int cmd_rank(Session& session, const std::string& report, std::size_t top) {
  auto in = open_in(session.config().model_path(), " (run `revloc train` first)");
  Model model = load_model(in);
  const auto q = session.query_for(report);
  const auto ranked = rank_methods(model, q);
  std::printf("rank\tmethod\tscore\te\trcfs\tbffs\tbfrs\n");
  for (std::size_t i = 0; i < std::min(top, ranked.size()); ++i) {
    const auto& p = ranked[i];
    std::printf("%zu\t%s\t%.6f\t%.6f\t%.6f\t%.0f\t%.6f\n", i + 1, p.method_id.c_str(), p.score, p.e, p.features.rcfs,
                p.features.bffs, p.features.bfrs);
  }
  return 0;
}

std::string file_label(std::string name) {
  for (auto pos = name.find("->"); pos != std::string::npos; pos = name.find("->")) name.replace(pos, 2, "_to_");
  return name;
}

int cmd_eval(Session& session, bool not_localized_only) {
  const auto& cfg = session.config();
  const auto plan = plan_folds(session.corpus().reports(), cfg.fold_mode);
  EvalOptions opt;
  opt.not_localized_only = not_localized_only;
  const auto ev = evaluate(session.corpus(), session.queries(), plan, cfg.model, opt);
  const fs::path dir = cfg.output / (not_localized_only ? "eval_not_localized" : "eval");
  const std::string head = header(cfg, "eval") + (not_localized_only ? " filter=not_localized" : "");
  std::vector<std::pair<std::string, MetricReport>> table;
  auto ranks = open_out(dir / "ranks.tsv");
  ranks << head << "\ntask\treport\tfrank\tranks\n";
  for (const auto& t : ev.tasks) {
    auto out = open_out(dir / (file_label(t.name) + ".tsv"));
    out << head << " task=" << t.name << " unlinked=" << t.unlinked << " filtered=" << t.filtered << '\n';
    out << kMetricHeader << '\n';
    if (!t.metrics) {
      out << "# no evaluable test report\n";
      continue;
    }
    out << metric_row(t.name, *t.metrics) << '\n';
    table.emplace_back(t.name, *t.metrics);
    for (const auto& r : t.metrics->reports) {
      ranks << t.name << '\t' << r.report_id << '\t' << r.frank() << '\t';
      for (std::size_t i = 0; i < r.truth_ranks.size(); ++i) ranks << (i ? "," : "") << r.truth_ranks[i];
      ranks << '\n';
    }
  }
  auto mean = open_out(dir / "mean.tsv");
  mean << head << " tasks=" << table.size() << '\n' << kMetricHeader << '\n' << metric_row("mean", ev.mean) << '\n';
  table.emplace_back("mean", ev.mean);
  print_metric_table(std::cout, table);
  return 0;
}

// First-rank column of an eval ranks file.
std::vector<double> read_franks(const fs::path& p) {
  auto in = open_in(p);
  std::vector<double> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#' || line.rfind("task\t", 0) == 0) continue;
    std::istringstream row(line);
    std::string task, report;
    double frank = 0;
    if (!(row >> task >> report >> frank)) throw FormatError(p.string() + " line " + std::to_string(n) + ": expected task, report, frank");
    out.push_back(frank);
  }
  return out;
}

int cmd_compare(const fs::path& a, const fs::path& b) {
  const auto xa = read_franks(a), xb = read_franks(b);
  const auto r = mann_whitney_u(xa, xb);
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(static_cast<long>(v[i]));
    return s;
  };
  std::printf("U\t%.1f\np\t%.6g\nmethod\t%s\nsignificant_0.05\t%s\nfranks_a\t%s\nfranks_b\t%s\n", r.u, r.p,
              r.exact ? "exact" : "normal", r.significant() ? "yes" : "no", list(xa).c_str(), list(xb).c_str());
  return 0;
}

int cmd_diagnose(Session& session) {
  std::map<Localization, std::size_t> counts;
  for (const auto& q : session.queries()) ++counts[categorize_query(q)];
  const auto gap = tfidf_gap(session.queries(), 100, session.config().seed);
  for (auto l : {Localization::kFully, Localization::kPartially, Localization::kNot})
    std::printf("%s_localized\t%zu\n", to_string(l), counts[l]);
  std::printf("tfidf_fixed\t%.4f\ntfidf_irrelevant\t%.4f\n", gap.fixed, gap.irrelevant);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locate faulty methods from bug reports using revision history and a neural ranker"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "Config file (key = value lines)");
  app.add_option("-s,--set", overrides, "Override a config key, e.g. --set model.epochs=2")->take_all();

  auto* ingest = app.add_subcommand("ingest", "Read the raw corpus and write the normalized one");
  auto* graph = app.add_subcommand("graph", "Build or update the revision graph store");
  std::string graph_mode;
  graph->add_option("mode", graph_mode, "build | update")->required()->check(CLI::IsMember({"build", "update"}));
  auto* features = app.add_subcommand("features", "Write bug-fixing features of every candidate");
  std::string feature_report;
  features->add_option("--report", feature_report, "Only this report");
  auto* train_cmd = app.add_subcommand("train", "Train on every linked report");
  auto* rank = app.add_subcommand("rank", "Rank methods for one report");
  std::string rank_report;
  std::size_t top = 10;
  rank->add_option("--report", rank_report, "Report id")->required();
  rank->add_option("--top", top, "Number of methods to print")->capture_default_str()->check(CLI::PositiveNumber);
  auto* eval = app.add_subcommand("eval", "Train and test over chronological folds");
  bool not_localized_only = false;
  eval->add_flag("--not-localized-only", not_localized_only, "Only test reports that name none of their fixed methods");
  auto* synth = app.add_subcommand("synth", "Write a synthetic raw corpus");
  SynthConfig sc;
  std::string synth_out;
  synth->add_option("-o,--out", synth_out, "Output JSONL")->required();
  synth->add_option("--reports", sc.reports)->capture_default_str();
  synth->add_option("--methods", sc.methods)->capture_default_str();
  synth->add_option("--files", sc.files)->capture_default_str();
  synth->add_option("--projects", sc.projects)->capture_default_str();
  synth->add_option("--seed", sc.seed)->capture_default_str();
  auto* compare = app.add_subcommand("compare", "Mann-Whitney U test on the first ranks of two eval runs");
  std::string rank_a, rank_b;
  compare->add_option("a", rank_a, "ranks.tsv of the first run")->required();
  compare->add_option("b", rank_b, "ranks.tsv of the second run")->required();
  auto* diagnose = app.add_subcommand("diagnose", "Localization categories and TF-IDF similarity gap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      auto out = open_out(synth_out);
      const auto r = write_synthetic_jsonl(out, sc);
      std::printf("%zu reports, %zu revisions written to %s\n", sc.reports, r.revisions, synth_out.c_str());
      return 0;
    }
    if (*compare) return cmd_compare(rank_a, rank_b);

    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_pipeline_config(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    cfg.validate();
    if (*ingest) return cmd_ingest(cfg);
    Session session(cfg);
    if (*graph) return cmd_graph(session, graph_mode);
    if (*features) return cmd_features(session, feature_report);
    if (*train_cmd) return cmd_train(session);
    if (*rank) return cmd_rank(session, rank_report, top);
    if (*eval) return cmd_eval(session, not_localized_only);
    if (*diagnose) return cmd_diagnose(session);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "revloc: %s\n", e.what());
    return 1;
  }
  return 1;
}
