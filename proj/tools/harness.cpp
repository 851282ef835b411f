// harness: generate synthetic corpora with planted ground truth and score
// extracted annotations against them.

#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cuts3d/cuts3d.hpp"
#include "cuts3d/harness/corpus.hpp"
#include "cuts3d/harness/evaluate.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic scene generator and pseudo-mask evaluator"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "write a synthetic corpus");
  std::string gen_out;
  std::size_t count = 50;
  std::uint64_t seed = 0;
  std::vector<std::string> templates;
  int grid = 60;
  gen->add_option("--out", gen_out, "corpus directory")->required();
  gen->add_option("--count", count, "number of scenes")->required();
  gen->add_option("--seed", seed, "corpus seed")->required();
  gen->add_option("--template", templates, "scene template(s), cycled; default adjacent-twins")
      ->check(CLI::IsMember({"adjacent-twins", "single-blob", "two-blob", "ramp", "all"}));
  gen->add_option("--grid", grid, "patches per side")->check(CLI::Range(8, 120));

  auto* eval = app.add_subcommand("eval", "score annotations against ground truth");
  std::string pred_dir, gt_dir;
  eval->add_option("--pred", pred_dir, "extract output directory (annotations.jsonl)")->required();
  eval->add_option("--gt", gt_dir, "corpus directory (gt.jsonl)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    if (*gen) {
      if (templates.empty()) templates = {"adjacent-twins"};
      if (templates.size() == 1 && templates[0] == "all") templates.clear();
      const auto scenes = cuts3d::harness::generate_corpus(count, seed, templates, grid);
      cuts3d::harness::write_corpus(scenes, gen_out);
      std::cout << "wrote " << scenes.size() << " scenes to " << gen_out << '\n';
      return 0;
    }
    const auto records = cuts3d::read_annotations(fs::path(pred_dir) / "annotations.jsonl");
    const auto gts = cuts3d::harness::read_ground_truth(fs::path(gt_dir) / "gt.jsonl");
    const auto result = cuts3d::harness::evaluate(cuts3d::harness::predictions_from_records(records), gts);
    std::cout << std::fixed << std::setprecision(4) << "ap50=" << result.ap50 << " ap=" << result.ap_mean << '\n';
    const auto thresholds = cuts3d::harness::iou_thresholds();
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      std::cout << "  ap@" << std::setprecision(2) << thresholds[i] << " = " << std::setprecision(4)
                << result.ap_per_threshold[i] << '\n';
    return 0;
  } catch (const cuts3d::Error& e) {
    std::cerr << "harness: " << cuts3d::to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "harness: " << e.what() << '\n';
    return 2;
  }
}
