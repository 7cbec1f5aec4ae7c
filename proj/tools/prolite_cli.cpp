#include <CLI11.hpp>
#include <iostream>

#include "prolite/toplevel.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "prolite - a small Prolog compiler, mini-assembly VM and FD solver"};

  std::vector<std::string> inputs;
  prolite::DriveOptions opts;
  bool no_opt = false;
  bool no_lco = false;
  bool no_reg = false;
  bool no_reorder = false;
  bool no_inline = false;
  size_t heap_mi = 0, local_mi = 0, trail_mi = 0;

  app.add_option("files", inputs,
                 "input files (.pl, .wam, .ma, .mlib library manifest, .img)");
  app.add_flag("--wam", opts.stop_wam, "stop after producing .wam files");
  app.add_flag("--ma", opts.stop_ma, "stop after producing .ma files");
  app.add_option("-o,--output", opts.output,
                 "output path (image, or the single converted file)");
  app.add_flag("--no-top-level", opts.no_top_level,
               "do not include the interactive top level in the image");
  app.add_flag("--no-reg-opt", no_reg, "disable register optimization");
  app.add_flag("--no-reorder", no_reorder,
               "disable unification instruction reordering");
  app.add_flag("--no-inline", no_inline, "disable built-in inlining");
  app.add_flag("--no-lco", no_lco, "disable last-call/last-subterm optimization");
  app.add_flag("--no-opt", no_opt, "disable all optimizations");
  app.add_option("--fd-lib", opts.fd_libs,
                 "manifest of .fd constraint definition files to preload");
  app.add_flag("--trace", opts.trace,
               "print call/exit/fail/redo events of interpreted code");
  app.add_option("--heap-size", heap_mi, "heap size in Mi words");
  app.add_option("--local-size", local_mi, "local stack size in Mi words");
  app.add_option("--trail-size", trail_mi, "trail size in Mi entries");

  CLI11_PARSE(app, argc, argv);

  if (no_opt) no_reg = no_reorder = no_inline = no_lco = true;
  opts.copts.reg_opt = !no_reg;
  opts.copts.reorder = !no_reorder;
  opts.copts.inline_builtins = !no_inline;
  opts.copts.lco = !no_lco;
  if (heap_mi) opts.mopts.heap_words = heap_mi << 20;
  if (local_mi) opts.mopts.local_words = local_mi << 20;
  if (trail_mi) opts.mopts.trail_entries = trail_mi << 20;
  opts.mopts.trace = opts.trace;

  return prolite::drive(inputs, opts, std::cin, std::cout, std::cerr);
}
