//! Run an experiment from a JSON scenario config, as the `qfc` binary does.
//!
//! `cargo run --example run_config -- examples/configs/calderon.json out/`

use std::path::PathBuf;

use qfc::cli::{list_experiments, load_config, run_scenario};

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(config) = args.next() else {
        print!("{}", list_experiments());
        return;
    };
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
    let code = match load_config(config.as_ref()).and_then(|c| run_scenario(&c, &out)) {
        Ok(summary) => {
            for check in &summary.checks {
                println!("{:<40} {:>12.3e}  {}", check.name, check.value, if check.passed { "ok" } else { "FAILED" });
            }
            summary.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
