use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, Command};
use qfc::cli::{self, Experiment};

fn command() -> Command {
    let mut cmd = Command::new("qfc")
        .about("Batch runs for the finite-mode quasi-free state laboratory")
        .subcommand_required(true)
        .subcommand(Command::new("list").about("List experiments with one-line descriptions"));
    for e in Experiment::ALL {
        cmd = cmd.subcommand(
            Command::new(e.command())
                .about(e.description())
                .after_help(cli::csv_help(e))
                .arg(
                    Arg::new("config")
                        .long("config")
                        .required(true)
                        .value_parser(value_parser!(PathBuf))
                        .help("Scenario config (JSON)"),
                )
                .arg(
                    Arg::new("out")
                        .long("out")
                        .value_parser(value_parser!(PathBuf))
                        .help("Output directory; overrides output_dir in the config"),
                ),
        );
    }
    cmd
}

fn main() -> ExitCode {
    let matches = match command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    if name == "list" {
        print!("{}", cli::list_experiments());
        return ExitCode::SUCCESS;
    }
    let experiment = Experiment::from_name(name).expect("registered subcommand");
    let config = sub.get_one::<PathBuf>("config").expect("required");
    let out = sub.get_one::<PathBuf>("out");
    ExitCode::from(cli::run_command(experiment, config, out.map(|p| p.as_path())) as u8)
}
