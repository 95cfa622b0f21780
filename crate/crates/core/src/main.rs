use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};

use conelike::cli::{self, config::KEYS, Entry, RunConfig};
use conelike::Error;

const VERBS: [(&str, &str); 5] = [
    (
        "solve",
        "march a height function A(u) and check the surface",
    ),
    (
        "radial",
        "rotationally symmetric benchmark, A = ±1/4 and H = 1",
    ),
    (
        "extract",
        "recover the canonical limit null curve from a surface CSV",
    ),
    ("check", "run every surface check on a surface CSV"),
    (
        "export",
        "write surface, mesh and graph files without checking",
    ),
];

fn command() -> Command {
    let mut root = Command::new("conelike")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Spacelike prescribed mean curvature graphs with a conelike singularity")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (verb, about) in VERBS {
        let mut sub = Command::new(verb).about(about).arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("key=value config file; flags override it"),
        );
        for key in KEYS.iter().filter(|k| **k != "mode") {
            sub = sub.arg(
                Arg::new(*key)
                    .long(*key)
                    .value_name("VALUE")
                    .allow_hyphen_values(true)
                    .action(ArgAction::Set),
            );
        }
        root = root.subcommand(sub);
    }
    root
}

fn load(verb: &str, m: &clap::ArgMatches) -> Result<RunConfig, Error> {
    let mut entries = vec![Entry::flag("mode", verb)];
    if let Some(path) = m.get_one::<PathBuf>("config") {
        let text = cli::io::read_text(path)?;
        let from_file = cli::parse_entries(&text)?;
        if let Some(e) = from_file
            .iter()
            .find(|e| e.key == "mode" && e.value != verb)
        {
            return Err(Error::Config {
                line: e.line,
                msg: format!("config says mode={} but the command is {verb}", e.value),
            });
        }
        entries.extend(from_file);
    }
    for key in KEYS.iter().filter(|k| **k != "mode") {
        if let Some(v) = m.get_one::<String>(key) {
            entries.push(Entry::flag(key, v));
        }
    }
    RunConfig::from_entries(&entries)
}

fn main() -> ExitCode {
    let matches = command().get_matches();
    let (verb, sub) = matches.subcommand().expect("subcommand is required");
    let cfg = match load(verb, sub) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error.code: {}", e.code());
            eprintln!("error.message: {e}");
            eprintln!("verdict: error");
            return ExitCode::from(1);
        }
    };
    let (code, report) = cli::execute(&cfg);
    if cfg.outputs.report.is_some() {
        let verdict = report.lines().last().unwrap_or_default();
        eprintln!("{verdict}");
    } else {
        print!("{report}");
    }
    ExitCode::from(code as u8)
}
