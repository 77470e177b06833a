//! Command-line front end: runs config files and writes report artifacts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vcert::config::TaskName;
use vcert::run::{self, Overrides, RunOutput, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "vcert", version, about = "Vector closure certificates and co-Buchi ranking functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a config with the task it declares.
    Run(RunArgs),
    /// Synthesize the certificate declared in a config.
    Synth(RunArgs),
    /// Audit a certificate file against the problem in a config.
    Audit {
        #[command(flatten)]
        run: RunArgs,
        /// Certificate file; defaults to `certificate.file` in the config.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Accept residuals within the rounding tolerance.
        #[arg(long)]
        transcribed: bool,
    },
    /// Search over degrees, vector sizes and matrices.
    Sweep(RunArgs),
    /// Finite-system closure certificates.
    Discrete(RunArgs),
    /// Run every config in a directory that declares a reference row.
    Table1 {
        dir: PathBuf,
        /// Output directory (overrides VCERT_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory (overrides VCERT_OUT_DIR and `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest SDP accepted before a degree is skipped.
    #[arg(long)]
    max_rows: Option<usize>,
    #[arg(long)]
    rounding_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Sample points per audited condition.
    #[arg(long)]
    samples: Option<usize>,
    /// Print only the exit line.
    #[arg(short, long)]
    quiet: bool,
}

impl RunArgs {
    fn overrides(&self, task: Option<TaskName>) -> Overrides {
        Overrides {
            task,
            tol: self.tol,
            max_rows: self.max_rows,
            rounding_tol: self.rounding_tol,
            rel_tol: self.rel_tol,
            samples: self.samples,
            ..Overrides::default()
        }
    }
}

fn declared_dir(config: &Path) -> Option<String> {
    vcert::config::load_config(config).ok().and_then(|(c, _)| c.output.dir)
}

fn finish(out: &RunOutput, args: &RunArgs) -> i32 {
    if !args.quiet {
        print!("{}", out.report);
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let dir = args.out.clone().unwrap_or_else(|| run::output_dir(base, declared_dir(&args.config).as_deref()));
    match run::write_artifacts(&out.artifacts, &dir) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            out.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_one(args: &RunArgs, ov: Overrides) -> i32 {
    let out = run::run_path_with(&args.config, &ov);
    if out.exit == EXIT_ERROR {
        for l in out.report.lines().filter(|l| l.starts_with("error")) {
            eprintln!("{l}");
        }
    }
    finish(&out, args)
}

fn table1(dir: &Path, out: Option<PathBuf>) -> i32 {
    let table = match run::table1_harness(dir) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    print!("{}", table.to_text());
    let target = out.unwrap_or_else(|| run::output_dir(dir, None));
    let mut arts = table.artifacts();
    arts.push(run::Artifact { name: "table1.timing".into(), contents: table.timing_text() });
    if let Err(e) = run::write_artifacts(&arts, &target) {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    eprintln!("wrote {}", target.display());
    table.exit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Run(a) => run_one(&a, a.overrides(None)),
        Cmd::Synth(a) => run_one(&a, a.overrides(Some(TaskName::Synth))),
        Cmd::Sweep(a) => run_one(&a, a.overrides(Some(TaskName::Sweep))),
        Cmd::Discrete(a) => run_one(&a, a.overrides(Some(TaskName::Discrete))),
        Cmd::Audit { run, cert, transcribed } => {
            let ov = Overrides { certificate: cert, transcribed, ..run.overrides(Some(TaskName::Audit)) };
            run_one(&run, ov)
        }
        Cmd::Table1 { dir, out } => table1(&dir, out),
    };
    ExitCode::from(code as u8)
}
