use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fx_core::corpus::{Corpus, CorpusError};
use fx_core::eval::{evaluate, whnf, Outcome, ValueOutcome};
use fx_core::generate::corrupt;
use fx_core::model::{render_report, semantic_probe, ProbeStatus};
use fx_core::parser::{parse_exc_set, parse_type, print_term, print_type};
use fx_core::subtyping::{check_sub_derivation, decide_sub, parse_sub_derivation, SubVerdict};
use fx_core::typing::{
    check_typing_derivation, corruption_theorem_probe, parse_typing_derivation, TypeVerdict,
};

const PARSE_ERROR: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Debug, Parser)]
#[command(
    name = "fx",
    version,
    about = "Evaluate, typecheck and probe Fx programs"
)]
struct Cli {
    /// Reduction step budget per evaluation.
    #[arg(long, global = true, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print reduction traces.
    #[arg(long, global = true)]
    trace: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every `eval` pragma of a file.
    Eval { file: PathBuf },
    /// Typecheck every annotated definition and `check` pragma.
    Check { file: PathBuf },
    /// Decide `A <= B`, or check a subtyping derivation for it.
    Sub {
        lhs: String,
        rhs: String,
        #[arg(long)]
        derivation: Option<PathBuf>,
    },
    /// Check a typing derivation file.
    DeriveCheck { file: PathBuf },
    /// Corrupt each well-typed item and check the corrupted term.
    Corrupt {
        file: PathBuf,
        /// Exception set, e.g. `{e, f}`.
        #[arg(long)]
        delta: String,
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Run the model membership oracles on ground-typed items.
    Model { file: PathBuf },
}

struct Out {
    format: Format,
}

impl Out {
    /// `item<TAB>verdict<TAB>detail` in machine mode, `text` otherwise.
    fn row(&self, item: &str, verdict: &str, detail: &str, text: String) {
        match self.format {
            Format::Machine => println!("{item}\t{verdict}\t{}", detail.replace(['\t', '\n'], " ")),
            Format::Text => println!("{text}"),
        }
    }
}

fn read(path: &Path) -> Result<String, ExitCode> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(PARSE_ERROR)
    })
}

fn load(path: &Path) -> Result<Corpus, ExitCode> {
    let src = read(path)?;
    Corpus::parse(&src, &path.display().to_string()).map_err(|e: CorpusError| {
        eprintln!("error: {e}");
        ExitCode::from(PARSE_ERROR)
    })
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_eval(cli: &Cli, file: &Path) -> Result<ExitCode, ExitCode> {
    let corpus = load(file)?;
    let out = Out { format: cli.format };
    let mut ok = true;
    for (span, term) in corpus.eval_terms() {
        let item = format!("eval@{}", span.start.line);
        let closed = corpus.expand(&term);
        let res = match evaluate(&closed, cli.fuel) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{span}: {e}");
                ok = false;
                out.row(
                    &item,
                    "error",
                    &e.to_string(),
                    format!("{term} => error: {e}"),
                );
                continue;
            }
        };
        if cli.trace {
            if let Ok(tr) = whnf(&closed, cli.fuel) {
                eprint!("{}", tr.to_text());
            }
        }
        let shown = print_term(&res.term);
        match &res.outcome {
            Outcome::Value(v) => {
                let verdict = match v {
                    ValueOutcome::Regular => "value",
                    ValueOutcome::Exception(_) => "exception",
                    ValueOutcome::Daimon => "daimon",
                };
                out.row(&item, verdict, &shown, shown.clone());
            }
            Outcome::Stuck => {
                ok = false;
                out.row(&item, "stuck", &shown, format!("stuck: {shown}"));
            }
            Outcome::FuelExhausted => {
                ok = false;
                let msg = format!("fuel exhausted after {} steps", res.fuel_used);
                out.row(&item, "fuel", &msg, msg.clone());
            }
        }
    }
    Ok(status(ok))
}

fn cmd_check(cli: &Cli, file: &Path) -> Result<ExitCode, ExitCode> {
    let corpus = load(file)?;
    let out = Out { format: cli.format };
    let mut ok = true;
    for q in corpus.questions() {
        let v = q.check();
        let detail = match &v {
            TypeVerdict::Yes(_) => print_type(&q.ty),
            TypeVerdict::No(m) | TypeVerdict::Unknown(m) => {
                ok = false;
                eprintln!("{}: {}: {m}", q.label, v.label());
                m.clone()
            }
        };
        out.row(
            &q.label,
            v.label(),
            &detail,
            format!("{} : {} ... {}", q.label, print_type(&q.ty), v.label()),
        );
        if cli.trace {
            if let TypeVerdict::Yes(d) = &v {
                print!("{}", d.to_text());
            }
        }
    }
    Ok(status(ok))
}

fn cmd_sub(
    cli: &Cli,
    lhs: &str,
    rhs: &str,
    derivation: Option<&Path>,
) -> Result<ExitCode, ExitCode> {
    let parse = |s: &str| {
        parse_type(s).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(PARSE_ERROR)
        })
    };
    let (a, b) = (parse(lhs)?, parse(rhs)?);
    let out = Out { format: cli.format };
    let item = format!("{} <= {}", print_type(&a), print_type(&b));
    if let Some(path) = derivation {
        let d = parse_sub_derivation(&read(path)?).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(PARSE_ERROR)
        })?;
        let verdict = match check_sub_derivation(&d) {
            Err(e) => Err(e.to_string()),
            Ok(()) if !(d.lhs.alpha_eq(&a) && d.rhs.alpha_eq(&b)) => Err(format!(
                "the derivation concludes {} <= {}",
                print_type(&d.lhs),
                print_type(&d.rhs)
            )),
            Ok(()) => Ok(()),
        };
        return Ok(match verdict {
            Ok(()) => {
                out.row(&item, "valid", "", format!("{item}: valid derivation"));
                ExitCode::SUCCESS
            }
            Err(m) => {
                eprintln!("{m}");
                out.row(&item, "invalid", &m, format!("{item}: invalid derivation"));
                ExitCode::FAILURE
            }
        });
    }
    let v = decide_sub(&a, &b);
    match &v {
        SubVerdict::Yes(d) => {
            out.row(&item, "Yes", "", "Yes".into());
            if cli.format == Format::Text {
                print!("{}", d.to_text());
            }
            Ok(ExitCode::SUCCESS)
        }
        SubVerdict::No(m) => {
            out.row(&item, "No", m, format!("No: {m}"));
            Ok(ExitCode::FAILURE)
        }
        SubVerdict::Unknown(m) => {
            out.row(&item, "Unknown", m, format!("Unknown: {m}"));
            Ok(ExitCode::from(3))
        }
    }
}

fn cmd_derive_check(cli: &Cli, file: &Path) -> Result<ExitCode, ExitCode> {
    let d = parse_typing_derivation(&read(file)?).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(PARSE_ERROR)
    })?;
    let out = Out { format: cli.format };
    let item = format!("{} : {}", print_term(&d.term), print_type(&d.ty));
    Ok(match check_typing_derivation(&d) {
        Ok(()) => {
            out.row(&item, "valid", "", format!("{item}: valid derivation"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            out.row(
                &item,
                "invalid",
                &e.to_string(),
                format!("{item}: invalid derivation ({e})"),
            );
            ExitCode::FAILURE
        }
    })
}

fn cmd_corrupt(cli: &Cli, file: &Path, delta: &str, samples: usize) -> Result<ExitCode, ExitCode> {
    let corpus = load(file)?;
    let delta = parse_exc_set(delta).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(PARSE_ERROR)
    })?;
    let out = Out { format: cli.format };
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut ok = true;
    for q in corpus.questions() {
        if q.ty.has_forall() || !q.check().is_yes() {
            out.row(&q.label, "skipped", "", format!("{}: skipped", q.label));
            continue;
        }
        let (mut held, mut failed) = (0, Vec::new());
        for _ in 0..samples {
            let n = corrupt(&mut rng, &q.term.erase(), &delta, 2);
            match corruption_theorem_probe(&q.ctx, &q.term, &q.ty, &n, &delta) {
                Ok(true) => held += 1,
                Ok(false) => failed.push(print_term(&n)),
                Err(e) => failed.push(format!("{}: {e}", print_term(&n))),
            }
        }
        let ty = print_type(&fx_core::syntax::Type::corrupt(q.ty.clone(), delta.clone()));
        if failed.is_empty() {
            out.row(
                &q.label,
                "held",
                &format!("{held}/{samples}"),
                format!("{}: {held}/{samples} corruptions check at {ty}", q.label),
            );
        } else {
            ok = false;
            for f in &failed {
                eprintln!("{}: corruption {f} does not check at {ty}", q.label);
            }
            out.row(
                &q.label,
                "failed",
                &failed.join("; "),
                format!(
                    "{}: {} of {samples} corruptions failed",
                    q.label,
                    failed.len()
                ),
            );
        }
    }
    Ok(status(ok))
}

fn cmd_model(cli: &Cli, file: &Path) -> Result<ExitCode, ExitCode> {
    let corpus = load(file)?;
    let mut rows = Vec::new();
    for q in corpus.questions() {
        let closed = corpus.expand(&q.term);
        if !closed.mentions_model_forms() && !q.check().is_yes() {
            eprintln!("{}: not well typed, skipped", q.label);
            continue;
        }
        rows.push(semantic_probe(&q.label, &closed, &q.ty, cli.fuel));
    }
    for r in &rows {
        if let Some(w) = &r.warning {
            eprintln!("warning: {}: {w}", r.item);
        }
    }
    match cli.format {
        Format::Text => print!("{}", render_report(&rows)),
        Format::Machine => {
            for r in &rows {
                let (verdict, detail) = match &r.status {
                    ProbeStatus::Checked(mb) => (
                        if r.agree() { "agree" } else { "disagree" },
                        format!(
                            "{} {} {}",
                            print_type(&r.ty),
                            mb.orthogonality,
                            mb.syntactic
                        ),
                    ),
                    ProbeStatus::Declined => ("declined", print_type(&r.ty)),
                };
                println!("{}\t{verdict}\t{detail}", r.item);
            }
        }
    }
    Ok(status(rows.iter().all(|r| r.agree())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Eval { file } => cmd_eval(&cli, file),
        Command::Check { file } => cmd_check(&cli, file),
        Command::Sub {
            lhs,
            rhs,
            derivation,
        } => cmd_sub(&cli, lhs, rhs, derivation.as_deref()),
        Command::DeriveCheck { file } => cmd_derive_check(&cli, file),
        Command::Corrupt {
            file,
            delta,
            samples,
        } => cmd_corrupt(&cli, file, delta, *samples),
        Command::Model { file } => cmd_model(&cli, file),
    };
    res.unwrap_or_else(|code| code)
}
