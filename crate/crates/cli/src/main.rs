//! `semiconj`: certify, solve and verify semiconjugacies of toral actions
//! from the command line.
//!
//! Exit codes: 0 success, 2 not certified, 3 no semiconjugacy, 64 usage or
//! input error, 70 numerical failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use semiconj::examples::{conjugated_action, sanov_twist, standard_action, BumpSpec, Preset};
use semiconj::io::{load_scgf, read_action_spec, save_scgf, write_action_spec, write_atomic};
use semiconj::semiconj::{solve_full, SolveConfig, WordStrategy};
use semiconj::spectral::{
    eigen_data, restricted_inverse_norms, splitting, weak_hyperbolicity_certificate, ModulusClass, DEFAULT_TOL_UNIT,
};
use semiconj::verify::{equivariance_budget, equivariance_residual, image_coverage, induced_h1, sample_points};
use semiconj::{ActionSpecF64, Error, IntMatrix, Word};

const EXIT_NOT_CERTIFIED: u8 = 2;
const EXIT_NO_SEMICONJUGACY: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_NUMERICAL: u8 = 70;

#[derive(Parser)]
#[command(
    name = "semiconj",
    version,
    about = "Semiconjugacies from perturbed lattice actions on the torus to their linear models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, splitting and restricted inverse norms of a matrix or word.
    Spectral(SpectralArgs),
    /// Search for a weak hyperbolicity certificate (exit 2 if none is found).
    Certify(CertifyArgs),
    /// Solve for phi2, write phi2.scgf, report.txt and residuals.csv (exit 3 if no semiconjugacy).
    Solve(SolveArgs),
    /// Check psi = id + phi2 from an SCGF file against every generator (exit 3 on failure).
    Verify(VerifyArgs),
    /// Write a demo action spec and print its path.
    Demo(DemoArgs),
}

#[derive(Args)]
struct SpectralArgs {
    /// Inline matrix, rows separated by `;`, e.g. "2,1;1,1".
    #[arg(short, long, conflicts_with_all = ["spec", "word"])]
    matrix: Option<String>,
    /// Action spec file; use with --word.
    #[arg(long, requires = "word")]
    spec: Option<PathBuf>,
    /// Word over the spec's generators, e.g. "a b^-1".
    #[arg(long, requires = "spec")]
    word: Option<String>,
    /// Number of restricted inverse norms to print.
    #[arg(long, default_value_t = 8)]
    powers: usize,
}

#[derive(Args)]
struct CertifyArgs {
    spec: PathBuf,
    /// Longest reduced word examined.
    #[arg(long, short = 'L', default_value_t = 4, value_parser = positive)]
    word_len: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Grid resolution: one value for every axis, or one per axis ("128,128").
    #[arg(long)]
    res: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0x5EED)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    spec: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 1e-8)]
    tol_tail: f64,
    #[arg(long, default_value_t = 200)]
    max_n: usize,
    /// Comma-separated words to solve on, e.g. "a b, b^-1 a^-1"; default is automatic.
    #[arg(long)]
    words: Option<String>,
    /// Longest word tried by the automatic word choice.
    #[arg(long, default_value_t = 4, value_parser = positive)]
    word_len: usize,
}

#[derive(Args)]
struct VerifyArgs {
    spec: PathBuf,
    /// SCGF file holding phi2, with psi = id + phi2.
    psi: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoKind {
    /// Every generator of a standard action conjugated by h = id + eta.
    Conjugation,
    /// Generator a of the sl2_sanov action conjugated by h, b left linear.
    Twist,
    /// A standard linear action.
    Linear,
}

#[derive(Args)]
struct DemoArgs {
    kind: DemoKind,
    /// Torus dimension (conjugation and linear).
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Preset for the base action; defaults to sl2_sanov for n = 2, sln_elementary above.
    #[arg(long)]
    preset: Option<String>,
    /// Amplitude of the standard bump eta_i = amp sin(2 pi x_(i+1)).
    #[arg(long, default_value_t = 0.05)]
    amp: f64,
    #[arg(long)]
    res: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotUnimodular { .. }
            | Error::DimensionMismatch { .. }
            | Error::DimensionTooLarge(_)
            | Error::UnknownGenerator(_)
            | Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Format(_)
            | Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_res(text: &str, n: usize) -> Result<Vec<usize>, Failure> {
    let v: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| Failure::Usage(format!("bad resolution `{}`", t.trim()))))
        .collect::<Result<_, _>>()?;
    let v = if v.len() == 1 { vec![v[0]; n] } else { v };
    if v.len() != n {
        return Err(Failure::Usage(format!("--res has {} entries for n = {n}", v.len())));
    }
    if v.iter().any(|&r| r < 2) {
        return Err(Failure::Usage("resolutions must be at least 2".into()));
    }
    Ok(v)
}

/// Reads the spec, applying `--res` to bump and zero displacements.
fn load_spec(path: &Path, res: Option<&str>) -> Result<(ActionSpecF64, Option<Vec<usize>>), Failure> {
    let first = read_action_spec(path, None)?;
    match res {
        None => Ok((first, None)),
        Some(r) => {
            let r = parse_res(r, first.n())?;
            Ok((read_action_spec(path, Some(&r))?, Some(r)))
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn class_name(c: ModulusClass) -> &'static str {
    match c {
        ModulusClass::Expanding => "expanding",
        ModulusClass::Neutral => "neutral",
        ModulusClass::Contracting => "contracting",
    }
}

fn spectral(args: SpectralArgs) -> Outcome {
    let (a, label) = match (&args.matrix, &args.spec, &args.word) {
        (Some(m), _, _) => (m.parse::<IntMatrix>()?, m.clone()),
        (None, Some(spec), Some(word)) => {
            let spec = read_action_spec(spec, None)?;
            let w = spec.parse_word(word)?;
            (spec.word_matrix(&w)?, word.clone())
        }
        _ => return Err(Failure::Usage("give --matrix, or --spec with --word".into())),
    };
    let det = a.det();
    if det.abs() != 1 {
        return Err(Error::NotUnimodular { det: det as i128 }.into());
    }
    let ev = eigen_data(&a, DEFAULT_TOL_UNIT)?;
    let s = splitting(&a, DEFAULT_TOL_UNIT)?;
    let mut out = String::new();
    let _ = writeln!(out, "{label}: A = {a}, det = {det}, trace = {}", a.trace());
    let _ = writeln!(out, "eigenvalues:");
    for e in &ev.eigenvalues {
        let z = e.value;
        let v = if z.im.abs() > 1e-12 {
            format!("{:.6} {} {:.6}i", z.re, if z.im < 0.0 { '-' } else { '+' }, z.im.abs())
        } else {
            format!("{:.6}", z.re)
        };
        let _ = writeln!(out, "  {v}  |.| = {:.6}  {}", e.modulus, class_name(e.class));
    }
    let _ = writeln!(out, "dim E = {}, dim F = {}", s.dim_e(), s.dim_f());
    let _ = writeln!(out, "|A| = {:.6}, |A^-1| = {:.6}", a.norm2(), a.inverse().norm2());
    if s.dim_e() > 0 {
        let r = restricted_inverse_norms(&s, args.powers.max(1))?;
        let norms: Vec<String> = r.norms.iter().map(|v| format!("{v:.4e}")).collect();
        let _ = writeln!(out, "|A^-i on E|, i = 1..{}: {}", r.norms.len(), norms.join(" "));
        let _ = writeln!(out, "contraction: k = {}, q = {:.6}, sum bound = {:.6}", r.k, r.q, r.total_bound());
        let _ = writeln!(
            out,
            "invariance residual = {:.2e}, idempotence residual = {:.2e}",
            s.invariance_residual(),
            s.idempotence_residual()
        );
    }
    print!("{out}");
    Ok(0)
}

fn certify(args: CertifyArgs) -> Outcome {
    let spec = read_action_spec(&args.spec, None)?;
    let cert = weak_hyperbolicity_certificate(&spec.matrices(), args.word_len, DEFAULT_TOL_UNIT)?;
    let names = spec.names();
    println!("verdict = {:?}", cert.verdict);
    println!("spanned dim = {} of {}", cert.spanned_dim, spec.n());
    println!("words examined = {}", cert.words_examined);
    for w in &cert.witness_words {
        let s = splitting(&spec.word_matrix(w)?, DEFAULT_TOL_UNIT)?;
        println!("witness {} (dim E = {})", w.display(names), s.dim_e());
    }
    match &cert.first_hyperbolic {
        Some(w) => println!("first hyperbolic word = {}", w.display(names)),
        None => println!("first hyperbolic word = none"),
    }
    Ok(if cert.is_verified() { 0 } else { EXIT_NOT_CERTIFIED })
}

fn solve(args: SolveArgs) -> Outcome {
    let (spec, res) = load_spec(&args.spec, args.run.res.as_deref())?;
    let cfg = SolveConfig {
        res: Some(res.unwrap_or_else(|| spec.generators()[0].delta().res().to_vec())),
        tol_tail: args.tol_tail,
        max_n: args.max_n,
        word_len: args.word_len,
        seed: args.run.seed,
        ..Default::default()
    };
    cfg.validate()?;
    let strategy = match &args.words {
        Some(text) => WordStrategy::Preferred(Word::parse_list(text, spec.names())?),
        None => WordStrategy::Auto,
    };
    let result = solve_full(&spec, &strategy, &cfg)?;
    let report = result.report(spec.names());
    ensure_dir(&args.run.out)?;
    save_scgf(&args.run.out.join("phi2.scgf"), &result.phi2)?;
    write_atomic(&args.run.out.join("report.txt"), report.as_bytes())?;
    write_atomic(&args.run.out.join("residuals.csv"), result.residuals.to_csv().as_bytes())?;
    print!("{report}");
    Ok(if result.is_ok() { 0 } else { EXIT_NO_SEMICONJUGACY })
}

fn verify(args: VerifyArgs) -> Outcome {
    let (spec, _) = load_spec(&args.spec, args.run.res.as_deref())?;
    let phi2 = load_scgf(&args.psi)?;
    if phi2.d() != spec.n() || phi2.m() != spec.n() {
        return Err(Failure::Usage(format!("{} is not a map T^{n} -> R^{n}", args.psi.display(), n = spec.n())));
    }
    let cfg = SolveConfig::default();
    let budgets = equivariance_budget(&spec, &phi2, cfg.safety, cfg.inv_tol);
    let psi = |x: &[f64]| -> Vec<f64> { x.iter().zip(phi2.eval(x)).map(|(a, b)| a + b).collect() };
    let mut samples = phi2.points();
    samples.extend(sample_points::<f64>(phi2.res(), args.run.seed));
    let report = equivariance_residual(&spec, psi, &samples, &budgets)?;
    for e in &report.entries {
        println!(
            "{}: residual {:.3e} budget {:.3e} {} at {:?}",
            e.generator,
            e.sup_residual,
            e.budget,
            if e.pass { "pass" } else { "FAIL" },
            e.argmax
        );
    }
    match induced_h1(psi, spec.n(), &sample_points::<f64>(phi2.res(), args.run.seed)) {
        Ok(m) => println!(
            "induced H1 map = {}",
            m.row_iter()
                .map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(","))
                .collect::<Vec<_>>()
                .join(";")
        ),
        Err(e) => println!("induced H1 map unavailable: {e}"),
    }
    if spec.n() <= 3 {
        println!(
            "image coverage (16 cells per axis, informational) = {:.3}",
            image_coverage(psi, spec.n(), &samples, 16)
        );
    }
    if args.run.out != Path::new(".") {
        ensure_dir(&args.run.out)?;
        write_atomic(&args.run.out.join("residuals.csv"), report.to_csv().as_bytes())?;
    }
    let ok = report.all_pass();
    println!("verdict = {}", if ok { "OK" } else { "NO_SEMICONJUGACY" });
    Ok(if ok { 0 } else { EXIT_NO_SEMICONJUGACY })
}

fn demo(args: DemoArgs) -> Outcome {
    let n = args.n;
    if n < 2 {
        return Err(Failure::Usage("--n must be at least 2".into()));
    }
    let res = match &args.res {
        Some(r) => parse_res(r, n)?,
        None => SolveConfig::default_res(n),
    };
    let preset = match &args.preset {
        Some(p) => p.parse::<Preset>()?,
        None if n == 2 => Preset::Sl2Sanov,
        None => Preset::SlnElementary,
    };
    let eta = BumpSpec::standard(n, args.amp);
    ensure_dir(&args.out)?;
    let path = match args.kind {
        DemoKind::Linear => write_action_spec(&standard_action(n, preset, res)?, &args.out, "linear")?,
        DemoKind::Twist => {
            if n != 2 || preset != Preset::Sl2Sanov {
                return Err(Failure::Usage("the twist demo is defined for sl2_sanov in dimension 2".into()));
            }
            write_action_spec(&sanov_twist(&eta, res)?, &args.out, "twist")?
        }
        DemoKind::Conjugation => {
            let base = standard_action(n, preset, res.clone())?;
            let c = conjugated_action(&base, &eta, res)?;
            save_scgf(&args.out.join("conjugation_truth_phi2.scgf"), &c.ground_truth_phi2)?;
            write_action_spec(&c.spec, &args.out, "conjugation")?
        }
    };
    println!("{}", path.display());
    Ok(0)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("SEMICONJ_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("SEMICONJ_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Numerical(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = init_threads().and_then(|()| match cli.command {
        Command::Spectral(a) => spectral(a),
        Command::Certify(a) => certify(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Demo(a) => demo(a),
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
