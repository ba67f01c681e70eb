//! Command-line front end: JSON file formats and the `validate`, `minimise`,
//! `verify` and `oracle` subcommands.
//!
//! Files hold one JSON object on a single line. Rationals are written as
//! strings `"n"` or `"n/d"`; plain JSON integers are accepted on input.
//! Coefficients of `H` are listed in upper-triangular lexicographic order over
//! `z12, z13, z23, z14, z24, z34`; the curve as `f0, …, f6`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::arith::{format_rational, parse_rational, rat, vp, Rational, Valuation};
use crate::error::Error;
use crate::linalg::{Mat4Q, QMatrix};
use crate::minimise::{minimise_model_global, minimise_model_local, minimise_step, LocalRound};
use crate::model::{coeff_pairs, CurveSextic, Model, QuadForm6, Transform};
use crate::weights::{brute_force_minimisable, ORACLE_MAX_PRIME};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

const Z_NAMES: [&str; 6] = ["z12", "z13", "z23", "z14", "z24", "z34"];

// ---------------------------------------------------------------------------
// file formats

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum Number {
    Text(String),
    Int(i64),
}

impl Number {
    fn parse(&self) -> Result<Rational, Error> {
        match self {
            Number::Text(s) => parse_rational(s),
            Number::Int(n) => Ok(rat(*n)),
        }
    }
}

fn texts(xs: &[Rational]) -> Vec<String> {
    xs.iter().map(format_rational).collect()
}

fn parse_all(xs: &[Number], len: usize, what: &str) -> Result<Vec<Rational>, Error> {
    if xs.len() != len {
        return Err(Error::Parse(format!("{what}: expected {len} entries, found {}", xs.len())));
    }
    xs.iter().map(Number::parse).collect()
}

/// A model `(λ, H)` for the sextic `f`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    curve: Vec<Number>,
    lambda: Number,
    h: Vec<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    primes: Option<Vec<u64>>,
}

impl ModelFile {
    pub fn from_model(m: &Model, primes: Option<Vec<u64>>) -> Self {
        let text = |xs: &[Rational]| texts(xs).into_iter().map(Number::Text).collect();
        ModelFile {
            curve: text(m.curve.coeffs()),
            lambda: Number::Text(format_rational(&m.lambda)),
            h: text(m.h.coeffs()),
            primes,
        }
    }

    pub fn primes(&self) -> Option<&[u64]> {
        self.primes.as_deref()
    }

    /// The model, checking the determinant identity when `validate` is set.
    pub fn to_model(&self, validate: bool) -> Result<Model, Error> {
        let f = parse_all(&self.curve, 7, "curve")?;
        let curve = CurveSextic::new(std::array::from_fn(|i| f[i].clone()))?;
        let lambda = self.lambda.parse()?;
        let h = QuadForm6::from_slice(&parse_all(&self.h, 21, "h")?)?;
        if validate {
            Model::new(curve, lambda, h)
        } else {
            Ok(Model::new_unchecked(curve, lambda, h))
        }
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("plain data") + "\n"
    }
}

/// One transformation chosen while minimising.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub prime: u64,
    pub round: usize,
    pub visit: usize,
    pub step: u8,
    #[serde(default)]
    pub weight: Option<[i64; 4]>,
    #[serde(default)]
    pub matrix: Option<Vec<String>>,
}

/// The composed `(c, P)` with its trace and the model it produces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub c: String,
    pub p_matrix: Vec<String>,
    pub primes: Vec<u64>,
    pub trace: Vec<TraceRecord>,
    pub lambda: String,
    pub h: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

fn matrix_texts(m: &Mat4Q) -> Vec<String> {
    m.0.iter().flatten().map(format_rational).collect()
}

impl CertificateFile {
    pub fn new(
        t: &Transform,
        primes: Vec<u64>,
        rounds: &[LocalRound],
        out: &Model,
        warning: Option<String>,
    ) -> Self {
        let trace = rounds
            .iter()
            .flat_map(|r| {
                r.trace.iter().map(move |e| TraceRecord {
                    prime: r.prime,
                    round: r.round,
                    visit: e.visit,
                    step: e.step,
                    weight: e.weight.map(|w| w.0),
                    matrix: e.change.as_ref().map(matrix_texts),
                })
            })
            .collect();
        CertificateFile {
            c: format_rational(&t.c),
            p_matrix: matrix_texts(&t.p),
            primes,
            trace,
            lambda: format_rational(&out.lambda),
            h: texts(out.h.coeffs()),
            warning,
        }
    }

    pub fn transform(&self) -> Result<Transform, Error> {
        let c = parse_rational(&self.c)?;
        if self.p_matrix.len() != 16 {
            return Err(Error::Parse("p_matrix: expected 16 entries".into()));
        }
        let e: Vec<Rational> = self.p_matrix.iter().map(|s| parse_rational(s)).collect::<Result<_, _>>()?;
        let p = QMatrix::from_fn(|i, j| e[4 * i + j].clone());
        Transform::new(c, p)
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("plain data") + "\n"
    }
}

// ---------------------------------------------------------------------------
// argument parsing

#[derive(Debug, Parser)]
#[command(name = "g2min", version, about = "p-adic minimisation of quadric models (lambda, H) attached to a sextic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the determinant identity of a model file.
    Validate { file: PathBuf },
    /// Minimise at one prime or at all relevant primes.
    Minimise {
        file: PathBuf,
        /// Work at this prime only.
        #[arg(long, conflicts_with_all = ["global", "primes"])]
        prime: Option<u64>,
        /// Work at every prime found by trial division (the default).
        #[arg(long)]
        global: bool,
        /// Work at these primes, comma separated.
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<u64>>,
        /// Write the certificate here.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Write the minimised model here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Skip the determinant check when loading.
        #[arg(long)]
        no_validate: bool,
    },
    /// Replay a certificate on a model and compare with its claimed output.
    Verify {
        input: PathBuf,
        certificate: PathBuf,
        #[arg(long)]
        no_validate: bool,
    },
    /// Compare the algorithm with exhaustive search at p = 2 or 3.
    Oracle {
        /// Model file; optional in batch mode.
        file: Option<PathBuf>,
        #[arg(long)]
        prime: u64,
        /// Number of random forms to test.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_validate: bool,
    },
}

/// Parses arguments and runs; returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Validate { file } => cmd_validate(&file, out),
        Command::Minimise { file, prime, global: _, primes, certificate, output, no_validate } => {
            let opts = MinimiseOptions { prime, primes, certificate, output, validate: !no_validate };
            cmd_minimise(&file, &opts, out, err)
        }
        Command::Verify { input, certificate, no_validate } => {
            cmd_verify(&input, &certificate, !no_validate, out)
        }
        Command::Oracle { file, prime, count, seed, no_validate } => {
            cmd_oracle(file.as_deref(), prime, count, seed, !no_validate, out)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

/// An error with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError { code: EXIT_INPUT, message: e.to_string() }
    }

    fn fail(e: impl std::fmt::Display) -> Self {
        CliError { code: EXIT_FAIL, message: e.to_string() }
    }
}

type CliResult = Result<i32, CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_model_file(path: &Path) -> Result<ModelFile, CliError> {
    ModelFile::parse(&read(path)?).map_err(CliError::input)
}

/// Parse problems are input errors; a failed determinant check is a semantic failure.
fn load_model(file: &ModelFile, validate: bool) -> Result<Model, CliError> {
    let m = file.to_model(false).map_err(CliError::input)?;
    if validate && !m.is_valid() {
        return Err(CliError::fail("the model does not satisfy the determinant identity"));
    }
    Ok(m)
}

fn io(e: std::io::Error) -> CliError {
    CliError::input(e)
}

fn poly_text(c: &[Rational; 7]) -> String {
    let terms: Vec<String> = c
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, x)| !num_traits::Zero::is_zero(*x))
        .map(|(i, x)| match i {
            0 => format_rational(x),
            1 => format!("({})*x", format_rational(x)),
            _ => format!("({})*x^{i}", format_rational(x)),
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

// ---------------------------------------------------------------------------
// subcommands

pub fn cmd_validate(file: &Path, out: &mut dyn Write) -> CliResult {
    let m = load_model(&load_model_file(file)?, false)?;
    let (lhs, rhs) = m.validity_polynomials();
    writeln!(out, "det(lambda x G - H) = {}", poly_text(&lhs)).map_err(io)?;
    writeln!(out, "-lambda^6 f(x) / f6  = {}", poly_text(&rhs)).map_err(io)?;
    if lhs == rhs && !num_traits::Zero::is_zero(&m.lambda) {
        writeln!(out, "PASS").map_err(io)?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "FAIL").map_err(io)?;
        Ok(EXIT_FAIL)
    }
}

#[derive(Clone, Debug, Default)]
pub struct MinimiseOptions {
    pub prime: Option<u64>,
    pub primes: Option<Vec<u64>>,
    pub certificate: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub validate: bool,
}

fn val_text(v: Valuation) -> String {
    match v {
        Valuation::Finite(n) => n.to_string(),
        Valuation::Infinite => "inf".into(),
    }
}

pub fn cmd_minimise(
    file: &Path,
    opts: &MinimiseOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let mf = load_model_file(file)?;
    let m = load_model(&mf, opts.validate)?;
    if !opts.validate && !m.is_valid() {
        return Err(CliError::fail("minimisation needs a model satisfying the determinant identity"));
    }
    let check = |p: u64| {
        if crate::arith::is_prime(p) {
            Ok(p)
        } else {
            Err(CliError::input(format!("{p} is not prime")))
        }
    };
    let (model, transform, primes, rounds, warning) = match opts.prime {
        Some(p) => {
            let p = check(p)?;
            let r = minimise_model_local(&m, p).map_err(CliError::fail)?;
            (r.model, r.transform, vec![p], r.rounds, None)
        }
        None => {
            let requested = opts.primes.clone().or_else(|| mf.primes.clone());
            if let Some(ps) = &requested {
                for &p in ps {
                    check(p)?;
                }
            }
            let r = minimise_model_global(&m, requested.as_deref()).map_err(CliError::fail)?;
            (r.model, r.transform, r.primes, r.rounds, r.warning)
        }
    };
    for &p in &primes {
        writeln!(err, "p = {p}: v(lambda) {} -> {}", val_text(vp(&m.lambda, p)), val_text(vp(&model.lambda, p)))
            .map_err(io)?;
    }
    if let Some(w) = &warning {
        writeln!(err, "warning: {w}").map_err(io)?;
    }
    let text = ModelFile::from_model(&model, None).to_line();
    match &opts.output {
        Some(path) => fs::write(path, text).map_err(io)?,
        None => out.write_all(text.as_bytes()).map_err(io)?,
    }
    if let Some(path) = &opts.certificate {
        let cert = CertificateFile::new(&transform, primes, &rounds, &model, warning);
        fs::write(path, cert.to_line()).map_err(io)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(input: &Path, certificate: &Path, validate: bool, out: &mut dyn Write) -> CliResult {
    let m = load_model(&load_model_file(input)?, validate)?;
    let cert = CertificateFile::parse(&read(certificate)?).map_err(CliError::input)?;
    let t = match cert.transform() {
        Ok(t) => t,
        Err(Error::Parse(e)) => return Err(CliError::input(e)),
        Err(e) => {
            writeln!(out, "FAIL: {e}").map_err(io)?;
            return Ok(EXIT_FAIL);
        }
    };
    let claimed_lambda = parse_rational(&cert.lambda).map_err(CliError::input)?;
    if cert.h.len() != 21 {
        return Err(CliError::input("h: expected 21 entries"));
    }
    let claimed_h: Vec<Rational> = cert.h.iter().map(|s| parse_rational(s)).collect::<Result<_, _>>().map_err(CliError::input)?;
    let got = m.act(&t);
    if got.lambda != claimed_lambda {
        writeln!(
            out,
            "FAIL: lambda is {} but the certificate claims {}",
            format_rational(&got.lambda),
            format_rational(&claimed_lambda)
        )
        .map_err(io)?;
        return Ok(EXIT_FAIL);
    }
    for ((i, j), (a, b)) in coeff_pairs().zip(got.h.coeffs().iter().zip(&claimed_h)) {
        if a != b {
            writeln!(
                out,
                "FAIL: coefficient of {}*{} is {} but the certificate claims {}",
                Z_NAMES[i],
                Z_NAMES[j],
                format_rational(a),
                format_rational(b)
            )
            .map_err(io)?;
            return Ok(EXIT_FAIL);
        }
    }
    writeln!(out, "PASS").map_err(io)?;
    Ok(EXIT_OK)
}

/// Random forms for batch mode: each coefficient is `p^e u` with `e` in 0..=2
/// and `u` in 0..p, biased towards small residue rank.
fn random_oracle_form(rng: &mut impl Rng, p: u64) -> QuadForm6 {
    let p = p as i64;
    let c: [i64; 21] = std::array::from_fn(|_| {
        let e = [0, 1, 1, 2][rng.gen_range(0..4)];
        p.pow(e) * rng.gen_range(0..p)
    });
    QuadForm6::from_i64(&c)
}

fn agree(h: &QuadForm6, p: u64) -> Result<(bool, bool), CliError> {
    if h.valuation(p).map_err(CliError::input)? < Valuation::Finite(0) {
        return Err(CliError::input(format!("the form is not integral at {p}")));
    }
    let alg = minimise_step(h, p).map_err(CliError::fail)?.reducible;
    let brute = brute_force_minimisable(h, p).map_err(CliError::input)?;
    Ok((alg, brute))
}

pub fn cmd_oracle(
    file: Option<&Path>,
    p: u64,
    count: Option<usize>,
    seed: u64,
    validate: bool,
    out: &mut dyn Write,
) -> CliResult {
    if !crate::arith::is_prime(p) || p > ORACLE_MAX_PRIME {
        return Err(CliError::input(format!("the oracle supports p = 2 or 3, not {p}")));
    }
    let mut forms = Vec::new();
    if let Some(f) = file {
        forms.push(load_model(&load_model_file(f)?, validate)?.h);
    }
    if let Some(n) = count {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        forms.extend((0..n).map(|_| random_oracle_form(&mut rng, p)));
    }
    if forms.is_empty() {
        return Err(CliError::input("give a model file or --count"));
    }
    let single = forms.len() == 1;
    let (mut same, mut reducible) = (0, 0);
    for (i, h) in forms.iter().enumerate() {
        let (alg, brute) = agree(h, p)?;
        if alg == brute {
            same += 1;
            reducible += usize::from(alg);
            if single {
                writeln!(out, "AGREE({alg})").map_err(io)?;
            }
        } else {
            writeln!(out, "DISAGREE form {i}: algorithm {alg}, exhaustive search {brute}: {h}").map_err(io)?;
        }
    }
    if !single {
        writeln!(out, "agreement {same}/{} ({reducible} reducible)", forms.len()).map_err(io)?;
    }
    Ok(if same == forms.len() { EXIT_OK } else { EXIT_FAIL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    #[test]
    fn model_file_round_trip() {
        let mf = ModelFile::from_model(&example_model_1(), Some(vec![2, 3, 7]));
        let line = mf.to_line();
        assert!(line.ends_with('\n') && line.matches('\n').count() == 1);
        let back = ModelFile::parse(&line).unwrap();
        assert_eq!(back, mf);
        assert_eq!(back.to_model(true).unwrap(), example_model_1());
        assert_eq!(ModelFile::parse(&back.to_line()).unwrap().to_line(), line);
    }

    #[test]
    fn integers_accepted() {
        let text = r#"{"curve":[-60,232,-471,506,-323,84,"-28"],"lambda":14,
            "h":[0,0,1,2,-1,8,-7,-13,-12,-15,-20,-5,-2,-25,-59,-4,-14,-18,17,-37,-11]}"#;
        let m = ModelFile::parse(text).unwrap().to_model(true).unwrap();
        assert_eq!(m, example_model_2());
    }

    #[test]
    fn bad_inputs() {
        assert!(ModelFile::parse("{").is_err());
        let short = r#"{"curve":["1"],"lambda":"1","h":[]}"#;
        assert!(ModelFile::parse(short).unwrap().to_model(false).is_err());
    }

    #[test]
    fn certificate_transform_round_trip() {
        let t = example_transform();
        let cert = CertificateFile::new(&t, vec![], &[], &example_model_2(), None);
        let back = CertificateFile::parse(&cert.to_line()).unwrap();
        assert_eq!(back.transform().unwrap(), t);
    }
}
