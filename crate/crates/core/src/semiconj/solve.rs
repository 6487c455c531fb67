use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::assemble::assemble;
use super::series::{series_solve_on_e, PartialSolution, SeriesBudget};
use crate::error::{Error, Result};
use crate::scalar::{mat_vec, norm, Scalar};
use crate::spectral::{splitting, weak_hyperbolicity_certificate, HyperbolicityCertificate};
use crate::torusmap::{ActionSpec, GridFunction, InvertOptions};
use crate::verify::{equivariance_residual, sample_points, ResidualReport, DEFAULT_SEED};
use crate::word::{ReducedWords, Word};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Grid for `φ₂`; `None` picks [`SolveConfig::default_res`].
    pub res: Option<Vec<usize>>,
    pub tol_tail: f64,
    pub max_n: usize,
    pub tol_unit: f64,
    pub inv_tol: f64,
    pub inv_max_iter: usize,
    /// Longest word tried by the automatic word choice.
    pub word_len: usize,
    pub seed: u64,
    /// Multiplier on the error budget.
    pub safety: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            res: None,
            tol_tail: 1e-8,
            max_n: 200,
            tol_unit: 1e-9,
            inv_tol: 1e-12,
            inv_max_iter: 200,
            word_len: 4,
            seed: DEFAULT_SEED,
            safety: 10.0,
        }
    }
}

impl SolveConfig {
    /// `256^2` in dimension 2, `64^3` in dimension 3, `16^n` above.
    pub fn default_res(n: usize) -> Vec<usize> {
        let r = match n {
            0..=2 => 256,
            3 => 64,
            _ => 16,
        };
        vec![r; n]
    }

    pub fn resolution(&self, n: usize) -> Vec<usize> {
        self.res.clone().unwrap_or_else(|| Self::default_res(n))
    }

    pub fn invert_options<T: Scalar>(&self) -> InvertOptions<T> {
        InvertOptions { tol: T::of(self.inv_tol), max_iter: self.inv_max_iter }
    }

    pub fn series_budget(&self) -> SeriesBudget {
        SeriesBudget { tol_tail: self.tol_tail, max_n: self.max_n }
    }

    pub fn validate(&self) -> Result<()> {
        let tols = [
            ("tol_tail", self.tol_tail),
            ("tol_unit", self.tol_unit),
            ("inv_tol", self.inv_tol),
            ("safety", self.safety),
        ];
        if let Some((name, v)) = tols.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
        if let Some(r) = self.res.as_ref().and_then(|r| r.iter().find(|&&r| r < 2)) {
            return Err(Error::InvalidArgument(format!("resolution {r} is below 2")));
        }
        if self.max_n == 0 || self.word_len == 0 {
            return Err(Error::InvalidArgument("max_n and word_len must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WordStrategy {
    /// A hyperbolic word `w` with `w^{-1}` if one exists up to the configured
    /// length; otherwise certificate witnesses, extended greedily until the
    /// stacked system has full rank.
    Auto,
    Preferred(Vec<Word>),
}

/// Summary of one solved word.
#[derive(Debug, Clone, PartialEq)]
pub struct WordSolve {
    pub word: Word,
    pub dim_e: usize,
    pub n_used: usize,
    pub tail_bound: f64,
    pub sup_alpha: f64,
    /// Bound on `Σ_{i ≥ 1} ‖A_w^{-i}|_E‖`.
    pub norm_sum: f64,
    pub alpha_interp: f64,
}

/// Error budget. With `base = tail + interpolation + inversion`, generator `γ`
/// is allowed `safety · (1 + ‖A_γ‖) · base`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    /// Sum of the certified tails.
    pub tail: f64,
    /// `max_γ interp(δ_γ) + Σ_w S_w · interp(α_w)`, with `S_w` the norm sum of the word.
    pub interpolation: f64,
    /// `inv_tol · Σ_w |w| (1 + S_w)`.
    pub inversion: f64,
    pub safety: f64,
    pub per_generator: Vec<f64>,
}

impl ErrorBudget {
    pub fn base(&self) -> f64 {
        self.tail + self.interpolation + self.inversion
    }

    /// Budget for a map with linear part of norm `a_norm`.
    pub fn scaled(&self, a_norm: f64) -> f64 {
        self.safety * (1.0 + a_norm) * self.base()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Ok,
    /// Generators whose equivariance residual exceeds the budget.
    NoSemiconjugacy {
        failing: Vec<String>,
    },
}

#[derive(Debug, Clone)]
pub struct SemiconjugacyResult<T = f64> {
    pub phi2: GridFunction<T>,
    pub solve_words: Vec<Word>,
    pub words: Vec<WordSolve>,
    pub assembly_residual: f64,
    pub budget: ErrorBudget,
    pub residuals: ResidualReport,
    pub verdict: Verdict,
    pub certificate: Option<HyperbolicityCertificate>,
    pub config: SolveConfig,
}

impl<T: Scalar> SemiconjugacyResult<T> {
    /// `ψ̃(x) = x + φ₂(x mod 1)`.
    pub fn psi_lift(&self, x: &[T]) -> Vec<T> {
        let p = self.phi2.eval(x);
        x.iter().zip(p).map(|(&a, b)| a + b).collect()
    }

    pub fn is_ok(&self) -> bool {
        self.verdict == Verdict::Ok
    }

    /// Plain-text report: configuration, words, budget arithmetic, residuals, verdict.
    pub fn report(&self, names: &[String]) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "# semiconjugacy report");
        let _ = writeln!(s, "model: psi = id + phi2, displacement cocycle alpha(g, x) = F_g(x) - A_g x");
        let _ = writeln!(s, "res = {:?}", self.phi2.res());
        let _ = writeln!(s, "tol_tail = {:e}", c.tol_tail);
        let _ = writeln!(s, "max_n = {}", c.max_n);
        let _ = writeln!(s, "tol_unit = {:e}", c.tol_unit);
        let _ = writeln!(s, "inv_tol = {:e}", c.inv_tol);
        let _ = writeln!(s, "inv_max_iter = {}", c.inv_max_iter);
        let _ = writeln!(s, "word_len = {}", c.word_len);
        let _ = writeln!(s, "seed = {:#x}", c.seed);
        let _ = writeln!(s, "safety = {}", c.safety);
        if let Some(cert) = &self.certificate {
            let _ = writeln!(s, "certificate = {:?} (words examined {})", cert.verdict, cert.words_examined);
        }
        let _ = writeln!(s, "\n## words");
        for w in &self.words {
            let _ = writeln!(
                s,
                "{}: dim E = {}, N = {}, tail <= {:.3e}, sup alpha <= {:.3e}, S = {:.4}, interp(alpha) = {:.3e}",
                w.word.display(names),
                w.dim_e,
                w.n_used,
                w.tail_bound,
                w.sup_alpha,
                w.norm_sum,
                w.alpha_interp
            );
        }
        let b = &self.budget;
        let _ = writeln!(s, "\n## budget");
        let _ = writeln!(s, "tail = {:.3e}", b.tail);
        let _ = writeln!(s, "interpolation = {:.3e}", b.interpolation);
        let _ = writeln!(s, "inversion = {:.3e}", b.inversion);
        let _ = writeln!(s, "base = tail + interpolation + inversion = {:.3e}", b.base());
        let _ = writeln!(s, "generator budget = safety * (1 + |A_g|) * base");
        let _ = writeln!(s, "assembly_residual = {:.3e}", self.assembly_residual);
        let _ = writeln!(s, "sup |phi2| = {:.6e}", self.phi2.sup_norm().as_f64());
        let _ = writeln!(s, "\n## equivariance");
        for e in &self.residuals.entries {
            let _ = writeln!(
                s,
                "{}: residual {:.3e} budget {:.3e} {} at {:?}",
                e.generator,
                e.sup_residual,
                e.budget,
                if e.pass { "pass" } else { "FAIL" },
                e.argmax
            );
        }
        let verdict = match &self.verdict {
            Verdict::Ok => "OK".to_string(),
            Verdict::NoSemiconjugacy { failing } => format!("NO_SEMICONJUGACY (failing: {})", failing.join(", ")),
        };
        let _ = writeln!(s, "\nverdict = {verdict}");
        s
    }
}

/// Adds the rows of `C` (whose kernel is `F`) to an orthonormal row set;
/// returns whether the rank grew.
fn absorb_rows(basis: &mut Vec<DVector<f64>>, c: &DMatrix<f64>) -> bool {
    let mut grew = false;
    for row in c.row_iter() {
        let mut r = row.transpose();
        let scale = r.norm().max(1.0);
        for _ in 0..2 {
            for b in basis.iter() {
                let d = b.dot(&r);
                r -= b * d;
            }
        }
        let nr = r.norm();
        if nr > 1e-10 * scale {
            basis.push(r / nr);
            grew = true;
        }
    }
    grew
}

fn choose_words<T: Scalar>(
    spec: &ActionSpec<T>,
    cert: &HyperbolicityCertificate,
    cfg: &SolveConfig,
) -> Result<Vec<Word>> {
    if let Some(w) = &cert.first_hyperbolic {
        return Ok(vec![w.clone(), w.inverse()]);
    }
    let n = spec.n();
    let mut rows = Vec::new();
    let mut words = Vec::new();
    let candidates = cert.witness_words.iter().cloned().chain(ReducedWords::new(spec.generators().len(), cfg.word_len));
    for w in candidates {
        let sp = splitting(&spec.word_matrix(&w)?, cfg.tol_unit)?;
        if sp.dim_e() > 0 && absorb_rows(&mut rows, sp.e_coords()) {
            words.push(w);
        }
        if rows.len() >= n {
            return Ok(words);
        }
    }
    Err(Error::InsufficientSpan { rank: rows.len(), n })
}

/// Solves for `ψ = id + φ₂` and checks it against every generator.
pub fn solve_full<T: Scalar>(
    spec: &ActionSpec<T>,
    strategy: &WordStrategy,
    cfg: &SolveConfig,
) -> Result<SemiconjugacyResult<T>> {
    cfg.validate()?;
    let n = spec.n();
    let res = cfg.resolution(n);
    if res.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: res.len() });
    }
    let opts = cfg.invert_options::<T>();
    let (solve_words, certificate) = match strategy {
        WordStrategy::Preferred(words) => (words.clone(), None),
        WordStrategy::Auto => {
            let cert = weak_hyperbolicity_certificate(&spec.matrices(), cfg.word_len, cfg.tol_unit)?;
            if !cert.is_verified() {
                return Err(Error::InsufficientSpan { rank: cert.spanned_dim, n });
            }
            (choose_words(spec, &cert, cfg)?, Some(cert))
        }
    };
    let mut partials: Vec<PartialSolution<T>> = Vec::with_capacity(solve_words.len());
    for w in &solve_words {
        let sp = splitting(&spec.word_matrix(w)?, cfg.tol_unit)?;
        partials.push(series_solve_on_e(spec, w, &sp, cfg.series_budget(), res.clone(), opts)?);
    }
    let asm = assemble(&partials)?;
    let words: Vec<WordSolve> = partials
        .iter()
        .map(|p| WordSolve {
            word: p.word.clone(),
            dim_e: p.splitting.dim_e(),
            n_used: p.n_used,
            tail_bound: p.tail_bound,
            sup_alpha: p.sup_alpha,
            norm_sum: p.norms.total_bound(),
            alpha_interp: p.alpha.values.interpolation_error_estimate().as_f64(),
        })
        .collect();
    let budget = error_budget(spec, &words, cfg);
    let phi2 = asm.phi2;
    let psi = |x: &[T]| -> Vec<T> {
        let p = phi2.eval(x);
        x.iter().zip(p).map(|(&a, b)| a + b).collect()
    };
    let mut samples = phi2.points();
    samples.extend(sample_points::<T>(&res, cfg.seed));
    let residuals = equivariance_residual(spec, psi, &samples, &budget.per_generator)?;
    let failing: Vec<String> = residuals.entries.iter().filter(|e| !e.pass).map(|e| e.generator.clone()).collect();
    let verdict = if failing.is_empty() { Verdict::Ok } else { Verdict::NoSemiconjugacy { failing } };
    Ok(SemiconjugacyResult {
        phi2,
        solve_words,
        words,
        assembly_residual: asm.assembly_residual,
        budget,
        residuals,
        verdict,
        certificate,
        config: cfg.clone(),
    })
}

fn error_budget<T: Scalar>(spec: &ActionSpec<T>, words: &[WordSolve], cfg: &SolveConfig) -> ErrorBudget {
    let tail = words.iter().map(|w| w.tail_bound).sum();
    let delta_interp =
        spec.generators().iter().map(|g| g.delta().interpolation_error_estimate().as_f64()).fold(0.0, f64::max);
    let interpolation = delta_interp + words.iter().map(|w| w.norm_sum * w.alpha_interp).sum::<f64>();
    let inversion = cfg.inv_tol * words.iter().map(|w| w.word.len() as f64 * (1.0 + w.norm_sum)).sum::<f64>();
    let mut b = ErrorBudget { tail, interpolation, inversion, safety: cfg.safety, per_generator: Vec::new() };
    b.per_generator = spec.generators().iter().map(|g| b.scaled(g.matrix().norm2())).collect();
    b
}

/// Per solve word: `(sup over grid of ‖φ₂(m) - A_w^{-1} φ₂(F_w m) - A_w^{-1} α(w, m)‖, budget)`,
/// with budget `safety · (1 + ‖A_w^{-1}‖) · base`.
pub fn functional_equation_residual<T: Scalar>(
    spec: &ActionSpec<T>,
    result: &SemiconjugacyResult<T>,
) -> Result<Vec<(Word, f64, f64)>> {
    let n = spec.n();
    let opts = result.config.invert_options::<T>();
    let phi2 = &result.phi2;
    let points = phi2.points();
    let mut out = Vec::with_capacity(result.solve_words.len());
    for w in &result.solve_words {
        let a_w = spec.word_matrix(w)?;
        let a_inv = a_w.inverse();
        let a_inv_t = a_inv.to_scalar_vec::<T>();
        let worst = points
            .par_iter()
            .enumerate()
            .map(|(idx, m)| -> Result<f64> {
                let st = spec.word_step(w, m, opts)?;
                let mut v = phi2.eval(&st.reduced);
                for (vi, ai) in v.iter_mut().zip(&st.alpha) {
                    *vi = *vi + *ai;
                }
                let mut t = vec![T::zero(); n];
                mat_vec(&a_inv_t, &v, &mut t);
                let d: Vec<T> = phi2.value(idx).iter().zip(&t).map(|(&p, &q)| p - q).collect();
                let r = norm(&d).as_f64();
                Ok(if r.is_nan() { f64::INFINITY } else { r })
            })
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
        out.push((w.clone(), worst, result.budget.scaled(a_inv.norm2())));
    }
    Ok(out)
}
