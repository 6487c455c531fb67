//! Independent checks on a candidate map `ψ`: equivariance residuals, the
//! cocycle identity, the induced map on `H_1`, and the `τ` calculus for
//! equivariant maps between tori.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{mat_vec, norm, Scalar};
use crate::spectral::IntMatrix;
use crate::torusmap::{ActionSpec, GridFunction, InvertOptions};
use crate::word::Word;

/// Largest dimension accepted by [`torus_distance`].
pub const MAX_TORUS_DIM: usize = 6;
/// Seed for the random part of [`sample_points`].
pub const DEFAULT_SEED: u64 = 0x5EED;
/// Distance to the nearest integer accepted by [`induced_h1`] and [`tau_analysis`].
pub const INTEGER_TOL: f64 = 1e-6;

/// Distance in `T^n` between the projections of `a` and `b`.
pub fn torus_distance<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    if a.len() > MAX_TORUS_DIM {
        return Err(Error::DimensionTooLarge(a.len()));
    }
    Ok(torus_distance_unchecked(a, b))
}

fn torus_distance_unchecked<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len();
    let mut d = [T::zero(); MAX_TORUS_DIM];
    for i in 0..n {
        let v = a[i] - b[i];
        d[i] = v - v.round();
    }
    let mut best = T::infinity();
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let mut s = T::zero();
        for di in &d[..n] {
            let k = T::of((c % 3) as f64 - 1.0);
            c /= 3;
            let v = *di - k;
            s = s + v * v;
        }
        best = best.min(s);
    }
    best.sqrt()
}

/// Sample set used by the checks: every tenth grid point along each axis,
/// then 100 uniform points from a seeded generator.
pub fn sample_points<T: Scalar>(res: &[usize], seed: u64) -> Vec<Vec<T>> {
    let n = res.len();
    let counts: Vec<usize> = res.iter().map(|&r| r.div_ceil(10)).collect();
    let total: usize = counts.iter().product();
    let mut pts = Vec::with_capacity(total + 100);
    for mut idx in 0..total {
        let mut x = vec![T::zero(); n];
        for k in (0..n).rev() {
            let j = idx % counts[k];
            idx /= counts[k];
            x[k] = T::of((10 * j) as f64 / res[k] as f64);
        }
        pts.push(x);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        pts.push((0..n).map(|_| T::of(rng.gen::<f64>())).collect());
    }
    pts
}

/// Sup residual of one generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorResidual {
    pub generator: String,
    pub sup_residual: f64,
    pub argmax: Vec<f64>,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualReport {
    pub entries: Vec<GeneratorResidual>,
}

impl ResidualReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.sup_residual).fold(0.0, f64::max)
    }

    /// CSV with header `generator,sup_residual,budget,pass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("generator,sup_residual,budget,pass\n");
        for e in &self.entries {
            let _ = writeln!(s, "{},{:.6e},{:.6e},{}", e.generator, e.sup_residual, e.budget, e.pass);
        }
        s
    }
}

/// For each generator `γ`, the sup over `samples` of the torus distance
/// between `ψ(F̃_γ(x))` and `A_γ ψ(x)`, compared against `budgets[γ]`.
pub fn equivariance_residual<T, P>(
    spec: &ActionSpec<T>,
    psi: P,
    samples: &[Vec<T>],
    budgets: &[f64],
) -> Result<ResidualReport>
where
    T: Scalar,
    P: Fn(&[T]) -> Vec<T> + Sync,
{
    let n = spec.n();
    if n > MAX_TORUS_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    if budgets.len() != spec.generators().len() {
        return Err(Error::DimensionMismatch { expected: spec.generators().len(), found: budgets.len() });
    }
    let k = budgets.len();
    let mats: Vec<Vec<T>> = spec.generators().iter().map(|g| g.matrix().to_scalar_vec::<T>()).collect();
    // per generator: (sup, first index attaining it)
    let sups = samples
        .par_iter()
        .enumerate()
        .map(|(idx, x)| {
            let px = psi(x);
            let mut img = vec![T::zero(); n];
            let mut rhs = vec![T::zero(); n];
            let mut row = vec![(0.0, usize::MAX); k];
            for (j, g) in spec.generators().iter().enumerate() {
                g.lift_eval_into(x, &mut img);
                let lhs = psi(&img);
                mat_vec(&mats[j], &px, &mut rhs);
                let v = torus_distance_unchecked(&lhs, &rhs).as_f64();
                row[j] = (if v.is_nan() { f64::INFINITY } else { v }, idx);
            }
            row
        })
        .reduce(
            || vec![(0.0, usize::MAX); k],
            |a, b| {
                a.into_iter().zip(b).map(|(a, b)| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }).collect()
            },
        );
    let entries = spec
        .names()
        .iter()
        .zip(budgets)
        .zip(sups)
        .map(|((name, &budget), (sup, idx))| {
            let argmax = samples.get(idx).map(|x| x.iter().map(|v| v.as_f64()).collect()).unwrap_or_default();
            GeneratorResidual { generator: name.clone(), sup_residual: sup, argmax, budget, pass: sup <= budget }
        })
        .collect();
    Ok(ResidualReport { entries })
}

/// Budget for checking a given `ψ = id + φ₂` without a solve: generator `γ`
/// is allowed `safety · (1 + ‖A_γ‖) · (interp(φ₂) + max interp(δ) + inv_tol)`.
pub fn equivariance_budget<T: Scalar>(
    spec: &ActionSpec<T>,
    phi2: &GridFunction<T>,
    safety: f64,
    inv_tol: f64,
) -> Vec<f64> {
    let delta = spec.generators().iter().map(|g| g.delta().interpolation_error_estimate().as_f64()).fold(0.0, f64::max);
    let base = phi2.interpolation_error_estimate().as_f64() + delta + inv_tol;
    spec.generators().iter().map(|g| safety * (1.0 + g.matrix().norm2()) * base).collect()
}

/// Fraction of the `cells^n` boxes of `T^n` that contain `ψ(x) mod 1` for some
/// sample `x`. Informational evidence of surjectivity only.
pub fn image_coverage<T, P>(psi: P, n: usize, samples: &[Vec<T>], cells: usize) -> f64
where
    T: Scalar,
    P: Fn(&[T]) -> Vec<T> + Sync,
{
    let total = cells.checked_pow(n as u32).unwrap_or(usize::MAX);
    if cells == 0 || total == usize::MAX {
        return 0.0;
    }
    let hit: Vec<usize> = samples
        .par_iter()
        .map(|x| {
            psi(x).iter().fold(0, |acc, v| {
                let f = v.as_f64().rem_euclid(1.0);
                acc * cells + ((f * cells as f64) as usize).min(cells - 1)
            })
        })
        .collect();
    let mut seen = vec![false; total];
    for h in hit {
        seen[h] = true;
    }
    seen.iter().filter(|&&b| b).count() as f64 / total as f64
}

/// Largest defect of `α(w1 w2, m) = α(w1, w2·m) + A_{w1} α(w2, m)` over the
/// pairs and samples. The left side is interpolated from `α(w1 w2, ·)`
/// sampled on `res`; the right side is evaluated pointwise.
pub fn cocycle_identity_residual<T: Scalar>(
    spec: &ActionSpec<T>,
    pairs: &[(Word, Word)],
    samples: &[Vec<T>],
    res: &[usize],
    opts: InvertOptions<T>,
) -> Result<f64> {
    let n = spec.n();
    let mut worst = 0.0f64;
    for (w1, w2) in pairs {
        let prod = w1.concat(w2);
        let field = spec.word_map(&prod, res.to_vec(), opts)?;
        let a1 = spec.word_matrix(w1)?.to_scalar_vec::<T>();
        let defects: Vec<f64> = samples
            .par_iter()
            .map(|m| -> Result<f64> {
                let lhs = field.delta().eval(m);
                let s2 = spec.word_step(w2, m, opts)?;
                let s1 = spec.word_step(w1, &s2.reduced, opts)?;
                let mut t = vec![T::zero(); n];
                mat_vec(&a1, &s2.alpha, &mut t);
                let d: Vec<T> = (0..n).map(|i| lhs[i] - s1.alpha[i] - t[i]).collect();
                Ok(norm(&d).as_f64())
            })
            .collect::<Result<_>>()?;
        for d in defects {
            worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        }
    }
    Ok(worst)
}

/// Integer matrix with column `i` equal to `Ψ(x + e_i) - Ψ(x)`, which must be
/// the same integer vector at every probe.
pub fn induced_h1<T, P>(psi: P, n: usize, probes: &[Vec<T>]) -> Result<DMatrix<i64>>
where
    T: Scalar,
    P: Fn(&[T]) -> Vec<T>,
{
    let mut out: Option<DMatrix<i64>> = None;
    for x in probes {
        let base = psi(x);
        let mut m = DMatrix::<i64>::zeros(n, n);
        for i in 0..n {
            let mut xs = x.clone();
            xs[i] = xs[i] + T::one();
            let img = psi(&xs);
            for r in 0..n {
                let v = (img[r] - base[r]).as_f64();
                let k = v.round();
                if (v - k).abs() > INTEGER_TOL || !v.is_finite() {
                    return Err(Error::NotInteger { value: v });
                }
                m[(r, i)] = k as i64;
            }
        }
        match &out {
            Some(prev) if *prev != m => return Err(Error::NotConstant),
            Some(_) => {}
            None => out = Some(m),
        }
    }
    out.ok_or_else(|| Error::InvalidArgument("no probe points".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    BoundedSoFar,
    Growing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitGrowth {
    /// `max_norms[l]` is the largest `‖A_w v‖` over reduced words of length at most `l`.
    pub max_norms: Vec<f64>,
    pub classification: Growth,
}

impl OrbitGrowth {
    pub fn max_norm(&self) -> f64 {
        self.max_norms.last().copied().unwrap_or(0.0)
    }
}

fn int_norm(v: &[i64]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

/// Exact orbit of `v` under reduced words up to length `max_len`.
pub fn orbit_growth(v: &[i64], generators: &[IntMatrix], max_len: usize) -> Result<OrbitGrowth> {
    let n = v.len();
    if let Some(g) = generators.iter().find(|g| g.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: g.n() });
    }
    let mats: Vec<IntMatrix> = generators.iter().flat_map(|g| [g.clone(), g.inverse()]).collect();
    let mut per_len = vec![int_norm(v)];
    // frontier: (A_w v, index of the first letter of w)
    let mut frontier: Vec<(Vec<i64>, Option<usize>)> = vec![(v.to_vec(), None)];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * mats.len());
        let mut best = 0.0f64;
        for (u, first) in &frontier {
            for (li, m) in mats.iter().enumerate() {
                if first.is_some_and(|f| f ^ 1 == li) {
                    continue;
                }
                let w = m.checked_mul_vec(u)?;
                best = best.max(int_norm(&w));
                next.push((w, Some(li)));
            }
        }
        per_len.push(best);
        frontier = next;
    }
    let mut max_norms = Vec::with_capacity(per_len.len());
    let mut acc = 0.0f64;
    for p in per_len {
        acc = acc.max(p);
        max_norms.push(acc);
    }
    let l = max_norms.len();
    let classification =
        if l >= 2 && max_norms[l - 1] > max_norms[l - 2] { Growth::Growing } else { Growth::BoundedSoFar };
    Ok(OrbitGrowth { max_norms, classification })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauEntry {
    pub word: Word,
    /// `τ_w`, the rounded value of `Ψ(F̃_w z) - A_w Ψ(z)` at the first sample.
    pub tau: Vec<i64>,
    /// Sup over samples of `‖(Ψ(F̃_w z) - A_w Ψ(z)) - τ_w‖`.
    pub constancy_defect: f64,
    /// Orbit of `τ_w` under the generators, when `τ_w ≠ 0`.
    pub orbit: Option<OrbitGrowth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauTable {
    pub entries: Vec<TauEntry>,
    pub constancy_defect: f64,
    /// Max over ordered pairs `(u, v)` of `‖τ_{uv} - τ_u - A_u τ_v‖`.
    pub cocycle_defect: f64,
}

impl TauTable {
    pub fn all_zero(&self) -> bool {
        self.entries.iter().all(|e| e.tau.iter().all(|&t| t == 0))
    }

    pub fn render(&self, names: &[String]) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = write!(
                s,
                "tau[{}] = {:?}  constancy_defect = {:.3e}",
                e.word.display(names),
                e.tau,
                e.constancy_defect
            );
            if let Some(o) = &e.orbit {
                let _ = write!(s, "  orbit max = {:.3e} ({:?})", o.max_norm(), o.classification);
            }
            s.push('\n');
        }
        let _ = writeln!(s, "constancy_defect = {:.3e}", self.constancy_defect);
        let _ = writeln!(s, "cocycle_defect = {:.3e}", self.cocycle_defect);
        s
    }
}

fn tau_values<T, P>(
    spec: &ActionSpec<T>,
    psi: &P,
    w: &Word,
    samples: &[Vec<T>],
    opts: InvertOptions<T>,
) -> Result<Vec<Vec<f64>>>
where
    T: Scalar,
    P: Fn(&[T]) -> Vec<T> + Sync,
{
    let n = spec.n();
    let a = spec.word_matrix(w)?.to_scalar_vec::<T>();
    samples
        .par_iter()
        .map(|z| {
            let lhs = psi(&spec.word_step(w, z, opts)?.image());
            let mut rhs = vec![T::zero(); n];
            mat_vec(&a, &psi(z), &mut rhs);
            Ok((0..n).map(|i| (lhs[i] - rhs[i]).as_f64()).collect())
        })
        .collect()
}

fn tau_of(values: &[Vec<f64>], n: usize) -> (Vec<i64>, f64) {
    let tau: Vec<i64> = values.first().map(|v| v.iter().map(|x| x.round() as i64).collect()).unwrap_or(vec![0; n]);
    let defect = values
        .iter()
        .map(|v| {
            let d = v.iter().zip(&tau).map(|(x, &t)| (x - t as f64).powi(2)).sum::<f64>().sqrt();
            if d.is_nan() {
                f64::INFINITY
            } else {
                d
            }
        })
        .fold(0.0, f64::max);
    (tau, defect)
}

/// `τ_w(z) = Ψ(F̃_w z) - A_w Ψ(z)` for each word, with constancy and cocycle
/// defects. Each nonzero `τ_w` has its orbit under the generators enumerated
/// up to `orbit_len`: an equivariant map forces a bounded orbit, hence `τ = 0`.
pub fn tau_analysis<T, P>(
    spec: &ActionSpec<T>,
    psi: P,
    words: &[Word],
    samples: &[Vec<T>],
    orbit_len: usize,
    opts: InvertOptions<T>,
) -> Result<TauTable>
where
    T: Scalar,
    P: Fn(&[T]) -> Vec<T> + Sync,
{
    let n = spec.n();
    let gens = spec.matrices();
    let mut entries = Vec::with_capacity(words.len());
    let mut constancy = 0.0f64;
    for w in words {
        let (tau, defect) = tau_of(&tau_values(spec, &psi, w, samples, opts)?, n);
        constancy = constancy.max(defect);
        let orbit = if tau.iter().any(|&t| t != 0) { Some(orbit_growth(&tau, &gens, orbit_len)?) } else { None };
        entries.push(TauEntry { word: w.clone(), tau, constancy_defect: defect, orbit });
    }
    let mut cocycle = 0.0f64;
    for u in &entries {
        let au = spec.word_matrix(&u.word)?;
        for v in &entries {
            let uv = u.word.concat(&v.word);
            let (tau_uv, d) = tau_of(&tau_values(spec, &psi, &uv, samples, opts)?, n);
            constancy = constancy.max(d);
            let av = au.checked_mul_vec(&v.tau)?;
            let diff: Vec<i64> = (0..n).map(|i| tau_uv[i] - u.tau[i] - av[i]).collect();
            cocycle = cocycle.max(int_norm(&diff));
        }
    }
    Ok(TauTable { entries, constancy_defect: constancy, cocycle_defect: cocycle })
}
