//! Canned actions: standard linear actions, actions conjugated by a known
//! homeomorphism `h = id + η` (whose semiconjugacy is `h` itself), and the
//! free-group twist that conjugates a single generator.

use std::f64::consts::TAU;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::IntMatrix;
use crate::torusmap::{ActionSpec, GridFunction, TorusMap};
use crate::word::{Letter, Word};

/// One term `amplitude · sin(2π ⟨freq, x⟩ + phase)` of output `component`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpTerm {
    pub component: usize,
    pub amplitude: f64,
    pub freq: Vec<i64>,
    pub phase: f64,
}

impl BumpTerm {
    pub fn new(component: usize, amplitude: f64, freq: &[f64], phase: f64) -> Result<Self> {
        if !amplitude.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidArgument("bump amplitude and phase must be finite".into()));
        }
        let freq = freq
            .iter()
            .map(|&f| {
                if f.is_finite() && f.fract() == 0.0 && f.abs() < 1e9 {
                    Ok(f as i64)
                } else {
                    Err(Error::InvalidArgument(format!("bump frequency {f} is not an integer")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { component, amplitude, freq, phase })
    }
}

/// `η: T^n → R^n`, a finite sum of [`BumpTerm`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSpec {
    n: usize,
    terms: Vec<BumpTerm>,
}

impl BumpSpec {
    pub fn new(n: usize, terms: Vec<BumpTerm>) -> Result<Self> {
        for t in &terms {
            if t.component >= n {
                return Err(Error::InvalidArgument(format!("bump component {} out of range for n = {n}", t.component)));
            }
            if t.freq.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: t.freq.len() });
            }
        }
        Ok(Self { n, terms })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    /// `η_i(x) = amplitude · sin(2π x_{i+1})`, indices mod `n`.
    pub fn standard(n: usize, amplitude: f64) -> Self {
        let terms = (0..n)
            .map(|i| {
                let mut freq = vec![0; n];
                freq[(i + 1) % n] = 1;
                BumpTerm { component: i, amplitude, freq, phase: 0.0 }
            })
            .collect();
        Self { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[BumpTerm] {
        &self.terms
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for t in &self.terms {
            let arg: f64 = t.freq.iter().zip(x).map(|(&f, &xi)| f as f64 * xi).sum();
            out[t.component] += t.amplitude * (TAU * arg + t.phase).sin();
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval_into(x, &mut out);
        out
    }

    /// `2π Σ |amplitude| ‖freq‖` over all terms.
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms.iter().map(|t| TAU * t.amplitude.abs() * freq_norm(&t.freq)).sum()
    }

    /// Frobenius bound on the Jacobian: `sqrt(Σ_i (2π Σ_{terms of i} |a| ‖f‖)^2)`.
    pub fn jacobian_bound(&self) -> f64 {
        let mut per = vec![0.0; self.n];
        for t in &self.terms {
            per[t.component] += TAU * t.amplitude.abs() * freq_norm(&t.freq);
        }
        per.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Solves `y = z + η(z)` for `z` by `z ← y - η(z)`.
    pub fn invert_id_plus(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut z = y.to_vec();
        let mut e = vec![0.0; self.n];
        for it in 0..200 {
            self.eval_into(&z, &mut e);
            let mut step = 0.0f64;
            for i in 0..self.n {
                let nz = y[i] - e[i];
                step = step.max((nz - z[i]).abs());
                z[i] = nz;
            }
            if step <= 4.0 * f64::EPSILON * (1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
                return Ok(z);
            }
            if it == 199 {
                return Err(Error::InvertDiverged { iterations: 200, residual: step });
            }
        }
        unreachable!()
    }
}

fn freq_norm(f: &[i64]) -> f64 {
    f.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
}

/// Samples `η` on `res`.
pub fn bump_field<T: Scalar>(eta: &BumpSpec, res: Vec<usize>) -> Result<GridFunction<T>> {
    if res.len() != eta.n {
        return Err(Error::DimensionMismatch { expected: eta.n, found: res.len() });
    }
    GridFunction::sample(res, eta.n, |x: &[T], out: &mut [T]| {
        let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
        for (o, v) in out.iter_mut().zip(eta.eval(&xf)) {
            *o = T::of(v);
        }
        Ok(())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `a = [[1,2],[0,1]]`, `b = [[1,0],[2,1]]`, generating a free subgroup of `SL_2(Z)`.
    Sl2Sanov,
    /// The elementary matrices `E_ij(1)`, `i ≠ j`.
    SlnElementary,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sl2_sanov" => Ok(Self::Sl2Sanov),
            "sln_elementary" => Ok(Self::SlnElementary),
            other => Err(Error::InvalidArgument(format!("unknown preset `{other}`"))),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sl2Sanov => "sl2_sanov",
            Self::SlnElementary => "sln_elementary",
        }
    }

    /// Generator names and matrices.
    pub fn generators(self, n: usize) -> Result<Vec<(String, IntMatrix)>> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("presets need n >= 2, got {n}")));
        }
        match self {
            Self::Sl2Sanov => {
                if n != 2 {
                    return Err(Error::InvalidArgument("sl2_sanov is two-dimensional".into()));
                }
                Ok(vec![
                    ("a".into(), IntMatrix::from_rows(&[vec![1, 2], vec![0, 1]])?),
                    ("b".into(), IntMatrix::from_rows(&[vec![1, 0], vec![2, 1]])?),
                ])
            }
            Self::SlnElementary => {
                let mut out = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            out.push((elementary_name(n, i, j), IntMatrix::elementary(n, i, j, 1)));
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Relations among the generators: commutators of commuting elementary matrices.
    pub fn relations(self, n: usize) -> Vec<Word> {
        match self {
            Self::Sl2Sanov => Vec::new(),
            Self::SlnElementary => {
                let pairs: Vec<(usize, usize)> =
                    (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
                let mut out = Vec::new();
                for (p, &(i, j)) in pairs.iter().enumerate() {
                    for (q, &(k, l)) in pairs.iter().enumerate().skip(p + 1) {
                        if j != k && i != l {
                            out.push(Word::new([
                                Letter::new(p, false),
                                Letter::new(q, false),
                                Letter::new(p, true),
                                Letter::new(q, true),
                            ]));
                        }
                    }
                }
                out
            }
        }
    }
}

fn elementary_name(n: usize, i: usize, j: usize) -> String {
    if n < 10 {
        format!("e{}{}", i + 1, j + 1)
    } else {
        format!("e{}_{}", i + 1, j + 1)
    }
}

/// The linear action of a preset, with zero displacements sampled on `res`.
pub fn standard_action<T: Scalar>(n: usize, preset: Preset, res: Vec<usize>) -> Result<ActionSpec<T>> {
    let gens = preset.generators(n)?;
    let (names, maps): (Vec<String>, Vec<IntMatrix>) = gens.into_iter().unzip();
    let maps = maps.into_iter().map(|a| TorusMap::linear(a, res.clone())).collect::<Result<Vec<_>>>()?;
    let mut spec = ActionSpec::new(names, maps)?;
    spec.relations = preset.relations(n);
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct ConjugatedAction<T = f64> {
    pub spec: ActionSpec<T>,
    /// `h = id + η` with `η` sampled on the same grid.
    pub ground_truth_h: TorusMap<T>,
    pub ground_truth_phi2: GridFunction<T>,
}

fn certify_conjugator(eta: &BumpSpec, n: usize) -> Result<()> {
    if eta.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: eta.n });
    }
    let lip = eta.jacobian_bound();
    if lip >= 1.0 {
        return Err(Error::ConjugatorNotCertified { lip_bound: lip });
    }
    Ok(())
}

/// Displacement of `h^{-1} ∘ A ∘ h`, sampled on `res`; `η` and `h^{-1}` are evaluated analytically.
fn conjugated_delta<T: Scalar>(a: &IntMatrix, eta: &BumpSpec, res: Vec<usize>) -> Result<GridFunction<T>> {
    let n = a.n();
    let af: Vec<f64> = a.to_scalar_vec();
    GridFunction::sample(res, n, |x: &[T], out: &mut [T]| {
        let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
        let hx: Vec<f64> = xf.iter().zip(eta.eval(&xf)).map(|(a, b)| a + b).collect();
        let ax = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| af[i * n + j] * v[j]).sum()).collect() };
        let z = eta.invert_id_plus(&ax(&hx))?;
        for ((o, zi), axi) in out.iter_mut().zip(z).zip(ax(&xf)) {
            *o = T::of(zi - axi);
        }
        Ok(())
    })
}

fn ground_truth<T: Scalar>(eta: &BumpSpec, res: Vec<usize>) -> Result<(TorusMap<T>, GridFunction<T>)> {
    let phi2 = bump_field::<T>(eta, res)?;
    let h = TorusMap::new(IntMatrix::identity(eta.n), phi2.clone())?;
    Ok((h, phi2))
}

/// Conjugates every generator of a linear action by `h = id + η`, so that
/// `h ∘ F_γ = A_γ ∘ h` and the semiconjugacy is `h` with `φ₂ = η`.
pub fn conjugated_action<T: Scalar>(
    base: &ActionSpec<T>,
    eta: &BumpSpec,
    res: Vec<usize>,
) -> Result<ConjugatedAction<T>> {
    let n = base.n();
    certify_conjugator(eta, n)?;
    if base.generators().iter().any(|g| g.delta().sup_norm() != T::zero()) {
        return Err(Error::InvalidArgument("conjugated_action needs a linear base action".into()));
    }
    let maps = base
        .generators()
        .iter()
        .map(|g| TorusMap::new(g.matrix().clone(), conjugated_delta(g.matrix(), eta, res.clone())?))
        .collect::<Result<Vec<_>>>()?;
    let mut spec = ActionSpec::new(base.names().to_vec(), maps)?;
    spec.relations = base.relations.clone();
    let (ground_truth_h, ground_truth_phi2) = ground_truth(eta, res)?;
    Ok(ConjugatedAction { spec, ground_truth_h, ground_truth_phi2 })
}

/// The Sanov action with only `a` conjugated by `h = id + η`. It is still an
/// action because the group is free, but in general admits no semiconjugacy
/// to the linear action.
pub fn sanov_twist<T: Scalar>(eta: &BumpSpec, res: Vec<usize>) -> Result<ActionSpec<T>> {
    certify_conjugator(eta, 2)?;
    let base = standard_action::<T>(2, Preset::Sl2Sanov, res.clone())?;
    let a = base.generators()[0].matrix().clone();
    let twisted = TorusMap::new(a, conjugated_delta(base.generators()[0].matrix(), eta, res)?)?;
    ActionSpec::new(base.names().to_vec(), vec![twisted, base.generators()[1].clone()])
}
