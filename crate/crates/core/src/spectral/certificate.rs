use nalgebra::DVector;

use super::{eigen_data, splitting, IntMatrix, ModulusClass};
use crate::error::{Error, Result};
use crate::word::{ReducedWords, Word};

/// Drop tolerance for the rank accumulation.
const RANK_DROP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateVerdict {
    Verified,
    /// The expanding subspaces of all reduced words up to this length fail
    /// to span. This is not a proof that the group is not weakly hyperbolic.
    NotVerifiedUpTo(usize),
}

#[derive(Debug, Clone)]
pub struct HyperbolicityCertificate {
    pub verdict: CertificateVerdict,
    /// Words whose expanding subspace raised the spanned dimension, in order.
    pub witness_words: Vec<Word>,
    pub spanned_dim: usize,
    /// First enumerated word with no eigenvalue in the neutral band.
    pub first_hyperbolic: Option<Word>,
    pub words_examined: usize,
}

impl HyperbolicityCertificate {
    pub fn is_verified(&self) -> bool {
        self.verdict == CertificateVerdict::Verified
    }
}

/// Exact product `A_{l0} A_{l1} ..` of a word.
pub fn word_matrix(generators: &[IntMatrix], word: &Word) -> Result<IntMatrix> {
    let n = generators.first().map(IntMatrix::n).unwrap_or(1);
    let mut acc = IntMatrix::identity(n);
    for l in word.letters() {
        let g = generators.get(l.generator).ok_or_else(|| Error::UnknownGenerator(format!("#{}", l.generator)))?;
        let m = if l.inverse { g.inverse() } else { g.clone() };
        acc = acc.checked_mul(&m)?;
    }
    Ok(acc)
}

/// Gram-Schmidt (two passes) against an orthonormal set; returns the
/// normalized remainder when it survives the drop tolerance.
fn orthogonal_remainder(basis: &[DVector<f64>], v: &DVector<f64>) -> Option<DVector<f64>> {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&r);
            r -= b * c;
        }
    }
    let norm = r.norm();
    (norm > RANK_DROP_TOL * v.norm().max(1.0)).then(|| r / norm)
}

/// Breadth-first search over reduced words up to `max_word_len` for words whose
/// expanding subspaces together span `R^n`.
pub fn weak_hyperbolicity_certificate(
    generators: &[IntMatrix],
    max_word_len: usize,
    tol_unit: f64,
) -> Result<HyperbolicityCertificate> {
    if max_word_len < 1 {
        return Err(Error::InvalidArgument("maximum word length must be at least 1".into()));
    }
    let n = match generators.first() {
        Some(g) => g.n(),
        None => return Err(Error::InvalidArgument("no generators".into())),
    };
    if let Some(bad) = generators.iter().find(|g| g.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.n() });
    }
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut witness_words = Vec::new();
    let mut first_hyperbolic = None;
    let mut words_examined = 0;
    for word in ReducedWords::new(generators.len(), max_word_len) {
        words_examined += 1;
        let a = word_matrix(generators, &word)?;
        let data = eigen_data(&a, tol_unit)?;
        if first_hyperbolic.is_none() && !data.has_neutral() {
            first_hyperbolic = Some(word.clone());
        }
        if data.count(ModulusClass::Expanding) == 0 {
            continue;
        }
        let s = splitting(&a, tol_unit)?;
        let mut grew = false;
        for col in s.e_basis().column_iter() {
            if let Some(r) = orthogonal_remainder(&basis, &col.into_owned()) {
                basis.push(r);
                grew = true;
            }
        }
        if grew {
            witness_words.push(word);
        }
        if basis.len() >= n {
            return Ok(HyperbolicityCertificate {
                verdict: CertificateVerdict::Verified,
                witness_words,
                spanned_dim: n,
                first_hyperbolic,
                words_examined,
            });
        }
    }
    Ok(HyperbolicityCertificate {
        verdict: CertificateVerdict::NotVerifiedUpTo(max_word_len),
        witness_words,
        spanned_dim: basis.len(),
        first_hyperbolic,
        words_examined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DEFAULT_TOL_UNIT;
    use nalgebra::DMatrix;

    fn m(s: &str) -> IntMatrix {
        s.parse().unwrap()
    }

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    }

    fn stacked_rank(gens: &[IntMatrix], words: &[Word]) -> usize {
        let cols: Vec<DVector<f64>> = words
            .iter()
            .flat_map(|w| {
                let s = splitting(&word_matrix(gens, w).unwrap(), DEFAULT_TOL_UNIT).unwrap();
                s.e_basis().column_iter().map(|c| c.into_owned()).collect::<Vec<_>>()
            })
            .collect();
        DMatrix::from_columns(&cols).rank(1e-10)
    }

    #[test]
    fn unipotent_pair_certified_by_ab_ba() {
        let gens = [m("1,1;0,1"), m("1,0;1,1")];
        let c = weak_hyperbolicity_certificate(&gens, 2, DEFAULT_TOL_UNIT).unwrap();
        assert!(c.is_verified());
        let shown: Vec<String> = c.witness_words.iter().map(|w| w.display(&names(2)).to_string()).collect();
        assert_eq!(shown, ["a b", "b a"]);
        assert_eq!(word_matrix(&gens, &c.witness_words[0]).unwrap(), m("2,1;1,1"));
        assert_eq!(word_matrix(&gens, &c.witness_words[1]).unwrap(), m("1,1;1,2"));
        assert_eq!(stacked_rank(&gens, &c.witness_words), 2);
    }

    #[test]
    fn rotation_never_certified() {
        let gens = [m("0,-1;1,0")];
        for l in 1..=6 {
            let c = weak_hyperbolicity_certificate(&gens, l, DEFAULT_TOL_UNIT).unwrap();
            assert_eq!(c.verdict, CertificateVerdict::NotVerifiedUpTo(l));
            assert_eq!(c.spanned_dim, 0);
        }
    }

    #[test]
    fn single_anosov_uses_inverse() {
        let gens = [m("2,1;1,1")];
        let c = weak_hyperbolicity_certificate(&gens, 1, DEFAULT_TOL_UNIT).unwrap();
        assert!(c.is_verified());
        let shown: Vec<String> = c.witness_words.iter().map(|w| w.display(&names(1)).to_string()).collect();
        assert_eq!(shown, ["a", "a^-1"]);
    }

    #[test]
    fn zero_length_rejected() {
        assert!(matches!(
            weak_hyperbolicity_certificate(&[m("2,1;1,1")], 0, DEFAULT_TOL_UNIT),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn monotone_in_length() {
        let gens = [m("1,2;0,1"), m("1,0;2,1")];
        let mut seen = false;
        for l in 1..=4 {
            let v = weak_hyperbolicity_certificate(&gens, l, DEFAULT_TOL_UNIT).unwrap().is_verified();
            assert!(!seen || v);
            seen |= v;
        }
        assert!(seen);
    }
}
