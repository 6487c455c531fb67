use super::{GridFunction, InvertOptions, TorusMap};
use crate::error::{Error, Result};
use crate::scalar::{mat_vec, Scalar};
use crate::spectral::{word_matrix, IntMatrix};
use crate::word::{Letter, Word};

const MAX_DIM: usize = 8;

/// A finitely generated action on `T^n`, one [`TorusMap`] per generator.
/// Inverse generators are realized by point inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec<T = f64> {
    n: usize,
    names: Vec<String>,
    generators: Vec<TorusMap<T>>,
    /// Words expected to act as the identity; diagnostics only.
    pub relations: Vec<Word>,
}

/// Image of a point under a word, with the displacement cocycle at that point.
#[derive(Debug, Clone, PartialEq)]
pub struct WordStep<T> {
    /// `F̃_w(x) mod 1`.
    pub reduced: Vec<T>,
    /// Integer vector with `F̃_w(x) = reduced + shift`.
    pub shift: Vec<T>,
    /// `α(w, x) = F̃_w(x) - A_w x`.
    pub alpha: Vec<T>,
}

impl<T: Scalar> WordStep<T> {
    /// The lift `F̃_w(x)`.
    pub fn image(&self) -> Vec<T> {
        self.reduced.iter().zip(&self.shift).map(|(&r, &s)| r + s).collect()
    }
}

impl<T: Scalar> ActionSpec<T> {
    pub fn new(names: Vec<String>, generators: Vec<TorusMap<T>>) -> Result<Self> {
        if names.len() != generators.len() {
            return Err(Error::DimensionMismatch { expected: names.len(), found: generators.len() });
        }
        let n = generators
            .first()
            .map(TorusMap::n)
            .ok_or_else(|| Error::InvalidArgument("action needs at least one generator".into()))?;
        if let Some(bad) = generators.iter().find(|g| g.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.n() });
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.contains(char::is_whitespace) || name.contains([',', '^']) {
                return Err(Error::InvalidArgument(format!("bad generator name `{name}`")));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidArgument(format!("duplicate generator name `{name}`")));
            }
        }
        Ok(Self { n, names, generators, relations: Vec::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn generators(&self) -> &[TorusMap<T>] {
        &self.generators
    }

    pub fn generator(&self, name: &str) -> Result<&TorusMap<T>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.generators[i])
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    pub fn matrices(&self) -> Vec<IntMatrix> {
        self.generators.iter().map(|g| g.matrix().clone()).collect()
    }

    pub fn word_matrix(&self, w: &Word) -> Result<IntMatrix> {
        word_matrix(&self.matrices(), w)
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        Word::parse(text, &self.names)
    }

    pub fn show(&self, w: &Word) -> String {
        w.display(&self.names).to_string()
    }

    /// Applies one letter to the reduced point `p`: returns the lift image of
    /// `p` and `α(letter, p)`.
    fn letter_step(&self, l: Letter, p: &[T], opts: InvertOptions<T>, img: &mut [T], alpha: &mut [T]) -> Result<()> {
        let g = &self.generators[l.generator];
        if l.inverse {
            let x = g.invert_point(p, opts)?;
            mat_vec(g.a_inv_scalar(), p, alpha);
            for i in 0..self.n {
                alpha[i] = x[i] - alpha[i];
            }
            img.copy_from_slice(&x);
        } else {
            g.delta().eval_into(p, alpha);
            mat_vec(g.a_scalar(), p, img);
            for i in 0..self.n {
                img[i] = img[i] + alpha[i];
            }
        }
        Ok(())
    }

    /// Applies `w` to `x` letter by letter (rightmost first), accumulating the
    /// cocycle by `α(l w', m) = α(l, w' m) + A_l α(w', m)`. Intermediate points
    /// are kept reduced mod 1 with a separate integer shift.
    pub fn word_step(&self, w: &Word, x: &[T], opts: InvertOptions<T>) -> Result<WordStep<T>> {
        let n = self.n;
        let mut st = WordStep { reduced: vec![T::zero(); n], shift: vec![T::zero(); n], alpha: vec![T::zero(); n] };
        self.word_step_into(w, x, opts, &mut st.reduced, &mut st.shift, &mut st.alpha)?;
        Ok(st)
    }

    /// [`ActionSpec::word_step`] into caller buffers of length `n`.
    pub fn word_step_into(
        &self,
        w: &Word,
        x: &[T],
        opts: InvertOptions<T>,
        reduced: &mut [T],
        shift: &mut [T],
        alpha: &mut [T],
    ) -> Result<()> {
        let n = self.n;
        assert!(n <= MAX_DIM, "at most {MAX_DIM} dimensions supported");
        for i in 0..n {
            shift[i] = x[i].floor();
            reduced[i] = x[i] - shift[i];
            alpha[i] = T::zero();
        }
        let mut img = [T::zero(); MAX_DIM];
        let mut a_l = [T::zero(); MAX_DIM];
        let mut tmp = [T::zero(); MAX_DIM];
        for &l in w.letters().iter().rev() {
            self.letter_step(l, reduced, opts, &mut img[..n], &mut a_l[..n])?;
            let g = &self.generators[l.generator];
            let mat = if l.inverse { g.a_inv_scalar() } else { g.a_scalar() };
            mat_vec(mat, alpha, &mut tmp[..n]);
            for i in 0..n {
                alpha[i] = a_l[i] + tmp[i];
            }
            mat_vec(mat, shift, &mut tmp[..n]);
            for i in 0..n {
                let f = img[i].floor();
                let mut r = img[i] - f;
                let mut s = tmp[i] + f;
                if r >= T::one() {
                    r = r - T::one();
                    s = s + T::one();
                }
                reduced[i] = r;
                shift[i] = s;
            }
        }
        Ok(())
    }

    /// The torus map of a word, with its displacement sampled on `res`.
    pub fn word_map(&self, w: &Word, res: Vec<usize>, opts: InvertOptions<T>) -> Result<TorusMap<T>> {
        let a = self.word_matrix(w)?;
        let delta = GridFunction::sample(res, self.n, |x, out| {
            out.copy_from_slice(&self.word_step(w, x, opts)?.alpha);
            Ok(())
        })?;
        TorusMap::new(a, delta)
    }

    pub fn cast<U: Scalar>(&self) -> ActionSpec<U> {
        ActionSpec {
            n: self.n,
            names: self.names.clone(),
            generators: self
                .generators
                .iter()
                .map(|g| TorusMap::new(g.matrix().clone(), g.delta().cast()).expect("same shape"))
                .collect(),
            relations: self.relations.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::dist;
    use crate::torusmap::compose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn m(s: &str) -> IntMatrix {
        s.parse().unwrap()
    }

    fn perturbed(a: &str, amp: f64, phase: f64) -> TorusMap<f64> {
        let delta = GridFunction::<f64>::sample(vec![128, 128], 2, |x, o| {
            o[0] = amp * (TAU * x[1] + phase).sin();
            o[1] = amp * (TAU * x[0] - phase).sin();
            Ok(())
        })
        .unwrap();
        TorusMap::new(m(a), delta).unwrap()
    }

    fn spec() -> ActionSpec<f64> {
        ActionSpec::new(
            vec!["a".into(), "b".into()],
            vec![perturbed("1,2;0,1", 0.02, 0.3), perturbed("1,0;2,1", 0.015, 1.1)],
        )
        .unwrap()
    }

    #[test]
    fn empty_word_is_identity() {
        let s = spec();
        let st = s.word_step(&Word::empty(), &[1.3, -0.2], InvertOptions::default()).unwrap();
        assert_eq!(st.alpha, vec![0.0, 0.0]);
        let img = st.image();
        assert!((img[0] - 1.3).abs() < 1e-15 && (img[1] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn single_letter_is_generator() {
        let s = spec();
        let x = [0.31, 0.77];
        let st = s.word_step(&s.parse_word("a").unwrap(), &x, InvertOptions::default()).unwrap();
        let direct = s.generators()[0].lift_eval(&x);
        assert!(dist(&st.image(), &direct) < 1e-15);
        assert_eq!(st.alpha, s.generators()[0].delta().eval(&x));
    }

    #[test]
    fn word_times_inverse_is_identity() {
        let s = spec();
        let w = s.parse_word("a b^-1").unwrap();
        let opts = InvertOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let fwd = s.word_step(&w, &x, opts).unwrap();
            let back = s.word_step(&w.inverse(), &fwd.image(), opts).unwrap();
            assert!(dist(&back.image(), &x) < 1e-11);
        }
        // `a a^-1` reduces to the empty word, so check the unreduced composition by hand.
        let a = s.parse_word("a").unwrap();
        let ainv = a.inverse();
        for _ in 0..50 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let y = s.word_step(&ainv, &x, opts).unwrap();
            let z = s.word_step(&a, &y.image(), opts).unwrap();
            assert!(dist(&z.image(), &x) < 10.0 * 1e-12);
        }
    }

    #[test]
    fn lift_tracks_integer_shift() {
        let s = spec();
        let w = s.parse_word("a b a").unwrap();
        let aw = s.word_matrix(&w).unwrap();
        let x = [0.4, 0.9];
        let base = s.word_step(&w, &x, InvertOptions::default()).unwrap().image();
        let k = [3.0, -2.0];
        let xs = [x[0] + k[0], x[1] + k[1]];
        let shifted = s.word_step(&w, &xs, InvertOptions::default()).unwrap().image();
        let ak = aw.checked_mul_vec(&[3, -2]).unwrap();
        for i in 0..2 {
            assert!((shifted[i] - base[i] - ak[i] as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn word_map_matches_composition() {
        let s = spec();
        let res = vec![128, 128];
        let w = s.parse_word("a b").unwrap();
        let wm = s.word_map(&w, res.clone(), InvertOptions::default()).unwrap();
        let composed = compose(&s.generators()[0], &s.generators()[1], res).unwrap();
        assert_eq!(wm.matrix(), composed.matrix());
        assert!(wm.delta().max_distance(composed.delta()).unwrap() < 1e-15);
        // off-grid: agreement within the interpolation budget
        let budget = 10.0 * wm.delta().interpolation_error_estimate();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        for _ in 0..100 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let direct = s.word_step(&w, &x, InvertOptions::default()).unwrap().image();
            assert!(dist(&wm.lift_eval(&x), &direct) <= budget);
        }
    }

    #[test]
    fn empty_and_single_word_maps() {
        let s = spec();
        let res = vec![16, 16];
        let e = s.word_map(&Word::empty(), res.clone(), InvertOptions::default()).unwrap();
        assert_eq!(e, TorusMap::identity(2, res).unwrap());
        let a = s.word_map(&s.parse_word("a").unwrap(), vec![128, 128], InvertOptions::default()).unwrap();
        assert_eq!(&a, &s.generators()[0]);
    }

    #[test]
    fn rejects_mixed_dimensions() {
        let g3 = TorusMap::<f64>::identity(3, vec![4, 4, 4]).unwrap();
        let g2 = TorusMap::<f64>::identity(2, vec![4, 4]).unwrap();
        assert!(ActionSpec::new(vec!["a".into(), "b".into()], vec![g2, g3]).is_err());
    }
}
