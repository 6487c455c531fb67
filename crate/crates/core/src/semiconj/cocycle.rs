use crate::error::Result;
use crate::scalar::Scalar;
use crate::torusmap::{ActionSpec, GridFunction, InvertOptions};
use crate::word::Word;

/// `α(w, ·)` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleField<T = f64> {
    pub word: Word,
    pub values: GridFunction<T>,
}

/// `α(γ, m) = F̃_γ(m) - A_γ m`, which is the displacement of `γ`.
pub fn generator_cocycle<T: Scalar>(spec: &ActionSpec<T>, name: &str) -> Result<CocycleField<T>> {
    let word = spec.parse_word(name)?;
    let values = spec.generator(name)?.delta().clone();
    Ok(CocycleField { word, values })
}

/// `α(w, ·)` on `res`, built letter by letter from pointwise lifts and inversions.
pub fn word_cocycle<T: Scalar>(
    spec: &ActionSpec<T>,
    word: &Word,
    res: Vec<usize>,
    opts: InvertOptions<T>,
) -> Result<CocycleField<T>> {
    let n = spec.n();
    let values = GridFunction::sample(res, n, |x, out| {
        let (mut r, mut s) = (vec![T::zero(); n], vec![T::zero(); n]);
        spec.word_step_into(word, x, opts, &mut r, &mut s, out)
    })?;
    Ok(CocycleField { word: word.clone(), values })
}
