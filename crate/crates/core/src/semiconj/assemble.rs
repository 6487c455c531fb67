use nalgebra::DMatrix;
use rayon::prelude::*;

use super::series::PartialSolution;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::torusmap::GridFunction;

/// Relative singular value cutoff for the stacked system.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Assembly<T = f64> {
    pub phi2: GridFunction<T>,
    /// Sup over grid points of the least-squares residual norm.
    pub assembly_residual: f64,
}

/// Per grid point, the least-squares solution of `P_{E_j} x = s_j` over all
/// partials. Each block is written as `C_j x = Q_j^T s_j`, with `Q_j` the
/// orthonormal basis of `E_j` and `P_{E_j} = Q_j C_j`.
pub fn assemble<T: Scalar>(partials: &[PartialSolution<T>]) -> Result<Assembly<T>> {
    let first = partials.first().ok_or(Error::InsufficientSpan { rank: 0, n: 0 })?;
    let n = first.splitting.n();
    let res = first.values.res().to_vec();
    for p in partials {
        if p.values.res() != res.as_slice() || p.values.m() != n {
            return Err(Error::DimensionMismatch { expected: first.values.data().len(), found: p.values.data().len() });
        }
    }
    let rows: usize = partials.iter().map(|p| p.splitting.dim_e()).sum();
    let mut stacked = DMatrix::<f64>::zeros(rows, n);
    let mut r0 = 0;
    for p in partials {
        let d = p.splitting.dim_e();
        stacked.rows_mut(r0, d).copy_from(p.splitting.e_coords());
        r0 += d;
    }
    let svd = stacked.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * smax).count();
    if rank < n {
        return Err(Error::InsufficientSpan { rank, n });
    }
    let pinv = svd.pseudo_inverse(RANK_TOL * smax).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    // x = pinv · blockdiag(Q_j^T) · s: fold the basis change into one n x (k n) matrix
    let mut gather = DMatrix::<f64>::zeros(rows, n * partials.len());
    let mut r0 = 0;
    for (j, p) in partials.iter().enumerate() {
        let d = p.splitting.dim_e();
        gather.view_mut((r0, j * n), (d, n)).copy_from(&p.splitting.e_basis().transpose());
        r0 += d;
    }
    let solve = &pinv * &gather;
    let residual_op = &stacked * &solve - &gather;
    let to_t = |m: &DMatrix<f64>| -> Vec<T> {
        let (r, c) = m.shape();
        (0..r * c).map(|k| T::of(m[(k / c, k % c)])).collect()
    };
    let (solve_t, res_t) = (to_t(&solve), to_t(&residual_op));
    let cols = n * partials.len();
    let npts = first.values.num_points();
    let mut data = vec![T::zero(); npts * n];
    let worst = data
        .par_chunks_mut(n)
        .enumerate()
        .map(|(idx, out)| {
            let s: Vec<T> = partials.iter().flat_map(|p| p.values.value(idx).iter().copied()).collect();
            for (i, o) in out.iter_mut().enumerate() {
                *o = solve_t[i * cols..(i + 1) * cols].iter().zip(&s).fold(T::zero(), |a, (&m, &v)| a + m * v);
            }
            let mut r2 = T::zero();
            for row in res_t.chunks(cols) {
                let v = row.iter().zip(&s).fold(T::zero(), |a, (&m, &v)| a + m * v);
                r2 = r2 + v * v;
            }
            let r = r2.sqrt().as_f64();
            if r.is_nan() {
                f64::INFINITY
            } else {
                r
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(Assembly { phi2: GridFunction::new(res, n, data)?, assembly_residual: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiconj::series::{series_solve_on_e, SeriesBudget};
    use crate::spectral::{splitting, DEFAULT_TOL_UNIT};
    use crate::torusmap::{ActionSpec, InvertOptions, TorusMap};
    use std::f64::consts::TAU;

    fn cat(amp: f64) -> ActionSpec<f64> {
        let d = GridFunction::<f64>::sample(vec![32, 32], 2, |x, o| {
            o[0] = amp * (TAU * x[1]).sin();
            o[1] = amp * (TAU * (x[0] + x[1])).cos();
            Ok(())
        })
        .unwrap();
        ActionSpec::new(vec!["a".into()], vec![TorusMap::new("2,1;1,1".parse().unwrap(), d).unwrap()]).unwrap()
    }

    fn partial(s: &ActionSpec<f64>, w: &str) -> PartialSolution<f64> {
        let w = s.parse_word(w).unwrap();
        let sp = splitting(&s.word_matrix(&w).unwrap(), DEFAULT_TOL_UNIT).unwrap();
        series_solve_on_e(s, &w, &sp, SeriesBudget::default(), vec![32, 32], InvertOptions::default()).unwrap()
    }

    #[test]
    fn complementary_pair_is_direct_sum() {
        let s = cat(0.02);
        let (p, q) = (partial(&s, "a"), partial(&s, "a^-1"));
        let asm = assemble(&[p.clone(), q.clone()]).unwrap();
        assert!(asm.assembly_residual < 1e-14);
        for k in 0..asm.phi2.num_points() {
            for i in 0..2 {
                let want = p.values.value(k)[i] + q.values.value(k)[i];
                assert!((asm.phi2.value(k)[i] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_partials_give_zero() {
        let s = cat(0.0);
        let asm = assemble(&[partial(&s, "a"), partial(&s, "a^-1")]).unwrap();
        assert_eq!(asm.phi2.sup_norm(), 0.0);
        assert_eq!(asm.assembly_residual, 0.0);
    }

    #[test]
    fn single_word_lacks_span() {
        let s = cat(0.02);
        assert!(matches!(assemble(&[partial(&s, "a")]), Err(Error::InsufficientSpan { rank: 1, n: 2 })));
        assert!(matches!(assemble::<f64>(&[]), Err(Error::InsufficientSpan { .. })));
    }

    #[test]
    fn redundant_partials_are_consistent() {
        let s = cat(0.02);
        let p = partial(&s, "a");
        let asm = assemble(&[p.clone(), partial(&s, "a^-1"), partial(&s, "a a")]).unwrap();
        // E(a a) = E(a): the two series agree up to their tails
        assert!(asm.assembly_residual <= 10.0 * 1e-8);
    }
}
