//! Matrix exponentials for the dense oracle: Padé-13 scaling and squaring for
//! explicit matrices and a scaled Taylor series for the action on a vector.

use nalgebra::DMatrix;
use num_complex::Complex64;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring with a degree-13 Padé approximant.
pub(crate) fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm = norm1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * Complex64::new(0.5f64.powi(s), 0.0);
    let b = |k: usize| Complex64::new(PADE13[k], 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Sparse matrix stored by column: `cols[c]` lists `(row, value)`.
pub(crate) struct SparseColumns {
    pub(crate) cols: Vec<Vec<(usize, Complex64)>>,
}

impl SparseColumns {
    pub(crate) fn dim(&self) -> usize {
        self.cols.len()
    }

    fn norm1(&self) -> f64 {
        self.cols
            .iter()
            .map(|c| c.iter().map(|(_, z)| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (c, entries) in self.cols.iter().enumerate() {
            let x = v[c];
            if x.norm_sqr() == 0.0 {
                continue;
            }
            for &(r, a) in entries {
                out[r] += a * x;
            }
        }
    }

    pub(crate) fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (c, entries) in self.cols.iter().enumerate() {
            for &(r, a) in entries {
                m[(r, c)] += a;
            }
        }
        m
    }
}

/// `exp(k) v` by splitting into steps of norm at most 1 and summing each
/// step's Taylor series to `tol` relative accuracy.
pub(crate) fn expm_action(k: &SparseColumns, v: &[Complex64], tol: f64) -> Vec<Complex64> {
    let steps = k.norm1().ceil().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let mut x = v.to_vec();
    let mut term = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut next = term.clone();
    for _ in 0..steps {
        term.copy_from_slice(&x);
        let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for j in 1..200 {
            k.apply(&term, &mut next);
            let f = h / j as f64;
            let mut size: f64 = 0.0;
            for (t, nx) in term.iter_mut().zip(&next) {
                *t = nx * f;
                size = size.max(t.norm());
            }
            for (xi, t) in x.iter_mut().zip(&term) {
                *xi += t;
            }
            if size <= tol * scale {
                break;
            }
        }
    }
    x
}
