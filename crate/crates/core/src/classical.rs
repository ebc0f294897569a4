//! Electrons driven by a classical field: each electron independently picks up
//! `J_j(2|𝒢|) e^{ij arg 𝒢}`, with `𝒢 = G √n̄` for a coherent field of mean `n̄`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::smatrix::{CouplingSet, NeumaierSum};
use crate::stats::{electron_axis, marginalize, JointDistribution};

/// Per-electron probability below which orders are not tabulated.
pub const DEFAULT_TAIL_TOL: f64 = 1e-20;

/// `J_0(x) … J_{n_max}(x)` by Miller's downward recurrence normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_all(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = n_max.max(ax.ceil() as usize);
    let start = 2 * ((top + 20 + (40.0 * top as f64).sqrt() as usize) / 2);
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        // cur now holds the unnormalized J_{k-1}.
        if k - 1 <= n_max {
            out[k - 1] = cur;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += cur;
    for (n, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && n % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// `J_n(x)` for any integer order.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let v = bessel_j_all(x, n.unsigned_abs() as usize)[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Classical coupling constants `𝒢_μ`, one per electron.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalCoupling {
    g: Vec<Complex64>,
}

impl ClassicalCoupling {
    pub fn new(g: Vec<Complex64>) -> Result<Self> {
        if g.is_empty() || g.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput(
                "classical couplings must be finite and non-empty".into(),
            ));
        }
        Ok(Self { g })
    }

    /// The field limit of quantum couplings acting on a coherent state with
    /// mean photon number `n_avg` and real amplitude.
    pub fn from_quantum(c: &CouplingSet, n_avg: f64) -> Result<Self> {
        if !(n_avg >= 0.0 && n_avg.is_finite()) {
            return Err(Error::InvalidInput(format!("mean photon number {n_avg} is invalid")));
        }
        Self::new(c.as_slice().iter().map(|g| g * n_avg.sqrt()).collect())
    }

    pub fn electrons(&self) -> usize {
        self.g.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.g
    }

    /// Smallest order radius holding all but `tol` of every electron's
    /// probability.
    pub fn radius(&self, tol: f64) -> usize {
        self.g
            .iter()
            .map(|g| {
                let x = 2.0 * g.norm();
                let mut r = x.ceil() as usize;
                loop {
                    let j = bessel_j_all(x, r + 40);
                    let tail: f64 = j[r + 1..].iter().map(|v| 2.0 * v * v).sum();
                    if tail <= tol {
                        return r;
                    }
                    r += 1 + r / 8;
                }
            })
            .max()
            .unwrap_or(0)
    }
}

/// Single-electron amplitude for energy gain `j`.
pub fn single_amplitude(g: Complex64, j: i32) -> Complex64 {
    bessel_j(j, 2.0 * g.norm()) * Complex64::from_polar(1.0, j as f64 * g.arg())
}

/// Product amplitude for the gains `gains[μ]`.
pub fn classical_amplitude(c: &ClassicalCoupling, gains: &[i32]) -> Result<Complex64> {
    if gains.len() != c.electrons() {
        return Err(Error::InvalidInput(format!(
            "{} gains for {} electrons",
            gains.len(),
            c.electrons()
        )));
    }
    Ok(c.g.iter().zip(gains).map(|(g, &j)| single_amplitude(*g, j)).product())
}

/// Product distribution over axes `e1 … eN`, dropping points whose
/// per-electron probability is below `tail_tol`.
pub fn classical_distribution(c: &ClassicalCoupling, tail_tol: f64) -> Result<JointDistribution> {
    let r = c.radius(tail_tol) as i32;
    let marginals: Vec<Vec<(i32, f64)>> =
        c.g.iter()
            .map(|g| {
                let j = bessel_j_all(2.0 * g.norm(), r as usize);
                (-r..=r)
                    .map(|k| (k, j[k.unsigned_abs() as usize].powi(2)))
                    .filter(|&(_, p)| p >= tail_tol)
                    .collect()
            })
            .collect();
    let cells: usize = marginals.iter().map(Vec::len).product();
    if cells > 20_000_000 {
        return Err(Error::DimensionTooLarge {
            dim: cells,
            limit: 20_000_000,
        });
    }
    let mut entries = vec![(Vec::new(), 1.0)];
    for m in &marginals {
        entries = entries
            .into_iter()
            .flat_map(|(k, p): (Vec<i32>, f64)| {
                m.iter().map(move |&(j, q)| {
                    let mut k = k.clone();
                    k.push(j);
                    (k, p * q)
                })
            })
            .collect();
    }
    JointDistribution::from_entries((0..c.electrons()).map(electron_axis).collect(), entries)
}

/// Total-variation distance `½ Σ |p − q|` between the electron-energy
/// marginal of `quantum` and the classical product distribution. Both sides
/// are normalized first.
pub fn classical_limit_distance(quantum: &JointDistribution, c: &ClassicalCoupling) -> Result<f64> {
    let names: Vec<String> = (0..c.electrons()).map(electron_axis).collect();
    let keep: Vec<&str> = names.iter().map(String::as_str).collect();
    let q = marginalize(quantum, &keep)?.normalized()?;
    let classical = classical_distribution(c, DEFAULT_TAIL_TOL)?.normalized()?;
    let mut sum = NeumaierSum::new();
    for (k, p) in q.iter() {
        sum.add((p - classical.get(k)).abs());
    }
    for (k, p) in classical.iter() {
        if q.get(k) == 0.0 {
            sum.add(*p);
        }
    }
    Ok(0.5 * sum.total())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_bessel_values() {
        let cases = [
            (0, 1.0, 0.765_197_686_557_966_6),
            (1, 1.0, 0.440_050_585_744_933_5),
            (0, 2.0, 0.223_890_779_141_235_7),
            (1, 2.0, 0.576_724_807_756_873_4),
            (2, 10.0, 0.254_630_313_685_120_6),
            (10, 10.0, 0.207_486_106_633_358_9),
            (50, 100.0, -0.038_698_339_728_525_38),
            (100, 100.0, 0.096_366_673_295_861_54),
            (20, 1.0, 3.873_503_008_524_658e-25),
        ];
        for (n, x, v) in cases {
            let got = bessel_j(n, x);
            assert!(
                (got - v).abs() < 1e-12 * v.abs().max(1e-3),
                "J_{n}({x}) = {got}, expected {v}"
            );
        }
    }

    #[test]
    fn parity_relations() {
        for n in -7..=7 {
            let a = bessel_j(n, 3.3);
            assert!((bessel_j(-n, 3.3) - (-1f64).powi(n) * a).abs() < 1e-15);
            assert!((bessel_j(n, -3.3) - (-1f64).powi(n) * a).abs() < 1e-15);
        }
    }

    #[test]
    fn squares_sum_to_one() {
        for x in [0.1, 2.0, 17.5, 90.0] {
            let j = bessel_j_all(x, 200);
            let s = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-13, "x = {x}: {s}");
        }
    }

    #[test]
    fn distribution_factorizes() {
        let c = ClassicalCoupling::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.4)]).unwrap();
        let d = classical_distribution(&c, DEFAULT_TAIL_TOL).unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        let m1 = marginalize(&d, &["e1"]).unwrap();
        let m2 = marginalize(&d, &["e2"]).unwrap();
        for (k, p) in d.iter() {
            assert!((p - m1.get(&k[..1]) * m2.get(&k[1..])).abs() < 1e-15);
        }
        let pcc = crate::stats::pcc(&d, "e1", "e2").unwrap().value.unwrap();
        assert!(pcc.abs() < 1e-12);
    }

    #[test]
    fn amplitude_phase_follows_coupling() {
        let g = Complex64::from_polar(0.8, 0.7);
        let a = single_amplitude(g, 3);
        assert!((a.arg() - 2.1).abs() < 1e-14);
        let c = ClassicalCoupling::new(vec![g, g]).unwrap();
        assert!(classical_amplitude(&c, &[1]).is_err());
    }

    #[test]
    fn from_quantum_scales_by_field_amplitude() {
        let c = ClassicalCoupling::from_quantum(&CouplingSet::real(&[0.5, 0.25]).unwrap(), 16.0).unwrap();
        assert_eq!(c.as_slice(), [Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn identical_tables_have_zero_distance() {
        let c = ClassicalCoupling::new(vec![Complex64::new(0.7, 0.0); 2]).unwrap();
        let d = classical_distribution(&c, DEFAULT_TAIL_TOL).unwrap();
        assert!(classical_limit_distance(&d, &c).unwrap() < 1e-15);
    }
}
