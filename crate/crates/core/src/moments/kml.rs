use std::sync::OnceLock;

use crate::linalg::DensityMatrix;
use crate::quad::integrate_half_line;
use crate::{Error, Result};

const REL_TOL: f64 = 1e-12;

/// The kernel `K_ml = ∫₀^∞ (1+xp_m)⁻¹(1+xp_l)⁻¹ Π_n (1+xp_n)⁻¹ dx`.
///
/// Results are cached per unordered pair; the cache is filled lazily and is
/// safe to share between threads.
#[derive(Debug)]
pub struct KmlKernel {
    p: Vec<f64>,
    /// Distinct eigenvalues with multiplicities, so the product costs
    /// `O(#distinct)` per integrand evaluation.
    groups: Vec<(f64, f64)>,
    cache: Vec<OnceLock<Result<f64>>>,
}

impl KmlKernel {
    pub fn new(p: &[f64]) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter("empty spectrum".into()));
        }
        if let Some(bad) = p.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("K_ml needs all eigenvalues > 0, found {bad}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidTrace(s));
        }
        let mut sorted = p.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut groups: Vec<(f64, f64)> = Vec::new();
        for x in sorted {
            match groups.last_mut() {
                Some((v, m)) if *v == x => *m += 1.0,
                _ => groups.push((x, 1.0)),
            }
        }
        let d = p.len();
        let cache = (0..d * (d + 1) / 2).map(|_| OnceLock::new()).collect();
        Ok(Self { p: p.to_vec(), groups, cache })
    }

    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        Self::new(rho.eigenvalues())
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.p
    }

    fn log_product(&self, x: f64) -> f64 {
        self.groups.iter().map(|&(v, m)| m * (x * v).ln_1p()).sum()
    }

    fn compute(&self, m: usize, l: usize) -> Result<f64> {
        let (pm, pl) = (self.p[m], self.p[l]);
        let q = integrate_half_line(
            |x| (-(x * pm).ln_1p() - (x * pl).ln_1p() - self.log_product(x)).exp(),
            0.0,
            REL_TOL,
        )?;
        if !(q.value > 0.0) || q.error > 1e-9 * q.value {
            return Err(Error::Quadrature { estimate: q.value, error: q.error });
        }
        Ok(q.value)
    }

    /// `K_ml` (zero-based indices into the eigenvalue list).
    pub fn get(&self, m: usize, l: usize) -> Result<f64> {
        let d = self.dim();
        if m >= d || l >= d {
            return Err(Error::DimensionMismatch { expected: d, got: m.max(l) + 1 });
        }
        let (a, b) = if m <= l { (m, l) } else { (l, m) };
        let idx = a * d - a * (a + 1) / 2 + b;
        self.cache[idx].get_or_init(|| self.compute(a, b)).clone()
    }

    /// `E|c_m|²|c_l|² = p_m p_l (1 + δ_ml) K_ml` under `GAP(ρ)`.
    pub fn fourth_moment(&self, m: usize, l: usize) -> Result<f64> {
        let delta = if m == l { 2.0 } else { 1.0 };
        Ok(self.p[m] * self.p[l] * delta * self.get(m, l)?)
    }
}

/// `K_ml` for a single pair; builds a throwaway kernel.
pub fn kml(p: &[f64], m: usize, l: usize) -> Result<f64> {
    KmlKernel::new(p)?.get(m, l)
}

/// GAP fourth moment `E|c_m|²|c_l|²` in the eigenbasis of `ρ`.
pub fn gap_fourth_moment(rho: &DensityMatrix, m: usize, l: usize) -> Result<f64> {
    KmlKernel::from_density(rho)?.fourth_moment(m, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn normalise(raw: &[f64]) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    }

    #[test]
    fn uniform_closed_form() {
        for d in [1usize, 2, 4, 64, 512] {
            let p = vec![1.0 / d as f64; d];
            let k = kml(&p, 0, d - 1).unwrap();
            let exact = d as f64 / (d as f64 + 1.0);
            assert!((k - exact).abs() < 1e-9 * exact, "D={d}: {k} vs {exact}");
        }
    }

    #[test]
    fn uniform_fourth_moment_matches_sphere() {
        let d = 16;
        let k = KmlKernel::new(&vec![1.0 / d as f64; d]).unwrap();
        assert!((k.fourth_moment(3, 3).unwrap() - 2.0 / 272.0).abs() < 1e-12);
        assert!((k.fourth_moment(3, 7).unwrap() - 1.0 / 272.0).abs() < 1e-12);
    }

    #[test]
    fn two_level_closed_form() {
        // D=2: ∫₀^∞ (1+ax)⁻²(1+bx)⁻² dx = (a² − b² − 2ab ln(a/b)) / (a − b)³
        let (a, b): (f64, f64) = (0.7, 0.3);
        let exact = (a * a - b * b - 2.0 * a * b * (a / b).ln()) / (a - b).powi(3);
        let k = kml(&[a, b], 0, 1).unwrap();
        assert!((k - exact).abs() < 1e-10 * exact, "{k} vs {exact}");
        assert!((exact - 0.689_607_791_208_976_3).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_eigenvalue() {
        assert!(KmlKernel::new(&[0.5, 0.5, 0.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn symmetric_and_bounded(raw in prop::collection::vec(0.01f64..1.0, 2..12), m in 0usize..12, l in 0usize..12) {
            let p = normalise(&raw);
            let d = p.len();
            let (m, l) = (m % d, l % d);
            let kern = KmlKernel::new(&p).unwrap();
            let kml = kern.get(m, l).unwrap();
            prop_assert!((kml - kern.get(l, m).unwrap()).abs() < 1e-14);
            let pmax = p.iter().copied().fold(0.0, f64::max);
            prop_assert!(kml <= 1.0 / (1.0 - pmax) + 1e-9);
        }

        #[test]
        fn raising_a_weight_never_raises_the_integral(raw in prop::collection::vec(0.01f64..1.0, 2..10), bump in 0.01f64..2.0, n in 0usize..10, m in 0usize..10, l in 0usize..10) {
            // The integrand falls in every weight w_n. With Σw = 1 + bump the
            // unnormalised integral equals K(w/Σw)/Σw, so K(q) <= (1+bump) K(p).
            let p = normalise(&raw);
            let d = p.len();
            let (n, m, l) = (n % d, m % d, l % d);
            let mut w = p.clone();
            w[n] += bump;
            let q = normalise(&w);
            let before = kml(&p, m, l).unwrap();
            let after = kml(&q, m, l).unwrap();
            prop_assert!(after / (1.0 + bump) <= before * (1.0 + 1e-9));
        }
    }
}
