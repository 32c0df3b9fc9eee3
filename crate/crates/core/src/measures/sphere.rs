use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::linalg::{complex_normal, HilbertDim, PureState};
use crate::{CVector, Error, Result};

/// Uniform distribution on the unit sphere of `C^D`.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(shape: HilbertDim, rng: &mut R) -> PureState {
    let v = CVector::from_iterator(shape.dim(), (0..shape.dim()).map(|_| complex_normal(rng, 1.0)));
    super::unit_state(v, shape)
}

/// von Mises–Fisher distribution on the real sphere `S^{m-1} ⊂ R^m`,
/// density `∝ exp(κ⟨μ, x⟩)` relative to the uniform measure.
#[derive(Debug, Clone)]
pub struct VonMisesFisher {
    mu: Vec<f64>,
    kappa: f64,
    b: f64,
    x0: f64,
    c: f64,
    beta: Option<Beta<f64>>,
}

impl VonMisesFisher {
    pub fn new(mu: Vec<f64>, kappa: f64) -> Result<Self> {
        let m = mu.len();
        if m == 0 {
            return Err(Error::InvalidParameter("VMF needs dimension >= 1".into()));
        }
        let n = mu.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("VMF mean direction has norm {n}")));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("VMF concentration {kappa} must be >= 0")));
        }
        let mf = (m as f64 - 1.0).max(1.0);
        let b = if kappa == 0.0 { 1.0 } else { (-2.0 * kappa + (4.0 * kappa * kappa + mf * mf).sqrt()) / mf };
        let x0 = (1.0 - b) / (1.0 + b);
        let c = kappa * x0 + mf * (1.0 - x0 * x0).ln();
        let beta = if m >= 2 { Some(Beta::new(0.5 * mf, 0.5 * mf).expect("positive shape")) } else { None };
        Ok(Self { mu, kappa, b, x0, c, beta })
    }

    /// `μ = e_1`.
    pub fn along_first_axis(dim: usize, kappa: f64) -> Result<Self> {
        let mut mu = vec![0.0; dim.max(1)];
        mu[0] = 1.0;
        Self::new(mu, kappa)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mean_direction(&self) -> &[f64] {
        &self.mu
    }

    /// `t = ⟨μ, x⟩` from its marginal `∝ e^{κt}(1 − t²)^{(m−3)/2}` by
    /// rejection against a Beta envelope (Wood, 1994).
    pub fn sample_cosine<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let Some(beta) = &self.beta else {
            // S^0 = {±1}: P(+1) = e^κ / (e^κ + e^{-κ}).
            let p_plus = 1.0 / (1.0 + (-2.0 * self.kappa).exp());
            return if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 };
        };
        let mf = self.dim() as f64 - 1.0;
        loop {
            let z = beta.sample(rng);
            let w = (1.0 - (1.0 + self.b) * z) / (1.0 - (1.0 - self.b) * z);
            let u: f64 = 1.0 - rng.random::<f64>();
            if self.kappa * w + mf * (1.0 - self.x0 * w).ln() - self.c >= u.ln() {
                return w;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let t = self.sample_cosine(rng);
        let m = self.dim();
        if m == 1 {
            return vec![t * self.mu[0]];
        }
        // Uniform tangent direction orthogonal to μ.
        let mut v: Vec<f64>;
        let mut norm;
        loop {
            v = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let proj: f64 = v.iter().zip(&self.mu).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(&self.mu).for_each(|(a, b)| *a -= proj * b);
            norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-300 {
                break;
            }
        }
        let s = (1.0 - t * t).max(0.0).sqrt() / norm;
        let mut x: Vec<f64> = v.iter().zip(&self.mu).map(|(a, b)| t * b + s * a).collect();
        let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        x.iter_mut().for_each(|a| *a /= n);
        x
    }

    /// Unnormalised marginal density of `t = ⟨μ, x⟩` on `[-1, 1]`.
    pub fn cosine_weight(&self, t: f64) -> f64 {
        let m = self.dim() as f64;
        (self.kappa * (t - 1.0)).exp() * (1.0 - t * t).max(0.0).powf(0.5 * (m - 3.0))
    }

    /// `E⟨μ, x⟩` by quadrature of the marginal (requires `m >= 2`).
    pub fn mean_cosine(&self) -> Result<f64> {
        if self.dim() == 1 {
            return Ok((self.kappa).tanh());
        }
        let z = crate::quad::integrate(|t| self.cosine_weight(t), -1.0, 1.0, 0.0, 1e-11)?;
        let first = crate::quad::integrate(|t| t * self.cosine_weight(t), -1.0, 1.0, 1e-300, 1e-11)?;
        Ok(first.value / z.value)
    }
}

/// One VMF draw.
pub fn sample_vmf<R: Rng + ?Sized>(mu: &[f64], kappa: f64, rng: &mut R) -> Result<Vec<f64>> {
    Ok(VonMisesFisher::new(mu.to_vec(), kappa)?.sample(rng))
}
