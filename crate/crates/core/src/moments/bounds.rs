//! Log-space evaluation of every concentration bound.
//!
//! Constants: `c = 48π`, `C = 1/(288π²)`, `C̃ = 1/(2304π²)`, `Ĉ = 2/(9π³)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn c_exp() -> f64 {
    48.0 * PI
}
pub fn c_levy() -> f64 {
    1.0 / (288.0 * PI * PI)
}
pub fn c_tilde() -> f64 {
    1.0 / (2304.0 * PI * PI)
}
pub fn c_hat() -> f64 {
    2.0 / (9.0 * PI * PI * PI)
}

/// A bound with its parameters.
///
/// Probability bounds give an upper bound on a tail probability for a
/// deviation `eps`; deviation bounds give the `ε` that holds with
/// probability at least `1 − δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundSpec {
    /// `ε = c d_a √(ln(12 d_a²/δ) ‖ρ‖)` for `‖ρ_a^ψ − tr_b ρ‖_tr` under GAP.
    ExpDelta { d_a: f64, delta: f64, rho_norm: f64 },
    /// `12 d_a² exp(−C̃ε²/(d_a²‖ρ‖))`.
    ExpEps { d_a: f64, eps: f64, rho_norm: f64 },
    /// `ε = √(28 d_a⁵ trρ²/δ)`.
    PolyDelta { d_a: f64, delta: f64, purity: f64 },
    /// `28 d_a⁵ trρ²/ε²`.
    PolyEps { d_a: f64, eps: f64, purity: f64 },
    /// `6 exp(−Cε²/(η²‖ρ‖))`, Lévy's lemma for GAP.
    LevyGap { eps: f64, eta: f64, rho_norm: f64 },
    /// `12 exp(−C̃ε²/(‖B‖²‖ρ‖))` for `|⟨ψ|B|ψ⟩ − tr ρB|`, also at each fixed time.
    LevyB { eps: f64, b_norm: f64, rho_norm: f64 },
    /// `9 exp(−C̃ε²/(36‖B‖²‖ρ‖))` for the time average of `|⟨ψ_t|B|ψ_t⟩ − tr ρ_tB|`.
    TimeAveragedObservable { eps: f64, b_norm: f64, rho_norm: f64 },
    /// `9 d_a² exp(−C̃ε²/(36 d_a²‖ρ‖))` for the time average of `‖ρ_a^{ψ_t} − tr_b ρ_t‖_tr`.
    TimeAveragedReduced { d_a: f64, eps: f64, rho_norm: f64 },
    /// `2 exp(−4ε²/(π²η²‖ρ‖))` under `G(ρ)`.
    GaussConc { eps: f64, eta: f64, rho_norm: f64 },
    /// `4 exp(−2ε²/(π²η²‖ρ‖))` under `GA(ρ)`.
    GaConc { eps: f64, eta: f64, rho_norm: f64 },
    /// `√2 exp(−(1/2 − r²)/(2‖ρ‖))` for `GA(ρ){‖ψ‖ < r}`.
    GaTail { r: f64, rho_norm: f64 },
    /// `ε = d_a²/√(δ d_R)` under the uniform measure on a `d_R`-dimensional subspace.
    UnifPoly { d_a: f64, delta: f64, d_r: f64 },
    /// `ε = 2√((18π³/d_R) ln(4/δ))`, applicable when `δ < 4 exp(−d_a²/(18π³))`.
    UnifExp { d_a: f64, delta: f64, d_r: f64 },
    /// `4 exp(−Ĉ D ε²/η²)`, Lévy's lemma for the uniform measure.
    UnifLevy { eps: f64, eta: f64, dim: f64 },
    /// Variance bound for `⟨ψ|A|ψ⟩`, requires `‖ρ‖ < 1/4`.
    VarBound { a_norm: f64, purity: f64, rho_norm: f64 },
}

/// What a bound value means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Upper bound on a probability; clamped view is `min(1, value)`.
    Probability,
    /// A deviation `ε` at confidence `1 − δ`.
    Deviation,
    /// Upper bound on a variance.
    Variance,
}

/// A bound evaluated in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub kind: BoundKind,
    /// Natural log of the bound; `-inf` for a zero bound.
    pub log_value: f64,
    /// Clamped view: `min(1, e^log_value)` for probabilities, `e^log_value`
    /// otherwise (may be `inf`).
    pub clamped: f64,
    /// False when a stated applicability condition fails.
    pub applicable: bool,
}

impl BoundValue {
    fn new(kind: BoundKind, log_value: f64) -> Self {
        let clamped = match kind {
            BoundKind::Probability => log_value.min(0.0).exp(),
            _ => log_value.exp(),
        };
        Self { kind, log_value, clamped, applicable: true }
    }

    /// Raw value `e^log_value` (may overflow to `inf`).
    pub fn raw(&self) -> f64 {
        self.log_value.exp()
    }

    /// `log10` of the raw value.
    pub fn log10(&self) -> f64 {
        self.log_value / std::f64::consts::LN_10
    }

    pub fn is_vacuous(&self) -> bool {
        self.kind == BoundKind::Probability && self.log_value >= 0.0
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be >= 0 and finite, got {v}")))
    }
}

/// `ln(k · exp(−a ε²/s))` with everything in log space.
fn log_gauss_tail(log_prefactor: f64, rate: f64, eps: f64, log_scale: f64) -> f64 {
    if eps == 0.0 {
        return log_prefactor;
    }
    // rate ε² / scale = exp(ln rate + 2 ln ε − ln scale)
    log_prefactor - (rate.ln() + 2.0 * eps.ln() - log_scale).exp()
}

impl BoundSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            BoundSpec::ExpDelta { .. } => "exp_delta",
            BoundSpec::ExpEps { .. } => "exp_eps",
            BoundSpec::PolyDelta { .. } => "poly_delta",
            BoundSpec::PolyEps { .. } => "poly_eps",
            BoundSpec::LevyGap { .. } => "levy_gap",
            BoundSpec::LevyB { .. } => "levy_b",
            BoundSpec::TimeAveragedObservable { .. } => "time_averaged_observable",
            BoundSpec::TimeAveragedReduced { .. } => "time_averaged_reduced",
            BoundSpec::GaussConc { .. } => "gauss_conc",
            BoundSpec::GaConc { .. } => "ga_conc",
            BoundSpec::GaTail { .. } => "ga_tail",
            BoundSpec::UnifPoly { .. } => "unif_poly",
            BoundSpec::UnifExp { .. } => "unif_exp",
            BoundSpec::UnifLevy { .. } => "unif_levy",
            BoundSpec::VarBound { .. } => "var_bound",
        }
    }

    pub fn evaluate(&self) -> Result<BoundValue> {
        use BoundKind::*;
        let ln2 = std::f64::consts::LN_2;
        Ok(match *self {
            BoundSpec::ExpDelta { d_a, delta, rho_norm } => {
                let (d_a, delta, n) = (positive("d_a", d_a)?, positive("delta", delta)?, positive("rho_norm", rho_norm)?);
                let l = (12.0f64).ln() + 2.0 * d_a.ln() - delta.ln();
                let log = if l <= 0.0 { f64::NEG_INFINITY } else { c_exp().ln() + d_a.ln() + 0.5 * (l.ln() + n.ln()) };
                BoundValue::new(Deviation, log)
            }
            BoundSpec::ExpEps { d_a, eps, rho_norm } => {
                let (d_a, eps, n) = (positive("d_a", d_a)?, nonnegative("eps", eps)?, positive("rho_norm", rho_norm)?);
                let pre = 12f64.ln() + 2.0 * d_a.ln();
                BoundValue::new(Probability, log_gauss_tail(pre, c_tilde(), eps, 2.0 * d_a.ln() + n.ln()))
            }
            BoundSpec::PolyDelta { d_a, delta, purity } => {
                let (d_a, delta, p) = (positive("d_a", d_a)?, positive("delta", delta)?, positive("purity", purity)?);
                BoundValue::new(Deviation, 0.5 * (28f64.ln() + 5.0 * d_a.ln() + p.ln() - delta.ln()))
            }
            BoundSpec::PolyEps { d_a, eps, purity } => {
                let (d_a, eps, p) = (positive("d_a", d_a)?, nonnegative("eps", eps)?, positive("purity", purity)?);
                let log = if eps == 0.0 { f64::INFINITY } else { 28f64.ln() + 5.0 * d_a.ln() + p.ln() - 2.0 * eps.ln() };
                BoundValue::new(Probability, log)
            }
            BoundSpec::LevyGap { eps, eta, rho_norm } => {
                let (eps, eta, n) = (nonnegative("eps", eps)?, positive("eta", eta)?, positive("rho_norm", rho_norm)?);
                BoundValue::new(Probability, log_gauss_tail(6f64.ln(), c_levy(), eps, 2.0 * eta.ln() + n.ln()))
            }
            BoundSpec::LevyB { eps, b_norm, rho_norm } => {
                let (eps, b, n) = (nonnegative("eps", eps)?, positive("b_norm", b_norm)?, positive("rho_norm", rho_norm)?);
                BoundValue::new(Probability, log_gauss_tail(12f64.ln(), c_tilde(), eps, 2.0 * b.ln() + n.ln()))
            }
            BoundSpec::TimeAveragedObservable { eps, b_norm, rho_norm } => {
                let (eps, b, n) = (nonnegative("eps", eps)?, positive("b_norm", b_norm)?, positive("rho_norm", rho_norm)?);
                BoundValue::new(Probability, log_gauss_tail(9f64.ln(), c_tilde() / 36.0, eps, 2.0 * b.ln() + n.ln()))
            }
            BoundSpec::TimeAveragedReduced { d_a, eps, rho_norm } => {
                let (d_a, eps, n) = (positive("d_a", d_a)?, nonnegative("eps", eps)?, positive("rho_norm", rho_norm)?);
                let pre = 9f64.ln() + 2.0 * d_a.ln();
                BoundValue::new(Probability, log_gauss_tail(pre, c_tilde() / 36.0, eps, 2.0 * d_a.ln() + n.ln()))
            }
            BoundSpec::GaussConc { eps, eta, rho_norm } => {
                let (eps, eta, n) = (nonnegative("eps", eps)?, positive("eta", eta)?, positive("rho_norm", rho_norm)?);
                BoundValue::new(Probability, log_gauss_tail(ln2, 4.0 / (PI * PI), eps, 2.0 * eta.ln() + n.ln()))
            }
            BoundSpec::GaConc { eps, eta, rho_norm } => {
                let (eps, eta, n) = (nonnegative("eps", eps)?, positive("eta", eta)?, positive("rho_norm", rho_norm)?);
                BoundValue::new(Probability, log_gauss_tail(2.0 * ln2, 2.0 / (PI * PI), eps, 2.0 * eta.ln() + n.ln()))
            }
            BoundSpec::GaTail { r, rho_norm } => {
                let (r, n) = (nonnegative("r", r)?, positive("rho_norm", rho_norm)?);
                BoundValue::new(Probability, 0.5 * ln2 - (0.5 - r * r) / (2.0 * n))
            }
            BoundSpec::UnifPoly { d_a, delta, d_r } => {
                let (d_a, delta, d_r) = (positive("d_a", d_a)?, positive("delta", delta)?, positive("d_r", d_r)?);
                BoundValue::new(Deviation, 2.0 * d_a.ln() - 0.5 * (delta.ln() + d_r.ln()))
            }
            BoundSpec::UnifExp { d_a, delta, d_r } => {
                let (d_a, delta, d_r) = (positive("d_a", d_a)?, positive("delta", delta)?, positive("d_r", d_r)?);
                let k = 18.0 * PI.powi(3);
                let l = 4f64.ln() - delta.ln();
                let log = if l <= 0.0 { f64::NEG_INFINITY } else { ln2 + 0.5 * (k.ln() - d_r.ln() + l.ln()) };
                let mut v = BoundValue::new(Deviation, log);
                // δ < 4 exp(−d_a²/(18π³))  ⇔  ln δ < ln 4 − d_a²/(18π³)
                v.applicable = delta.ln() < 4f64.ln() - d_a * d_a / k;
                v
            }
            BoundSpec::UnifLevy { eps, eta, dim } => {
                let (eps, eta, dim) = (nonnegative("eps", eps)?, positive("eta", eta)?, positive("dim", dim)?);
                BoundValue::new(Probability, log_gauss_tail(4f64.ln(), c_hat(), eps, 2.0 * eta.ln() - dim.ln()))
            }
            BoundSpec::VarBound { a_norm, purity, rho_norm } => {
                let (a, p) = (nonnegative("a_norm", a_norm)?, positive("purity", purity)?);
                let v = super::variance_bound_from(a, p, positive("rho_norm", rho_norm)?)?;
                BoundValue::new(Variance, v.ln())
            }
        })
    }
}

/// Evaluates `spec`.
pub fn bound_value(spec: &BoundSpec) -> Result<BoundValue> {
    spec.evaluate()
}

/// Loose parameter bag for building a [`BoundSpec`] from user input.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub d_a: Option<f64>,
    pub dim: Option<f64>,
    pub d_r: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub rho_norm: Option<f64>,
    pub purity: Option<f64>,
    pub eta: Option<f64>,
    pub b_norm: Option<f64>,
    pub a_norm: Option<f64>,
    pub r: Option<f64>,
}

/// Every bound tag accepted by [`BoundParams::build`].
pub const BOUND_TAGS: [&str; 15] = [
    "exp_delta",
    "exp_eps",
    "poly_delta",
    "poly_eps",
    "levy_gap",
    "levy_b",
    "time_averaged_observable",
    "time_averaged_reduced",
    "gauss_conc",
    "ga_conc",
    "ga_tail",
    "unif_poly",
    "unif_exp",
    "unif_levy",
    "var_bound",
];

impl BoundParams {
    /// Builds the bound named `tag`, failing with [`Error::MissingParameter`]
    /// when a required parameter is absent.
    pub fn build(&self, tag: &str) -> Result<BoundSpec> {
        let tag_static: &'static str = BOUND_TAGS
            .iter()
            .find(|t| **t == tag)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown bound `{tag}`; expected one of {}", BOUND_TAGS.join(", "))))?;
        let need = |name: &'static str, v: Option<f64>| v.ok_or(Error::MissingParameter(name, tag_static));
        Ok(match tag_static {
            "exp_delta" => BoundSpec::ExpDelta { d_a: need("d_a", self.d_a)?, delta: need("delta", self.delta)?, rho_norm: need("rho_norm", self.rho_norm)? },
            "exp_eps" => BoundSpec::ExpEps { d_a: need("d_a", self.d_a)?, eps: need("eps", self.eps)?, rho_norm: need("rho_norm", self.rho_norm)? },
            "poly_delta" => BoundSpec::PolyDelta { d_a: need("d_a", self.d_a)?, delta: need("delta", self.delta)?, purity: need("purity", self.purity)? },
            "poly_eps" => BoundSpec::PolyEps { d_a: need("d_a", self.d_a)?, eps: need("eps", self.eps)?, purity: need("purity", self.purity)? },
            "levy_gap" => BoundSpec::LevyGap { eps: need("eps", self.eps)?, eta: need("eta", self.eta)?, rho_norm: need("rho_norm", self.rho_norm)? },
            "levy_b" => BoundSpec::LevyB { eps: need("eps", self.eps)?, b_norm: need("b_norm", self.b_norm)?, rho_norm: need("rho_norm", self.rho_norm)? },
            "time_averaged_observable" => BoundSpec::TimeAveragedObservable { eps: need("eps", self.eps)?, b_norm: need("b_norm", self.b_norm)?, rho_norm: need("rho_norm", self.rho_norm)? },
            "time_averaged_reduced" => BoundSpec::TimeAveragedReduced { d_a: need("d_a", self.d_a)?, eps: need("eps", self.eps)?, rho_norm: need("rho_norm", self.rho_norm)? },
            "gauss_conc" => BoundSpec::GaussConc { eps: need("eps", self.eps)?, eta: need("eta", self.eta)?, rho_norm: need("rho_norm", self.rho_norm)? },
            "ga_conc" => BoundSpec::GaConc { eps: need("eps", self.eps)?, eta: need("eta", self.eta)?, rho_norm: need("rho_norm", self.rho_norm)? },
            "ga_tail" => BoundSpec::GaTail { r: need("r", self.r)?, rho_norm: need("rho_norm", self.rho_norm)? },
            "unif_poly" => BoundSpec::UnifPoly { d_a: need("d_a", self.d_a)?, delta: need("delta", self.delta)?, d_r: need("d_r", self.d_r)? },
            "unif_exp" => BoundSpec::UnifExp { d_a: need("d_a", self.d_a)?, delta: need("delta", self.delta)?, d_r: need("d_r", self.d_r)? },
            "unif_levy" => BoundSpec::UnifLevy { eps: need("eps", self.eps)?, eta: need("eta", self.eta)?, dim: need("dim", self.dim)? },
            "var_bound" => BoundSpec::VarBound { a_norm: need("a_norm", self.a_norm)?, purity: need("purity", self.purity)?, rho_norm: need("rho_norm", self.rho_norm)? },
            _ => unreachable!("tag list and match arms agree"),
        })
    }
}

/// Intervals in `D` where the polynomial tail bound is below the
/// exponential one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    /// All intervals `(D_low, D_high)` found on the scan range.
    pub intervals: Vec<(f64, f64)>,
    /// Number of scan points per decade.
    pub resolution: usize,
}

impl Crossover {
    /// The first interval, if any.
    pub fn first(&self) -> Option<(f64, f64)> {
        self.intervals.first().copied()
    }
}

/// `ln(poly) − ln(exp)` for the tail bounds at deviation `eps` with a
/// spectrum family `D ↦ (‖ρ‖, tr ρ²)`, as a function of `log10 D`.
pub fn crossover_gap<F>(d_a: f64, eps: f64, family: &F, log10_d: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let d = 10f64.powf(log10_d);
    let (norm, purity) = family(d);
    let poly = BoundSpec::PolyEps { d_a, eps, purity }.evaluate()?;
    let exp = BoundSpec::ExpEps { d_a, eps, rho_norm: norm }.evaluate()?;
    Ok(poly.log_value - exp.log_value)
}

/// Finds where the polynomial tail bound beats the exponential one, scanning
/// `log10 D` over `[log10 2, max_log10]` and bisecting each sign change to
/// full double precision in `log10 D`.
pub fn crossover_solve<F>(d_a: f64, eps: f64, family: F, max_log10: f64) -> Result<Crossover>
where
    F: Fn(f64) -> (f64, f64),
{
    positive("d_a", d_a)?;
    positive("eps", eps)?;
    const PER_DECADE: usize = 50;
    let lo = 2f64.log10();
    let steps = ((max_log10 - lo) * PER_DECADE as f64).ceil().max(1.0) as usize;
    let xs: Vec<f64> = (0..=steps).map(|k| lo + (max_log10 - lo) * k as f64 / steps as f64).collect();
    let g = |x: f64| crossover_gap(d_a, eps, &family, x);
    let mut values = Vec::with_capacity(xs.len());
    for &x in &xs {
        values.push(g(x)?);
    }
    let refine = |mut a: f64, mut b: f64| -> Result<f64> {
        let ga = g(a)?;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            let gm = g(m)?;
            if (gm < 0.0) == (ga < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    };
    let mut intervals = Vec::new();
    let mut start: Option<f64> = if values[0] < 0.0 { Some(xs[0]) } else { None };
    for k in 1..xs.len() {
        let (prev, cur) = (values[k - 1] < 0.0, values[k] < 0.0);
        if !prev && cur {
            start = Some(refine(xs[k - 1], xs[k])?);
        } else if prev && !cur {
            let end = refine(xs[k - 1], xs[k])?;
            intervals.push((10f64.powf(start.take().unwrap_or(xs[0])), 10f64.powf(end)));
        }
    }
    if let Some(s) = start {
        intervals.push((10f64.powf(s), 10f64.powf(*xs.last().unwrap())));
    }
    Ok(Crossover { intervals, resolution: PER_DECADE })
}

/// Spectrum family with one eigenvalue `1/√D` and the rest equal.
pub fn spike_family(d: f64) -> (f64, f64) {
    let top = 1.0 / d.sqrt();
    let rest = 1.0 - top;
    (top, 1.0 / d + rest * rest / (d - 1.0))
}

/// Uniform spectrum `I/D`.
pub fn uniform_family(d: f64) -> (f64, f64) {
    (1.0 / d, 1.0 / d)
}
