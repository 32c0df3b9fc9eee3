use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CMatrix, Complex64};

/// Complex Gaussian with mean 0 and `E|Z|² = variance`
/// (real and imaginary parts independent, each of variance `variance/2`).
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `rows × cols` matrix of iid standard complex Gaussians (`E|z|² = 1`).
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // Fill column-major in a fixed order so results only depend on the stream.
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_normal(rng, 1.0);
        }
    }
    m
}

/// First `cols` columns of a Haar unitary on `C^rows`.
///
/// QR of a Ginibre matrix with the phases of `diag(R)` pushed into `Q`
/// (Mezzadri's correction); without it the distribution is not Haar.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let d = r[(j, j)];
        let n = d.norm();
        let phase = if n > 0.0 { d / n } else { Complex64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-distributed `d × d` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    assert!(d >= 1);
    haar_isometry(d, d, rng)
}

/// GUE matrix normalised so that `E tr H² / d = 1` (semicircle on `[-2, 2]`).
pub fn gue_hamiltonian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    assert!(d >= 1);
    let var = 1.0 / d as f64;
    let mut h = CMatrix::zeros(d, d);
    for i in 0..d {
        let x: f64 = rng.sample(StandardNormal);
        h[(i, i)] = Complex64::new(x * var.sqrt(), 0.0);
        for j in (i + 1)..d {
            let z = complex_normal(rng, var);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_defect, unitarity_defect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 2, 5, 33] {
            let u = haar_unitary(d, &mut rng);
            assert!(unitarity_defect(&u) < 1e-10, "d={d}");
        }
    }

    #[test]
    fn one_dimensional_haar_is_a_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = haar_unitary(1, &mut rng);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_first_column_has_uniform_second_moments() {
        // E|U_{n1}|² = 1/D, Var|U_{n1}|² = (D-1)/(D²(D+1)).
        let d = 6;
        let trials = 4000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sums = vec![0.0; d];
        for _ in 0..trials {
            let u = haar_unitary(d, &mut rng);
            for n in 0..d {
                sums[n] += u[(n, 0)].norm_sqr();
            }
        }
        let df = d as f64;
        let sd = ((df - 1.0) / (df * df * (df + 1.0)) / trials as f64).sqrt();
        for s in sums {
            assert!((s / trials as f64 - 1.0 / df).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn gue_is_hermitian_with_unit_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 512;
        let h = gue_hamiltonian(d, &mut rng);
        assert!(hermiticity_defect(&h) == 0.0);
        let m2 = (&h * &h).trace().re / d as f64;
        // sd of tr H²/D is about sqrt(2)/D here.
        assert!((m2 - 1.0).abs() < 0.02, "m2={m2}");
    }

    #[test]
    fn gue_spectrum_fills_the_semicircle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = 512;
        let h = gue_hamiltonian(d, &mut rng);
        let ev = nalgebra::SymmetricEigen::new(h).eigenvalues;
        let max = ev.iter().cloned().fold(f64::MIN, f64::max);
        let min = ev.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max > 1.8 && max < 2.2 && min < -1.8 && min > -2.2, "{min} {max}");
        // Fraction inside |E| < 1 for the semicircle is 0.609.
        let inner = ev.iter().filter(|e| e.abs() < 1.0).count() as f64 / d as f64;
        assert!((inner - 0.609).abs() < 0.05, "inner={inner}");
    }
}
