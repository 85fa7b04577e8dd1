//! Synthetic least-squares benchmark with a heterogeneity knob.
//!
//! Client `i` (1-based) owns `f_i(x) = 1/2 ||A_i x - b_i||^2` with
//! `A_i = (i^2/n) I_d` and `b_i ~ N(b_mean, (zeta^2/i^2) I_d)` drawn once at
//! construction. `zeta` controls how far the client optima spread. The
//! average objective is the quadratic `L/2 ||x||^2 - <c, x> + const` with a
//! scalar-matrix closed-form minimizer.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::{derive_stream, standard_normal, StreamDomain};
use crate::vector::DenseVector;

use super::{ObjectiveCore, Problem};

struct LeastSquaresCore {
    /// `a[i] = (i+1)^2 / n`, the diagonal scale of client i's design matrix.
    a: Vec<f64>,
    b: Vec<DenseVector>,
}

impl ObjectiveCore for LeastSquaresCore {
    fn client_grad(&self, client: usize, x: &DenseVector) -> DenseVector {
        // grad f_i = A_i (A_i x - b_i) with A_i = a_i I
        let a = self.a[client];
        let mut g = x.scaled(a);
        g.sub_assign(&self.b[client]);
        g.scale(a);
        g
    }

    fn client_value(&self, client: usize, x: &DenseVector) -> f64 {
        let a = self.a[client];
        let mut r = x.scaled(a);
        r.sub_assign(&self.b[client]);
        0.5 * r.norm_sq()
    }

    fn client_samples(&self, _client: usize) -> Option<usize> {
        None
    }
}

/// Build the least-squares problem. Per-client targets are drawn from
/// dedicated substreams of `seed`, so client `i`'s draw does not depend on
/// `n` or on the other clients.
pub fn make_least_squares(
    n: usize,
    d: usize,
    zeta: f64,
    b_mean: &DenseVector,
    seed: u64,
) -> Result<Problem> {
    if n == 0 {
        return Err(Error::Config("problem.n: must be at least 1".into()));
    }
    if d == 0 {
        return Err(Error::Config("problem.d: must be at least 1".into()));
    }
    if zeta < 0.0 {
        return Err(Error::Config("problem.zeta: must be nonnegative".into()));
    }
    if b_mean.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "make_least_squares b_mean",
            expected: d,
            got: b_mean.dim(),
        });
    }

    let a: Vec<f64> = (1..=n).map(|i| (i * i) as f64 / n as f64).collect();
    let b: Vec<DenseVector> = (1..=n)
        .map(|i| {
            let mut bi = b_mean.clone();
            if zeta > 0.0 {
                let std = zeta / i as f64;
                let mut rng = derive_stream(seed, StreamDomain::Data, i as u64, 0);
                for j in 0..d {
                    bi[j] += std * standard_normal(&mut rng);
                }
            }
            bi
        })
        .collect();

    // Hessian of f_i is a_i^2 I, so L_i = a_i^2 = i^4/n^2; the average
    // Hessian is ((1/n) sum a_i^2) I, hence L = mu for this family.
    let l_per_client: Vec<f64> = a.iter().map(|ai| ai * ai).collect();
    let l = l_per_client.iter().sum::<f64>() / n as f64;
    let mu = l;

    // x_star solves (sum a_i^2) x = sum a_i b_i.
    let denom: f64 = l_per_client.iter().sum();
    let mut x_star = DenseVector::zeros(d);
    for (ai, bi) in a.iter().zip(b.iter()) {
        x_star.axpy(*ai, bi);
    }
    x_star.scale(1.0 / denom);

    let core = Arc::new(LeastSquaresCore { a, b });
    Ok(Problem::from_parts(core, n, d, l_per_client, l, mu, Some(x_star)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::test_util::assert_grad_matches_fd;
    use rand::Rng;

    #[test]
    fn closed_form_minimizer_two_clients_scalar() {
        // n=2, d=1, zeta=0, b_mean=(4): x_star = 40/17.
        let p = make_least_squares(2, 1, 0.0, &DenseVector::from_vec(vec![4.0]), 1).unwrap();
        let xs = p.x_star().unwrap();
        assert!((xs[0] - 40.0 / 17.0).abs() < 1e-12);
        assert!(p.full_grad(xs).norm() <= 1e-9);
    }

    #[test]
    fn closed_form_agrees_with_gradient_descent() {
        let p = make_least_squares(3, 4, 2.0, &DenseVector::filled(4, 1.0), 7).unwrap();
        // Plain gradient descent as the independent check.
        let mut x = DenseVector::zeros(4);
        let step = 1.0 / p.l();
        for _ in 0..20_000 {
            x.axpy(-step, &p.full_grad(&x));
        }
        assert!(x.dist_sq(p.x_star().unwrap()) < 1e-20);
        assert!((p.value(&x) - p.f_star().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn smoothness_constants_match_formula() {
        // n=5: L_i = i^4/25, so L_5 = 25; L_tilde = sqrt((1/5) sum i^8/625).
        let p = make_least_squares(5, 300, 0.0, &DenseVector::zeros(300), 1).unwrap();
        assert!((p.l_client(4) - 25.0).abs() < 1e-12);
        let sum_i8: f64 = (1..=5u32).map(|i| (i as f64).powi(8)).sum();
        assert!((p.l_tilde() - (sum_i8 / (5.0 * 625.0)).sqrt()).abs() < 1e-9);
        let expected_l = (1..=5u32).map(|i| (i as f64).powi(4) / 25.0).sum::<f64>() / 5.0;
        assert!((p.l() - expected_l).abs() < 1e-12);
    }

    #[test]
    fn zero_zeta_zero_mean_has_zero_minimizer() {
        let p = make_least_squares(4, 6, 0.0, &DenseVector::zeros(6), 3).unwrap();
        assert_eq!(p.x_star().unwrap(), &DenseVector::zeros(6));
        assert_eq!(p.f_star().unwrap(), 0.0);
    }

    #[test]
    fn rejects_empty_sizes() {
        assert!(make_least_squares(0, 3, 0.0, &DenseVector::zeros(3), 1).is_err());
        assert!(make_least_squares(2, 0, 0.0, &DenseVector::zeros(0), 1).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = make_least_squares(4, 5, 3.0, &DenseVector::filled(5, 1.0), 11).unwrap();
        let mut rng = derive_stream(2, StreamDomain::Data, 0, 0);
        for _ in 0..5 {
            let x = DenseVector::from_vec((0..5).map(|_| rng.gen_range(-2.0..2.0)).collect());
            assert_grad_matches_fd(&p, &x, 1e-4);
        }
    }

    #[test]
    fn minimizer_beats_random_points() {
        let p = make_least_squares(3, 8, 5.0, &DenseVector::filled(8, 1.0), 13).unwrap();
        let fs = p.f_star().unwrap();
        let mut rng = derive_stream(3, StreamDomain::Data, 0, 0);
        for _ in 0..100 {
            let x = DenseVector::from_vec((0..8).map(|_| rng.gen_range(-10.0..10.0)).collect());
            assert!(p.value(&x) >= fs);
        }
    }

    #[test]
    fn heterogeneity_at_optimum_grows_with_zeta() {
        let spread = |zeta: f64| -> f64 {
            // Average over a few seeds to smooth the draw noise.
            (0..5)
                .map(|seed| {
                    let p =
                        make_least_squares(5, 10, zeta, &DenseVector::filled(10, 1.0), seed)
                            .unwrap();
                    let xs = p.x_star().unwrap();
                    let gbar = p.full_grad(xs);
                    (0..p.n())
                        .map(|i| p.client_grad(i, xs).sub(&gbar).norm_sq())
                        .sum::<f64>()
                        / p.n() as f64
                })
                .sum::<f64>()
                / 5.0
        };
        let s0 = spread(0.0);
        let s10 = spread(10.0);
        let s100 = spread(100.0);
        assert!(s0 <= s10 && s10 <= s100, "spread not monotone: {s0} {s10} {s100}");
    }

    #[test]
    fn client_targets_are_seed_isolated() {
        // b_i is drawn from a per-client substream, so it is unchanged when
        // the client count changes (A_i does change with n).
        let p5 = make_least_squares(5, 4, 7.0, &DenseVector::zeros(4), 21).unwrap();
        let p8 = make_least_squares(8, 4, 7.0, &DenseVector::zeros(4), 21).unwrap();
        let x = DenseVector::zeros(4);
        for i in 0..5 {
            // grad at 0 is -a_i b_i; rescale away a_i to compare b_i directly.
            let a5 = ((i + 1) * (i + 1)) as f64 / 5.0;
            let a8 = ((i + 1) * (i + 1)) as f64 / 8.0;
            let b5 = p5.client_grad(i, &x).scaled(-1.0 / a5);
            let b8 = p8.client_grad(i, &x).scaled(-1.0 / a8);
            assert!(b5.dist_sq(&b8) < 1e-24, "client {i} target depends on n");
        }
    }
}
