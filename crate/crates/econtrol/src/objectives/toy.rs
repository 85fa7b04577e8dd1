//! Two-client strongly convex toy problem used to probe error-compensation
//! stability: `f_i(x) = c_i^T x + 1/2 ||x||^2` with `c_1 = (1,1,5)` and
//! `c_2 = (1,5,1)`. Every Hessian is the identity, so `L_i = L = mu = 1`,
//! and the minimizer is `x_star = -(1,3,3)`.

use std::sync::Arc;

use crate::vector::DenseVector;

use super::{ObjectiveCore, Problem};

struct ToyCore {
    c: [DenseVector; 2],
}

impl ObjectiveCore for ToyCore {
    fn client_grad(&self, client: usize, x: &DenseVector) -> DenseVector {
        self.c[client].add(x)
    }

    fn client_value(&self, client: usize, x: &DenseVector) -> f64 {
        self.c[client].dot(x) + 0.5 * x.norm_sq()
    }

    fn client_samples(&self, _client: usize) -> Option<usize> {
        None
    }
}

pub fn make_toy_divergence() -> Problem {
    let core = Arc::new(ToyCore {
        c: [
            DenseVector::from_vec(vec![1.0, 1.0, 5.0]),
            DenseVector::from_vec(vec![1.0, 5.0, 1.0]),
        ],
    });
    let x_star = DenseVector::from_vec(vec![-1.0, -3.0, -3.0]);
    Problem::from_parts(core, 2, 3, vec![1.0, 1.0], 1.0, 1.0, Some(x_star))
}
