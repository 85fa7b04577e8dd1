//! Analysis-prescribed parameter choices per method.

use crate::compressors::CompressorSpec;
use crate::error::{Error, Result};
use crate::objectives::Problem;

use super::MethodId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    /// Feedback strength; only set for methods that use one.
    pub eta: Option<f64>,
    /// Largest stepsize covered by the convergence guarantee. Runs may
    /// sweep below it; the guarantee only bounds it from above.
    pub gamma_max: f64,
}

/// Prescribed `(eta, gamma_max)` for `method` on `problem`.
///
/// `compressor2` is consulted only by `double-contractive`.
pub fn theory_params(
    method: MethodId,
    problem: &Problem,
    compressor: &CompressorSpec,
    compressor2: Option<&CompressorSpec>,
) -> Result<TheoryParams> {
    let delta = compressor.delta();
    let sqrt2 = std::f64::consts::SQRT_2;
    match method {
        MethodId::EControl => Ok(TheoryParams {
            eta: Some(delta / 400.0),
            gamma_max: delta / (3200.0 * sqrt2 * problem.l_tilde()),
        }),
        MethodId::EcIdeal | MethodId::EcApprox => Ok(TheoryParams {
            eta: None,
            gamma_max: delta / (8.0 * 6.0f64.sqrt() * problem.l()),
        }),
        MethodId::DoubleContractive => {
            let delta2 = compressor2
                .ok_or_else(|| {
                    Error::Config("algorithm.compressor2: required for double-contractive".into())
                })?
                .delta();
            Ok(TheoryParams {
                eta: None,
                gamma_max: delta * delta2 / (64.0 * sqrt2 * problem.l_tilde()),
            })
        }
        MethodId::Ef21 => Ok(TheoryParams {
            eta: None,
            gamma_max: delta / (100.0 * problem.l()),
        }),
        MethodId::Ec | MethodId::CompressedSgd | MethodId::Ef21Hb | MethodId::Sgd => {
            Ok(TheoryParams {
                eta: None,
                gamma_max: 1.0 / (4.0 * problem.l()),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_toy_divergence;

    #[test]
    fn econtrol_constants_on_the_toy_problem() {
        let p = make_toy_divergence();
        let c = CompressorSpec::top_k(1, 3).unwrap();
        let tp = theory_params(MethodId::EControl, &p, &c, None).unwrap();
        assert!((tp.eta.unwrap() - 1.0 / 1200.0).abs() < 1e-18);
        assert!((tp.gamma_max - 1.0 / (9600.0 * std::f64::consts::SQRT_2)).abs() < 1e-18);
    }

    #[test]
    fn identity_compressor_gives_eta_one_over_400() {
        let p = make_toy_divergence();
        let c = CompressorSpec::identity(3).unwrap();
        let tp = theory_params(MethodId::EControl, &p, &c, None).unwrap();
        assert_eq!(tp.eta.unwrap(), 1.0 / 400.0);
    }

    #[test]
    fn per_method_formulas() {
        let p = make_toy_divergence();
        let c = CompressorSpec::top_k(1, 3).unwrap();
        let d = 1.0 / 3.0;

        let ideal = theory_params(MethodId::EcIdeal, &p, &c, None).unwrap();
        assert!((ideal.gamma_max - d / (8.0 * 6.0f64.sqrt())).abs() < 1e-18);

        let double =
            theory_params(MethodId::DoubleContractive, &p, &c, Some(&c)).unwrap();
        assert!((double.gamma_max - d * d / (64.0 * std::f64::consts::SQRT_2)).abs() < 1e-18);

        let ef21 = theory_params(MethodId::Ef21, &p, &c, None).unwrap();
        assert!((ef21.gamma_max - d / 100.0).abs() < 1e-18);

        let sgd = theory_params(MethodId::Sgd, &p, &c, None).unwrap();
        assert_eq!(sgd.gamma_max, 0.25);

        assert!(theory_params(MethodId::DoubleContractive, &p, &c, None).is_err());
    }
}
